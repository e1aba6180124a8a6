use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("empty support inside the clipping ball")]
    EmptySupport,
    #[error("no boundary points inside the sampling region")]
    EmptySample,
    #[error("insufficient sample: need {needed} points in the ball, found {found}")]
    InsufficientSample { needed: usize, found: usize },
    #[error("no corkscrew point with M <= {cap} at this scale (best found {best})")]
    CorkscrewFailure { cap: f64, best: f64 },
    #[error("pole is not strictly inside the domain")]
    InvalidPole,
    #[error("domain kind `{0}` has no closed-form kernel")]
    NotAnOracle(String),
    #[error("zero set could not be located in the requested ball")]
    EmptyMeasure,
    #[error("harmonic measure of B(Q, {radius}) is not resolved (estimate {mass}, std error {std_error})")]
    UnresolvedScale { radius: f64, mass: f64, std_error: f64 },
    #[error("too few resolved radii: {0}")]
    TooFewScales(usize),
    #[error("gradient quadrature requires polar coordinates about the center")]
    QuadratureRequiresPolar,
}

pub type Result<T> = std::result::Result<T, Error>;
