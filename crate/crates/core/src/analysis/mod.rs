//! Blow-ups, flatness, two-phase monotonicity, classification of boundary
//! points and dimension estimates built on top of the measure estimators.

mod acf;
mod blowup;
mod classify;
mod dimension;
mod source;

pub use acf::{acf_gamma, beurling_check, gamma_profile, BeurlingProfile, GammaInputs, GammaProfile, GammaValue, QuadSpec};
pub use blowup::{
    attach_potential, blowup, blowup_polynomial_fit, flatness_of, flatness_profile, unit_ball_grid, BlowupRecord,
    FlatnessProfile, FlatnessVerdict, PolynomialFit, PotentialSamples, FLATNESS_THRESHOLD, MAX_CONDITION,
};
pub use classify::{
    classify_batch, classify_lambda, classify_point, gb_classify, records_to_csv, ClassificationRecord,
    ClassifyOptions, DensityProfile, DensityVerdict, GammaProxy, LambdaFit, LambdaVerdict, Thresholds, CSV_HEADER,
};
pub use dimension::{
    dimension_distribution, local_dimension, log_radii, theta_density, DimensionDistribution, DimensionFit,
    ThetaDensity, THETA_MIN_POINTS,
};
pub use source::{
    DiscreteSource, GreenField, KernelSource, MassEstimate, MeasureSource, PolynomialPart, PotentialField,
    WalkSource, ZeroSetSource, LOST_MASS_LIMIT,
};
