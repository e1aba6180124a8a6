//! Numerical harmonic-measure laboratory: discrete Radon measures and the
//! bounded-Lipschitz metric, test domains, walk-on-spheres estimators and the
//! blow-up / flatness / dimension analyses built on them.

pub mod analysis;
pub mod domain;
pub mod error;
pub mod geom;
pub mod harmonic;
pub mod measure;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use geom::Point;
pub use measure::{Ball, DiscreteMeasure};
