//! Harmonic polynomials, zero-set measures, the walk-on-spheres engine and
//! closed-form kernels for model domains.

pub(crate) mod contour;
mod oracle;
mod poly;
mod wos;
mod zero_measure;

pub use oracle::{fundamental_solution, green_closed_form, green_gradient_closed_form, kernel_oracle, poisson_density};
pub use poly::*;
pub use wos::{
    equal_arcs, green_estimate, validate_cells, wos_exit_points, wos_measure, Cell, GreenEstimate,
    MeasureEstimate, WalkConfig,
};
pub use zero_measure::{poly_zero_measure, poly_zero_measure_in};
