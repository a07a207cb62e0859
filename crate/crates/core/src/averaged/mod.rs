//! Averaged scattering solutions, the representation of the S-matrix
//! through them, and the numerical completeness test on a ball.

pub mod completeness;
pub mod density;
pub mod representation;

pub use completeness::{
    completeness_residual, default_targets, interior_target, Ball, BallQuadrature,
    CompletenessReport, Target,
};
pub use density::{herglotz, DensityOnSphere};
pub use representation::{
    averaged_solution, averaged_solution_by_quadrature, representation_constant,
    smatrix_from_representation, smatrix_via_representation,
};
