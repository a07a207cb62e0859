//! Identities and experiments behind fixed-energy uniqueness: Green and
//! DtN identities, the orthogonality functional, CGO solutions and Fourier
//! recovery of potential differences, and uniqueness scenarios.

pub mod cgo;
pub mod orthogonality;
pub mod radial;
pub mod uniqueness;

pub use cgo::{
    cgo_first_order, cgo_parameters, cgo_solve, default_taus, fourier_coefficient,
    fourier_difference, reconstruct, xi_lattice, CgoOptions, CgoParameter, CgoSolution,
    FourierCoefficient, FourierReport, Reconstruction,
};
pub use orthogonality::{
    incoming_averaged_solution, orthogonality_functional, orthogonality_functional_outgoing,
    orthogonality_matrix, orthogonality_matrix_with, reflected_conjugate, SampledPair,
};
pub use radial::{
    dtn_identity_defect, dtn_radial, green_identity_defect, DtnMap, GreenIdentity, RadialSolution,
    RadialTable,
};
pub use uniqueness::{
    expansion_pipeline, lambda_sweep, sample_pair, sample_with_gauge, scaled_pair,
    scenario_uniqueness, uniqueness_from_pair, FourierSettings, LambdaSweep, MagneticGauge,
    UniquenessOptions, UniquenessReport,
};
