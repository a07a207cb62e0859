//! Scattering solutions, far fields, scattering matrices and the
//! partial-wave reference.

pub mod farfield;
pub mod incident;
pub mod oracle;
pub mod persist;
pub mod solver;

pub use farfield::{
    far_field, far_field_of, harmonic_solutions, operator_norm, plane_wave_table, smatrix,
    smatrix_constant, smatrix_from_farfield, smatrix_from_solutions, trace_t0, FarField,
    ScatteringMatrix, TraceData,
};
pub use incident::{herglotz_basis_values, Incident};
pub use oracle::{partialwave_oracle, PartialWaves};
pub use solver::{scattering_solution, Scatterer, ScatteringSolution, SolveSummary, SolverOptions};
