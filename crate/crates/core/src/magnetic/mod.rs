//! Curl and divergence of sampled fields, vector potentials of prescribed
//! magnetic fields, and gauge transformations (three dimensions).

pub mod calculus;
pub mod construction;
pub mod gauge;

pub use calculus::{curl, div_field, DivergenceReport};
pub use construction::{
    potential_from_field, ConstructionOptions, Cutoff, FieldPotential, PotentialConstruction,
};
pub use gauge::{
    gauge_comparison, gauge_invariance_defect, gauge_transform, GaugeComparison, GaugeFunction,
};
