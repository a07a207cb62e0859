//! Potential descriptions, sampled fields, grid sampling and the perturbation Q.

pub mod field;
pub mod perturbation;
pub mod sample;
pub mod spec;

pub use field::{Role, SampledField};
pub use perturbation::{apply_q, Perturbation};
pub use sample::{sample, SampledPotential, Truncation};
pub use spec::{
    validate_decay, Decay, ElectricTerm, ExpansionSpec, MagneticTerm, PotentialSpec, Profile,
};
