//! Fixed-energy scattering for Schrödinger operators with electric and
//! magnetic potentials on R^2 and R^3.
//!
//! Units: ħ = 2m = 1, so `H = (i∇ + A)^2 + V = -Δ + Q` and the energy is
//! `E = k^2`.

pub mod averaged;
pub mod error;
pub mod forward;
pub mod inverse;
pub mod magnetic;
pub mod model;
pub mod numkit;

pub use error::{Error, ErrorKind, Result};

/// Points and directions; the third component is 0 in two dimensions.
pub type Vec3 = [f64; 3];

/// Library version, recorded in manifests and cache keys.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
