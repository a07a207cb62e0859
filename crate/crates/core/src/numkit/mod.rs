//! Numerical building blocks: special functions, quadrature, ODEs, grids,
//! FFTs, the Helmholtz Green function and Krylov solvers.

pub mod fft;
pub mod green;
pub mod grid;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod special;
pub mod sphere;
