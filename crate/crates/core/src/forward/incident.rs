//! Incident fields for the Lippmann–Schwinger equation: plane waves,
//! Herglotz waves with a band-limited density, and point sources.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::numkit::green::{helmholtz_green, helmholtz_green_gradient};
use crate::numkit::grid::norm3;
use crate::numkit::special::{bessel_j, sph_bessel_j};
use crate::numkit::sphere::{spherical_harmonics, HarmonicBasis};
use crate::{Error, Result, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Incident {
    /// `e^{ik x·ω}`
    PlaneWave { direction: Vec3 },
    /// `∫ e^{ik x·ω} f(ω) dω` with `f = Σ_j c_j Y_j`.
    Herglotz {
        basis: HarmonicBasis,
        coeffs: Vec<Complex64>,
    },
    /// `G_E(x - pole)`
    PointSource { pole: Vec3 },
}

impl Incident {
    pub fn plane(direction: Vec3) -> Self {
        Incident::PlaneWave { direction }
    }

    /// Herglotz wave of a single basis function.
    pub fn harmonic(basis: HarmonicBasis, j: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.len()];
        coeffs[j] = Complex64::new(1.0, 0.0);
        Incident::Herglotz { basis, coeffs }
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        match self {
            Incident::PlaneWave { direction } => {
                if (norm3(direction) - 1.0).abs() > 1e-12 || (dim == 2 && direction[2] != 0.0) {
                    return Err(Error::Domain(format!(
                        "incident direction {direction:?} is not a unit vector"
                    )));
                }
            }
            Incident::Herglotz { basis, coeffs } => {
                if basis.dim != dim || coeffs.len() != basis.len() {
                    return Err(Error::Shape(
                        "density does not match the harmonic basis".into(),
                    ));
                }
            }
            Incident::PointSource { pole } => {
                if dim == 2 && pole[2] != 0.0 {
                    return Err(Error::Domain(
                        "2D pole must have zero third coordinate".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Value and gradient at x.
    pub fn eval(&self, x: &Vec3, energy: f64, dim: usize) -> Result<(Complex64, [Complex64; 3])> {
        let k = energy.sqrt();
        match self {
            Incident::PlaneWave { direction } => {
                let mut ph = 0.0;
                for a in 0..dim {
                    ph += x[a] * direction[a];
                }
                let v = Complex64::from_polar(1.0, k * ph);
                let ikv = Complex64::new(0.0, k) * v;
                Ok((
                    v,
                    [ikv * direction[0], ikv * direction[1], ikv * direction[2]],
                ))
            }
            Incident::PointSource { pole } => Ok((
                helmholtz_green(x, pole, energy, dim)?,
                helmholtz_green_gradient(x, pole, energy, dim)?,
            )),
            Incident::Herglotz { basis, coeffs } => {
                let val = |p: &Vec3| -> Complex64 {
                    herglotz_basis_values(basis, k, p)
                        .iter()
                        .zip(coeffs)
                        .map(|(b, c)| b * c)
                        .sum()
                };
                // Fourth-order central differences of the entire function;
                // the step is tied to the wavelength.
                let d = 1e-3 / k.max(1.0);
                let mut g = [Complex64::new(0.0, 0.0); 3];
                for (a, ga) in g.iter_mut().enumerate().take(dim) {
                    let shifted = |s: f64| {
                        let mut p = *x;
                        p[a] += s;
                        val(&p)
                    };
                    *ga = (shifted(-2.0 * d) - 8.0 * shifted(-d) + 8.0 * shifted(d)
                        - shifted(2.0 * d))
                        / (12.0 * d);
                }
                Ok((val(x), g))
            }
        }
    }
}

/// Herglotz waves of every basis function at x, in closed form:
/// `4π i^l j_l(k|x|) Y_lm(x̂)` in 3D, `2π i^{|m|} J_{|m|}(k|x|) e^{imθ}/√(2π)` in 2D.
pub fn herglotz_basis_values(basis: &HarmonicBasis, k: f64, x: &Vec3) -> Vec<Complex64> {
    let r = norm3(x);
    let ipow = |l: usize| -> Complex64 {
        match l % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    };
    if basis.dim == 2 {
        let jm = bessel_j(basis.degree, k * r);
        let th = x[1].atan2(x[0]);
        let c = 2.0 * PI / (2.0 * PI).sqrt();
        (0..basis.len())
            .map(|i| {
                let (l, m) = basis.label(i);
                ipow(l) * jm[l] * Complex64::from_polar(c, m as f64 * th)
            })
            .collect()
    } else {
        let jl = sph_bessel_j(basis.degree, k * r);
        let dir = if r > 0.0 { *x } else { [0.0, 0.0, 1.0] };
        let y = spherical_harmonics(basis.degree, &dir);
        (0..basis.len())
            .map(|i| {
                let (l, _) = basis.label(i);
                ipow(l) * (4.0 * PI * jl[l]) * y[i]
            })
            .collect()
    }
}
