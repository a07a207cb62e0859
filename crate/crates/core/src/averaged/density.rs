//! Band-limited densities on the sphere and their Herglotz waves.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::field::{Role, SampledField};
use crate::numkit::green::wavenumber;
use crate::numkit::grid::Grid;
use crate::numkit::sphere::{sphere_rule, DirectionGrid, HarmonicBasis};
use crate::{Error, Result, Vec3};

/// `f = Σ_j c_j Y_j` in the orthonormal harmonic basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityOnSphere {
    pub basis: HarmonicBasis,
    pub coeffs: Vec<Complex64>,
}

impl DensityOnSphere {
    pub fn new(basis: HarmonicBasis, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zero(basis: HarmonicBasis) -> Self {
        Self {
            basis,
            coeffs: vec![Complex64::new(0.0, 0.0); basis.len()],
        }
    }

    pub fn harmonic(basis: HarmonicBasis, j: usize) -> Self {
        let mut f = Self::zero(basis);
        f.coeffs[j] = Complex64::new(1.0, 0.0);
        f
    }

    /// Projection of `g` onto harmonics of degree <= `degree`, using a rule
    /// of degree `degree + extra`.
    pub fn project<F: Fn(&Vec3) -> Complex64>(
        dim: usize,
        degree: usize,
        extra: usize,
        g: F,
    ) -> Result<Self> {
        let basis = HarmonicBasis::new(dim, degree)?;
        let dirs = sphere_rule(dim, degree + extra)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.len()];
        for (nu, w) in dirs.nodes.iter().zip(&dirs.weights) {
            let gv = g(nu) * *w;
            for (c, y) in coeffs.iter_mut().zip(basis.eval_all(nu)) {
                *c += gv * y.conj();
            }
        }
        Ok(Self { basis, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// L² norm via Parseval.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eval(&self, nu: &Vec3) -> Complex64 {
        self.basis
            .eval_all(nu)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| y * c)
            .sum()
    }

    /// `(f, g)` in L²(S^{n-1}).
    pub fn inner(&self, other: &DensityOnSphere) -> Result<Complex64> {
        if self.basis != other.basis {
            return Err(Error::Shape("densities use different bases".into()));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &DensityOnSphere) -> Result<Self> {
        if self.basis != other.basis {
            return Err(Error::Shape("densities use different bases".into()));
        }
        Ok(Self {
            basis: self.basis,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

/// `φ_{0,f}(x) = ∫ e^{ik x·ω} f(ω) dω`, by the quadrature `dirs`.
pub fn herglotz(
    f: &DensityOnSphere,
    energy: f64,
    grid: &Grid,
    dirs: &DirectionGrid,
) -> Result<SampledField> {
    let k = wavenumber(energy)?;
    if dirs.dim != grid.dim || f.dim() != grid.dim {
        return Err(Error::Shape(
            "density, directions and grid disagree on dimension".into(),
        ));
    }
    if dirs.degree < f.degree() {
        return Err(Error::Precondition(format!(
            "quadrature degree {} is below the density degree {}",
            dirs.degree,
            f.degree()
        )));
    }
    let fw: Vec<Complex64> = dirs
        .nodes
        .iter()
        .zip(&dirs.weights)
        .map(|(nu, w)| f.eval(nu) * *w)
        .collect();
    let data: Vec<Complex64> = (0..grid.npts())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            dirs.nodes
                .iter()
                .zip(&fw)
                .map(|(nu, c)| {
                    c * Complex64::from_polar(1.0, k * (x[0] * nu[0] + x[1] * nu[1] + x[2] * nu[2]))
                })
                .sum()
        })
        .collect();
    SampledField::scalar(*grid, Role::Wavefunction, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::special::sph_bessel_j;
    use std::f64::consts::PI;

    #[test]
    fn parseval_and_projection() {
        let f = DensityOnSphere::project(3, 6, 4, |nu| Complex64::new(nu[0] * nu[2] + 0.5, nu[1]))
            .unwrap();
        let dirs = sphere_rule(3, 12).unwrap();
        let direct: f64 = dirs
            .nodes
            .iter()
            .zip(&dirs.weights)
            .map(|(nu, w)| w * f.eval(nu).norm_sqr())
            .sum();
        assert!((f.norm() * f.norm() - direct).abs() < 1e-12);
        // Degree-2 input is reproduced.
        let nu = [0.6, 0.0, 0.8];
        assert!((f.eval(&nu) - Complex64::new(0.48 + 0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn constant_density_gives_radial_wave() {
        let grid = Grid::new(3, 16, 0.25).unwrap();
        let basis = HarmonicBasis::new(3, 0).unwrap();
        let f = DensityOnSphere::harmonic(basis, 0);
        let dirs = sphere_rule(3, 24).unwrap();
        let e = 2.0f64;
        let u = herglotz(&f, e, &grid, &dirs).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..grid.npts() {
            let p = grid.point(i);
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let want = 4.0 * PI / (4.0 * PI).sqrt() * sph_bessel_j(0, e.sqrt() * r)[0];
            err = err.max((u.data[i] - want).norm());
        }
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn zero_density_and_degree_guard() {
        let grid = Grid::new(2, 16, 0.25).unwrap();
        let basis = HarmonicBasis::new(2, 5).unwrap();
        let f = DensityOnSphere::zero(basis);
        assert_eq!(
            herglotz(&f, 1.0, &grid, &sphere_rule(2, 5).unwrap())
                .unwrap()
                .max_abs(),
            0.0
        );
        let err = herglotz(&f, 1.0, &grid, &sphere_rule(2, 4).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(herglotz(&f, 0.0, &grid, &sphere_rule(2, 5).unwrap()).is_err());
    }

    #[test]
    fn translation_shifts_the_wave() {
        let grid = Grid::new(2, 32, 0.25).unwrap();
        let e = 1.0f64;
        let k = e.sqrt();
        let y = [0.7, -0.4, 0.0];
        let f = DensityOnSphere::project(2, 4, 0, |nu| Complex64::new(1.0 + nu[0], nu[1])).unwrap();
        let shifted = DensityOnSphere::project(2, 30, 10, |nu| {
            f.eval(nu) * Complex64::from_polar(1.0, -k * (y[0] * nu[0] + y[1] * nu[1]))
        })
        .unwrap();
        let dirs = sphere_rule(2, 40).unwrap();
        let u = herglotz(&shifted, e, &grid, &dirs).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..grid.npts() {
            let p = grid.point(i);
            let q = [p[0] - y[0], p[1] - y[1], 0.0];
            let want: Complex64 = dirs
                .nodes
                .iter()
                .zip(&dirs.weights)
                .map(|(nu, w)| {
                    f.eval(nu) * Complex64::from_polar(*w, k * (q[0] * nu[0] + q[1] * nu[1]))
                })
                .sum();
            err = err.max((u.data[i] - want).norm());
        }
        assert!(err < 1e-8, "{err}");
    }
}
