//! The perturbation `Q = 2iA·∇ + i div A + A^2 + V` acting on sampled
//! wavefunctions, so that `H = -Δ + Q = (i∇ + A)^2 + V`.

use num_complex::Complex64;

use super::field::{Role, SampledField};
use super::sample::SampledPotential;
use crate::numkit::fft::Spectral;
use crate::numkit::grid::Grid;
use crate::{Error, Result};

/// Pointwise data of Q on a grid: the multiplicative part
/// `V + A^2 + i div A` and the components of A.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub grid: Grid,
    pub scalar: Vec<Complex64>,
    pub a: Option<Vec<Vec<Complex64>>>,
}

impl Perturbation {
    /// `div A` is taken spectrally from the samples of A.
    pub fn new(v: &SampledField, a: Option<&SampledField>) -> Result<Self> {
        if v.ncomp != 1 {
            return Err(Error::Shape("electric potential must be scalar".into()));
        }
        let grid = v.grid;
        let mut scalar = v.data.clone();
        let a = match a {
            None => None,
            Some(a) => {
                if a.grid != grid || a.ncomp != grid.dim {
                    return Err(Error::Shape(
                        "vector potential does not match the grid".into(),
                    ));
                }
                if grid.dim != 3 {
                    return Err(Error::Domain(
                        "magnetic potentials require dimension 3".into(),
                    ));
                }
                let sp = Spectral::new(grid);
                let comps: Vec<Vec<Complex64>> =
                    a.components().iter().map(|c| c.to_vec()).collect();
                // div A vanishes wherever A does on a whole neighbourhood; the
                // spectral derivative would leave ringing there.
                let near = dilated_support(&grid, &comps);
                for (axis, c) in comps.iter().enumerate() {
                    let d = sp.derivative(c, axis);
                    for i in 0..grid.npts() {
                        if near[i] {
                            scalar[i] += c[i] * c[i] + Complex64::i() * d[i];
                        }
                    }
                }
                Some(comps)
            }
        };
        Ok(Self { grid, scalar, a })
    }

    pub fn from_sampled(p: &SampledPotential) -> Result<Self> {
        Self::new(&p.v, p.a.as_ref())
    }

    pub fn is_magnetic(&self) -> bool {
        self.a.is_some()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_none() && self.scalar.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    /// `Qu` given u and (for magnetic Q) its gradient.
    pub fn apply(&self, u: &[Complex64], grad: Option<&[Vec<Complex64>]>) -> Vec<Complex64> {
        let mut q: Vec<Complex64> = self.scalar.iter().zip(u).map(|(s, x)| s * x).collect();
        if let Some(a) = &self.a {
            let g = grad.expect("magnetic perturbation needs the gradient");
            for (ac, gc) in a.iter().zip(g) {
                for i in 0..q.len() {
                    q[i] += Complex64::new(0.0, 2.0) * ac[i] * gc[i];
                }
            }
        }
        q
    }

    /// Sample indices where Q has nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        (0..self.grid.npts())
            .filter(|&i| {
                self.scalar[i] != Complex64::new(0.0, 0.0)
                    || self
                        .a
                        .as_ref()
                        .is_some_and(|a| a.iter().any(|c| c[i] != Complex64::new(0.0, 0.0)))
            })
            .collect()
    }
}

/// Samples within one cell (in every axis) of a nonzero component.
fn dilated_support(grid: &Grid, comps: &[Vec<Complex64>]) -> Vec<bool> {
    let n = grid.n;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![false; grid.npts()];
    for i in 0..grid.npts() {
        if comps.iter().all(|c| c[i] == zero) {
            continue;
        }
        let m = grid.multi_index(i);
        let lo = |a: usize| {
            if a < grid.dim {
                m[a].saturating_sub(1)
            } else {
                0
            }
        };
        let hi = |a: usize| {
            if a < grid.dim {
                (m[a] + 1).min(n - 1)
            } else {
                0
            }
        };
        for x in lo(0)..=hi(0) {
            for y in lo(1)..=hi(1) {
                for z in lo(2)..=hi(2) {
                    out[grid.linear_index([x, y, z])] = true;
                }
            }
        }
    }
    out
}

/// `(2iA·∇ + i div A + A^2 + V) φ` with ∇φ supplied by the caller.
pub fn apply_q(
    v: &SampledField,
    a: Option<&SampledField>,
    phi: &SampledField,
    grad_phi: Option<&SampledField>,
) -> Result<SampledField> {
    if !phi.same_shape(v) {
        return Err(Error::Shape(
            "wavefunction and potential grids differ".into(),
        ));
    }
    let q = Perturbation::new(v, a)?;
    let grad: Option<Vec<Vec<Complex64>>> = match (a, grad_phi) {
        (Some(_), Some(g)) => {
            if g.grid != phi.grid || g.ncomp != phi.grid.dim {
                return Err(Error::Shape(
                    "gradient does not match the wavefunction".into(),
                ));
            }
            Some(g.components().iter().map(|c| c.to_vec()).collect())
        }
        (Some(_), None) => return Err(Error::Shape("magnetic Q needs the gradient of φ".into())),
        _ => None,
    };
    SampledField::scalar(
        phi.grid,
        Role::Wavefunction,
        q.apply(&phi.data, grad.as_deref()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::grid::dot3;

    fn bump(grid: Grid, c: [f64; 3], w: f64) -> Vec<Complex64> {
        (0..grid.npts())
            .map(|i| {
                let p = grid.point(i);
                let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                Complex64::new((-dot3(&d, &d) / (2.0 * w * w)).exp(), 0.0)
            })
            .collect()
    }

    fn swirl(grid: Grid) -> SampledField {
        SampledField::vector_from_fn(grid, Role::MagneticPotential, 3, |p| {
            let g = (-dot3(p, p) / 0.08).exp();
            vec![
                Complex64::new(-p[1] * g, 0.0),
                Complex64::new(p[0] * g + 0.3 * p[2] * g, 0.0),
                Complex64::new(0.5 * g, 0.0),
            ]
        })
    }

    #[test]
    fn electric_q_is_multiplication() {
        let grid = Grid::new(3, 16, 0.15).unwrap();
        let v =
            SampledField::scalar(grid, Role::ElectricPotential, bump(grid, [0.0; 3], 0.3)).unwrap();
        let k = 1.3;
        let phi = SampledField::from_fn(grid, Role::Wavefunction, |p| {
            Complex64::from_polar(1.0, k * p[0])
        });
        let q = apply_q(&v, None, &phi, None).unwrap();
        for i in 0..grid.npts() {
            assert_eq!(q.data[i], v.data[i] * phi.data[i]);
        }
    }

    #[test]
    fn gauge_covariance() {
        // (i∇ + A + ∇ψ)^2 (e^{iψ} φ) = e^{iψ} (i∇ + A)^2 φ, i.e.
        // Q'(e^{iψ}φ) - e^{iψ} Qφ = Δ(e^{iψ}φ) - e^{iψ} Δφ.
        let grid = Grid::new(3, 64, 1.0 / 64.0).unwrap();
        let sp = Spectral::new(grid);
        let v = SampledField::scalar(
            grid,
            Role::ElectricPotential,
            bump(grid, [0.05, 0.0, 0.0], 0.1),
        )
        .unwrap();
        let a = swirl(grid);
        let psi: Vec<Complex64> = bump(grid, [0.0, 0.05, 0.0], 0.08)
            .iter()
            .map(|z| z * 0.7)
            .collect();
        let dpsi = sp.gradient(&psi);
        let mut a2 = a.clone();
        for c in 0..3 {
            for i in 0..grid.npts() {
                a2.component_mut(c)[i] += dpsi[c][i];
            }
        }
        let phi = bump(grid, [0.0, 0.0, 0.02], 0.09);
        let phase: Vec<Complex64> = psi
            .iter()
            .map(|p| Complex64::from_polar(1.0, p.re))
            .collect();
        let phi2: Vec<Complex64> = phi.iter().zip(&phase).map(|(x, e)| x * e).collect();
        let q1 = Perturbation::new(&v, Some(&a)).unwrap();
        let q2 = Perturbation::new(&v, Some(&a2)).unwrap();
        let r1 = q1.apply(&phi, Some(&sp.gradient(&phi)));
        let r2 = q2.apply(&phi2, Some(&sp.gradient(&phi2)));
        let l1 = sp.laplacian(&phi);
        let l2 = sp.laplacian(&phi2);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..grid.npts() {
            let lhs = r2[i] - phase[i] * r1[i];
            let rhs = l2[i] - phase[i] * l1[i];
            err = err.max((lhs - rhs).norm());
            scale = scale.max(rhs.norm());
        }
        assert!(
            err <= 1e-6 * scale.max(1.0),
            "gauge residual {err} (scale {scale})"
        );
    }

    #[test]
    fn magnetic_q_is_symmetric() {
        let grid = Grid::new(3, 32, 1.0 / 24.0).unwrap();
        let sp = Spectral::new(grid);
        let v = SampledField::scalar(grid, Role::ElectricPotential, bump(grid, [0.0; 3], 0.15))
            .unwrap();
        let q = Perturbation::new(&v, Some(&swirl(grid))).unwrap();
        let phi: Vec<Complex64> = bump(grid, [0.05, 0.0, 0.0], 0.12)
            .iter()
            .enumerate()
            .map(|(i, z)| z * Complex64::from_polar(1.0, 3.0 * grid.point(i)[1]))
            .collect();
        let chi = bump(grid, [0.0, -0.04, 0.03], 0.1);
        let qphi = q.apply(&phi, Some(&sp.gradient(&phi)));
        let qchi = q.apply(&chi, Some(&sp.gradient(&chi)));
        let lhs: Complex64 = qphi.iter().zip(&chi).map(|(a, b)| a * b.conj()).sum();
        let rhs: Complex64 = phi.iter().zip(&qchi).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-8 * lhs.norm(), "{lhs} {rhs}");
    }

    #[test]
    fn shape_errors() {
        let g1 = Grid::new(3, 8, 0.1).unwrap();
        let g2 = Grid::new(3, 10, 0.1).unwrap();
        let v = SampledField::zeros(g1, Role::ElectricPotential, 1);
        let phi = SampledField::zeros(g2, Role::Wavefunction, 1);
        assert!(matches!(
            apply_q(&v, None, &phi, None),
            Err(Error::Shape(_))
        ));
    }
}
