//! Gauge functions and the transformation `A -> A + ∇ψ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::forward::{smatrix, Scatterer, ScatteringMatrix};
use crate::model::field::{Role, SampledField};
use crate::numkit::grid::{dot3, norm3, sub3, Grid};
use crate::numkit::sphere::probe_directions;
use crate::{Error, Result, Vec3};

fn origin() -> Vec3 {
    [0.0; 3]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeFunction {
    Zero,
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default = "origin")]
        center: Vec3,
    },
    /// `amplitude * (1 - ρ^2)^8`, ρ = |x - c|/radius.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default = "origin")]
        center: Vec3,
    },
}

impl GaugeFunction {
    pub fn is_zero(&self) -> bool {
        matches!(self, GaugeFunction::Zero)
    }

    /// (ψ, ∇ψ) at x.
    pub fn eval(&self, x: &Vec3) -> (f64, Vec3) {
        match self {
            GaugeFunction::Zero => (0.0, [0.0; 3]),
            GaugeFunction::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let d = sub3(x, center);
                let v = amplitude * (-dot3(&d, &d) / (2.0 * width * width)).exp();
                let s = -v / (width * width);
                (v, [s * d[0], s * d[1], s * d[2]])
            }
            GaugeFunction::Bump {
                amplitude,
                radius,
                center,
            } => {
                let d = sub3(x, center);
                let rho2 = dot3(&d, &d) / (radius * radius);
                if rho2 >= 1.0 {
                    return (0.0, [0.0; 3]);
                }
                let t = 1.0 - rho2;
                let t7 = t.powi(7);
                let v = amplitude * t7 * t;
                let s = -16.0 * amplitude * t7 / (radius * radius);
                (v, [s * d[0], s * d[1], s * d[2]])
            }
        }
    }

    /// Check `|ψ| <= C(1+|x|)^{-μ}` and `|∇ψ| <= C(1+|x|)^{-1-μ}` on probe rays
    /// for radii in [R, 4R]. Returns the worst ratio.
    pub fn validate_decay(
        &self,
        mu: f64,
        c: f64,
        radius: f64,
        dim: usize,
        rays: usize,
    ) -> Result<f64> {
        if !(mu > 0.0) {
            return Err(Error::Domain(format!(
                "gauge decay exponent must be positive, got {mu}"
            )));
        }
        let mut worst: f64 = 0.0;
        for d in probe_directions(dim, rays.max(8)) {
            for i in 0..33 {
                let r = radius * (1.0 + 3.0 * i as f64 / 32.0);
                let (v, g) = self.eval(&[d[0] * r, d[1] * r, d[2] * r]);
                worst = worst
                    .max(v.abs() * (1.0 + r).powf(mu) / c)
                    .max(norm3(&g) * (1.0 + r).powf(1.0 + mu) / c);
            }
        }
        Ok(worst)
    }

    pub fn sample(&self, grid: &Grid) -> SampledField {
        SampledField::from_fn(*grid, Role::Generic, |p| {
            Complex64::new(self.eval(p).0, 0.0)
        })
    }
}

/// `A + ∇ψ` with the gradient evaluated analytically. `a = None` is A = 0.
pub fn gauge_transform(
    grid: &Grid,
    a: Option<&SampledField>,
    psi: &GaugeFunction,
) -> Result<SampledField> {
    let base = match a {
        Some(a) => {
            if a.grid != *grid || a.ncomp != grid.dim {
                return Err(Error::Shape(
                    "vector potential does not match the grid".into(),
                ));
            }
            a.clone()
        }
        None => SampledField::zeros(*grid, Role::MagneticPotential, grid.dim),
    };
    if psi.is_zero() {
        return Ok(base);
    }
    let mut out = base;
    let n = grid.npts();
    for i in 0..n {
        let g = psi.eval(&grid.point(i)).1;
        for c in 0..grid.dim {
            out.data[c * n + i] += g[c];
        }
    }
    Ok(out)
}

/// Both S-matrices of a gauge comparison.
#[derive(Clone, Debug)]
pub struct GaugeComparison {
    pub original: ScatteringMatrix,
    pub transformed: ScatteringMatrix,
    /// Operator norm of the difference.
    pub defect: f64,
}

/// S-matrices up to degree `degree` for (V, A) and (V, A + ∇ψ).
pub fn gauge_comparison(
    v: &SampledField,
    a: Option<&SampledField>,
    psi: &GaugeFunction,
    energy: f64,
    degree: usize,
) -> Result<GaugeComparison> {
    let grid = v.grid;
    let original = smatrix(&Scatterer::new(v, a, energy)?, degree)?;
    let transformed = if psi.is_zero() {
        original.clone()
    } else {
        let a2 = gauge_transform(&grid, a, psi)?;
        smatrix(&Scatterer::new(v, Some(&a2), energy)?, degree)?
    };
    let defect = original.distance(&transformed)?;
    Ok(GaugeComparison {
        original,
        transformed,
        defect,
    })
}

/// `‖S(E; V, A) - S(E; V, A + ∇ψ)‖` in the harmonic basis up to degree `degree`.
pub fn gauge_invariance_defect(
    v: &SampledField,
    a: Option<&SampledField>,
    psi: &GaugeFunction,
    energy: f64,
    degree: usize,
) -> Result<f64> {
    Ok(gauge_comparison(v, a, psi, energy, degree)?.defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetic::calculus::{curl, max_difference};

    #[test]
    fn gradients_match_finite_differences() {
        let fs = [
            GaugeFunction::Gaussian {
                amplitude: 0.8,
                width: 0.3,
                center: [0.1, 0.0, -0.1],
            },
            GaugeFunction::Bump {
                amplitude: 1.2,
                radius: 0.7,
                center: [0.0, 0.1, 0.0],
            },
        ];
        let x = [0.2, -0.15, 0.3];
        let d = 1e-6;
        for f in &fs {
            let g = f.eval(&x).1;
            for k in 0..3 {
                let mut p = x;
                p[k] += d;
                let mut m = x;
                m[k] -= d;
                let fd = (f.eval(&p).0 - f.eval(&m).0) / (2.0 * d);
                assert!((fd - g[k]).abs() < 1e-8);
            }
            assert!(f.validate_decay(1.0, 10.0, 1.0, 3, 8).unwrap() <= 1.0);
        }
    }

    #[test]
    fn transform_properties() {
        let grid = Grid::new(3, 48, 1.0 / 16.0).unwrap();
        let a = SampledField::vector_from_fn(grid, Role::MagneticPotential, 3, |p| {
            let g = (-dot3(p, p) / 0.1).exp();
            vec![
                Complex64::new(-p[1] * g, 0.0),
                Complex64::new(p[0] * g, 0.0),
                Complex64::new(0.0, 0.0),
            ]
        });
        assert_eq!(
            gauge_transform(&grid, Some(&a), &GaugeFunction::Zero).unwrap(),
            a
        );
        let psi = GaugeFunction::Gaussian {
            amplitude: 0.5,
            width: 0.2,
            center: [0.05, 0.0, 0.0],
        };
        let b = gauge_transform(&grid, Some(&a), &psi).unwrap();
        let d = max_difference(&curl(&a).unwrap(), &curl(&b).unwrap()).unwrap();
        assert!(d < 1e-8, "{d}");
        let pure = gauge_transform(&grid, None, &psi).unwrap();
        let mut norm_pure = 0.0;
        let mut norm_grad = 0.0;
        for i in 0..grid.npts() {
            norm_pure += pure.norm_at(i).powi(2);
            norm_grad += dot3(&psi.eval(&grid.point(i)).1, &psi.eval(&grid.point(i)).1);
        }
        assert!((norm_pure - norm_grad).abs() < 1e-12 * norm_grad);
    }
}
