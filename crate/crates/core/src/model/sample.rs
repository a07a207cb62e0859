//! Grid sampling of potential specs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{Role, SampledField};
use super::spec::{tensor_from_b, ElectricTerm, PotentialSpec};
use crate::numkit::grid::{norm3, sub3, Grid};
use crate::numkit::quad::integrate_with_breaks;
use crate::{Error, Result, Vec3};

/// `∫_0^x min(y, sqrt(a^2 - u^2)) du` for x, y >= 0, extended oddly in x and y.
fn quadrant_area(x: f64, y: f64, a: f64) -> f64 {
    let sx = x.signum();
    let sy = y.signum();
    let (x, y) = (x.abs().min(a), y.abs());
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let prim = |u: f64| {
        0.5 * (u * (a * a - u * u).max(0.0).sqrt() + a * a * (u / a).clamp(-1.0, 1.0).asin())
    };
    let ustar = if y >= a { 0.0 } else { (a * a - y * y).sqrt() };
    let v = if x <= ustar {
        y * x
    } else {
        y * ustar + prim(x) - prim(ustar)
    };
    sx * sy * v
}

/// Area of the rectangle `[x0,x1]×[y0,y1]` inside the disk of radius a at the origin.
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    quadrant_area(x1, y1, a) - quadrant_area(x0, y1, a) - quadrant_area(x1, y0, a)
        + quadrant_area(x0, y0, a)
}

/// Fraction of the cube of side h centred at `p` lying inside the ball
/// `|x - c| < a` (exact in 2D, adaptive quadrature over z in 3D).
pub fn cell_ball_fraction(p: &Vec3, h: f64, dim: usize, c: &Vec3, a: f64) -> f64 {
    let d = sub3(p, c);
    let half = 0.5 * h;
    let far: f64 = (0..dim)
        .map(|i| (d[i].abs() + half).powi(2))
        .sum::<f64>()
        .sqrt();
    if far <= a {
        return 1.0;
    }
    let near: f64 = (0..dim)
        .map(|i| (d[i].abs() - half).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt();
    if near >= a {
        return 0.0;
    }
    let (x0, x1, y0, y1) = (d[0] - half, d[0] + half, d[1] - half, d[1] + half);
    if dim == 2 {
        return rect_disk_area(x0, x1, y0, y1, a) / (h * h);
    }
    let (z0, z1) = ((d[2] - half).max(-a), (d[2] + half).min(a));
    if z1 <= z0 {
        return 0.0;
    }
    let mut f = |z: f64| rect_disk_area(x0, x1, y0, y1, (a * a - z * z).max(0.0).sqrt());
    let q = integrate_with_breaks(&mut f, &[z0, z1], 1e-15 * h * h * h, 1e-12, 200);
    q.value / (h * h * h)
}

/// Outer truncation used when sampling non-compact terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Taper reaches zero at this radius.
    pub radius: f64,
    /// Declared-decay bound on the neglected potential, `C (1 + 0.8 r_t)^{-ρ}`;
    /// zero when every term is compact.
    pub tail_bound: f64,
}

#[derive(Clone, Debug)]
pub struct SampledPotential {
    pub v: SampledField,
    /// Vector potential (3 components), present for magnetic specs.
    pub a: Option<SampledField>,
    /// Analytic field tensor, present for magnetic specs.
    pub f: Option<SampledField>,
    pub truncation: Truncation,
}

impl SampledPotential {
    pub fn grid(&self) -> Grid {
        self.v.grid
    }
}

fn truncation_for(spec: &PotentialSpec, grid: &Grid) -> Result<Truncation> {
    let limit = 0.75 * grid.half_side();
    let radius = spec.truncation.unwrap_or(limit);
    if radius > limit * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "truncation radius {radius} leaves no margin in a box of half side {}",
            grid.half_side()
        )));
    }
    let tail_bound = if spec.is_compact() {
        0.0
    } else {
        spec.decay.c * (1.0 + 0.8 * radius).powf(-spec.decay.rho)
    };
    Ok(Truncation { radius, tail_bound })
}

/// Sample V (and A, F for magnetic specs) on the grid. Well terms use exact
/// cell-averaged values in boundary cells; other terms are point samples.
pub fn sample(spec: &PotentialSpec, grid: &Grid) -> Result<SampledPotential> {
    spec.validate()?;
    if spec.dim != grid.dim {
        return Err(Error::Shape(format!(
            "spec dimension {} vs grid {}",
            spec.dim, grid.dim
        )));
    }
    if !grid.contains_ball(2.0 * spec.decay.radius) {
        return Err(Error::Precondition(format!(
            "grid box (half side {}) must contain the ball of radius 2R = {}",
            grid.half_side(),
            2.0 * spec.decay.radius
        )));
    }
    for t in &spec.electric {
        if let ElectricTerm::Homogeneous { cutoff: None, .. } = t {
            return Err(Error::Singular(
                "homogeneous term needs an inner cutoff to be sampled".into(),
            ));
        }
    }
    let trunc = truncation_for(spec, grid)?;
    let rt = Some(trunc.radius);
    let npts = grid.npts();
    let mut v = vec![Complex64::new(0.0, 0.0); npts];
    for (idx, out) in v.iter_mut().enumerate() {
        let p = grid.point(idx);
        let mut val = 0.0;
        for t in &spec.electric {
            val += match t {
                ElectricTerm::Well {
                    value,
                    radius,
                    center,
                } => value * cell_ball_fraction(&p, grid.h, grid.dim, center, *radius),
                _ => {
                    let tv = t.value(&p)?;
                    if t.is_compact() {
                        tv
                    } else {
                        tv * super::spec::outer_taper(norm3(&p), trunc.radius).0
                    }
                }
            };
        }
        *out = Complex64::new(val, 0.0);
    }
    let v = SampledField::scalar(*grid, Role::ElectricPotential, v)?;
    let (a, f) = if spec.has_magnetic() {
        let mut ac = vec![vec![Complex64::new(0.0, 0.0); npts]; 3];
        let mut fc = vec![vec![Complex64::new(0.0, 0.0); npts]; 3];
        for idx in 0..npts {
            let (av, bv) = spec.magnetic_at(&grid.point(idx), rt)?;
            let tv = tensor_from_b(&bv);
            for c in 0..3 {
                ac[c][idx] = Complex64::new(av[c], 0.0);
                fc[c][idx] = Complex64::new(tv[c], 0.0);
            }
        }
        (
            Some(SampledField::from_components(
                *grid,
                Role::MagneticPotential,
                ac,
            )?),
            Some(SampledField::from_components(
                *grid,
                Role::MagneticField,
                fc,
            )?),
        )
    } else {
        (None, None)
    };
    Ok(SampledPotential {
        v,
        a,
        f,
        truncation: trunc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::{Decay, Profile};

    #[test]
    fn disk_areas() {
        let a = 1.3;
        let full = rect_disk_area(-2.0, 2.0, -2.0, 2.0, a);
        assert!((full - std::f64::consts::PI * a * a).abs() < 1e-13);
        let quarter = rect_disk_area(0.0, 2.0, 0.0, 2.0, a);
        assert!((quarter - std::f64::consts::PI * a * a / 4.0).abs() < 1e-13);
        // Strip |x| < 0.5: 2 ∫_{-0.5}^{0.5} sqrt(a^2 - x^2) dx.
        let p = |u: f64| 0.5 * (u * (a * a - u * u).sqrt() + a * a * (u / a).asin());
        let strip = 2.0 * (p(0.5) - p(-0.5));
        assert!((rect_disk_area(-0.5, 0.5, -3.0, 3.0, a) - strip).abs() < 1e-13);
    }

    #[test]
    fn cell_fractions_sum_to_ball_volume() {
        for dim in [2usize, 3] {
            let grid = Grid::new(dim, 16, 0.2).unwrap();
            let c = [0.07, -0.03, 0.05];
            let r = 1.1;
            let total: f64 = (0..grid.npts())
                .map(|i| cell_ball_fraction(&grid.point(i), grid.h, dim, &c, r))
                .sum::<f64>()
                * grid.cell_volume();
            let exact = if dim == 2 {
                std::f64::consts::PI * r * r
            } else {
                4.0 / 3.0 * std::f64::consts::PI * r * r * r
            };
            assert!(
                (total - exact).abs() < 1e-9 * exact,
                "dim {dim}: {total} vs {exact}"
            );
        }
    }

    #[test]
    fn sampling_examples() {
        let grid = Grid::new(2, 64, 1.0 / 8.0).unwrap();
        let zero = sample(&PotentialSpec::free(2), &grid).unwrap();
        assert_eq!(zero.v.max_abs(), 0.0);
        let well = PotentialSpec::electric(
            2,
            vec![ElectricTerm::Well {
                value: -1.0,
                radius: 1.0,
                center: [0.0; 3],
            }],
            Decay {
                rho: 2.0,
                c: 1.0,
                radius: 1.0,
            },
        );
        let s = sample(&well, &grid).unwrap();
        for i in 0..grid.npts() {
            let r = norm3(&grid.point(i));
            let v = s.v.data[i].re;
            if r < 1.0 - grid.h {
                assert_eq!(v, -1.0);
            } else if r > 1.0 + grid.h {
                assert_eq!(v, 0.0);
            } else {
                assert!((-1.0..=0.0).contains(&v));
            }
        }
        let scaled = sample(&well.scaled(2.5), &grid).unwrap();
        for i in 0..grid.npts() {
            assert!((scaled.v.data[i] - s.v.data[i] * 2.5).norm() < 1e-15);
        }
        let small = Grid::new(2, 16, 0.2).unwrap();
        assert!(matches!(sample(&well, &small), Err(Error::Precondition(_))));
    }

    #[test]
    fn homogeneous_term_closed_form() {
        let spec = PotentialSpec::electric(
            3,
            vec![ElectricTerm::Homogeneous {
                amplitude: 1.0,
                order: 1.5,
                profile: Profile::Isotropic,
                cutoff: Some(0.4),
            }],
            Decay {
                rho: 1.5,
                c: 1.0,
                radius: 0.5,
            },
        );
        // Sample near r = 1, inside the taper plateau.
        let grid = Grid::new(3, 20, 0.2).unwrap();
        let s = sample(&spec, &grid).unwrap();
        let idx = grid.linear_index([10, 10, 15]);
        let p = grid.point(idx);
        let r = norm3(&p);
        assert!((s.v.data[idx].re - r.powf(-1.5)).abs() < 1e-14);
        assert!(s.truncation.tail_bound > 0.0);
        let mut nocut = spec.clone();
        nocut.electric[0] = ElectricTerm::Homogeneous {
            amplitude: 1.0,
            order: 1.5,
            profile: Profile::Isotropic,
            cutoff: None,
        };
        assert!(matches!(sample(&nocut, &grid), Err(Error::Singular(_))));
    }
}
