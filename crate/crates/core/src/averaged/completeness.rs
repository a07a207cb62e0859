//! Projection of solutions on a ball K onto spans of averaged scattering
//! solutions of increasing degree.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::DensityOnSphere;
use super::representation::averaged_solution;
use crate::forward::{harmonic_solutions, Incident, Scatterer, ScatteringSolution};
use crate::model::sample::cell_ball_fraction;
use crate::numkit::grid::{norm3, sub3};
use crate::numkit::linalg::dotc;
use crate::numkit::sphere::HarmonicBasis;
use crate::{Error, Result, Vec3};

/// Relative singular-value cutoff of the projection.
pub const TRUNCATION: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!(
                "ball radius {radius} must be positive"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        norm3(&sub3(x, &self.center)) <= self.radius
    }
}

/// A solution of the equation on K to be approximated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// Outgoing Green function of H with pole outside K.
    GreenPole { pole: Vec3 },
    /// An averaged scattering solution, typically of degree above the tested range.
    Averaged { density: DensityOnSphere },
}

impl Target {
    pub fn label(&self) -> String {
        match self {
            Target::GreenPole { pole } => {
                format!("pole({:.4},{:.4},{:.4})", pole[0], pole[1], pole[2])
            }
            Target::Averaged { density } => format!("averaged(L={})", density.degree()),
        }
    }
}

/// Three poles at distance `3 radius` from the centre plus one averaged
/// solution of degree `degree`.
pub fn default_targets(ball: &Ball, dim: usize, degree: usize) -> Result<Vec<Target>> {
    let dirs: [Vec3; 3] = if dim == 2 {
        [
            [0.3f64.cos(), 0.3f64.sin(), 0.0],
            [2.4f64.cos(), 2.4f64.sin(), 0.0],
            [4.3f64.cos(), 4.3f64.sin(), 0.0],
        ]
    } else {
        [[0.48, 0.6, 0.64], [-0.8, 0.36, -0.48], [0.0, -0.6, 0.8]]
    };
    let mut out: Vec<Target> = dirs
        .iter()
        .map(|d| Target::GreenPole {
            pole: [
                ball.center[0] + 3.0 * ball.radius * d[0],
                ball.center[1] + 3.0 * ball.radius * d[1],
                if dim == 2 {
                    0.0
                } else {
                    ball.center[2] + 3.0 * ball.radius * d[2]
                },
            ],
        })
        .collect();
    let basis = HarmonicBasis::new(dim, degree)?;
    let coeffs = (0..basis.len())
        .map(|j| {
            let (l, _) = basis.label(j);
            Complex64::from_polar(1.0 / (1.0 + l as f64), 0.7 * j as f64)
        })
        .collect();
    out.push(Target::Averaged {
        density: DensityOnSphere::new(basis, coeffs)?,
    });
    Ok(out)
}

/// Solution with incident field `G_E(· - y)`; refuses poles in K or outside the box.
pub fn interior_target(sc: &Scatterer, ball: &Ball, y: &Vec3) -> Result<ScatteringSolution> {
    if ball.contains(y) {
        return Err(Error::Precondition(format!(
            "pole {y:?} lies in the ball of radius {} about {:?}",
            ball.radius, ball.center
        )));
    }
    let hs = sc.grid.half_side();
    if (0..sc.dim()).any(|a| y[a].abs() >= hs) {
        return Err(Error::Precondition(format!(
            "pole {y:?} lies outside the grid box"
        )));
    }
    sc.solve(&Incident::PointSource { pole: *y })
}

/// Quadrature points of K with square-root weights `sqrt(h^n |cell ∩ K| / h^n)`.
#[derive(Clone, Debug)]
pub struct BallQuadrature {
    pub indices: Vec<usize>,
    pub sqrt_weights: Vec<f64>,
}

impl BallQuadrature {
    pub fn new(sc: &Scatterer, ball: &Ball) -> Result<Self> {
        let g = sc.grid;
        let reach = (0..g.dim).map(|a| ball.center[a].abs()).fold(0.0, f64::max) + ball.radius;
        if reach >= g.half_side() - g.h {
            return Err(Error::Precondition(format!(
                "ball of radius {} about {:?} does not fit strictly inside the box",
                ball.radius, ball.center
            )));
        }
        let hn = g.cell_volume();
        let mut indices = Vec::new();
        let mut sqrt_weights = Vec::new();
        for i in 0..g.npts() {
            let w = cell_ball_fraction(&g.point(i), g.h, g.dim, &ball.center, ball.radius);
            if w > 0.0 {
                indices.push(i);
                sqrt_weights.push((w * hn).sqrt());
            }
        }
        Ok(Self {
            indices,
            sqrt_weights,
        })
    }

    pub fn restrict(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.indices
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(&i, w)| u[i] * *w)
            .collect()
    }

    /// Total weight; equals |K| up to rounding.
    pub fn volume(&self) -> f64 {
        self.sqrt_weights.iter().map(|w| w * w).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub ball: Ball,
    pub energy: f64,
    pub targets: Vec<String>,
    pub degrees: Vec<usize>,
    /// `residuals[t][d]`: relative L²(K) residual of target t at degree `degrees[d]`.
    pub residuals: Vec<Vec<f64>>,
    /// Number of averaged solutions spanning each subspace.
    pub basis_sizes: Vec<usize>,
    /// Directions kept after truncation.
    pub ranks: Vec<usize>,
    /// Extreme Gram eigenvalues and their ratio per degree.
    pub gram_max: Vec<f64>,
    pub gram_min: Vec<f64>,
    pub gram_condition: Vec<f64>,
    pub truncation: f64,
    /// Degrees at which truncation removed directions.
    pub flagged: Vec<bool>,
}

impl CompletenessReport {
    pub fn is_nonincreasing(&self, target: usize) -> bool {
        self.residuals[target].windows(2).all(|w| w[1] <= w[0])
    }

    /// Smallest tested degree at which the residual of `target` is below `tol`.
    pub fn first_below(&self, target: usize, tol: f64) -> Option<usize> {
        self.residuals[target]
            .iter()
            .position(|r| *r < tol)
            .map(|d| self.degrees[d])
    }
}

/// Extreme eigenvalues of the Gram matrix of the first `n` columns.
fn gram_spectrum(cols: &[Vec<Complex64>], n: usize) -> (f64, f64) {
    let m = cols[0].len();
    let b = DMatrix::from_fn(m, n, |i, j| cols[j][i]);
    let sv = b.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (smax * smax, smin * smin)
}

/// Residuals of the targets after projection onto the spans of
/// `{φ_{+,Y_j} : deg Y_j <= L}` for each L in `degrees`.
///
/// The spans are built by Gram–Schmidt in basis order (degree by degree,
/// with reorthogonalization), so the subspaces are nested exactly. A new
/// direction is discarded when its component orthogonal to the previous
/// ones is below `TRUNCATION` times the largest column norm.
pub fn completeness_residual(
    sc: &Scatterer,
    ball: &Ball,
    targets: &[Target],
    degrees: &[usize],
) -> Result<CompletenessReport> {
    if degrees.is_empty() || degrees.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "degrees must be nonempty and strictly increasing".into(),
        ));
    }
    if targets.is_empty() {
        return Err(Error::Domain("no targets".into()));
    }
    let quad = BallQuadrature::new(sc, ball)?;
    let lmax = *degrees.last().unwrap();
    let basis = HarmonicBasis::new(sc.dim(), lmax)?;
    let sols = harmonic_solutions(sc, &basis)?;
    let cols: Vec<Vec<Complex64>> = sols.iter().map(|s| quad.restrict(&s.phi.data)).collect();

    let tvals: Vec<Vec<Complex64>> = targets
        .par_iter()
        .map(|t| {
            let s = match t {
                Target::GreenPole { pole } => interior_target(sc, ball, pole)?,
                Target::Averaged { density } => averaged_solution(sc, density)?,
            };
            Ok(quad.restrict(&s.phi.data))
        })
        .collect::<Result<_>>()?;
    let tnorms: Vec<f64> = tvals.iter().map(|t| dotc(t, t).re.sqrt()).collect();
    if tnorms.iter().any(|n| *n == 0.0) {
        return Err(Error::Precondition("a target vanishes on K".into()));
    }

    let scale = cols
        .iter()
        .map(|c| dotc(c, c).re.sqrt())
        .fold(0.0, f64::max);
    let mut q: Vec<Vec<Complex64>> = Vec::new();
    let mut resid = tvals.clone();
    let mut residuals = vec![Vec::new(); targets.len()];
    let mut basis_sizes = Vec::new();
    let mut ranks = Vec::new();
    let (mut gram_max, mut gram_min, mut gram_condition, mut flagged) =
        (vec![], vec![], vec![], vec![]);
    let mut next = 0;
    for &l in degrees {
        let n = HarmonicBasis::new(sc.dim(), l)?.len();
        let first_new = q.len();
        for col in &cols[next..n] {
            let mut v = col.clone();
            for _ in 0..2 {
                for e in &q {
                    let c = dotc(e, &v);
                    for (vi, ei) in v.iter_mut().zip(e) {
                        *vi -= c * ei;
                    }
                }
            }
            let nv = dotc(&v, &v).re.sqrt();
            if nv > TRUNCATION * scale {
                q.push(v.into_iter().map(|z| z / nv).collect());
            }
        }
        next = n;
        for r in resid.iter_mut() {
            for e in &q[first_new..] {
                let c = dotc(e, r);
                for (ri, ei) in r.iter_mut().zip(e) {
                    *ri -= c * ei;
                }
            }
        }
        for (t, r) in resid.iter().enumerate() {
            residuals[t].push(dotc(r, r).re.sqrt() / tnorms[t]);
        }
        let (gmax, gmin) = gram_spectrum(&cols, n);
        basis_sizes.push(n);
        ranks.push(q.len());
        gram_max.push(gmax);
        gram_min.push(gmin);
        gram_condition.push(if gmin > 0.0 {
            gmax / gmin
        } else {
            f64::INFINITY
        });
        flagged.push(q.len() < n);
    }
    if flagged.iter().any(|f| *f) {
        log::warn!("completeness: truncation at {TRUNCATION:e} removed directions; Gram matrix numerically singular");
    }
    Ok(CompletenessReport {
        ball: *ball,
        energy: sc.energy,
        targets: targets.iter().map(|t| t.label()).collect(),
        degrees: degrees.to_vec(),
        residuals,
        basis_sizes,
        ranks,
        gram_max,
        gram_min,
        gram_condition,
        truncation: TRUNCATION,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::field::{Role, SampledField};
    use crate::numkit::green::helmholtz_green;
    use crate::numkit::grid::Grid;

    fn free(n: usize, side: f64) -> Scatterer {
        let grid = Grid::with_side(2, n, side).unwrap();
        Scatterer::new(
            &SampledField::zeros(grid, Role::ElectricPotential, 1),
            None,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn ball_quadrature_volume() {
        let sc = free(64, 8.0);
        let ball = Ball::new([0.1, -0.2, 0.0], 1.0).unwrap();
        let q = BallQuadrature::new(&sc, &ball).unwrap();
        assert!((q.volume() - std::f64::consts::PI).abs() < 1e-12);
        assert!(BallQuadrature::new(&sc, &Ball::new([3.5, 0.0, 0.0], 1.0).unwrap()).is_err());
    }

    #[test]
    fn free_pole_target_is_the_green_function() {
        let sc = free(64, 8.0);
        let ball = Ball::new([0.0; 3], 1.0).unwrap();
        let y = [2.1, 0.33, 0.0];
        let u = interior_target(&sc, &ball, &y).unwrap();
        for i in 0..sc.grid.npts() {
            let p = sc.grid.point(i);
            if ball.contains(&p) {
                assert_eq!(u.phi.data[i], helmholtz_green(&p, &y, 1.0, 2).unwrap());
            }
        }
        assert!(matches!(
            interior_target(&sc, &ball, &[0.5, 0.0, 0.0]),
            Err(Error::Precondition(_))
        ));
        assert!(interior_target(&sc, &ball, &[4.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn targets_in_the_span_and_monotone_decay() {
        let sc = free(64, 8.0);
        let ball = Ball::new([0.0; 3], 1.0).unwrap();
        let basis = HarmonicBasis::new(2, 3).unwrap();
        let inside = Target::Averaged {
            density: DensityOnSphere::new(
                basis,
                (0..basis.len())
                    .map(|j| Complex64::new(1.0, j as f64))
                    .collect(),
            )
            .unwrap(),
        };
        let near = Target::GreenPole {
            pole: [1.3, 0.21, 0.0],
        };
        let rep = completeness_residual(&sc, &ball, &[inside, near], &[0, 1, 2, 3, 5, 7]).unwrap();
        assert!(rep.residuals[0][3] < 1e-8, "{:?}", rep.residuals[0]);
        assert!(rep.is_nonincreasing(0) && rep.is_nonincreasing(1));
        // A pole close to K is far from low-degree spans.
        assert!(rep.residuals[1][0] > 0.3, "{:?}", rep.residuals[1]);
        assert!(rep.gram_condition.windows(2).all(|w| w[1] >= w[0]));
        assert!(completeness_residual(
            &sc,
            &ball,
            &[Target::GreenPole {
                pole: [0.2, 0.0, 0.0]
            }],
            &[1]
        )
        .is_err());
        assert!(completeness_residual(&sc, &ball, &[], &[1]).is_err());
        assert!(completeness_residual(&sc, &ball, &rep_targets(), &[2, 2]).is_err());
    }

    fn rep_targets() -> Vec<Target> {
        vec![Target::GreenPole {
            pole: [2.0, 0.1, 0.0],
        }]
    }
}
