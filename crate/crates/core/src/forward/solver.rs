//! Lippmann–Schwinger solver `φ = φ_inc - G_E * (Qφ)`.
//!
//! Unknowns live on the support of Q only. For magnetic Q the gradient is
//! carried as a separate unknown, with its equation obtained by applying ∇G
//! in place of G, so `Qφ = (V + A^2 + i div A) φ + 2i A·∇φ` never
//! differentiates an iterate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::incident::Incident;
use crate::model::field::{Role, SampledField};
use crate::model::perturbation::Perturbation;
use crate::model::sample::SampledPotential;
use crate::numkit::green::{check_margin, GreenOperator};
use crate::numkit::grid::Grid;
use crate::numkit::linalg::{dense_solve, gmres, FnOperator, GmresOptions, SolveReport};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub gmres: GmresOptions,
    /// Systems with at most this many unknowns are assembled and factored.
    pub dense_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gmres: GmresOptions {
                tol: 1e-10,
                restart: 80,
                max_iter: 2000,
                max_condition: 1e8,
            },
            dense_limit: 1024,
        }
    }
}

/// Convergence record of one solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub residual: f64,
    pub condition_estimate: f64,
    pub dense: bool,
    pub unknowns: usize,
}

impl SolveSummary {
    fn from_report(r: &SolveReport, unknowns: usize) -> Self {
        Self {
            iterations: r.iterations,
            residual: r.residual,
            condition_estimate: r.condition_estimate,
            dense: r.dense,
            unknowns,
        }
    }
}

/// Total field for one incident field.
#[derive(Clone, Debug)]
pub struct ScatteringSolution {
    pub incident: Incident,
    pub energy: f64,
    pub phi: SampledField,
    pub grad: SampledField,
    /// `Qφ` on the full grid (zero off the support).
    pub source: Vec<Complex64>,
    pub summary: SolveSummary,
}

impl ScatteringSolution {
    /// Incident direction for plane-wave solutions.
    pub fn direction(&self) -> Option<[f64; 3]> {
        match &self.incident {
            Incident::PlaneWave { direction } => Some(*direction),
            _ => None,
        }
    }

    pub fn grid(&self) -> Grid {
        self.phi.grid
    }
}

/// A sampled perturbation prepared for repeated solves at one energy.
pub struct Scatterer {
    pub grid: Grid,
    pub energy: f64,
    pub k: f64,
    pub options: SolverOptions,
    green: GreenOperator,
    q: Perturbation,
    support: Vec<usize>,
}

impl std::fmt::Debug for Scatterer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scatterer")
            .field("grid", &self.grid)
            .field("energy", &self.energy)
            .field("magnetic", &self.q.is_magnetic())
            .field("support", &self.support.len())
            .finish()
    }
}

impl Scatterer {
    pub fn new(v: &SampledField, a: Option<&SampledField>, energy: f64) -> Result<Self> {
        let q = Perturbation::new(v, a)?;
        let grid = q.grid;
        let mut comps: Vec<&[Complex64]> = vec![&q.scalar];
        if let Some(a) = &q.a {
            comps.extend(a.iter().map(|c| c.as_slice()));
        }
        if let Err(idx) = check_margin(&grid, &comps) {
            return Err(Error::Precondition(format!(
                "potential is not negligible near the box faces (sample {idx} at {:?})",
                grid.point(idx)
            )));
        }
        let green = GreenOperator::new(grid, energy, true)?;
        let support = q.support();
        Ok(Self {
            grid,
            energy,
            k: green.k,
            options: SolverOptions::default(),
            green,
            q,
            support,
        })
    }

    pub fn from_potential(p: &SampledPotential, energy: f64) -> Result<Self> {
        Self::new(&p.v, p.a.as_ref(), energy)
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.q
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn green(&self) -> &GreenOperator {
        &self.green
    }

    pub fn is_free(&self) -> bool {
        self.support.is_empty()
    }

    /// Incident value and gradient on the full grid.
    pub fn incident_fields(&self, inc: &Incident) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
        inc.check(self.dim())?;
        let dim = self.dim();
        let vals: Vec<(Complex64, [Complex64; 3])> = (0..self.grid.npts())
            .into_par_iter()
            .map(|i| inc.eval(&self.grid.point(i), self.energy, dim))
            .collect::<Result<_>>()?;
        let u = vals.iter().map(|v| v.0).collect();
        let g = (0..dim)
            .map(|a| vals.iter().map(|v| v.1[a]).collect())
            .collect();
        Ok((u, g))
    }

    /// `Qφ` on the full grid from values (and gradients) on the support.
    fn source_from_support(&self, u: &[Complex64], w: Option<&[Complex64]>) -> Vec<Complex64> {
        let s = self.support.len();
        let mut q = vec![Complex64::new(0.0, 0.0); self.grid.npts()];
        for (t, &i) in self.support.iter().enumerate() {
            let mut v = self.q.scalar[i] * u[t];
            if let (Some(a), Some(w)) = (&self.q.a, w) {
                for (c, ac) in a.iter().enumerate() {
                    v += Complex64::new(0.0, 2.0) * ac[i] * w[c * s + t];
                }
            }
            q[i] = v;
        }
        q
    }

    /// Solve for the total field. The gradient is part of the unknown only
    /// when Q is magnetic.
    pub fn solve(&self, inc: &Incident) -> Result<ScatteringSolution> {
        let (uinc, ginc) = self.incident_fields(inc)?;
        let dim = self.dim();
        let s = self.support.len();
        let magnetic = self.q.is_magnetic();
        let nvars = if magnetic { 1 + dim } else { 1 };
        let n = nvars * s;
        let (source, summary) = if s == 0 {
            (
                vec![Complex64::new(0.0, 0.0); self.grid.npts()],
                SolveSummary {
                    iterations: 0,
                    residual: 0.0,
                    condition_estimate: 1.0,
                    dense: false,
                    unknowns: 0,
                },
            )
        } else {
            let mut rhs = Vec::with_capacity(n);
            rhs.extend(self.support.iter().map(|&i| uinc[i]));
            if magnetic {
                for g in &ginc {
                    rhs.extend(self.support.iter().map(|&i| g[i]));
                }
            }
            let op = FnOperator {
                n,
                f: |z: &[Complex64]| -> Vec<Complex64> {
                    let (u, w) = z.split_at(s);
                    let q = self.source_from_support(u, if magnetic { Some(w) } else { None });
                    let mut out = z.to_vec();
                    if magnetic {
                        let (g, gg) = self.green.apply_with_gradient(&q);
                        for (t, &i) in self.support.iter().enumerate() {
                            out[t] += g[i];
                            for (c, ggc) in gg.iter().enumerate() {
                                out[(1 + c) * s + t] += ggc[i];
                            }
                        }
                    } else {
                        let g = self.green.apply(&q);
                        for (t, &i) in self.support.iter().enumerate() {
                            out[t] += g[i];
                        }
                    }
                    out
                },
            };
            let (z, report) = if n <= self.options.dense_limit {
                dense_solve(&op, &rhs, self.options.gmres.max_condition)?
            } else {
                gmres(&op, &rhs, &self.options.gmres)?
            };
            log::debug!(
                "LS solve: {} unknowns, {} iterations, residual {:.2e}",
                n,
                report.iterations,
                report.residual
            );
            let (u, w) = z.split_at(s);
            (
                self.source_from_support(u, if magnetic { Some(w) } else { None }),
                SolveSummary::from_report(&report, n),
            )
        };
        let (g, gg) = self.green.apply_with_gradient(&source);
        let phi: Vec<Complex64> = uinc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let grad: Vec<Vec<Complex64>> = ginc
            .iter()
            .zip(&gg)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(ScatteringSolution {
            incident: inc.clone(),
            energy: self.energy,
            phi: SampledField::scalar(self.grid, Role::Wavefunction, phi)?,
            grad: SampledField::from_components(self.grid, Role::Gradient, grad)?,
            source,
            summary,
        })
    }

    /// Relative residual of `(i∇ + A)^2 φ + Vφ - Eφ` over samples at least
    /// four cells inside the box, with an eighth-order difference Laplacian.
    pub fn pde_residual(&self, sol: &ScatteringSolution) -> Result<f64> {
        let grad: Vec<Vec<Complex64>> = sol.grad.components().iter().map(|c| c.to_vec()).collect();
        let qphi = self.q.apply(
            &sol.phi.data,
            if self.q.is_magnetic() {
                Some(&grad)
            } else {
                None
            },
        );
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.grid.npts() {
            if let Some(lap) = self.grid.fd_laplacian(&sol.phi.data, i) {
                let res = -lap + qphi[i] - self.energy * sol.phi.data[i];
                num += res.norm_sqr();
                den += sol.phi.data[i].norm_sqr();
            }
        }
        Ok(if den > 0.0 { (num / den).sqrt() } else { 0.0 })
    }
}

/// Scattering solution for the plane wave in direction `omega`.
pub fn scattering_solution(
    potential: &SampledPotential,
    omega: [f64; 3],
    energy: f64,
) -> Result<ScatteringSolution> {
    Scatterer::from_potential(potential, energy)?.solve(&Incident::plane(omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample::sample;
    use crate::model::spec::{Decay, ElectricTerm, PotentialSpec};

    fn gaussian_spec(dim: usize, amp: f64) -> PotentialSpec {
        gaussian_of_width(dim, amp, 0.3)
    }

    fn gaussian_of_width(dim: usize, amp: f64, width: f64) -> PotentialSpec {
        PotentialSpec::electric(
            dim,
            vec![ElectricTerm::Gaussian {
                amplitude: amp,
                width,
                center: [0.1, 0.0, 0.0],
            }],
            Decay {
                rho: 2.0,
                c: 10.0,
                radius: 1.0,
            },
        )
    }

    #[test]
    fn free_solution_is_the_incident_wave() {
        let grid = Grid::new(2, 32, 0.125).unwrap();
        let v = SampledField::zeros(grid, Role::ElectricPotential, 1);
        let sc = Scatterer::new(&v, None, 2.0).unwrap();
        let sol = sc.solve(&Incident::plane([0.0, 1.0, 0.0])).unwrap();
        let (u, _) = sc.incident_fields(&sol.incident).unwrap();
        assert_eq!(sol.phi.data, u);
        assert_eq!(sol.summary.unknowns, 0);
    }

    #[test]
    fn gaussian_solution_satisfies_the_equation() {
        // Narrow enough that the outer taper acts on negligible values.
        let grid = Grid::new(2, 128, 1.0 / 32.0).unwrap();
        let pot = sample(&gaussian_of_width(2, -2.0, 0.2), &grid).unwrap();
        let sc = Scatterer::from_potential(&pot, 1.5).unwrap();
        let sol = sc.solve(&Incident::plane([0.6, 0.8, 0.0])).unwrap();
        assert!(sol.summary.residual < 1e-9);
        let r = sc.pde_residual(&sol).unwrap();
        assert!(r < 1e-8, "pde residual {r}");
    }

    #[test]
    fn dense_and_iterative_agree() {
        let grid = Grid::new(2, 32, 1.0 / 8.0).unwrap();
        let pot = sample(&gaussian_spec(2, -1.0), &grid).unwrap();
        let it = Scatterer::from_potential(&pot, 1.0)
            .unwrap()
            .with_options(SolverOptions {
                dense_limit: 0,
                ..Default::default()
            });
        let dn = Scatterer::from_potential(&pot, 1.0)
            .unwrap()
            .with_options(SolverOptions {
                dense_limit: 100_000,
                ..Default::default()
            });
        let inc = Incident::plane([1.0, 0.0, 0.0]);
        let a = it.solve(&inc).unwrap();
        let b = dn.solve(&inc).unwrap();
        assert!(b.summary.dense && !a.summary.dense);
        let d = a
            .phi
            .data
            .iter()
            .zip(&b.phi.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn born_scaling() {
        // φ - φ_inc - (-G*(λVφ_inc)) = O(λ^2).
        let grid = Grid::new(2, 64, 1.0 / 16.0).unwrap();
        let inc = Incident::plane([1.0, 0.0, 0.0]);
        let mut errs = Vec::new();
        for lam in [1e-2, 5e-3] {
            let pot = sample(&gaussian_spec(2, lam), &grid).unwrap();
            let sc = Scatterer::from_potential(&pot, 1.0).unwrap();
            let sol = sc.solve(&inc).unwrap();
            let (u, _) = sc.incident_fields(&inc).unwrap();
            let vu: Vec<Complex64> = pot.v.data.iter().zip(&u).map(|(v, x)| v * x).collect();
            let born = sc.green().apply(&vu);
            let e = (0..grid.npts())
                .map(|i| (sol.phi.data[i] - u[i] + born[i]).norm())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.1, "Born remainder ratio {ratio}");
    }

    #[test]
    fn margin_violation_is_refused() {
        let grid = Grid::new(2, 32, 1.0 / 16.0).unwrap();
        let v = SampledField::from_fn(grid, Role::ElectricPotential, |p| {
            Complex64::new((-(p[0] - 0.9).powi(2) / 0.01).exp(), 0.0)
        });
        assert!(matches!(
            Scatterer::new(&v, None, 1.0),
            Err(Error::Precondition(_))
        ));
    }
}
