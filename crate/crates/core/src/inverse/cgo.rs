//! Complex geometrical optics solutions `φ = e^{ip·x}(1 + ψ)` with `p·p = E`,
//! and recovery of Fourier coefficients of potential differences from them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orthogonality::SampledPair;
use crate::model::field::SampledField;
use crate::numkit::fft::FftNd;
use crate::numkit::grid::{dot3, norm3, Grid};
use crate::numkit::linalg::norm;
use crate::{Error, Result, Vec3};

/// τ schedule in units of `√E`.
pub const DEFAULT_TAU_FACTORS: [f64; 4] = [4.0, 8.0, 16.0, 32.0];
/// Relative change across the last τ doubling below which a coefficient is accepted.
pub const STABILIZATION_TOLERANCE: f64 = 0.02;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgoParameter {
    pub p: [C; 3],
    pub xi: Vec3,
    pub tau: f64,
    pub energy: f64,
}

impl CgoParameter {
    /// Complex bilinear square `p·p`.
    pub fn square(&self) -> C {
        self.p.iter().map(|z| z * z).sum()
    }

    pub fn modulus(&self) -> f64 {
        self.p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn real(&self) -> Vec3 {
        [self.p[0].re, self.p[1].re, self.p[2].re]
    }

    pub fn imag(&self) -> Vec3 {
        [self.p[0].im, self.p[1].im, self.p[2].im]
    }
}

fn unit(v: &Vec3) -> Vec3 {
    let r = norm3(v);
    [v[0] / r, v[1] / r, v[2] / r]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal `e₁ ∥ ξ`, `e₂`, `e₃` (e₁ = x̂ when ξ = 0).
fn frame(xi: &Vec3) -> [Vec3; 3] {
    let e1 = if norm3(xi) > 0.0 {
        unit(xi)
    } else {
        [1.0, 0.0, 0.0]
    };
    let axis = (0..3)
        .min_by(|&a, &b| e1[a].abs().partial_cmp(&e1[b].abs()).unwrap())
        .unwrap();
    let mut t = [0.0; 3];
    t[axis] = 1.0;
    let e2 = unit(&cross(&e1, &t));
    let e3 = cross(&e1, &e2);
    [e1, e2, e3]
}

/// `p⁽¹⁾ = ξ/2 + a e₂ + iτ e₃`, `p⁽²⁾ = -ξ/2 + a e₂ - iτ e₃` with
/// `a = √(E + τ² - |ξ|²/4)`.
pub fn cgo_parameters(xi: Vec3, energy: f64, tau: f64) -> Result<(CgoParameter, CgoParameter)> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("energy {energy} must be positive")));
    }
    let xn = norm3(&xi);
    if !(tau > 0.5 * xn) || !tau.is_finite() {
        return Err(Error::Precondition(format!(
            "τ = {tau} must exceed |ξ|/2 = {}",
            0.5 * xn
        )));
    }
    let [_, e2, e3] = frame(&xi);
    let a = (energy + tau * tau - 0.25 * xn * xn).sqrt();
    let make = |s: f64| {
        let mut p = [ZERO; 3];
        for (i, z) in p.iter_mut().enumerate() {
            *z = C::new(s * 0.5 * xi[i] + a * e2[i], s * tau * e3[i]);
        }
        CgoParameter { p, xi, tau, energy }
    };
    Ok((make(1.0), make(-1.0)))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CgoOptions {
    /// ε = regularization / τ.
    pub regularization: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Largest tolerated increment ratio of the Neumann series.
    pub max_spectral_radius: f64,
}

impl Default for CgoOptions {
    fn default() -> Self {
        Self {
            regularization: 1.0,
            max_iterations: 200,
            tolerance: 1e-12,
            max_spectral_radius: 0.95,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CgoSolution {
    #[serde(skip)]
    pub psi: Vec<C>,
    /// `‖ψ‖` in `L²` with weight `(1 + |x|²)^{-1}`.
    pub weighted_norm: f64,
    pub epsilon: f64,
    pub spectral_radius: f64,
    pub iterations: usize,
    /// Share of source spectrum on modes with `0 < |s| < ε`.
    pub regularization_weight: f64,
}

/// Regularized inverse of `Δ + 2ip·∇` on the periodic grid.
struct Faddeev {
    fft: FftNd,
    inv: Vec<C>,
    damped: Vec<bool>,
}

/// Sub-samples per axis when averaging `1/s` over a lattice cell.
const CELL_SUBSAMPLES: usize = 8;

impl Faddeev {
    /// Multiplier `s̄/(|s|² + ε²)`, averaged over the lattice cell wherever s
    /// varies across the cell by more than a fraction of its size.
    fn new(grid: &Grid, p: &[C; 3], eps: f64) -> Self {
        let n = grid.n;
        let dk = 2.0 * std::f64::consts::PI / grid.side();
        let wave = |j: usize| {
            if j < n / 2 {
                j as f64 * dk
            } else {
                (j as f64 - n as f64) * dk
            }
        };
        // ∂ → iζ: symbol of Δ + 2ip·∇ is -(|ζ|² + 2 p·ζ).
        let symbol = |z: &Vec3| -> C {
            let pz: C = (0..3).map(|a| p[a] * z[a]).sum();
            -(C::new(dot3(z, z), 0.0) + 2.0 * pz)
        };
        let reg = |s: C| s.conj() / (s.norm_sqr() + eps * eps);
        let m = CELL_SUBSAMPLES;
        let offsets: Vec<f64> = (0..m)
            .map(|i| ((i as f64 + 0.5) / m as f64 - 0.5) * dk)
            .collect();
        let (inv, damped): (Vec<C>, Vec<bool>) = (0..grid.npts())
            .into_par_iter()
            .map(|idx| {
                let mi = grid.multi_index(idx);
                let z = [wave(mi[0]), wave(mi[1]), wave(mi[2])];
                let s = symbol(&z);
                let grad = (0..3)
                    .map(|a| (2.0 * z[a] + 2.0 * p[a]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let a = s.norm();
                let damped = a > 0.0 && a < eps;
                if a > 3.0 * grad * dk {
                    return (reg(s), damped);
                }
                let mut acc = ZERO;
                for ox in &offsets {
                    for oy in &offsets {
                        for oz in &offsets {
                            acc += reg(symbol(&[z[0] + ox, z[1] + oy, z[2] + oz]));
                        }
                    }
                }
                (acc / (m * m * m) as f64, damped)
            })
            .unzip();
        Self {
            fft: FftNd::new(3, n),
            inv,
            damped,
        }
    }

    /// Returns `G f` and the spectral share of `f` on damped modes.
    fn apply(&self, f: &[C]) -> (Vec<C>, f64) {
        let mut w = f.to_vec();
        self.fft.forward(&mut w);
        let total: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        let reg: f64 = w
            .iter()
            .zip(&self.damped)
            .filter(|(_, d)| **d)
            .map(|(z, _)| z.norm_sqr())
            .sum();
        for (z, g) in w.iter_mut().zip(&self.inv) {
            *z *= g;
        }
        self.fft.inverse(&mut w);
        (w, if total > 0.0 { reg / total } else { 0.0 })
    }
}

fn truncated(v: &SampledField, radius: f64) -> Vec<C> {
    let grid = v.grid;
    (0..grid.npts())
        .map(|i| {
            if norm3(&grid.point(i)) < radius {
                v.data[i]
            } else {
                ZERO
            }
        })
        .collect()
}

pub fn weighted_norm(grid: &Grid, psi: &[C]) -> f64 {
    let s: f64 = psi
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let x = grid.point(i);
            z.norm_sqr() / (1.0 + dot3(&x, &x))
        })
        .sum();
    (s * grid.cell_volume()).sqrt()
}

fn check_dim(grid: &Grid) -> Result<()> {
    if grid.dim != 3 {
        return Err(Error::Domain("CGO solutions need n = 3".into()));
    }
    Ok(())
}

/// Neumann series for `(Δ + 2ip·∇)ψ = χ_{B_R} V (1 + ψ)`. Symbol zeros are
/// handled by `1/s → s̄/(|s|² + ε²)` with `ε = regularization / τ`.
pub fn cgo_solve(
    v: &SampledField,
    radius: f64,
    p: &CgoParameter,
    opts: &CgoOptions,
) -> Result<CgoSolution> {
    let grid = v.grid;
    check_dim(&grid)?;
    let vt = truncated(v, radius);
    let eps = opts.regularization / p.tau;
    let npts = grid.npts();
    if vt.iter().all(|z| *z == ZERO) {
        return Ok(CgoSolution {
            psi: vec![ZERO; npts],
            weighted_norm: 0.0,
            epsilon: eps,
            spectral_radius: 0.0,
            iterations: 0,
            regularization_weight: 0.0,
        });
    }
    let g = Faddeev::new(&grid, &p.p, eps);
    let (mut psi, mut weight) = g.apply(&vt);
    let mut prev_inc = norm(&psi);
    let mut rho = 0.0;
    let mut iterations = 1;
    while iterations < opts.max_iterations {
        let src: Vec<C> = vt.iter().zip(&psi).map(|(v, s)| v * (1.0 + s)).collect();
        let (next, w) = g.apply(&src);
        weight = w;
        let inc = next
            .iter()
            .zip(&psi)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        psi = next;
        iterations += 1;
        if prev_inc > 0.0 {
            rho = inc / prev_inc;
        }
        if inc <= opts.tolerance * norm(&psi) {
            break;
        }
        if iterations >= 3 && rho > opts.max_spectral_radius {
            return Err(Error::Precondition(format!(
                "Neumann series for the CGO remainder diverges: spectral radius estimate {rho:.3} exceeds {} (contrast too strong for τ = {})",
                opts.max_spectral_radius, p.tau
            )));
        }
        prev_inc = inc;
    }
    if iterations >= opts.max_iterations {
        return Err(Error::NoConvergence {
            iterations,
            residual: prev_inc / norm(&psi).max(1e-300),
            history: vec![rho],
        });
    }
    if weight > 0.1 {
        log::warn!(
            "symbol regularization carries {:.1}% of the source spectrum (ε = {eps:.3e})",
            100.0 * weight
        );
    }
    Ok(CgoSolution {
        weighted_norm: weighted_norm(&grid, &psi),
        psi,
        epsilon: eps,
        spectral_radius: rho,
        iterations,
        regularization_weight: weight,
    })
}

/// One-term Neumann approximation `(Δ + 2ip·∇)^{-1} χ_{B_R} V`.
pub fn cgo_first_order(
    v: &SampledField,
    radius: f64,
    p: &CgoParameter,
    opts: &CgoOptions,
) -> Result<Vec<C>> {
    check_dim(&v.grid)?;
    let g = Faddeev::new(&v.grid, &p.p, opts.regularization / p.tau);
    Ok(g.apply(&truncated(v, radius)).0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauStep {
    pub tau: f64,
    pub value: C,
    pub psi_norms: [f64; 2],
    pub epsilon: f64,
    pub spectral_radius: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub xi: Vec3,
    /// Coefficient at the largest τ.
    pub value: C,
    /// `∫ e^{iξ·x}(V₂ - V₁)` by grid quadrature of the known difference.
    pub reference: C,
    pub steps: Vec<TauStep>,
    /// Relative change across the last τ doubling.
    pub last_change: f64,
    pub stabilized: bool,
}

impl FourierCoefficient {
    pub fn relative_error(&self) -> f64 {
        (self.value - self.reference).norm() / self.reference.norm().max(1e-300)
    }

    pub fn norms_decreasing(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| (0..2).all(|j| w[1].psi_norms[j] < w[0].psi_norms[j]))
    }
}

fn pairing(grid: &Grid, dv: &[C], xi: &Vec3, psi1: &[C], psi2: &[C]) -> C {
    let mut acc = ZERO;
    for i in 0..grid.npts() {
        if dv[i] == ZERO {
            continue;
        }
        let x = grid.point(i);
        acc += dv[i] * C::from_polar(1.0, dot3(xi, &x)) * (1.0 + psi1[i]) * (1.0 + psi2[i].conj());
    }
    acc * grid.cell_volume()
}

/// Coefficient `∫_{B_R} (V₂ - V₁) φ₁(x, p⁽¹⁾) conj φ₂(x, p⁽²⁾)` along the τ
/// schedule for one ξ.
pub fn fourier_coefficient(
    pair: &SampledPair,
    xi: Vec3,
    energy: f64,
    taus: &[f64],
    opts: &CgoOptions,
) -> Result<FourierCoefficient> {
    let grid = pair.grid();
    check_dim(&grid)?;
    if taus.is_empty() {
        return Err(Error::Domain("empty τ schedule".into()));
    }
    let v1 = &pair.first.v;
    let v2 = &pair.second.v;
    let dv: Vec<C> = truncated(v2, pair.radius)
        .iter()
        .zip(truncated(v1, pair.radius))
        .map(|(a, b)| a - b)
        .collect();
    let zeros = vec![ZERO; grid.npts()];
    let reference = pairing(&grid, &dv, &xi, &zeros, &zeros);
    let mut steps = Vec::with_capacity(taus.len());
    for &tau in taus {
        let (p1, p2) = cgo_parameters(xi, energy, tau)?;
        let s1 = cgo_solve(v1, pair.radius, &p1, opts)?;
        let s2 = cgo_solve(v2, pair.radius, &p2, opts)?;
        steps.push(TauStep {
            tau,
            value: pairing(&grid, &dv, &xi, &s1.psi, &s2.psi),
            psi_norms: [s1.weighted_norm, s2.weighted_norm],
            epsilon: s1.epsilon,
            spectral_radius: [s1.spectral_radius, s2.spectral_radius],
        });
    }
    let value = steps.last().unwrap().value;
    let last_change = if steps.len() >= 2 {
        let prev = steps[steps.len() - 2].value;
        (value - prev).norm() / value.norm().max(1e-300)
    } else {
        f64::INFINITY
    };
    Ok(FourierCoefficient {
        xi,
        value,
        reference,
        steps,
        last_change,
        stabilized: last_change < STABILIZATION_TOLERANCE,
    })
}

/// Cubic lattice `ξ = dξ·m`, `m ∈ ℤ³`, with `|ξ| ≤ max`.
pub fn xi_lattice(max: f64, spacing: f64) -> Vec<Vec3> {
    let m = (max / spacing).floor() as i64;
    let mut out = Vec::new();
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                let xi = [a as f64 * spacing, b as f64 * spacing, c as f64 * spacing];
                if norm3(&xi) <= max * (1.0 + 1e-12) {
                    out.push(xi);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierReport {
    pub energy: f64,
    pub radius: f64,
    pub taus: Vec<f64>,
    pub options: CgoOptions,
    pub coefficients: Vec<FourierCoefficient>,
    /// Coefficients whose τ schedule ended before stabilizing.
    pub flagged: Vec<usize>,
    pub max_relative_error: f64,
}

/// Coefficients for every ξ (in parallel), flagging unstabilized ones.
pub fn fourier_difference(
    pair: &SampledPair,
    xis: &[Vec3],
    energy: f64,
    taus: &[f64],
    opts: &CgoOptions,
) -> Result<FourierReport> {
    let coefficients: Vec<FourierCoefficient> = xis
        .par_iter()
        .map(|xi| fourier_coefficient(pair, *xi, energy, taus, opts))
        .collect::<Result<_>>()?;
    let flagged = coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.stabilized)
        .map(|(i, _)| i)
        .collect();
    let max_relative_error = coefficients
        .iter()
        .map(|c| c.relative_error())
        .fold(0.0, f64::max);
    Ok(FourierReport {
        energy,
        radius: pair.radius,
        taus: taus.to_vec(),
        options: *opts,
        coefficients,
        flagged,
        max_relative_error,
    })
}

/// Default τ schedule `{4, 8, 16, 32}·√E`.
pub fn default_taus(energy: f64) -> Vec<f64> {
    DEFAULT_TAU_FACTORS
        .iter()
        .map(|f| f * energy.sqrt())
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reconstruction {
    #[serde(skip)]
    pub field: Option<SampledField>,
    /// Max error on `B_R` against the known difference, relative to its max.
    pub error: f64,
    /// Same against the band-limited sum of exact coefficients.
    pub band_limited_error: f64,
}

/// `(dξ/2π)³ Σ_ξ c(ξ) e^{-iξ·x}` on `B_R`, compared with the known difference.
pub fn reconstruct(
    pair: &SampledPair,
    report: &FourierReport,
    spacing: f64,
) -> Result<Reconstruction> {
    let grid = pair.grid();
    let w = (spacing / (2.0 * std::f64::consts::PI)).powi(3);
    let npts = grid.npts();
    let mut rec = vec![ZERO; npts];
    let mut band = vec![ZERO; npts];
    rec.par_iter_mut()
        .zip(band.par_iter_mut())
        .enumerate()
        .for_each(|(i, (r, b))| {
            let x = grid.point(i);
            if norm3(&x) >= pair.radius {
                return;
            }
            for c in &report.coefficients {
                let e = C::from_polar(w, -dot3(&c.xi, &x));
                *r += c.value * e;
                *b += c.reference * e;
            }
        });
    let mut err: f64 = 0.0;
    let mut berr: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..npts {
        if norm3(&grid.point(i)) >= pair.radius {
            continue;
        }
        let d = pair.second.v.data[i] - pair.first.v.data[i];
        scale = scale.max(d.norm());
        err = err.max((rec[i] - d).norm());
        berr = berr.max((rec[i] - band[i]).norm());
    }
    let scale = scale.max(1e-300);
    let mut field = SampledField::zeros(grid, pair.first.v.role, 1);
    field.data = rec;
    Ok(Reconstruction {
        field: Some(field),
        error: err / scale,
        band_limited_error: berr / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample::sample;
    use crate::model::spec::{Decay, ElectricTerm, PotentialSpec};

    fn gaussians(terms: &[(f64, f64, Vec3)]) -> PotentialSpec {
        PotentialSpec::electric(
            3,
            terms
                .iter()
                .map(|&(amplitude, width, center)| ElectricTerm::Gaussian {
                    amplitude,
                    width,
                    center,
                })
                .collect(),
            Decay {
                rho: 2.0,
                c: 10.0,
                radius: 1.0,
            },
        )
    }

    fn grid() -> Grid {
        Grid::with_side(3, 32, 8.0).unwrap()
    }

    #[test]
    fn parameters_satisfy_constraints() {
        for (xi, e, tau) in [
            ([1.0, 0.0, 0.0], 1.0, 5.0),
            ([0.3, -1.2, 0.7], 2.5, 1.0),
            ([0.0; 3], 1.0, 0.5),
        ] {
            let (p1, p2) = cgo_parameters(xi, e, tau).unwrap();
            for p in [&p1, &p2] {
                assert!((p.square() - e).norm() < 1e-12, "{:?}", p.square());
            }
            let (r1, r2) = (p1.real(), p2.real());
            for a in 0..3 {
                assert!((r1[a] - r2[a] - xi[a]).abs() < 1e-14);
                assert_eq!(p1.imag()[a], -p2.imag()[a]);
            }
            assert!((norm3(&p1.imag()) - tau).abs() < 1e-14);
        }
        let m: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|t| {
                cgo_parameters([1.0, 1.0, 0.0], 1.0, *t)
                    .unwrap()
                    .0
                    .modulus()
            })
            .collect();
        assert!(m.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(
            cgo_parameters([4.0, 0.0, 0.0], 1.0, 1.5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_potential_gives_zero_remainder() {
        let v = SampledField::zeros(grid(), crate::model::field::Role::ElectricPotential, 1);
        let (p, _) = cgo_parameters([1.0, 0.0, 0.0], 1.0, 4.0).unwrap();
        let s = cgo_solve(&v, 2.5, &p, &CgoOptions::default()).unwrap();
        assert!(s.psi.iter().all(|z| *z == ZERO));
        assert_eq!(s.weighted_norm, 0.0);
    }

    #[test]
    fn remainder_solves_the_conjugated_equation_off_the_averaged_modes() {
        let g = grid();
        let v = sample(&gaussians(&[(-0.3, 0.4, [0.0; 3])]), &g).unwrap().v;
        let (p, _) = cgo_parameters([1.0, 0.5, 0.0], 1.0, 8.0).unwrap();
        let s = cgo_solve(&v, 2.5, &p, &CgoOptions::default()).unwrap();
        // Apply Δ + 2ip·∇ spectrally and compare with V(1 + ψ).
        let fft = FftNd::new(3, g.n);
        let n = g.n;
        let dk = 2.0 * std::f64::consts::PI / g.side();
        let wave = |j: usize| {
            if j < n / 2 {
                j as f64 * dk
            } else {
                (j as f64 - n as f64) * dk
            }
        };
        let mut w = s.psi.clone();
        fft.forward(&mut w);
        let rhs: Vec<C> = truncated(&v, 2.5)
            .iter()
            .zip(&s.psi)
            .map(|(a, b)| a * (1.0 + b))
            .collect();
        let mut r = rhs.clone();
        fft.forward(&mut r);
        let eps = s.epsilon;
        let mut err = 0.0;
        let mut tot = 0.0;
        for i in 0..g.npts() {
            let m = g.multi_index(i);
            let z = [wave(m[0]), wave(m[1]), wave(m[2])];
            let pz: C = (0..3).map(|a| p.p[a] * z[a]).sum();
            let sym = -(C::new(dot3(&z, &z), 0.0) + 2.0 * pz);
            let grad = (0..3)
                .map(|a| (2.0 * z[a] + 2.0 * p.p[a]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if sym.norm() > 10.0 * eps && sym.norm() > 3.0 * grad * dk {
                err += (sym * w[i] - r[i]).norm_sqr();
                tot += r[i].norm_sqr();
            }
        }
        assert!((err / tot).sqrt() < 1e-3, "{}", (err / tot).sqrt());
    }

    #[test]
    fn first_order_term_dominates_for_weak_potentials() {
        let g = grid();
        let (p, _) = cgo_parameters([0.5, 0.0, 0.0], 1.0, 4.0).unwrap();
        let opts = CgoOptions::default();
        let rel = |amp: f64| {
            let v = sample(&gaussians(&[(amp, 0.4, [0.1, 0.0, 0.0])]), &g)
                .unwrap()
                .v;
            let full = cgo_solve(&v, 2.5, &p, &opts).unwrap().psi;
            let one = cgo_first_order(&v, 2.5, &p, &opts).unwrap();
            let d: Vec<C> = full.iter().zip(&one).map(|(a, b)| a - b).collect();
            norm(&d) / norm(&full)
        };
        let (a, b) = (rel(-0.2), rel(-0.1));
        assert!(a < 0.1 && (a / b - 2.0).abs() < 0.2, "{a} {b}");
    }

    #[test]
    fn remainder_decays_along_the_schedule() {
        let g = grid();
        let v = sample(&gaussians(&[(-0.2, 0.4, [0.0; 3])]), &g).unwrap().v;
        let norms: Vec<f64> = default_taus(1.0)
            .iter()
            .map(|&t| {
                let (p, _) = cgo_parameters([1.0, 0.0, 0.0], 1.0, t).unwrap();
                cgo_solve(&v, 2.5, &p, &CgoOptions::default())
                    .unwrap()
                    .weighted_norm
            })
            .collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
    }

    #[test]
    fn strong_contrast_is_refused() {
        let g = grid();
        let v = sample(&gaussians(&[(-200.0, 0.6, [0.0; 3])]), &g)
            .unwrap()
            .v;
        let (p, _) = cgo_parameters([0.0; 3], 1.0, 1.0).unwrap();
        let err = cgo_solve(&v, 2.5, &p, &CgoOptions::default()).unwrap_err();
        assert!(
            matches!(err, Error::Precondition(ref m) if m.contains("spectral radius")),
            "{err}"
        );
    }

    #[test]
    fn identical_pair_reconstructs_zero() {
        let g = grid();
        let s = sample(&gaussians(&[(-0.2, 0.4, [0.0; 3])]), &g).unwrap();
        let pair = SampledPair::new(s.clone(), s, 2.5).unwrap();
        let taus = [4.0, 8.0];
        let rep = fourier_difference(
            &pair,
            &xi_lattice(1.0, 1.0),
            1.0,
            &taus,
            &CgoOptions::default(),
        )
        .unwrap();
        assert!(rep
            .coefficients
            .iter()
            .all(|c| c.value == ZERO && c.reference == ZERO));
        let rec = reconstruct(&pair, &rep, 1.0).unwrap();
        assert!(rec.field.unwrap().data.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn weak_bump_coefficients_are_recovered() {
        let g = grid();
        let bg = (-0.2, 0.4, [0.0; 3]);
        let bump = (0.05, 0.3, [0.2, -0.1, 0.1]);
        let pair = SampledPair::new(
            sample(&gaussians(&[bg]), &g).unwrap(),
            sample(&gaussians(&[bg, bump]), &g).unwrap(),
            2.5,
        )
        .unwrap();
        let xis = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.2, 1.6]];
        let rep = fourier_difference(&pair, &xis, 1.0, &default_taus(1.0), &CgoOptions::default())
            .unwrap();
        for c in &rep.coefficients {
            // Analytic transform of the bump.
            let (a, w, ctr) = bump;
            let x2 = dot3(&c.xi, &c.xi);
            let exact = C::from_polar(
                a * (2.0 * std::f64::consts::PI * w * w).powf(1.5) * (-w * w * x2 / 2.0).exp(),
                dot3(&c.xi, &ctr),
            );
            assert!((c.reference - exact).norm() < 1e-6 * exact.norm());
            assert!((c.value - exact).norm() < 0.1 * exact.norm(), "{:?}", c);
            assert!(c.stabilized && c.norms_decreasing(), "{:?}", c);
        }
        assert!(rep.flagged.is_empty());
    }
}
