//! Partial-wave reference solution for compactly supported radial
//! potentials: the radial equation is integrated from the origin and matched
//! to free regular/irregular waves at the support radius.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::farfield::{FarField, ScatteringMatrix};
use crate::model::spec::{ElectricTerm, PotentialSpec};
use crate::numkit::green::wavenumber;
use crate::numkit::ode::dopri5;
use crate::numkit::special::{hankel1, sph_bessel_j, sph_bessel_y, RadialWaves};
use crate::numkit::sphere::{DirectionGrid, HarmonicBasis};
use crate::{Error, Result, Vec3};

/// Phase shifts below this size are treated as converged.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialWaves {
    pub dim: usize,
    pub energy: f64,
    /// Matching radius (outer edge of the support).
    pub radius: f64,
    /// δ_l for l = 0..=lmax (2D: δ_{|m|}).
    pub phase_shifts: Vec<f64>,
    /// False when |δ_lmax| exceeds [`TAIL_TOLERANCE`].
    pub converged: bool,
}

fn radial_breaks(spec: &PotentialSpec) -> Result<(f64, Vec<f64>)> {
    if spec.has_magnetic() {
        return Err(Error::Domain("partial-wave oracle needs A = 0".into()));
    }
    if !spec.is_radial() {
        return Err(Error::Domain(
            "partial-wave oracle needs a radial potential".into(),
        ));
    }
    let a = spec.support_radius().ok_or_else(|| {
        Error::Domain("partial-wave oracle needs a compactly supported potential".into())
    })?;
    let mut breaks = Vec::new();
    for t in &spec.electric {
        match t {
            ElectricTerm::Well { radius, .. } | ElectricTerm::Bump { radius, .. } => {
                breaks.push(*radius)
            }
            ElectricTerm::Table { radii, .. } => breaks.extend(radii.iter().cloned()),
            _ => {}
        }
    }
    Ok((a, breaks))
}

/// Log-derivative data `(R(a), R'(a))` of the regular radial solution of
/// order `l`, up to a common factor.
fn regular_solution(
    spec: &PotentialSpec,
    energy: f64,
    l: usize,
    a: f64,
    breaks: &[f64],
) -> Result<(f64, f64)> {
    let dim = spec.dim;
    // u = r^{(n-1)/2} R solves u'' = (p(p-1)/r^2 + V - E) u, p = l + (n-1)/2.
    let p = l as f64 + 0.5 * (dim as f64 - 1.0);
    let cen = p * (p - 1.0);
    let v = |r: f64| spec.electric_at(&[r, 0.0, 0.0], None).unwrap_or(0.0);
    let r0 = 1e-4 * a;
    let c = (v(r0) - energy) / (4.0 * p + 2.0);
    let mut y = [1.0, p / r0 + 2.0 * c * r0 / (1.0 + c * r0 * r0)];
    let mut knots: Vec<f64> = breaks
        .iter()
        .cloned()
        .filter(|&b| b > r0 && b < a)
        .collect();
    knots.push(a);
    knots.sort_by(|x, y| x.total_cmp(y));
    knots.dedup();
    let mut r = r0;
    for &b in &knots {
        let pieces = 16;
        let step = (b - r) / pieces as f64;
        for i in 0..pieces {
            let t0 = r + i as f64 * step;
            let t1 = if i + 1 == pieces { b } else { t0 + step };
            // V is smooth inside a piece; keep evaluations off its ends so a
            // jump at a break is never sampled from the wrong side.
            let (lo, hi) = (t0 + 1e-9 * (t1 - t0), t1 - 1e-9 * (t1 - t0));
            let f = |t: f64, y: &[f64; 2]| -> [f64; 2] {
                [y[1], (cen / (t * t) + v(t.clamp(lo, hi)) - energy) * y[0]]
            };
            y = dopri5(f, t0, y, t1, 1e-13, 1e-300)?;
            let s = y[0].abs().max(y[1].abs() * (t1 - t0).max(1e-300));
            if s > 0.0 && s.is_finite() {
                y = [y[0] / s, y[1] / s];
            }
        }
        r = b;
    }
    let s = 0.5 * (dim as f64 - 1.0);
    // R = u r^{-s}, R' = (u' - s u / r) r^{-s}; the common factor is dropped.
    Ok((y[0], y[1] - s * y[0] / a))
}

/// Phase shifts δ_0..δ_lmax of a compactly supported radial potential.
pub fn partialwave_oracle(spec: &PotentialSpec, energy: f64, lmax: usize) -> Result<PartialWaves> {
    spec.validate()?;
    let k = wavenumber(energy)?;
    let (a, breaks) = radial_breaks(spec)?;
    let waves = RadialWaves::new(spec.dim, lmax, k * a)?;
    let mut phase_shifts = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        let (rv, rd) = regular_solution(spec, energy, l, a, &breaks)?;
        let num = k * waves.dj[l] * rv - waves.j[l] * rd;
        let den = k * waves.dy[l] * rv - waves.y[l] * rd;
        let mut d = (num / den).atan();
        if !d.is_finite() {
            d = 0.5 * PI;
        }
        phase_shifts.push(d);
    }
    let tail = phase_shifts.last().map(|d| d.abs()).unwrap_or(0.0);
    let converged = tail <= TAIL_TOLERANCE;
    if !converged {
        log::warn!("partial-wave series not converged: |δ_{lmax}| = {tail:.3e}");
    }
    Ok(PartialWaves {
        dim: spec.dim,
        energy,
        radius: a,
        phase_shifts,
        converged,
    })
}

fn legendre_all(lmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![1.0; lmax + 1];
    if lmax >= 1 {
        p[1] = x;
    }
    for l in 1..lmax {
        p[l + 1] = ((2 * l + 1) as f64 * x * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
    }
    p
}

fn ipow(l: usize) -> Complex64 {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][l % 4]
}

impl PartialWaves {
    pub fn k(&self) -> f64 {
        self.energy.sqrt()
    }

    fn t(&self, l: usize) -> Complex64 {
        let d = self.phase_shifts[l];
        Complex64::from_polar(d.sin(), d)
    }

    /// Scattering amplitude between unit vectors ν and ω.
    pub fn amplitude(&self, nu: &Vec3, omega: &Vec3) -> Complex64 {
        let k = self.k();
        let lmax = self.phase_shifts.len() - 1;
        if self.dim == 3 {
            let c = (nu[0] * omega[0] + nu[1] * omega[1] + nu[2] * omega[2]).clamp(-1.0, 1.0);
            let p = legendre_all(lmax, c);
            (0..=lmax)
                .map(|l| self.t(l) * ((2 * l + 1) as f64 * p[l]))
                .sum::<Complex64>()
                / k
        } else {
            let dth = nu[1].atan2(nu[0]) - omega[1].atan2(omega[0]);
            let s: Complex64 = (0..=lmax)
                .map(|m| {
                    self.t(m)
                        * if m == 0 {
                            1.0
                        } else {
                            2.0 * (m as f64 * dth).cos()
                        }
                })
                .sum();
            s * (2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, PI / 4.0)
        }
    }

    pub fn farfield(&self, dirs: &DirectionGrid) -> FarField {
        let values = dirs
            .nodes
            .iter()
            .map(|nu| dirs.nodes.iter().map(|om| self.amplitude(nu, om)).collect())
            .collect();
        FarField {
            energy: self.energy,
            dirs: dirs.clone(),
            values,
        }
    }

    /// Diagonal S-matrix `e^{2iδ_l}` up to `degree`.
    pub fn smatrix(&self, degree: usize) -> Result<ScatteringMatrix> {
        if degree >= self.phase_shifts.len() {
            return Err(Error::Domain(format!(
                "degree {degree} exceeds the computed phase shifts (lmax {})",
                self.phase_shifts.len() - 1
            )));
        }
        let basis = HarmonicBasis::new(self.dim, degree)?;
        let n = basis.len();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            let (l, _) = basis.label(i);
            m[(i, i)] = Complex64::from_polar(1.0, 2.0 * self.phase_shifts[l]);
        }
        Ok(ScatteringMatrix {
            energy: self.energy,
            basis,
            matrix: m,
        })
    }

    /// Total field of the plane wave in direction ω at a point outside the
    /// support.
    pub fn total_field(&self, x: &Vec3, omega: &Vec3) -> Result<Complex64> {
        let k = self.k();
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r < self.radius {
            return Err(Error::Domain(format!(
                "point at radius {r} inside the support"
            )));
        }
        let lmax = self.phase_shifts.len() - 1;
        let z = k * r;
        // Regular part summed to convergence; scattered part uses the shifts.
        let nreg = lmax.max((z + 30.0) as usize);
        let regular: Complex64;
        let mut scattered = Complex64::new(0.0, 0.0);
        if self.dim == 3 {
            let c = (x[0] * omega[0] + x[1] * omega[1] + x[2] * omega[2]) / r;
            let p = legendre_all(nreg, c);
            let j = sph_bessel_j(nreg, z);
            let y = sph_bessel_y(lmax, z)?;
            regular = Complex64::from_polar(1.0, z * c);
            for l in 0..=lmax {
                let h = Complex64::new(j[l], y[l]);
                scattered += ipow(l + 1) * self.t(l) * h * ((2 * l + 1) as f64 * p[l]);
            }
        } else {
            let dth = x[1].atan2(x[0]) - omega[1].atan2(omega[0]);
            regular = Complex64::from_polar(1.0, z * dth.cos());
            let h = hankel1(lmax, z)?;
            for m in 0..=lmax {
                let w = if m == 0 {
                    1.0
                } else {
                    2.0 * (m as f64 * dth).cos()
                };
                scattered += ipow(m + 1) * self.t(m) * h[m] * w;
            }
        }
        Ok(regular + scattered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::Decay;
    use crate::numkit::sphere::sphere_rule;

    fn well(dim: usize, v: f64, a: f64) -> PotentialSpec {
        PotentialSpec::electric(
            dim,
            vec![ElectricTerm::Well {
                value: v,
                radius: a,
                center: [0.0; 3],
            }],
            Decay {
                rho: 2.0,
                c: 1.0,
                radius: a,
            },
        )
    }

    #[test]
    fn free_potential_has_no_shifts() {
        let gauss = PotentialSpec::electric(
            3,
            vec![ElectricTerm::Gaussian {
                amplitude: 1.0,
                width: 0.3,
                center: [0.0; 3],
            }],
            Decay {
                rho: 2.0,
                c: 1.0,
                radius: 1.0,
            },
        );
        assert!(partialwave_oracle(&gauss, 1.0, 5).is_err());
        let pw = partialwave_oracle(&well(3, 0.0, 1.0), 1.0, 5).unwrap();
        assert!(pw.phase_shifts.iter().all(|d| d.abs() < 1e-14));
        let s = pw.smatrix(4).unwrap();
        assert!(s.unitarity_defect() < 1e-14);
        assert!(
            s.max_entry_difference(&ScatteringMatrix::identity(1.0, s.basis))
                .unwrap()
                < 1e-14
        );
    }

    #[test]
    fn square_well_s_wave_matches_closed_form() {
        let (v0, a, e) = (2.0, 1.3, 1.0);
        let pw = partialwave_oracle(&well(3, -v0, a), e, 8).unwrap();
        let k = e.sqrt();
        let kap = (e + v0).sqrt();
        let lhs = (pw.phase_shifts[0] + k * a).tan();
        let rhs = k / kap * (kap * a).tan();
        assert!(
            (lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0),
            "{lhs} {rhs}"
        );
    }

    #[test]
    fn shifts_decay_beyond_ka() {
        let pw = partialwave_oracle(&well(2, -0.5, 1.0), 1.0, 20).unwrap();
        assert!(pw.converged);
        let d: Vec<f64> = pw.phase_shifts.iter().map(|x| x.abs()).collect();
        for l in 2..20 {
            assert!(d[l + 1] < d[l], "l={l}: {:?}", &d[l..l + 2]);
        }
        let pw = partialwave_oracle(&well(3, -0.5, 1.0), 1.0, 4).unwrap();
        assert!(!pw.converged);
    }

    #[test]
    fn oracle_far_field_is_unitary() {
        for dim in [2usize, 3] {
            let pw = partialwave_oracle(&well(dim, -0.8, 1.0), 1.5, 25).unwrap();
            let l = 5;
            let ff = pw.farfield(&sphere_rule(dim, 2 * l + 12).unwrap());
            let s = super::super::farfield::smatrix_from_farfield(&ff, l).unwrap();
            let exact = pw.smatrix(l).unwrap();
            assert!(s.max_entry_difference(&exact).unwrap() < 1e-12);
            assert!(exact.unitarity_defect() < 1e-13);
            // Optical theorem in 3D: ∫|f|^2 = (4π/k) Im f(ω,ω).
            if dim == 3 {
                let dirs = sphere_rule(3, 40).unwrap();
                let om = [0.0, 0.0, 1.0];
                let sigma: f64 = dirs
                    .nodes
                    .iter()
                    .zip(&dirs.weights)
                    .map(|(nu, w)| w * pw.amplitude(nu, &om).norm_sqr())
                    .sum();
                let opt = 4.0 * PI / pw.k() * pw.amplitude(&om, &om).im;
                assert!((sigma - opt).abs() < 1e-12 * opt);
            }
        }
    }

    #[test]
    fn total_field_outside_only() {
        let pw = partialwave_oracle(&well(2, -0.5, 1.0), 1.0, 25).unwrap();
        let om = [1.0, 0.0, 0.0];
        let x = [1.2, 0.7, 0.0];
        let f0 = pw.total_field(&x, &om).unwrap();
        let free = Complex64::from_polar(1.0, 1.2);
        assert!((f0 - free).norm() > 1e-3);
        assert!(pw.total_field(&[0.5, 0.0, 0.0], &om).is_err());
    }
}
