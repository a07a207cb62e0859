//! Bessel, Hankel and spherical Bessel functions of real positive argument.
//!
//! Cylindrical functions:
//! * `z < 20`: J_n by Miller's downward recurrence normalized with the sum
//!   rule `J_0 + 2 sum J_2k = 1`; Y_0 and Y_1 from the Neumann series over the
//!   recurred J_n.
//! * `z >= 20`: J_0, J_1, Y_0, Y_1 from the Hankel asymptotic expansion; higher
//!   J_n by Miller recurrence normalized to whichever of J_0, J_1 is larger.
//! * Y_n for n >= 2 always by upward recurrence.
//!
//! Spherical functions: j_l by Miller recurrence normalized to `j_0` (or `j_1`
//! near zeros of `j_0`), y_l by upward recurrence from closed forms.

use num_complex::Complex64;

use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Argument at which cylindrical functions switch to the asymptotic expansion.
pub const ASYMPTOTIC_SWITCH: f64 = 20.0;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn miller_top(nmax: usize, z: f64) -> usize {
    let m = (nmax as f64).max(z.ceil());
    let n = (m + 20.0 + (60.0 * m).sqrt()) as usize;
    n + (n % 2)
}

/// Unnormalized downward recurrence `v[k-1] = (a*k + b)/z v[k] - v[k+1]`.
fn downward(z: f64, top: usize, a: f64, b: f64) -> Vec<f64> {
    let mut v = vec![0.0; top + 2];
    v[top] = 1e-30;
    for k in (1..=top).rev() {
        v[k - 1] = (a * k as f64 + b) / z * v[k] - v[k + 1];
        if v[k - 1].abs() > 1e250 {
            for x in v[k - 1..].iter_mut() {
                *x *= 1e-250;
            }
        }
    }
    v
}

/// Hankel asymptotic expansion for (J_nu, Y_nu), valid for large z.
fn hankel_asymptotic(nu: f64, z: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term: f64 = 1.0;
    for k in 1..80usize {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * z);
        if k > 2 && next.abs() > term.abs() {
            break;
        }
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-18 {
            break;
        }
    }
    let chi = z - (0.5 * nu + 0.25) * std::f64::consts::PI;
    let amp = (2.0 / (std::f64::consts::PI * z)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// J_0..=J_nmax at z >= 0, together with the raw tail needed by the Neumann sums.
fn bessel_j_full(nmax: usize, z: f64) -> Vec<f64> {
    let top = miller_top(nmax.max(1), z);
    if z == 0.0 {
        let mut v = vec![0.0; top + 2];
        v[0] = 1.0;
        return v;
    }
    let mut v = downward(z, top, 2.0, 0.0);
    let scale = if z < ASYMPTOTIC_SWITCH {
        let mut s = v[0];
        let mut k = 2;
        while k <= top {
            s += 2.0 * v[k];
            k += 2;
        }
        1.0 / s
    } else {
        let (j0, _) = hankel_asymptotic(0.0, z);
        let (j1, _) = hankel_asymptotic(1.0, z);
        if j0.abs() > j1.abs() {
            j0 / v[0]
        } else {
            j1 / v[1]
        }
    };
    for x in v.iter_mut() {
        *x *= scale;
    }
    v
}

/// (J_0, J_1) at z >= 0 without the full recurrence at large z.
pub fn bessel_j01(z: f64) -> (f64, f64) {
    if z >= ASYMPTOTIC_SWITCH {
        (hankel_asymptotic(0.0, z).0, hankel_asymptotic(1.0, z).0)
    } else {
        let v = bessel_j_full(1, z);
        (v[0], v[1])
    }
}

/// Cylindrical Bessel functions J_0..=J_nmax.
pub fn bessel_j(nmax: usize, z: f64) -> Vec<f64> {
    let mut v = bessel_j_full(nmax, z);
    v.truncate(nmax + 1);
    v
}

/// Cylindrical Bessel functions (J_n, Y_n) for n = 0..=nmax, z > 0.
pub fn bessel_jy(nmax: usize, z: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("Bessel Y needs z > 0, got {z}")));
    }
    if nmax <= 1 && z >= ASYMPTOTIC_SWITCH {
        let (j0, y0) = hankel_asymptotic(0.0, z);
        let (j1, y1) = hankel_asymptotic(1.0, z);
        return Ok((
            vec![j0, j1][..=nmax].to_vec(),
            vec![y0, y1][..=nmax].to_vec(),
        ));
    }
    let jf = bessel_j_full(nmax, z);
    let (y0, y1) = if z < ASYMPTOTIC_SWITCH {
        let lg = (0.5 * z).ln() + EULER_GAMMA;
        let top = jf.len() - 2;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut k = 1;
        while 2 * k + 1 <= top {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s0 += sign * jf[2 * k] / k as f64;
            s1 += sign * (jf[2 * k - 1] - jf[2 * k + 1]) / k as f64;
            k += 1;
        }
        let fp = 2.0 / std::f64::consts::PI;
        (
            fp * (lg * jf[0] - 2.0 * s0),
            -fp * (jf[0] / z - lg * jf[1] - s1),
        )
    } else {
        (hankel_asymptotic(0.0, z).1, hankel_asymptotic(1.0, z).1)
    };
    let mut y = vec![0.0; nmax + 1];
    y[0] = y0;
    if nmax >= 1 {
        y[1] = y1;
    }
    for n in 1..nmax {
        y[n + 1] = 2.0 * n as f64 / z * y[n] - y[n - 1];
    }
    let mut j = jf;
    j.truncate(nmax + 1);
    Ok((j, y))
}

/// Hankel functions of the first kind H_n = J_n + i Y_n, n = 0..=nmax.
pub fn hankel1(nmax: usize, z: f64) -> Result<Vec<Complex64>> {
    let (j, y) = bessel_jy(nmax, z)?;
    Ok(j.iter()
        .zip(&y)
        .map(|(a, b)| Complex64::new(*a, *b))
        .collect())
}

/// Spherical Bessel functions j_0..=j_lmax at z >= 0.
pub fn sph_bessel_j(lmax: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = miller_top(lmax.max(1), z);
    let v = downward(z, top, 2.0, 1.0);
    let j0 = sinc(z);
    let scale = if z < 2.0 || j0.abs() >= 0.1 {
        j0 / v[0]
    } else {
        let j1 = (z.sin() / z - z.cos()) / z;
        j1 / v[1]
    };
    for (o, x) in out.iter_mut().zip(&v) {
        *o = x * scale;
    }
    out
}

/// Spherical Bessel functions of the second kind y_0..=y_lmax, z > 0.
pub fn sph_bessel_y(lmax: usize, z: f64) -> Result<Vec<f64>> {
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("spherical y needs z > 0, got {z}")));
    }
    let (s, c) = z.sin_cos();
    let mut y = vec![0.0; lmax + 1];
    y[0] = -c / z;
    if lmax >= 1 {
        y[1] = -c / (z * z) - s / z;
    }
    for l in 1..lmax {
        y[l + 1] = (2 * l + 1) as f64 / z * y[l] - y[l - 1];
    }
    Ok(y)
}

/// Regular or outgoing radial wave.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveKind {
    Regular,
    Outgoing,
}

/// Radial solutions of the free equation and their derivatives for orders
/// `0..=lmax`: spherical `j_l, y_l` in 3D, cylindrical `J_m, Y_m` in 2D.
#[derive(Clone, Debug)]
pub struct RadialWaves {
    pub j: Vec<f64>,
    pub dj: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl RadialWaves {
    pub fn new(dim: usize, lmax: usize, z: f64) -> Result<Self> {
        if z <= 0.0 {
            return Err(Error::Domain(format!("radial waves need z > 0, got {z}")));
        }
        let (j, y) = match dim {
            2 => bessel_jy(lmax + 1, z)?,
            3 => (sph_bessel_j(lmax + 1, z), sph_bessel_y(lmax + 1, z)?),
            _ => return Err(Error::Domain(format!("dimension {dim} unsupported"))),
        };
        let deriv = |f: &[f64]| -> Vec<f64> {
            (0..=lmax)
                .map(|l| {
                    if l == 0 {
                        -f[1]
                    } else if dim == 2 {
                        f[l - 1] - l as f64 / z * f[l]
                    } else {
                        f[l - 1] - (l + 1) as f64 / z * f[l]
                    }
                })
                .collect()
        };
        let dj = deriv(&j);
        let dy = deriv(&y);
        Ok(Self {
            j: j[..=lmax].to_vec(),
            dj,
            y: y[..=lmax].to_vec(),
            dy,
        })
    }

    pub fn outgoing(&self, l: usize) -> Complex64 {
        Complex64::new(self.j[l], self.y[l])
    }

    pub fn outgoing_deriv(&self, l: usize) -> Complex64 {
        Complex64::new(self.dj[l], self.dy[l])
    }
}

/// Single radial wave value: `j_l`/`h_l` (3D) or `J_l`/`H_l` (2D) at z.
pub fn radial_wave(dim: usize, l: usize, kind: WaveKind, z: f64) -> Result<Complex64> {
    match kind {
        WaveKind::Regular if z == 0.0 => Ok(Complex64::new(if l == 0 { 1.0 } else { 0.0 }, 0.0)),
        WaveKind::Regular if z < 0.0 => Err(Error::Domain(format!("negative argument {z}"))),
        WaveKind::Regular => {
            let w = RadialWaves::new(dim, l, z)?;
            Ok(Complex64::new(w.j[l], 0.0))
        }
        WaveKind::Outgoing => Ok(RadialWaves::new(dim, l, z)?.outgoing(l)),
    }
}

/// Derivative with respect to z of [`radial_wave`].
pub fn radial_wave_deriv(dim: usize, l: usize, kind: WaveKind, z: f64) -> Result<Complex64> {
    let w = RadialWaves::new(dim, l, z)?;
    Ok(match kind {
        WaveKind::Regular => Complex64::new(w.dj[l], 0.0),
        WaveKind::Outgoing => w.outgoing_deriv(l),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_order_closed_forms() {
        for &z in &[0.01, 0.7, 3.0, 12.5, 19.9, 20.1, 47.0, 300.0] {
            let j = sph_bessel_j(1, z);
            assert_relative_eq!(j[0], z.sin() / z, max_relative = 1e-13, epsilon = 1e-15);
            let h0 = radial_wave(3, 0, WaveKind::Outgoing, z).unwrap();
            let want = -Complex64::i() * Complex64::new(0.0, z).exp() / z;
            assert!((h0 - want).norm() <= 1e-13 * want.norm());
        }
    }

    #[test]
    fn cylindrical_reference_values() {
        // Reference values from scipy.special.
        let (j, y) = bessel_jy(2, 1.0).unwrap();
        assert_relative_eq!(j[0], 0.765_197_686_557_966_6, max_relative = 1e-14);
        assert_relative_eq!(j[1], 0.440_050_585_744_933_5, max_relative = 1e-14);
        assert_relative_eq!(y[0], 0.088_256_964_215_677, max_relative = 1e-13);
        assert_relative_eq!(y[1], -0.781_212_821_300_288_9, max_relative = 1e-13);
        let (j, y) = bessel_jy(1, 30.0).unwrap();
        assert_relative_eq!(j[0], -0.086_367_983_581_040_2, max_relative = 1e-12);
        assert_relative_eq!(y[0], -0.117_295_731_686_664_09, max_relative = 1e-12);
        let (j, _) = bessel_jy(10, 5.0).unwrap();
        assert_relative_eq!(j[10], 0.001_467_802_647_310_473_7, max_relative = 1e-12);
    }

    #[test]
    fn small_argument_series_agrees_with_recurrence() {
        // J_0 power series at z = 0.3 as an independent oracle.
        let z: f64 = 0.3;
        let mut s = 0.0;
        let mut t = 1.0;
        for k in 0..12 {
            s += t;
            t *= -(z * z / 4.0) / ((k + 1) as f64 * (k + 1) as f64);
        }
        assert_relative_eq!(bessel_j(0, z)[0], s, max_relative = 1e-15);
        // Y_0 ~ (2/pi)(ln(z/2)+gamma) J_0 + (2/pi) z^2/4 - ... at small z.
        let z: f64 = 1e-3;
        let (_, y) = bessel_jy(0, z).unwrap();
        let lead = 2.0 / std::f64::consts::PI * ((z / 2.0).ln() + EULER_GAMMA);
        assert_relative_eq!(y[0], lead, max_relative = 1e-6);
    }

    #[test]
    fn wronskians() {
        for &z in &[0.5, 5.0, 19.0, 21.0, 50.0] {
            let w = RadialWaves::new(3, 30, z).unwrap();
            for l in 0..=30 {
                let h = w.outgoing(l);
                let dh = w.outgoing_deriv(l);
                let wr = w.j[l] * dh - w.dj[l] * h;
                let want = Complex64::new(0.0, 1.0 / (z * z));
                assert!((wr - want).norm() <= 1e-10 * want.norm(), "3d l={l} z={z}");
            }
            let w = RadialWaves::new(2, 30, z).unwrap();
            for l in 0..=30 {
                let wr = w.j[l] * w.dy[l] - w.dj[l] * w.y[l];
                let want = 2.0 / (std::f64::consts::PI * z);
                assert!(
                    (wr - want).abs() <= 1e-10 * want,
                    "2d l={l} z={z} {wr} {want}"
                );
            }
        }
    }

    #[test]
    fn outgoing_needs_positive_argument() {
        assert!(radial_wave(2, 0, WaveKind::Outgoing, 0.0).is_err());
        assert!(radial_wave(3, 1, WaveKind::Outgoing, -1.0).is_err());
    }
}
