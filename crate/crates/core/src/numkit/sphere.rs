//! Gauss–Legendre rules, spherical harmonics and product quadrature on the
//! unit circle / sphere.
//!
//! Harmonic conventions:
//! * n = 2: `e^{imθ}/sqrt(2π)`. Basis index order is m = 0, 1, -1, 2, -2, ...
//!   so that the basis of degree L is a prefix of the basis of degree L+1.
//! * n = 3: complex `Y_l^m` with the Condon–Shortley phase, so that
//!   `conj(Y_l^m) = (-1)^m Y_l^{-m}`. Index `l^2 + l + m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result, Vec3};

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_deriv(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_deriv(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|t| h * t).collect(),
    )
}

/// Measure of the unit sphere S^{n-1}.
pub fn sphere_measure(dim: usize) -> f64 {
    if dim == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

/// Orthonormal harmonic basis of L^2(S^{n-1}) truncated at degree L.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicBasis {
    pub dim: usize,
    pub degree: usize,
}

impl HarmonicBasis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Domain(format!("dimension {dim} unsupported")));
        }
        Ok(Self { dim, degree })
    }

    pub fn len(&self) -> usize {
        if self.dim == 2 {
            2 * self.degree + 1
        } else {
            (self.degree + 1) * (self.degree + 1)
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// (l, m) label; in 2D l = |m|.
    pub fn label(&self, idx: usize) -> (usize, i64) {
        if self.dim == 2 {
            if idx == 0 {
                (0, 0)
            } else {
                let a = (idx + 1) / 2;
                let m = if idx % 2 == 1 { a as i64 } else { -(a as i64) };
                (a, m)
            }
        } else {
            let l = (idx as f64).sqrt() as usize;
            let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
            (l, idx as i64 - (l * l + l) as i64)
        }
    }

    pub fn index(&self, l: usize, m: i64) -> Result<usize> {
        if self.dim == 2 {
            let a = m.unsigned_abs() as usize;
            if a > self.degree {
                return Err(Error::Domain(format!(
                    "m={m} beyond degree {}",
                    self.degree
                )));
            }
            Ok(if m == 0 {
                0
            } else if m > 0 {
                2 * a - 1
            } else {
                2 * a
            })
        } else {
            if l > self.degree || m.unsigned_abs() as usize > l {
                return Err(Error::Domain(format!("(l,m)=({l},{m}) out of range")));
            }
            Ok(((l * l + l) as i64 + m) as usize)
        }
    }

    /// All basis functions evaluated at the unit vector `nu`.
    pub fn eval_all(&self, nu: &Vec3) -> Vec<Complex64> {
        if self.dim == 2 {
            let th = nu[1].atan2(nu[0]);
            let c = 1.0 / (2.0 * PI).sqrt();
            (0..self.len())
                .map(|i| {
                    let (_, m) = self.label(i);
                    Complex64::from_polar(c, m as f64 * th)
                })
                .collect()
        } else {
            spherical_harmonics(self.degree, nu)
        }
    }
}

/// All `Y_l^m(nu)`, 0 <= l <= lmax, ordered by `l^2 + l + m`.
pub fn spherical_harmonics(lmax: usize, nu: &Vec3) -> Vec<Complex64> {
    let r = (nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2]).sqrt();
    let x = (nu[2] / r).clamp(-1.0, 1.0);
    let phi = nu[1].atan2(nu[0]);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let n = (lmax + 1) * (lmax + 1);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // Normalized associated Legendre functions, with Condon–Shortley phase.
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -s * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        }
        let e = Complex64::from_polar(1.0, m as f64 * phi);
        let mut put = |l: usize, p: f64| {
            let v = e * p;
            out[l * l + l + m] = v;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[l * l + l - m] = v.conj() * sign;
            }
        };
        put(m, pmm);
        if m < lmax {
            let mut p_prev = pmm;
            let mut p_cur = x * ((2 * m + 3) as f64).sqrt() * pmm;
            put(m + 1, p_cur);
            for l in (m + 2)..=lmax {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let p_next = a * (x * p_cur - b * p_prev);
                put(l, p_next);
                p_prev = p_cur;
                p_cur = p_next;
            }
        }
    }
    out
}

/// Single orthonormal harmonic. In 2D `l` is ignored.
pub fn harmonic_eval(dim: usize, l: usize, m: i64, nu: &Vec3) -> Result<Complex64> {
    match dim {
        2 => {
            let th = nu[1].atan2(nu[0]);
            Ok(Complex64::from_polar(
                1.0 / (2.0 * PI).sqrt(),
                m as f64 * th,
            ))
        }
        3 => {
            if m.unsigned_abs() as usize > l {
                return Err(Error::Domain(format!("|m|={} exceeds l={l}", m.abs())));
            }
            Ok(spherical_harmonics(l, nu)[((l * l + l) as i64 + m) as usize])
        }
        _ => Err(Error::Domain(format!("dimension {dim} unsupported"))),
    }
}

/// Quadrature rule on S^{n-1}, exact for harmonic products of total degree <= 2L.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DirectionGrid {
    pub dim: usize,
    pub degree: usize,
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl DirectionGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Basis values `Y_j(omega_q)`, row q, column j.
    pub fn basis_table(&self, basis: &HarmonicBasis) -> Vec<Vec<Complex64>> {
        self.nodes.iter().map(|nu| basis.eval_all(nu)).collect()
    }
}

/// Product rule: 2L+2 equispaced angles (n=2), or (L+1) Gauss–Legendre
/// polar nodes times 2L+2 azimuths (n=3).
pub fn sphere_rule(dim: usize, degree: usize) -> Result<DirectionGrid> {
    let na = 2 * degree + 2;
    let dphi = 2.0 * PI / na as f64;
    match dim {
        2 => Ok(DirectionGrid {
            dim,
            degree,
            nodes: (0..na)
                .map(|q| {
                    let t = q as f64 * dphi;
                    [t.cos(), t.sin(), 0.0]
                })
                .collect(),
            weights: vec![dphi; na],
        }),
        3 => {
            let (x, w) = gauss_legendre(degree + 1);
            let mut nodes = Vec::with_capacity(x.len() * na);
            let mut weights = Vec::with_capacity(x.len() * na);
            for (xi, wi) in x.iter().zip(&w) {
                let s = (1.0 - xi * xi).sqrt();
                for q in 0..na {
                    let (sp, cp) = (q as f64 * dphi).sin_cos();
                    nodes.push([s * cp, s * sp, *xi]);
                    weights.push(wi * dphi);
                }
            }
            Ok(DirectionGrid {
                dim,
                degree,
                nodes,
                weights,
            })
        }
        _ => Err(Error::Domain(format!("dimension {dim} unsupported"))),
    }
}

/// Deterministic, roughly uniform directions for probing (not a quadrature).
pub fn probe_directions(dim: usize, count: usize) -> Vec<Vec3> {
    if dim == 2 {
        (0..count)
            .map(|q| {
                let t = 2.0 * PI * (q as f64 + 0.25) / count as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|q| {
                let z = 1.0 - 2.0 * (q as f64 + 0.5) / count as f64;
                let s = (1.0 - z * z).sqrt();
                let t = golden * q as f64;
                [s * t.cos(), s * t.sin(), z]
            })
            .collect()
    }
}
