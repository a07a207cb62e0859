//! Outgoing Helmholtz Green function `(-Δ - k^2) G = δ` and its application
//! to compactly supported grid data.
//!
//! Volume convolution uses the truncated-kernel method: the kernel is cut off
//! at the box diagonal `L`, its Fourier transform is known in closed form and
//! is sampled on a 4x oversampled lattice. The resulting real-space kernel is
//! restricted to the offsets that occur inside the box and applied with a 2x
//! zero-padded FFT. For band-limited data this is exact up to the decay of
//! the data's interpolant.
//!
//! Kernel transforms (s = |ζ|):
//! * 3D: `(1 - e^{ikL}(cos sL - i k sin(sL)/s)) / (s^2 - k^2)`, with an
//!   expm1-type form near s = k.
//! * 2D: `(1 + (iπL/2)(s J_1(sL) H_0(kL) - k J_0(sL) H_1(kL))) / (s^2 - k^2)`,
//!   with direct radial quadrature when |s - k| < 1e-3 k.

use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

use super::fft::FftNd;
use super::grid::Grid;
use super::quad::integrate_with_breaks;
use super::special::{bessel_j01, bessel_jy, hankel1, sinc};
use crate::model::field::SampledField;
use crate::{Error, Result, Vec3};

/// Wavenumber `k = sqrt(E)` for E > 0.
pub fn wavenumber(energy: f64) -> Result<f64> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!(
            "energy must be positive, got {energy}"
        )));
    }
    Ok(energy.sqrt())
}

fn separation(x: &Vec3, y: &Vec3, dim: usize) -> ([f64; 3], f64) {
    let mut d = [0.0; 3];
    for a in 0..dim {
        d[a] = x[a] - y[a];
    }
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    (d, r)
}

/// Outgoing free Green function. Symmetric in x and y.
pub fn helmholtz_green(x: &Vec3, y: &Vec3, energy: f64, dim: usize) -> Result<Complex64> {
    let k = wavenumber(energy)?;
    let (_, r) = separation(x, y, dim);
    if r == 0.0 {
        return Err(Error::Singular(
            "Green function at coincident points".into(),
        ));
    }
    match dim {
        2 => Ok(Complex64::new(0.0, 0.25) * hankel1(0, k * r)?[0]),
        3 => Ok(Complex64::from_polar(1.0 / (4.0 * PI * r), k * r)),
        _ => Err(Error::Domain(format!("dimension {dim} unsupported"))),
    }
}

/// Gradient of the Green function with respect to x.
pub fn helmholtz_green_gradient(
    x: &Vec3,
    y: &Vec3,
    energy: f64,
    dim: usize,
) -> Result<[Complex64; 3]> {
    let k = wavenumber(energy)?;
    let (d, r) = separation(x, y, dim);
    if r == 0.0 {
        return Err(Error::Singular(
            "Green gradient at coincident points".into(),
        ));
    }
    let radial = match dim {
        2 => Complex64::new(0.0, 0.25) * (-k) * hankel1(1, k * r)?[1],
        3 => Complex64::from_polar(1.0 / (4.0 * PI * r), k * r) * Complex64::new(-1.0 / r, k),
        _ => return Err(Error::Domain(format!("dimension {dim} unsupported"))),
    };
    Ok([
        radial * (d[0] / r),
        radial * (d[1] / r),
        radial * (d[2] / r),
    ])
}

/// Constant `c_n` in `G(x - y) ~ -c_n e^{ik|x|} |x|^{-(n-1)/2} e^{-ik x̂·y}`
/// with the sign chosen so that the far field of `-G * q` is
/// `c_n ∫ e^{-ik ν·y} q(y) dy`.
pub fn farfield_constant(dim: usize, k: f64) -> Complex64 {
    let n = dim as f64;
    -0.5 * k.powf(0.5 * (n - 3.0))
        * (2.0 * PI).powf(-0.5 * (n - 1.0))
        * Complex64::from_polar(1.0, -PI * (n - 3.0) / 4.0)
}

/// `(e^{i e L} - 1)/e`, stable as e -> 0.
fn expm1_ratio(e: f64, l: f64) -> Complex64 {
    let t = e * l;
    Complex64::new(-(0.5 * t).sin() * sinc(0.5 * t), sinc(t)) * l
}

fn kernel_hat_3d(s: f64, k: f64, l: f64) -> Complex64 {
    if (s - k).abs() < 0.1 * k {
        -(expm1_ratio(k + s, l) - expm1_ratio(k - s, l)) / (2.0 * s)
    } else {
        let e = Complex64::from_polar(1.0, k * l);
        (Complex64::new(1.0, 0.0) - e * Complex64::new((s * l).cos(), -k * l * sinc(s * l)))
            / (s * s - k * k)
    }
}

struct Hankel2d {
    h0: Complex64,
    h1: Complex64,
}

fn kernel_hat_2d(s: f64, k: f64, l: f64, hk: &Hankel2d) -> Complex64 {
    if (s - k).abs() < 1e-3 * k {
        let mut f = |r: f64| -> Complex64 {
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (j, _) = bessel_j01(s * r);
            let h = hankel1(0, k * r).expect("positive argument")[0];
            h * (r * j)
        };
        let q = integrate_with_breaks(&mut f, &[0.0, 0.5 * l, l], 1e-15, 1e-13, 2000);
        Complex64::new(0.0, 0.5 * PI) * q.value
    } else {
        let (j0, j1) = bessel_j01(s * l);
        let num = Complex64::new(1.0, 0.0)
            + Complex64::new(0.0, 0.5 * PI * l) * (hk.h0 * (s * j1) - hk.h1 * (k * j0));
        num / (s * s - k * k)
    }
}

/// Verify that a field is negligible within `side/8` of the box faces.
/// Returns the offending sample index on failure.
pub fn check_margin(grid: &Grid, comps: &[&[Complex64]]) -> std::result::Result<(), usize> {
    let max = comps
        .iter()
        .flat_map(|c| c.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(());
    }
    let band = grid.side() / 8.0;
    for idx in 0..grid.npts() {
        if grid.distance_to_boundary(idx) < band {
            for c in comps {
                if c[idx].norm() > 1e-6 * max {
                    return Err(idx);
                }
            }
        }
    }
    Ok(())
}

/// Precomputed truncated-kernel convolution for one grid and energy.
pub struct GreenOperator {
    pub grid: Grid,
    pub energy: f64,
    pub k: f64,
    pub truncation: f64,
    fft: FftNd,
    kernel: Vec<Complex64>,
    grad_kernels: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for GreenOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenOperator")
            .field("grid", &self.grid)
            .field("energy", &self.energy)
            .field("gradient", &!self.grad_kernels.is_empty())
            .finish()
    }
}

impl GreenOperator {
    /// Build the kernel multipliers; with `gradient` also those of ∇G.
    pub fn new(grid: Grid, energy: f64, gradient: bool) -> Result<Self> {
        let k = wavenumber(energy)?;
        let dim = grid.dim;
        let n = grid.n;
        let h = grid.h;
        let big_n = 4 * n;
        let period = big_n as f64 * h;
        let truncation = (dim as f64).sqrt() * grid.side();
        let ds = 2.0 * PI / period;
        let big = FftNd::new(dim, big_n);
        let small = FftNd::new(dim, 2 * n);
        let freq = |j: usize| -> i64 {
            if j < big_n / 2 {
                j as i64
            } else {
                j as i64 - big_n as i64
            }
        };
        let hk = if dim == 2 {
            let h = hankel1(1, k * truncation)?;
            Some(Hankel2d { h0: h[0], h1: h[1] })
        } else {
            let _ = bessel_jy;
            None
        };
        // The transform is radial: cache by squared integer frequency.
        let mut cache: HashMap<u64, Complex64> = HashMap::new();
        let big_len = big.len();
        let mut ghat = vec![Complex64::new(0.0, 0.0); big_len];
        let mut jvec = vec![[0i64; 3]; big_len];
        for idx in 0..big_len {
            let mut rem = idx;
            let mut js = [0i64; 3];
            for a in (0..dim).rev() {
                js[a] = freq(rem % big_n);
                rem /= big_n;
            }
            let key = (js[0] * js[0] + js[1] * js[1] + js[2] * js[2]) as u64;
            let v = *cache.entry(key).or_insert_with(|| {
                let s = ds * (key as f64).sqrt();
                match &hk {
                    Some(hk) => kernel_hat_2d(s, k, truncation, hk),
                    None => kernel_hat_3d(s, k, truncation),
                }
            });
            ghat[idx] = v;
            jvec[idx] = js;
        }
        let norm = 1.0 / period.powi(dim as i32);
        let cell = h.powi(dim as i32);
        let restrict = |buf: &[Complex64]| -> Vec<Complex64> {
            let m = 2 * n;
            let mut out = vec![Complex64::new(0.0, 0.0); small.len()];
            for (sidx, o) in out.iter_mut().enumerate() {
                let mut rem = sidx;
                let mut bidx = 0usize;
                let mut mult = 1usize;
                let mut skip = false;
                for _ in 0..dim {
                    let i = rem % m;
                    rem /= m;
                    let bi = if i < n {
                        i
                    } else if i == n {
                        skip = true;
                        0
                    } else {
                        big_n - (m - i)
                    };
                    bidx += bi * mult;
                    mult *= big_n;
                }
                if !skip {
                    *o = buf[bidx] * norm;
                }
            }
            small.forward(&mut out);
            for v in out.iter_mut() {
                *v *= cell;
            }
            out
        };
        let mut buf = ghat.clone();
        big.inverse(&mut buf);
        let scale_back = big_len as f64;
        for v in buf.iter_mut() {
            *v *= scale_back;
        }
        let kernel = restrict(&buf);
        let mut grad_kernels = Vec::new();
        if gradient {
            for a in 0..dim {
                for (idx, v) in buf.iter_mut().enumerate() {
                    let j = jvec[idx][a];
                    let sa = if j == -(big_n as i64) / 2 {
                        0.0
                    } else {
                        ds * j as f64
                    };
                    *v = ghat[idx] * Complex64::new(0.0, sa);
                }
                big.inverse(&mut buf);
                for v in buf.iter_mut() {
                    *v *= scale_back;
                }
                grad_kernels.push(restrict(&buf));
            }
        }
        Ok(Self {
            grid,
            energy,
            k,
            truncation,
            fft: small,
            kernel,
            grad_kernels,
        })
    }

    pub fn has_gradient(&self) -> bool {
        !self.grad_kernels.is_empty()
    }

    fn pad(&self, q: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n;
        let m = 2 * n;
        let mut out = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        for (idx, v) in q.iter().enumerate() {
            let ijk = self.grid.multi_index(idx);
            let p = if self.grid.dim == 2 {
                ijk[0] * m + ijk[1]
            } else {
                (ijk[0] * m + ijk[1]) * m + ijk[2]
            };
            out[p] = *v;
        }
        out
    }

    fn extract(&self, buf: &[Complex64]) -> Vec<Complex64> {
        let m = 2 * self.grid.n;
        (0..self.grid.npts())
            .map(|idx| {
                let ijk = self.grid.multi_index(idx);
                let p = if self.grid.dim == 2 {
                    ijk[0] * m + ijk[1]
                } else {
                    (ijk[0] * m + ijk[1]) * m + ijk[2]
                };
                buf[p]
            })
            .collect()
    }

    fn spectrum(&self, q: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(q.len(), self.grid.npts(), "convolution input length");
        let mut buf = self.pad(q);
        self.fft.forward(&mut buf);
        buf
    }

    fn apply_multiplier(&self, spec: &[Complex64], mult: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spec.iter().zip(mult).map(|(a, b)| a * b).collect();
        self.fft.inverse(&mut buf);
        self.extract(&buf)
    }

    /// `G * q` sampled on the grid.
    pub fn apply(&self, q: &[Complex64]) -> Vec<Complex64> {
        let spec = self.spectrum(q);
        self.apply_multiplier(&spec, &self.kernel)
    }

    /// `(G * q, ∇G * q)`; requires the operator to be built with gradients.
    pub fn apply_with_gradient(&self, q: &[Complex64]) -> (Vec<Complex64>, Vec<Vec<Complex64>>) {
        assert!(self.has_gradient(), "gradient kernels not built");
        let spec = self.spectrum(q);
        let u = self.apply_multiplier(&spec, &self.kernel);
        let g = self
            .grad_kernels
            .iter()
            .map(|m| self.apply_multiplier(&spec, m))
            .collect();
        (u, g)
    }

    /// `∇G * q` only.
    pub fn apply_gradient(&self, q: &[Complex64]) -> Vec<Vec<Complex64>> {
        assert!(self.has_gradient(), "gradient kernels not built");
        let spec = self.spectrum(q);
        self.grad_kernels
            .iter()
            .map(|m| self.apply_multiplier(&spec, m))
            .collect()
    }
}

/// Convolve a compactly supported scalar field with the outgoing Green
/// function. Refuses fields that are not negligible near the box faces.
pub fn volume_convolve(energy: f64, field: &SampledField) -> Result<SampledField> {
    if field.ncomp != 1 {
        return Err(Error::Shape(
            "volume_convolve expects a scalar field".into(),
        ));
    }
    if let Err(idx) = check_margin(&field.grid, &[&field.data]) {
        return Err(Error::Precondition(format!(
            "field not supported away from the box faces (sample {idx} at {:?}); aliasing risk",
            field.grid.point(idx)
        )));
    }
    let op = GreenOperator::new(field.grid, energy, false)?;
    SampledField::scalar(field.grid, field.role, op.apply(&field.data))
}
