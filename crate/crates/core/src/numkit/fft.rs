//! Multidimensional FFTs on cubic arrays built from 1D rustfft transforms,
//! and spectral differentiation on a [`Grid`].

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::grid::Grid;

/// Forward/inverse FFT over `dim` axes of length `n` each (last axis fastest).
/// The inverse is normalized.
#[derive(Clone)]
pub struct FftNd {
    pub dim: usize,
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FftNd({}^{})", self.n, self.dim)
    }
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "FFT buffer length mismatch");
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        let mut buf = Vec::new();
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = self.len() / (n * stride);
            buf.resize(n * stride, Complex64::new(0.0, 0.0));
            for o in 0..outer {
                let base = o * n * stride;
                for k in 0..n {
                    let row = &data[base + k * stride..base + (k + 1) * stride];
                    for (i, v) in row.iter().enumerate() {
                        buf[i * n + k] = *v;
                    }
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..n {
                    let row = &mut data[base + k * stride..base + (k + 1) * stride];
                    for (i, v) in row.iter_mut().enumerate() {
                        *v = buf[i * n + k];
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let s = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Spectral derivatives of periodic samples on a grid.
#[derive(Clone, Debug)]
pub struct Spectral {
    pub grid: Grid,
    fft: FftNd,
    k: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            fft: FftNd::new(grid.dim, grid.n),
            k: grid.wavenumbers(),
        }
    }

    pub fn fft(&self) -> &FftNd {
        &self.fft
    }

    fn wave(&self, idx: usize, axis: usize) -> f64 {
        self.k[self.grid.multi_index(idx)[axis]]
    }

    fn derivative_of_spectrum(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::new(0.0, self.wave(i, axis)))
            .collect();
        self.fft.inverse(&mut out);
        out
    }

    /// Partial derivative along `axis`.
    pub fn derivative(&self, f: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut spec = f.to_vec();
        self.fft.forward(&mut spec);
        self.derivative_of_spectrum(&spec, axis)
    }

    /// All first partial derivatives.
    pub fn gradient(&self, f: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut spec = f.to_vec();
        self.fft.forward(&mut spec);
        (0..self.grid.dim)
            .map(|a| self.derivative_of_spectrum(&spec, a))
            .collect()
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut spec = f.to_vec();
        self.fft.forward(&mut spec);
        let n = self.grid.n;
        let dk = 2.0 * std::f64::consts::PI / self.grid.side();
        let full = |j: usize| -> f64 {
            if j <= n / 2 {
                j as f64 * dk
            } else {
                (j as f64 - n as f64) * dk
            }
        };
        for (i, v) in spec.iter_mut().enumerate() {
            let m = self.grid.multi_index(i);
            let s2: f64 = (0..self.grid.dim).map(|a| full(m[a]).powi(2)).sum();
            *v *= -s2;
        }
        self.fft.inverse(&mut spec);
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_derivative() {
        let g = Grid::with_side(3, 16, 2.0 * std::f64::consts::PI).unwrap();
        let f: Vec<Complex64> = (0..g.npts())
            .map(|i| {
                let p = g.point(i);
                Complex64::new((p[0]).sin() * (2.0 * p[2]).cos(), p[1].cos())
            })
            .collect();
        let fft = FftNd::new(3, 16);
        let mut d = f.clone();
        fft.forward(&mut d);
        fft.inverse(&mut d);
        for (a, b) in d.iter().zip(&f) {
            assert!((a - b).norm() < 1e-13);
        }
        let sp = Spectral::new(g);
        let dz = sp.derivative(&f, 2);
        for (i, v) in dz.iter().enumerate() {
            let p = g.point(i);
            let want = -2.0 * p[0].sin() * (2.0 * p[2]).sin();
            assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
        let lap = sp.laplacian(&f);
        for (i, v) in lap.iter().enumerate() {
            let want = f[i] * Complex64::new(-5.0, 0.0);
            let want = Complex64::new(want.re, -f[i].im);
            assert!((v - want).norm() < 1e-11);
        }
    }
}
