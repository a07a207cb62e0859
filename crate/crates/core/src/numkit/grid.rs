//! Cell-centred Cartesian grids on a cube centred at the origin.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// `n` cells per axis of width `h`; sample i sits at `(i + 1/2 - n/2) h`,
/// so the box is `[-n h/2, n h/2]^dim`. Samples are stored row-major with the
/// last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, h: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Domain(format!("grid dimension {dim} unsupported")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "grid size {n} must be even and >= 4"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("grid spacing {h} must be positive")));
        }
        Ok(Self { dim, n, h })
    }

    /// Grid with `n` cells covering a box of the given side length.
    pub fn with_side(dim: usize, n: usize, side: f64) -> Result<Self> {
        Self::new(dim, n, side / n as f64)
    }

    pub fn npts(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn half_side(&self) -> f64 {
        0.5 * self.side()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - 0.5 * self.n as f64) * self.h
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        if self.dim == 2 {
            [idx / n, idx % n, 0]
        } else {
            [idx / (n * n), (idx / n) % n, idx % n]
        }
    }

    pub fn linear_index(&self, ijk: [usize; 3]) -> usize {
        if self.dim == 2 {
            ijk[0] * self.n + ijk[1]
        } else {
            (ijk[0] * self.n + ijk[1]) * self.n + ijk[2]
        }
    }

    /// Coordinates of sample `idx` (z = 0 in 2D).
    pub fn point(&self, idx: usize) -> Vec3 {
        let m = self.multi_index(idx);
        if self.dim == 2 {
            [self.coord(m[0]), self.coord(m[1]), 0.0]
        } else {
            [self.coord(m[0]), self.coord(m[1]), self.coord(m[2])]
        }
    }

    pub fn points(&self) -> Vec<Vec3> {
        (0..self.npts()).map(|i| self.point(i)).collect()
    }

    /// Angular wavenumbers along one axis in FFT order; Nyquist mode set to 0
    /// so that odd derivatives stay real for real data.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        let dk = 2.0 * std::f64::consts::PI / self.side();
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64 * dk
                } else if j == n / 2 {
                    0.0
                } else {
                    (j as f64 - n as f64) * dk
                }
            })
            .collect()
    }

    /// Distance from sample `idx` to the nearest face of the box.
    pub fn distance_to_boundary(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        let hs = self.half_side();
        (0..self.dim)
            .map(|a| hs - p[a].abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the closed ball of radius `r` about the origin fits in the box.
    /// Eighth-order central-difference Laplacian at `idx`; `None` within
    /// four cells of a face.
    pub fn fd_laplacian(&self, u: &[Complex64], idx: usize) -> Option<Complex64> {
        const C: [f64; 5] = [
            -205.0 / 72.0,
            8.0 / 5.0,
            -1.0 / 5.0,
            8.0 / 315.0,
            -1.0 / 560.0,
        ];
        let m = self.multi_index(idx);
        if (0..self.dim).any(|a| m[a] < 4 || m[a] + 4 >= self.n) {
            return None;
        }
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..self.dim {
            s += u[idx] * C[0];
            for (o, c) in C.iter().enumerate().skip(1) {
                let mut p = m;
                p[a] = m[a] + o;
                let mut q = m;
                q[a] = m[a] - o;
                s += (u[self.linear_index(p)] + u[self.linear_index(q)]) * *c;
            }
        }
        Some(s / (self.h * self.h))
    }

    pub fn contains_ball(&self, r: f64) -> bool {
        r <= self.half_side()
    }
}

pub fn norm3(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_cell_centres() {
        let g = Grid::new(3, 8, 0.25).unwrap();
        assert_eq!(g.npts(), 512);
        assert!((g.coord(0) + 0.875).abs() < 1e-15);
        assert!((g.coord(7) - 0.875).abs() < 1e-15);
        for idx in [0, 17, 300, 511] {
            assert_eq!(g.linear_index(g.multi_index(idx)), idx);
        }
        assert!(Grid::new(2, 7, 0.1).is_err());
        assert!(Grid::new(4, 8, 0.1).is_err());
    }
}
