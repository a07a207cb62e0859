//! Sampled scalar, vector and antisymmetric-tensor fields, with a flat binary
//! export format.
//!
//! Binary layout (little endian):
//! `b"SLFD"`, u32 version, u32 dim, u32 n, u32 ncomp, u32 role tag,
//! f64 h, f64 half side, then `ncomp * n^dim` pairs of f64 (re, im),
//! component-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::numkit::grid::Grid;
use crate::{Error, Result, Vec3};

pub const FIELD_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SLFD";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ElectricPotential,
    MagneticPotential,
    MagneticField,
    Wavefunction,
    Gradient,
    Generic,
}

impl Role {
    pub fn tag(self) -> u32 {
        match self {
            Role::ElectricPotential => 1,
            Role::MagneticPotential => 2,
            Role::MagneticField => 3,
            Role::Wavefunction => 4,
            Role::Gradient => 5,
            Role::Generic => 6,
        }
    }

    pub fn from_tag(t: u32) -> Result<Self> {
        Ok(match t {
            1 => Role::ElectricPotential,
            2 => Role::MagneticPotential,
            3 => Role::MagneticField,
            4 => Role::Wavefunction,
            5 => Role::Gradient,
            6 => Role::Generic,
            _ => return Err(Error::Format(format!("unknown role tag {t}"))),
        })
    }
}

/// Index pairs (i, j), i < j, of the stored components of an antisymmetric tensor.
pub fn tensor_pairs(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &[(0, 1)]
    } else {
        &[(0, 1), (0, 2), (1, 2)]
    }
}

/// Values on a grid. `ncomp` is 1 for scalars, `dim` for vectors and
/// `dim(dim-1)/2` for antisymmetric tensors (components per [`tensor_pairs`]).
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub grid: Grid,
    pub role: Role,
    pub ncomp: usize,
    pub data: Vec<Complex64>,
}

impl SampledField {
    pub fn zeros(grid: Grid, role: Role, ncomp: usize) -> Self {
        Self {
            grid,
            role,
            ncomp,
            data: vec![Complex64::new(0.0, 0.0); ncomp * grid.npts()],
        }
    }

    pub fn scalar(grid: Grid, role: Role, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.npts() {
            return Err(Error::Shape(format!(
                "scalar field needs {} samples, got {}",
                grid.npts(),
                data.len()
            )));
        }
        Ok(Self {
            grid,
            role,
            ncomp: 1,
            data,
        })
    }

    pub fn from_components(grid: Grid, role: Role, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        let ncomp = comps.len();
        let mut data = Vec::with_capacity(ncomp * grid.npts());
        for c in comps {
            if c.len() != grid.npts() {
                return Err(Error::Shape("component length mismatch".into()));
            }
            data.extend(c);
        }
        Ok(Self {
            grid,
            role,
            ncomp,
            data,
        })
    }

    /// Scalar field from a pointwise function.
    pub fn from_fn<F: Fn(&Vec3) -> Complex64>(grid: Grid, role: Role, f: F) -> Self {
        let data = (0..grid.npts()).map(|i| f(&grid.point(i))).collect();
        Self {
            grid,
            role,
            ncomp: 1,
            data,
        }
    }

    /// Vector field from a pointwise function returning all components.
    pub fn vector_from_fn<F: Fn(&Vec3) -> Vec<Complex64>>(
        grid: Grid,
        role: Role,
        ncomp: usize,
        f: F,
    ) -> Self {
        let npts = grid.npts();
        let mut data = vec![Complex64::new(0.0, 0.0); ncomp * npts];
        for i in 0..npts {
            let v = f(&grid.point(i));
            for c in 0..ncomp {
                data[c * npts + i] = v[c];
            }
        }
        Self {
            grid,
            role,
            ncomp,
            data,
        }
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.npts();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.npts();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn components(&self) -> Vec<&[Complex64]> {
        (0..self.ncomp).map(|c| self.component(c)).collect()
    }

    /// Component `F^{ij}` of an antisymmetric tensor field at sample `idx`.
    pub fn tensor(&self, i: usize, j: usize, idx: usize) -> Complex64 {
        if i == j {
            return Complex64::new(0.0, 0.0);
        }
        let pairs = tensor_pairs(self.grid.dim);
        let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let c = pairs
            .iter()
            .position(|p| *p == (a, b))
            .expect("tensor index");
        self.component(c)[idx] * s
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise Euclidean norm over components at sample `idx`.
    pub fn norm_at(&self, idx: usize) -> f64 {
        (0..self.ncomp)
            .map(|c| self.component(c)[idx].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn same_shape(&self, other: &SampledField) -> bool {
        self.grid == other.grid && self.ncomp == other.ncomp
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [
            FIELD_FORMAT_VERSION,
            self.grid.dim as u32,
            self.grid.n as u32,
            self.ncomp as u32,
            self.role.tag(),
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.grid.h.to_le_bytes())?;
        w.write_all(&self.grid.half_side().to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.data.len());
        for v in &self.data {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a sampled-field file".into()));
        }
        let mut u = [0u32; 5];
        for x in u.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *x = u32::from_le_bytes(b);
        }
        if u[0] != FIELD_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported field version {}", u[0])));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let h = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let grid = Grid::new(u[1] as usize, u[2] as usize, h)?;
        let ncomp = u[3] as usize;
        let role = Role::from_tag(u[4])?;
        let mut raw = vec![0u8; 16 * ncomp * grid.npts()];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self {
            grid,
            role,
            ncomp,
            data,
        })
    }
}
