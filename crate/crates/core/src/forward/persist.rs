//! Versioned little-endian binary encoding of far fields and scattering
//! matrices, used by the result cache.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::farfield::{FarField, ScatteringMatrix};
use crate::numkit::sphere::{DirectionGrid, HarmonicBasis};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const SMATRIX_MAGIC: &[u8; 4] = b"SLSM";
const FARFIELD_MAGIC: &[u8; 4] = b"SLFF";

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn c64(&mut self, v: Complex64) {
        self.f64(v.re);
        self.f64(v.im);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated record".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn c64(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::Format("bad magic".into()));
        }
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "format version {v}, expected {FORMAT_VERSION}"
            )));
        }
        Ok(())
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(())
    }
}

pub fn encode_smatrix(s: &ScatteringMatrix) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(SMATRIX_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(s.basis.dim as u32);
    w.u32(s.basis.degree as u32);
    w.f64(s.energy);
    for i in 0..s.len() {
        for j in 0..s.len() {
            w.c64(s.matrix[(i, j)]);
        }
    }
    w.0
}

pub fn decode_smatrix(buf: &[u8]) -> Result<ScatteringMatrix> {
    let mut r = Reader { buf, pos: 0 };
    r.header(SMATRIX_MAGIC)?;
    let basis = HarmonicBasis::new(r.u32()? as usize, r.u32()? as usize)?;
    let energy = r.f64()?;
    let n = basis.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = r.c64()?;
        }
    }
    r.finish()?;
    Ok(ScatteringMatrix {
        energy,
        basis,
        matrix: m,
    })
}

pub fn encode_farfield(f: &FarField) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(FARFIELD_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(f.dirs.dim as u32);
    w.u32(f.dirs.degree as u32);
    w.f64(f.energy);
    w.u32(f.dirs.len() as u32);
    for (node, wt) in f.dirs.nodes.iter().zip(&f.dirs.weights) {
        for x in node {
            w.f64(*x);
        }
        w.f64(*wt);
    }
    for row in &f.values {
        for v in row {
            w.c64(*v);
        }
    }
    w.0
}

pub fn decode_farfield(buf: &[u8]) -> Result<FarField> {
    let mut r = Reader { buf, pos: 0 };
    r.header(FARFIELD_MAGIC)?;
    let dim = r.u32()? as usize;
    let degree = r.u32()? as usize;
    let energy = r.f64()?;
    let m = r.u32()? as usize;
    if m > buf.len() {
        return Err(Error::Format("implausible node count".into()));
    }
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        nodes.push([r.f64()?, r.f64()?, r.f64()?]);
        weights.push(r.f64()?);
    }
    let mut values = Vec::with_capacity(m);
    for _ in 0..m {
        values.push((0..m).map(|_| r.c64()).collect::<Result<Vec<_>>>()?);
    }
    r.finish()?;
    Ok(FarField {
        energy,
        dirs: DirectionGrid {
            dim,
            degree,
            nodes,
            weights,
        },
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::sphere::sphere_rule;

    #[test]
    fn round_trips_are_bit_identical() {
        let basis = HarmonicBasis::new(3, 2).unwrap();
        let n = basis.len();
        let s = ScatteringMatrix {
            energy: 1.25,
            basis,
            matrix: DMatrix::from_fn(n, n, |i, j| {
                Complex64::new(i as f64 * 0.1 + 1e-17, -(j as f64) / 3.0)
            }),
        };
        let bytes = encode_smatrix(&s);
        let back = decode_smatrix(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode_smatrix(&back), bytes);

        let dirs = sphere_rule(2, 3).unwrap();
        let m = dirs.len();
        let f = FarField {
            energy: 2.0,
            values: (0..m)
                .map(|q| {
                    (0..m)
                        .map(|p| Complex64::new(q as f64, p as f64 / 7.0))
                        .collect()
                })
                .collect(),
            dirs,
        };
        let bytes = encode_farfield(&f);
        assert_eq!(decode_farfield(&bytes).unwrap(), f);
    }

    #[test]
    fn corrupt_records_are_rejected() {
        let s = ScatteringMatrix::identity(1.0, HarmonicBasis::new(2, 1).unwrap());
        let mut bytes = encode_smatrix(&s);
        assert!(decode_smatrix(&bytes[..bytes.len() - 1]).is_err());
        bytes[4] = 99;
        assert!(matches!(decode_smatrix(&bytes), Err(Error::Format(_))));
        assert!(decode_farfield(b"SLSM").is_err());
    }
}
