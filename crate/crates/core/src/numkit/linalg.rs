//! Restarted GMRES for matrix-free complex operators, plus a dense fallback
//! that assembles the operator column by column and factors it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// A square linear map on `C^len`.
pub trait LinearOperator {
    fn len(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Closure-backed operator.
pub struct FnOperator<F: Fn(&[Complex64]) -> Vec<Complex64>> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[Complex64]) -> Vec<Complex64>> LinearOperator for FnOperator<F> {
    fn len(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.f)(x)
    }
}

#[derive(Clone, Debug)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Refuse systems whose first-cycle Hessenberg matrix suggests a
    /// condition number above this.
    pub max_condition: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 60,
            max_iter: 600,
            max_condition: 1e8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    pub condition_estimate: f64,
    pub dense: bool,
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ conj(a_i) b_i`
pub fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    // Returns (c, s, r) with [c s; -conj(s) c] [a; b] = [r; 0].
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0), a);
    }
    if na == 0.0 {
        return (0.0, (b / nb).conj(), Complex64::new(nb, 0.0));
    }
    let t = (na * na + nb * nb).sqrt();
    let c = na / t;
    let phase = a / na;
    let s = phase * b.conj() / t;
    (c, s, phase * t)
}

fn singular_value_ratio(h: &[Vec<Complex64>], m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let mat = DMatrix::from_fn(m + 1, m, |i, j| h[j].get(i).copied().unwrap_or_default());
    let sv = mat.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `A x = b` from the zero start with restarted GMRES (modified
/// Gram–Schmidt, Givens rotations). Convergence is on the relative residual.
pub fn gmres<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[Complex64],
    opts: &GmresOptions,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::Shape(format!(
            "rhs length {} vs operator {}",
            b.len(),
            n
        )));
    }
    let bnorm = norm(b);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                history,
                condition_estimate: 1.0,
                dense: false,
            },
        ));
    }
    let mut iters = 0usize;
    let mut cond = 1.0;
    let mut first_cycle = true;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok((
                x,
                SolveReport {
                    iterations: iters,
                    residual: rel,
                    history,
                    condition_estimate: cond,
                    dense: false,
                },
            ));
        }
        if iters >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: iters,
                residual: rel,
                history,
            });
        }
        let m = opts.restart.min(n.max(1));
        let mut v: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut h: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut hraw: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<(f64, Complex64)> = Vec::with_capacity(m);
        let mut g = vec![Complex64::new(0.0, 0.0); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0usize;
        for j in 0..m {
            let mut w = a.apply(&v[j]);
            let mut col = vec![Complex64::new(0.0, 0.0); j + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dotc(vi, &w);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let wn = norm(&w);
            col[j + 1] = Complex64::new(wn, 0.0);
            hraw.push(col.clone());
            for (i, (c, s)) in cs.iter().enumerate() {
                let t = col[i] * *c + *s * col[i + 1];
                col[i + 1] = -s.conj() * col[i] + col[i + 1] * *c;
                col[i] = t;
            }
            let (c, s, rr) = givens(col[j], col[j + 1]);
            col[j] = rr;
            col[j + 1] = Complex64::new(0.0, 0.0);
            cs.push((c, s));
            let gj = g[j];
            g[j] = gj * c;
            g[j + 1] = -s.conj() * gj;
            h.push(col);
            used = j + 1;
            iters += 1;
            let rel = g[j + 1].norm() / bnorm;
            history.push(rel);
            if wn > 0.0 {
                v.push(w.iter().map(|z| z / wn).collect());
            }
            if rel <= opts.tol || wn == 0.0 || iters >= opts.max_iter {
                break;
            }
        }
        if first_cycle {
            cond = singular_value_ratio(&hraw, used);
            if cond > opts.max_condition {
                return Err(Error::IllConditioned { estimate: cond });
            }
            first_cycle = false;
        }
        // Back substitution on the rotated Hessenberg matrix.
        let mut y = vec![Complex64::new(0.0, 0.0); used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[k][i] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[k]) {
                *xi += yk * vi;
            }
        }
        let ax = a.apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
}

/// Assemble the operator densely (one application per column) and solve
/// with LU. Practical only for a few thousand unknowns.
pub fn dense_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[Complex64],
    max_condition: f64,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::Shape(format!(
            "rhs length {} vs operator {}",
            b.len(),
            n
        )));
    }
    let mut mat = DMatrix::<Complex64>::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        let col = a.apply(&e);
        for i in 0..n {
            mat[(i, j)] = col[i];
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    let sv = mat.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond > max_condition {
        return Err(Error::IllConditioned { estimate: cond });
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = mat
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("dense system is singular".into()))?;
    let x: Vec<Complex64> = x.iter().cloned().collect();
    let ax = a.apply(&x);
    let res: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let bn = norm(b);
    let rel = if bn > 0.0 { norm(&res) / bn } else { 0.0 };
    Ok((
        x,
        SolveReport {
            iterations: n,
            residual: rel,
            history: vec![rel],
            condition_estimate: cond,
            dense: true,
        },
    ))
}
