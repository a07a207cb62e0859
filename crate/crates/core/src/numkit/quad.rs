//! Adaptive Gauss–Kronrod (7/15) quadrature for scalar, complex and vector
//! integrands.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Values that can be integrated.
pub trait Quadrable:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Quadrable for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Quadrable for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Small fixed-size real vector for vector-valued integrands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct V3(pub [f64; 3]);

impl Add for V3 {
    type Output = V3;
    fn add(self, o: V3) -> V3 {
        V3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for V3 {
    type Output = V3;
    fn sub(self, o: V3) -> V3 {
        V3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for V3 {
    type Output = V3;
    fn mul(self, s: f64) -> V3 {
        V3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Quadrable for V3 {
    fn zero() -> Self {
        V3([0.0; 3])
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Quadrable, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    let err = (kron - gauss).magnitude();
    (kron, err)
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

/// Globally adaptive integration of `f` over [a, b] until the error estimate
/// is below `max(abs_tol, rel_tol*|I|)` or `max_intervals` is reached.
pub fn integrate<T: Quadrable, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult<T> {
    integrate_with_breaks(&mut f, &[a, b], abs_tol, rel_tol, 400)
}

/// As [`integrate`], starting from the given breakpoints (sorted).
pub fn integrate_with_breaks<T: Quadrable, F: FnMut(f64) -> T>(
    f: &mut F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult<T> {
    let mut segs: Vec<(f64, f64, T, f64)> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(f, w[0], w[1]);
            segs.push((w[0], w[1], v, e));
        }
    }
    let mut evaluations = 15 * segs.len();
    loop {
        let total = segs.iter().fold(T::zero(), |acc, s| acc + s.2);
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.magnitude()) || segs.len() >= max_intervals {
            return QuadResult {
                value: total,
                error: err,
                evaluations,
            };
        }
        let (imax, _) =
            segs.iter().enumerate().fold(
                (0, -1.0),
                |best, (i, s)| if s.3 > best.1 { (i, s.3) } else { best },
            );
        let (a, b, _, _) = segs.swap_remove(imax);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return QuadResult {
                value: total,
                error: err,
                evaluations,
            };
        }
        let (v1, e1) = gk15(f, a, m);
        let (v2, e2) = gk15(f, m, b);
        evaluations += 30;
        segs.push((a, m, v1, e1));
        segs.push((m, b, v2, e2));
    }
}
