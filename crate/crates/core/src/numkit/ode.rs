//! Explicit Runge–Kutta integrators for small real systems: adaptive
//! Dormand–Prince 5(4) and classical fixed-step RK4.

use crate::{Error, Result};

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` with Dormand–Prince 5(4) and
/// mixed error control `|err_i| <= atol + rtol*|y_i|`.
pub fn dopri5<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<[f64; N]> {
    const C2: f64 = 1.0 / 5.0;
    const C3: f64 = 3.0 / 10.0;
    const C4: f64 = 4.0 / 5.0;
    const C5: f64 = 8.0 / 9.0;
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = span * 0.01;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::Domain("ODE integration: too many steps".into()));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let ynew = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(t + h, &ynew);
        let mut err = 0.0f64;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = ynew;
            k1 = k7;
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
        if h.abs() < 1e-14 * span.abs() {
            return Err(Error::Domain("ODE step size underflow".into()));
        }
    }
    Ok(y)
}

/// One classical RK4 step.
pub fn rk4_step<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k1)]));
    let k3 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]));
    let k4 = f(t + h, &axpy(y, h, &[(1.0, &k3)]));
    axpy(
        y,
        h,
        &[
            (1.0 / 6.0, &k1),
            (2.0 / 6.0, &k2),
            (2.0 / 6.0, &k3),
            (1.0 / 6.0, &k4),
        ],
    )
}
