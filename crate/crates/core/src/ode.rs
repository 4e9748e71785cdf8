//! Adaptive Dormand-Prince 5(4) integrator for small fixed-size real systems.

use crate::error::{Error, Result};

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
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Dp5Options<const N: usize> {
    pub atol: [f64; N],
    pub rtol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// Accepted step endpoint.
#[derive(Debug, Clone, Copy)]
pub struct Node<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand-Prince step from (x, y) with derivative k1 = f(x, y).
/// Returns (y_new, k7 = f(x + h, y_new), error vector).
pub fn dp5_step<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [f64; N]) {
    let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(
        x + C4 * h,
        &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    );
    let k5 = f(
        x + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        x + h,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let yn = axpy(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = f(x + h, &yn);
    let mut e = [0.0; N];
    for i in 0..N {
        e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (yn, k7, e)
}

/// Integrates y' = f(x, y) from x0 to x_end, landing exactly on every point of
/// `stops` (which must lie between x0 and x_end, in integration order).
/// Every accepted node is returned, starting with (x0, y0).
pub fn integrate<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    stops: &[f64],
    opts: &Dp5Options<N>,
) -> Result<Vec<Node<N>>> {
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut nodes = vec![Node { x: x0, y: y0 }];
    if x_end == x0 {
        return Ok(nodes);
    }
    let mut targets: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|s| (s - x0) * dir > 0.0 && (x_end - s) * dir > 0.0)
        .collect();
    targets.push(x_end);
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = opts.h_init.abs().min(opts.h_max).min((x_end - x0).abs());
    let mut steps = 0;
    for &target in &targets {
        while (target - x) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::ResourceLimit(format!(
                    "ODE step budget {} exhausted at x = {x}",
                    opts.max_steps
                )));
            }
            let remaining = (target - x).abs();
            let mut hh = h.min(remaining);
            let last = hh >= remaining * (1.0 - 1e-12);
            if last {
                hh = remaining;
            }
            let (yn, k7, e) = dp5_step(&mut f, x, &y, &k1, dir * hh);
            let mut err = 0.0;
            for i in 0..N {
                let sc = opts.atol[i] + opts.rtol * y[i].abs().max(yn[i].abs());
                err += (e[i] / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NoConvergence(format!(
                    "non-finite ODE state near x = {x}"
                )));
            }
            if err <= 1.0 {
                x = if last { target } else { x + dir * hh };
                y = yn;
                k1 = k7;
                nodes.push(Node { x, y });
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a step clipped to a stop should not shrink the controller's proposal
                h = if last { h.max(hh * fac) } else { hh * fac }.min(opts.h_max);
            } else {
                h = hh * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * x.abs().max(1.0) {
                    return Err(Error::NoConvergence(format!(
                        "ODE step underflow near x = {x}"
                    )));
                }
            }
        }
    }
    Ok(nodes)
}

/// Value at x inside the step starting at `from`, by one Dormand-Prince step of size x - from.x.
pub fn restep<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    mut f: F,
    from: &Node<N>,
    x: f64,
) -> [f64; N] {
    if x == from.x {
        return from.y;
    }
    let k1 = f(from.x, &from.y);
    dp5_step(&mut f, from.x, &from.y, &k1, x - from.x).0
}
