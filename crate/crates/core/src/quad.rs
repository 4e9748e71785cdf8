//! Adaptive Gauss-Kronrod quadrature and Gauss-Legendre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7/K15 panel for a vector-valued integrand: (Kronrod estimate, |K - G| per component).
fn gk15<const N: usize, F: FnMut(f64) -> [f64; N]>(
    f: &mut F,
    a: f64,
    b: f64,
) -> ([f64; N], [f64; N]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for i in 0..N {
        k[i] = WGK[7] * fc[i];
        g[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for i in 0..N {
        k[i] *= h;
        g[i] *= h;
        err[i] = (k[i] - g[i]).abs();
    }
    (k, err)
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    err: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Adaptive G7/K15 integration of a vector-valued integrand on [a, b]. The error
/// is controlled in the max-norm over components against `abs_tol`.
pub fn integrate_vec<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> QuadResult<N> {
    if a == b {
        return QuadResult {
            value: [0.0; N],
            error: 0.0,
            panels: 0,
            converged: true,
        };
    }
    let norm = |e: &[f64; N]| e.iter().fold(0.0f64, |m, v| m.max(*v));
    let (v0, e0) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        err: norm(&e0),
    });
    let mut total_err = norm(&e0);
    let mut count = 1;
    while total_err > abs_tol && count < max_panels {
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        let (n1, n2) = (norm(&e1), norm(&e2));
        total_err += n1 + n2 - p.err;
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            err: n1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            err: n2,
        });
        count += 1;
    }
    // re-sum in interval order for reproducibility
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    let mut value = [0.0; N];
    let mut err = 0.0;
    for p in &panels {
        for i in 0..N {
            value[i] += p.value[i];
        }
        err += p.err;
    }
    QuadResult {
        value,
        error: err,
        panels: count,
        converged: err <= abs_tol,
    }
}

/// Scalar adaptive integration; returns (value, error estimate).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    let r = integrate_vec(|x| [f(x)], a, b, abs_tol, 20_000);
    (r.value[0], r.error)
}

/// Integral over [a, inf) of an integrand decaying at least like a power,
/// summed over geometric chunks until the chunk contribution falls below `abs_tol`.
pub fn integrate_to_infinity<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    a: f64,
    abs_tol: f64,
) -> QuadResult<N> {
    let mut lo = a;
    let mut width = a.abs().max(1.0);
    let mut value = [0.0; N];
    let mut error = 0.0;
    let mut panels = 0;
    for _ in 0..400 {
        let hi = lo + width;
        let r = integrate_vec(&mut f, lo, hi, 0.1 * abs_tol, 5000);
        let mut m = 0.0f64;
        for i in 0..N {
            value[i] += r.value[i];
            m = m.max(r.value[i].abs());
        }
        error += r.error;
        panels += r.panels;
        if m < 0.05 * abs_tol && hi > 4.0 * a.abs().max(1.0) {
            return QuadResult {
                value,
                error: error + m,
                panels,
                converged: true,
            };
        }
        lo = hi;
        width *= 2.0;
    }
    QuadResult {
        value,
        error,
        panels,
        converged: false,
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached 16-point Gauss-Legendre rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomials_and_transcendental() {
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-13);
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-12);
        let (v, _) = integrate(|x| x.exp(), 0.0, 1.0, 1e-14);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let (v, e) = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0 / 3.0).abs() < 1e-11, "{v} {e}");
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_infinity(|x| [1.0 / (x * x)], 3.0, 1e-12);
        assert!((r.value[0] - 1.0 / 3.0).abs() < 1e-11);
        let r = integrate_to_infinity(|x| [x.powf(-1.5)], 1.0, 1e-10);
        assert!((r.value[0] - 2.0).abs() < 1e-8, "{}", r.value[0]);
    }

    #[test]
    fn gauss_legendre_exact_degree() {
        for n in [1, 2, 5, 16, 31] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for d in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                assert!((s - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }
}
