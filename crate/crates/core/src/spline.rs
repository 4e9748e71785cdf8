//! Natural cubic splines sharing one knot vector, so that many tabulated
//! functions can be evaluated with a single interval search.

/// Knots and the natural-spline system for them.
#[derive(Debug, Clone)]
pub struct Knots {
    pub u: Vec<f64>,
}

/// Interpolation weights at one abscissa: f = w0 y_i + w1 y_{i+1} + w2 M_i + w3 M_{i+1}.
#[derive(Debug, Clone, Copy)]
pub struct Weights {
    pub i: usize,
    pub w: [f64; 4],
}

impl Knots {
    pub fn new(u: Vec<f64>) -> Self {
        assert!(
            u.len() >= 3 && u.windows(2).all(|w| w[1] > w[0]),
            "knots must be increasing"
        );
        Knots { u }
    }

    /// Weights at u, clamped to the end values outside the knot range.
    pub fn locate(&self, u: f64) -> Weights {
        let n = self.u.len();
        if u <= self.u[0] {
            return Weights {
                i: 0,
                w: [1.0, 0.0, 0.0, 0.0],
            };
        }
        if u >= self.u[n - 1] {
            return Weights {
                i: n - 2,
                w: [0.0, 1.0, 0.0, 0.0],
            };
        }
        let i = self
            .u
            .partition_point(|k| *k <= u)
            .saturating_sub(1)
            .min(n - 2);
        let h = self.u[i + 1] - self.u[i];
        let a = (self.u[i + 1] - u) / h;
        let b = 1.0 - a;
        let h26 = h * h / 6.0;
        Weights {
            i,
            w: [a, b, (a * a * a - a) * h26, (b * b * b - b) * h26],
        }
    }

    /// Second-derivative coefficients M of the natural spline through `y`, per component.
    pub fn fit<const N: usize>(&self, y: &[[f64; N]]) -> Spline<N> {
        let n = self.u.len();
        assert_eq!(y.len(), n);
        // tridiagonal system for M_1..M_{n-2}, M_0 = M_{n-1} = 0
        let mut m = vec![[0.0; N]; n];
        let mut cp = vec![0.0; n];
        let mut dp = vec![[0.0; N]; n];
        for i in 1..n - 1 {
            let h0 = self.u[i] - self.u[i - 1];
            let h1 = self.u[i + 1] - self.u[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let c = h1 / 6.0;
            let denom = b - a * cp[i - 1];
            cp[i] = c / denom;
            for k in 0..N {
                let r = (y[i + 1][k] - y[i][k]) / h1 - (y[i][k] - y[i - 1][k]) / h0;
                dp[i][k] = (r - a * dp[i - 1][k]) / denom;
            }
        }
        for i in (1..n - 1).rev() {
            for k in 0..N {
                m[i][k] = dp[i][k] - cp[i] * m[i + 1][k];
            }
        }
        Spline { y: y.to_vec(), m }
    }
}

/// Values and second derivatives of N functions on shared knots.
#[derive(Debug, Clone)]
pub struct Spline<const N: usize> {
    pub y: Vec<[f64; N]>,
    pub m: Vec<[f64; N]>,
}

impl<const N: usize> Spline<N> {
    pub fn eval(&self, wt: &Weights) -> [f64; N] {
        let i = wt.i;
        let (y0, y1, m0, m1) = (&self.y[i], &self.y[i + 1], &self.m[i], &self.m[i + 1]);
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = wt.w[0] * y0[k] + wt.w[1] * y1[k] + wt.w[2] * m0[k] + wt.w[3] * m1[k];
        }
        out
    }
}
