//! Truncated Taylor jets (value and first three derivatives).

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; 4]);

impl Jet {
    pub fn constant(c: f64) -> Self {
        Jet([c, 0.0, 0.0, 0.0])
    }

    pub fn var(x: f64) -> Self {
        Jet([x, 1.0, 0.0, 0.0])
    }

    pub fn scale(self, s: f64) -> Self {
        let a = self.0;
        Jet([a[0] * s, a[1] * s, a[2] * s, a[3] * s])
    }

    /// g(self) given g and its first three derivatives at self.0[0].
    pub fn compose(self, g: [f64; 4]) -> Self {
        let f = self.0;
        Jet([
            g[0],
            g[1] * f[1],
            g[2] * f[1] * f[1] + g[1] * f[2],
            g[3] * f[1] * f[1] * f[1] + 3.0 * g[2] * f[1] * f[2] + g[1] * f[3],
        ])
    }

    pub fn powf(self, p: f64) -> Self {
        let q = self.0[0];
        let v = q.powf(p);
        self.compose([
            v,
            p * v / q,
            p * (p - 1.0) * v / (q * q),
            p * (p - 1.0) * (p - 2.0) * v / (q * q * q),
        ])
    }

    pub fn exp(self) -> Self {
        let e = self.0[0].exp();
        self.compose([e; 4])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
            a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_power_rules() {
        // (x^2)^(1/2) = x at x = 3
        let x = Jet::var(3.0);
        let r = (x * x).powf(0.5);
        assert!((r.0[0] - 3.0).abs() < 1e-14);
        assert!((r.0[1] - 1.0).abs() < 1e-14);
        assert!(r.0[2].abs() < 1e-14 && r.0[3].abs() < 1e-14);
        // exp(2x): derivatives 2^k e^{2x}
        let e = x.scale(2.0).exp();
        for k in 0..4 {
            let want = 2f64.powi(k as i32) * 6f64.exp();
            assert!((e.0[k] - want).abs() < 1e-10 * want);
        }
    }
}
