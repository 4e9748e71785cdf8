//! Liouville phase y(x, λ) = ∫_base^x sqrt(λ² - V) ds and its inverse.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::potential::{japanese, PotentialModel};
use crate::quad::integrate_vec;

/// Monotone phase map with a node cache for fast evaluation and inversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiouvilleMap {
    pub model: PotentialModel,
    pub lambda: f64,
    pub base_point: f64,
    pub quad_tol: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl LiouvilleMap {
    /// Map with an initial cache on [base - 1, base + 1].
    pub fn new(model: PotentialModel, lambda: f64, base_point: f64, quad_tol: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        if !(quad_tol > 0.0) {
            return Err(Error::InvalidArgument("quad_tol must be positive".into()));
        }
        let mut m = LiouvilleMap {
            model,
            lambda,
            base_point,
            quad_tol,
            xs: vec![base_point],
            ys: vec![0.0],
        };
        m.warm(base_point - 1.0, base_point + 1.0)?;
        Ok(m)
    }

    /// dy/dx = sqrt(λ² - V(x)); NaN where λ² <= V.
    #[inline]
    pub fn speed(&self, x: f64) -> f64 {
        let d = self.lambda * self.lambda - self.model.eval(x);
        if d > 0.0 {
            d.sqrt()
        } else {
            f64::NAN
        }
    }

    fn check_segment(&self, a: f64, b: f64) -> Result<()> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let l2 = self.lambda * self.lambda;
        if self.model.is_bump() {
            if l2 > self.model.sup_v() {
                return Ok(());
            }
            let r = self.model.negativity_radius();
            let (s, e) = (lo.max(-r), hi.min(r));
            if s <= e {
                let n = 400;
                for i in 0..=n {
                    let x = s + (e - s) * i as f64 / n as f64;
                    if l2 - self.model.eval(x) <= 0.0 {
                        return Err(Error::TurningPoint { x });
                    }
                }
            }
        } else if l2 - self.model.eval(lo).max(self.model.eval(hi)) <= 0.0 {
            return Err(Error::TurningPoint { x: lo });
        }
        Ok(())
    }

    /// ∫_a^b sqrt(λ² - V) ds by adaptive Gauss-Kronrod.
    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        self.check_segment(a, b)?;
        let r = integrate_vec(|s| [self.speed(s)], a, b, 1e-2 * self.quad_tol, 20_000);
        if !r.value[0].is_finite() {
            return Err(Error::TurningPoint { x: 0.5 * (a + b) });
        }
        Ok(r.value[0])
    }

    /// Next cache node outward from x (geometric spacing in |x - base|).
    fn next_node(&self, x: f64, dir: f64) -> f64 {
        let d = (x - self.base_point).abs();
        x + dir * (0.25f64).max(0.15 * d)
    }

    /// Extends the cache so that [lo, hi] is covered.
    pub fn warm(&mut self, lo: f64, hi: f64) -> Result<()> {
        while *self.xs.last().unwrap() < hi {
            let x0 = *self.xs.last().unwrap();
            let x1 = self.next_node(x0, 1.0);
            let y1 = self.ys.last().unwrap() + self.segment(x0, x1)?;
            self.xs.push(x1);
            self.ys.push(y1);
        }
        let mut front_x = Vec::new();
        let mut front_y = Vec::new();
        let (mut x0, mut y0) = (self.xs[0], self.ys[0]);
        while x0 > lo {
            let x1 = self.next_node(x0, -1.0);
            let y1 = y0 - self.segment(x1, x0)?;
            front_x.push(x1);
            front_y.push(y1);
            x0 = x1;
            y0 = y1;
        }
        if !front_x.is_empty() {
            front_x.reverse();
            front_y.reverse();
            front_x.extend_from_slice(&self.xs);
            front_y.extend_from_slice(&self.ys);
            self.xs = front_x;
            self.ys = front_y;
        }
        Ok(())
    }

    pub fn cached_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn cache_len(&self) -> usize {
        self.xs.len()
    }

    /// y(x, λ).
    pub fn forward(&self, x: f64) -> Result<f64> {
        if x == self.base_point {
            return Ok(0.0);
        }
        let n = self.xs.len();
        if x >= self.xs[0] && x <= self.xs[n - 1] {
            let i = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
            let (a, b) = (self.xs[i - 1], self.xs[i]);
            return if x - a <= b - x {
                Ok(self.ys[i - 1] + self.segment(a, x)?)
            } else {
                Ok(self.ys[i] - self.segment(x, b)?)
            };
        }
        // outside the cache: march node by node without storing
        let (mut x0, mut y0, dir) = if x > self.xs[n - 1] {
            (self.xs[n - 1], self.ys[n - 1], 1.0)
        } else {
            (self.xs[0], self.ys[0], -1.0)
        };
        loop {
            let x1 = self.next_node(x0, dir);
            if (x1 - x) * dir >= 0.0 {
                return Ok(y0 + dir * self.segment(x0.min(x), x0.max(x))?);
            }
            y0 += dir * self.segment(x0.min(x1), x0.max(x1))?;
            x0 = x1;
        }
    }

    /// Phases at many sorted points, sharing the cumulative sums.
    pub fn forward_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.forward(x)).collect()
    }

    /// x(y, λ) by a bracketed Newton solve seeded from cubic Hermite interpolation of the cache.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(self.base_point);
        }
        let n = self.ys.len();
        // bracket [xa, xb] with ya <= y <= yb
        let (xa, ya, xb, yb) = if y >= self.ys[0] && y <= self.ys[n - 1] {
            let i = self.ys.partition_point(|&v| v <= y).clamp(1, n - 1);
            (self.xs[i - 1], self.ys[i - 1], self.xs[i], self.ys[i])
        } else {
            let dir = if y > self.ys[n - 1] { 1.0 } else { -1.0 };
            let (mut x0, mut y0) = if dir > 0.0 {
                (self.xs[n - 1], self.ys[n - 1])
            } else {
                (self.xs[0], self.ys[0])
            };
            loop {
                let x1 = self.next_node(x0, dir);
                let y1 = y0 + dir * self.segment(x0.min(x1), x0.max(x1))?;
                if (y1 - y) * dir >= 0.0 {
                    break if dir > 0.0 {
                        (x0, y0, x1, y1)
                    } else {
                        (x1, y1, x0, y0)
                    };
                }
                x0 = x1;
                y0 = y1;
            }
        };
        let (ka, kb) = (self.speed(xa), self.speed(xb));
        let h = xb - xa;
        let fa = |x: f64| -> Result<f64> { Ok(ya + self.segment(xa, x)? - y) };
        // Hermite seed: solve the cubic by a few bisection-Newton steps on the interpolant
        let herm = |x: f64| {
            let t = (x - xa) / h;
            let (t2, t3) = (t * t, t * t * t);
            (2.0 * t3 - 3.0 * t2 + 1.0) * ya
                + (t3 - 2.0 * t2 + t) * h * ka
                + (-2.0 * t3 + 3.0 * t2) * yb
                + (t3 - t2) * h * kb
        };
        let (mut lo, mut hi) = (xa, xb);
        for _ in 0..40 {
            let m = 0.5 * (lo + hi);
            if herm(m) < y {
                lo = m;
            } else {
                hi = m;
            }
        }
        let mut x = 0.5 * (lo + hi);
        let (mut lo, mut hi) = (xa, xb);
        for _ in 0..100 {
            let f = fa(x)?;
            if f.abs() <= 0.1 * self.quad_tol {
                return Ok(x);
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut xn = x - f / self.speed(x);
            if !(xn > lo && xn < hi) {
                xn = 0.5 * (lo + hi);
            }
            if (xn - x).abs() <= 1e-15 * x.abs().max(1.0) {
                return Ok(xn);
            }
            x = xn;
        }
        Ok(x)
    }

    /// Cache file name keyed by model, λ, base point and tolerance.
    pub fn cache_key(&self) -> String {
        let mut h = Sha256::new();
        h.update(
            serde_json::to_string(&self.model)
                .unwrap_or_default()
                .as_bytes(),
        );
        h.update(self.lambda.to_bits().to_le_bytes());
        h.update(self.base_point.to_bits().to_le_bytes());
        h.update(self.quad_tol.to_bits().to_le_bytes());
        let d = h.finalize();
        format!(
            "liouville-{}.json",
            d.iter()
                .take(12)
                .map(|b| format!("{b:02x}"))
                .collect::<String>()
        )
    }

    pub fn cache_path(&self, dir: &Path) -> PathBuf {
        dir.join(self.cache_key())
    }

    /// Writes the node cache into `dir`.
    pub fn save_cache(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let p = self.cache_path(dir);
        let s = serde_json::to_string(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(&p, s)?;
        Ok(p)
    }

    /// Replaces the cache by the stored one if a matching file exists. Returns whether it did.
    pub fn load_cache(&mut self, dir: &Path) -> Result<bool> {
        let p = self.cache_path(dir);
        if !p.exists() {
            return Ok(false);
        }
        let s = std::fs::read_to_string(&p)?;
        let m: LiouvilleMap = serde_json::from_str(&s).map_err(|e| Error::Io(e.to_string()))?;
        if m.model != self.model
            || m.lambda != self.lambda
            || m.base_point != self.base_point
            || m.quad_tol != self.quad_tol
        {
            return Ok(false);
        }
        let ok = m.xs.windows(2).all(|w| w[0] < w[1]) && m.ys.windows(2).all(|w| w[0] < w[1]);
        if !ok || m.xs.len() < self.xs.len() {
            return Ok(false);
        }
        self.xs = m.xs;
        self.ys = m.ys;
        Ok(true)
    }
}

/// Fitted symbol constant sup |∂_λ^α x(y, λ)| λ^α / |x(y, λ)|.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolReport {
    pub alpha: usize,
    pub constant: f64,
    /// Same sup with the finite-difference step halved.
    pub constant_half_step: f64,
}

fn x_of_y_derivative(
    model: &PotentialModel,
    base: f64,
    lambda: f64,
    y: f64,
    x0: f64,
    alpha: usize,
    h: f64,
    tol: f64,
) -> Result<f64> {
    let xp = LiouvilleMap::new(*model, lambda + h, base, tol)?.inverse(y)?;
    let xm = LiouvilleMap::new(*model, lambda - h, base, tol)?.inverse(y)?;
    Ok(match alpha {
        1 => (xp - xm) / (2.0 * h),
        _ => (xp - 2.0 * x0 + xm) / (h * h),
    })
}

/// Validates |∂_λ^α x(y, λ)| <= C λ^{-α} |x(y, λ)| on (λ, x) samples, α <= 2.
/// Points are (λ, x0); y is fixed at y(x0, λ) and x(y, λ ± h) recomputed by inversion.
pub fn check_symbol_bounds(
    model: &PotentialModel,
    base_point: f64,
    lambdas: &[f64],
    x_grid: &[f64],
    alpha: usize,
    quad_tol: f64,
) -> Result<SymbolReport> {
    if alpha > 2 {
        return Err(Error::InvalidArgument("alpha must be <= 2".into()));
    }
    if alpha == 0 {
        return Ok(SymbolReport {
            alpha,
            constant: 1.0,
            constant_half_step: 1.0,
        });
    }
    let mut c = 0.0f64;
    let mut c_half = 0.0f64;
    let mut worst_gap = 0.0f64;
    for &l in lambdas {
        let map = LiouvilleMap::new(*model, l, base_point, quad_tol)?;
        let h = (1e-4 * l).max(1e-8);
        for &x0 in x_grid {
            if (x0 - base_point).abs() < 1e-6 {
                continue;
            }
            let y = map.forward(x0)?;
            let d1 = x_of_y_derivative(model, base_point, l, y, x0, alpha, h, quad_tol)?;
            let d2 = x_of_y_derivative(model, base_point, l, y, x0, alpha, 0.5 * h, quad_tol)?;
            let s = l.powi(alpha as i32) / x0.abs();
            let (r1, r2) = (d1.abs() * s, d2.abs() * s);
            c = c.max(r1);
            c_half = c_half.max(r2);
            worst_gap = worst_gap.max((r1 - r2).abs());
        }
    }
    if worst_gap > 0.01 * c.max(1e-300) {
        return Err(Error::GridTooCoarse(format!(
            "finite-difference estimate moves by {:.3e} against a bound of {:.3e}",
            worst_gap, c
        )));
    }
    Ok(SymbolReport {
        alpha,
        constant: c,
        constant_half_step: c_half,
    })
}

/// Fitted C in |y(x, λ)| <= C <x> (λ + <x>^{-μ/2}) over the samples.
pub fn phase_upper_constant(
    model: &PotentialModel,
    lambdas: &[f64],
    x_grid: &[f64],
    quad_tol: f64,
) -> Result<f64> {
    let mut c = 0.0f64;
    for &l in lambdas {
        let map = LiouvilleMap::new(*model, l, 0.0, quad_tol)?;
        for &x in x_grid {
            let w = japanese(x);
            c = c.max(map.forward(x)?.abs() / (w * (l + w.powf(-0.5 * model.mu))));
        }
    }
    Ok(c)
}
