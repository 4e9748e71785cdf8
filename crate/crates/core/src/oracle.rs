//! Reference engines. A finite-difference eigensolve of P = -∂² + V on a
//! Dirichlet box gives discrete versions of the propagator and the spectral
//! density; a plain composite Gauss-Legendre rule with panel doubling is the
//! reference for oscillatory integrals.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillatory::smooth_cutoff;
use crate::potential::PotentialModel;
use crate::quad::gl16;

/// Which discrete eigenvalues count as spurious zero modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZeroThreshold {
    /// |λ²| <= 10 h⁴
    Quartic,
    /// |λ²| <= 10 h²
    Quadratic,
    Absolute(f64),
}

impl ZeroThreshold {
    pub fn value(&self, h: f64) -> f64 {
        match *self {
            ZeroThreshold::Quartic => 10.0 * h.powi(4),
            ZeroThreshold::Quadratic => 10.0 * h * h,
            ZeroThreshold::Absolute(v) => v,
        }
    }
}

/// How eigenvectors are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolvePath {
    /// Implicit QL with accumulated rotations (all vectors).
    Full,
    /// QL eigenvalues, then inverse iteration inside the energy window.
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Box half-width L.
    pub l: f64,
    /// Grid spacing h.
    pub h: f64,
    pub dim_cap: usize,
    pub h_max: f64,
    pub l_min: f64,
    pub zero: ZeroThreshold,
    /// Largest λ² whose eigenvector is kept.
    pub lambda2_cap: f64,
    /// Dimensions up to this use the full QL path unless `path` says otherwise.
    pub full_solve_max: usize,
    pub path: Option<SolvePath>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            l: 200.0,
            h: 0.05,
            dim_cap: 40_000,
            h_max: 0.1,
            l_min: 50.0,
            zero: ZeroThreshold::Quartic,
            lambda2_cap: 16.0,
            full_solve_max: 1500,
            path: None,
        }
    }
}

/// Eigen-data of the discretised operator on [-L, L].
#[derive(Debug, Clone)]
pub struct DiscreteOracle {
    pub l: f64,
    pub h: f64,
    /// Interior nodes x_j = -L + j h, j = 1..N.
    pub xs: Vec<f64>,
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub zero_threshold: f64,
    /// Excluded eigenvalues with |λ²| <= threshold.
    pub near_zero: Vec<f64>,
    pub negative_count: usize,
    pub lambda2_max_used: f64,
    pub t_safe: f64,
    pub path: SolvePath,
    /// λ² of the retained modes, ascending.
    pub mode_lambda2: Vec<f64>,
    /// ψ_k on the nodes, h-normalised: h Σ_j ψ_k(x_j)² = 1.
    modes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSummary {
    pub l: f64,
    pub h: f64,
    pub dimension: usize,
    pub lowest_eigenvalue: f64,
    pub negative_count: usize,
    pub near_zero_count: usize,
    pub zero_threshold: f64,
    pub modes_used: usize,
    pub lambda2_max_used: f64,
    pub t_safe: f64,
    pub path: SolvePath,
}

/// Diagonal 2/h² + V(x_j) and off-diagonal -1/h² of the 3-point scheme.
pub fn tridiagonal(model: &PotentialModel, l: f64, h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = (2.0 * l / h).round() as usize - 1;
    let xs: Vec<f64> = (1..=n).map(|j| -l + j as f64 * h).collect();
    let d = xs.iter().map(|&x| 2.0 / (h * h) + model.eval(x)).collect();
    let mut e = vec![-1.0 / (h * h); n];
    e[n - 1] = 0.0;
    (xs, d, e)
}

/// Number of eigenvalues below `x` (Sturm sequence of the LDLᵀ pivots).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Implicit QL with Wilkinson shifts. `e[i]` couples i and i+1; rows of `z`
/// (n×n, row-major) receive the eigenvectors when present.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence(format!(
                    "QL iteration stalled at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let (zi, zj) = (&mut lo[i * n..], &mut hi[..n]);
                    for k in 0..n {
                        let f = zj[k];
                        zj[k] = s * zi[k] + c * f;
                        zi[k] = c * zi[k] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All eigenvalues, ascending.
pub fn ql_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let (mut d, mut e) = (d.to_vec(), e.to_vec());
    tql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

/// All eigenpairs, ascending; vectors unit in the plain Euclidean norm.
pub fn ql_eigen(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = d.len();
    let (mut d, mut e) = (d.to_vec(), e.to_vec());
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, Some(&mut z))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let vals = idx.iter().map(|&i| d[i]).collect();
    let vecs = idx
        .iter()
        .map(|&i| z[i * n..(i + 1) * n].to_vec())
        .collect();
    Ok((vals, vecs))
}

/// LU of T - σI with partial pivoting; zero pivots nudged to `tiny`.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swap: Vec<bool>,
}

impl ShiftedLu {
    fn new(d: &[f64], e: &[f64], sigma: f64, tiny: f64) -> Self {
        let n = d.len();
        let mut u0: Vec<f64> = d.iter().map(|v| v - sigma).collect();
        let mut u1 = e.to_vec();
        let mut u2 = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut swap = vec![false; n];
        for i in 0..n - 1 {
            let (a0, a1) = (u0[i], u1[i]);
            let (b0, b1) = (e[i], u0[i + 1]);
            let b2 = if i + 2 < n { u1[i + 1] } else { 0.0 };
            if a0.abs() >= b0.abs() {
                let a0 = if a0 == 0.0 { tiny } else { a0 };
                u0[i] = a0;
                l[i] = b0 / a0;
                u0[i + 1] = b1 - l[i] * a1;
            } else {
                let m = a0 / b0;
                l[i] = m;
                swap[i] = true;
                u0[i] = b0;
                u1[i] = b1;
                u2[i] = b2;
                u0[i + 1] = a1 - m * b1;
                if i + 2 < n {
                    u1[i + 1] = -m * b2;
                }
            }
        }
        if u0[n - 1] == 0.0 {
            u0[n - 1] = tiny;
        }
        ShiftedLu {
            u0,
            u1,
            u2,
            l,
            swap,
        }
    }

    fn solve(&self, y: &mut [f64]) {
        let n = y.len();
        for i in 0..n - 1 {
            if self.swap[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.l[i] * y[i];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            if i + 1 < n {
                v -= self.u1[i] * y[i + 1];
            }
            if i + 2 < n {
                v -= self.u2[i] * y[i + 2];
            }
            y[i] = v / self.u0[i];
        }
    }
}

fn normalize(v: &mut [f64]) {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Eigenvectors for the (ascending) eigenvalues `targets` by inverse iteration,
/// re-orthogonalised against earlier vectors within `band` in eigenvalue.
pub fn inverse_iteration(d: &[f64], e: &[f64], targets: &[f64], band: f64) -> Vec<Vec<f64>> {
    let n = d.len();
    let norm = d
        .iter()
        .zip(e)
        .map(|(a, b)| a.abs() + 2.0 * b.abs())
        .fold(0.0, f64::max);
    let tiny = f64::EPSILON * norm;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(targets.len());
    for (k, &lam) in targets.iter().enumerate() {
        let lu = ShiftedLu::new(d, e, lam, tiny);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let first = targets[..k].partition_point(|&p| p < lam - band);
        for _ in 0..3 {
            lu.solve(&mut v);
            normalize(&mut v);
            for w in &out[first..k] {
                let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(w).for_each(|(a, b)| *a -= dot * b);
            }
            normalize(&mut v);
        }
        out.push(v);
    }
    out
}

impl DiscreteOracle {
    /// Builds the box operator for `model` and solves it.
    pub fn discretize_and_solve(model: &PotentialModel, cfg: &OracleConfig) -> Result<Self> {
        let (l, h) = (cfg.l, cfg.h);
        if !(h > 0.0 && h <= cfg.h_max) {
            return Err(Error::InvalidArgument(format!(
                "h = {h} must lie in (0, {}]",
                cfg.h_max
            )));
        }
        if !(l >= cfg.l_min && l.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "L = {l} must be at least {}",
                cfg.l_min
            )));
        }
        let cells = 2.0 * l / h;
        if (cells - cells.round()).abs() > 1e-9 * cells {
            return Err(Error::InvalidArgument(format!(
                "2L/h = {cells} must be an integer"
            )));
        }
        if !(cfg.lambda2_cap > 0.0) {
            return Err(Error::InvalidArgument(
                "lambda2_cap must be positive".into(),
            ));
        }
        let n = cells.round() as usize - 1;
        if n > cfg.dim_cap {
            return Err(Error::ResourceLimit(format!(
                "dimension {n} exceeds the cap {}",
                cfg.dim_cap
            )));
        }
        model.validate()?;
        let (xs, d, e) = tridiagonal(model, l, h);
        let path = cfg.path.unwrap_or(if n <= cfg.full_solve_max {
            SolvePath::Full
        } else {
            SolvePath::Window
        });
        let thr = cfg.zero.value(h);
        let keep = |v: f64| v > thr && v <= cfg.lambda2_cap;
        let (eigenvalues, mode_lambda2, raw) = match path {
            SolvePath::Full => {
                let (vals, vecs) = ql_eigen(&d, &e)?;
                let (lam2, raw): (Vec<f64>, Vec<Vec<f64>>) = vals
                    .iter()
                    .zip(vecs)
                    .filter(|(v, _)| keep(**v))
                    .map(|(v, z)| (*v, z))
                    .unzip();
                (vals, lam2, raw)
            }
            SolvePath::Window => {
                let vals = ql_eigenvalues(&d, &e)?;
                let lam2: Vec<f64> = vals.iter().copied().filter(|v| keep(*v)).collect();
                let norm = 4.0 / (h * h) + d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let raw = inverse_iteration(&d, &e, &lam2, 1e-3 * norm);
                (vals, lam2, raw)
            }
        };
        // eigenvalue count below 0 by QL and by Sturm must agree
        let negative_count = eigenvalues.partition_point(|v| *v < 0.0);
        let sturm = sturm_count(&d, &e, 0.0);
        if sturm != negative_count {
            return Err(Error::NoConvergence(format!(
                "QL gives {negative_count} negative eigenvalues, Sturm count {sturm}"
            )));
        }
        let scale = 1.0 / h.sqrt();
        let modes = raw
            .into_iter()
            .map(|mut v| {
                // sign fixed by the largest component, for reproducible output
                let big = v
                    .iter()
                    .fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
                let s = scale.copysign(big);
                v.iter_mut().for_each(|x| *x *= s);
                v
            })
            .collect();
        let near_zero: Vec<f64> = eigenvalues
            .iter()
            .copied()
            .filter(|v| v.abs() <= thr)
            .collect();
        let top = mode_lambda2.last().copied().unwrap_or(cfg.lambda2_cap);
        let lambda2_max_used = top.min(cfg.lambda2_cap);
        Ok(DiscreteOracle {
            l,
            h,
            xs,
            eigenvalues,
            zero_threshold: thr,
            near_zero,
            negative_count,
            lambda2_max_used,
            t_safe: l / (4.0 * lambda2_max_used.sqrt()),
            path,
            mode_lambda2,
            modes,
        })
    }

    pub fn summary(&self) -> OracleSummary {
        OracleSummary {
            l: self.l,
            h: self.h,
            dimension: self.xs.len(),
            lowest_eigenvalue: self.eigenvalues[0],
            negative_count: self.negative_count,
            near_zero_count: self.near_zero.len(),
            zero_threshold: self.zero_threshold,
            modes_used: self.modes.len(),
            lambda2_max_used: self.lambda2_max_used,
            t_safe: self.t_safe,
            path: self.path,
        }
    }

    /// ψ_k on the nodes.
    pub fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k]
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Linear interpolation of every retained ψ_k at x (zero at ±L).
    fn modes_at(&self, x: f64) -> Result<Vec<f64>> {
        if !(x > -self.l && x < self.l) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} outside the box (-{}, {})",
                self.l, self.l
            )));
        }
        let s = (x + self.l) / self.h;
        let j = s.floor() as usize;
        let w = s - j as f64;
        let node = |v: &[f64], j: usize| if j == 0 || j > v.len() { 0.0 } else { v[j - 1] };
        Ok(self
            .modes
            .iter()
            .map(|v| {
                if w == 0.0 {
                    node(v, j)
                } else {
                    (1.0 - w) * node(v, j) + w * node(v, j + 1)
                }
            })
            .collect())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("t = {t} must be finite")));
        }
        if t.abs() > self.t_safe {
            return Err(Error::HorizonExceeded {
                t,
                t_safe: self.t_safe,
            });
        }
        Ok(())
    }

    fn weights(&self, t: f64, window: Option<f64>) -> Vec<C64> {
        self.mode_lambda2
            .iter()
            .map(|&l2| {
                C64::from_polar(
                    window.map_or(1.0, |w| smooth_cutoff(l2.sqrt() / w)),
                    -t * l2,
                )
            })
            .collect()
    }

    /// Σ_{λ²_k > thr} e^{-itλ²_k} ψ_k(x) ψ_k(x′).
    pub fn propagator_ref(&self, t: f64, x: f64, xp: f64) -> Result<C64> {
        self.propagator_ref_windowed(t, x, xp, None)
    }

    /// Same sum with the extra weight χ(λ_k / Λ_w).
    pub fn propagator_ref_windowed(
        &self,
        t: f64,
        x: f64,
        xp: f64,
        window: Option<f64>,
    ) -> Result<C64> {
        self.check_time(t)?;
        let (a, b) = (self.modes_at(x)?, self.modes_at(xp)?);
        let w = self.weights(t, window);
        Ok(w.iter()
            .zip(a.iter().zip(&b))
            .map(|(w, (a, b))| w * (a * b))
            .sum())
    }

    /// Reference kernel on the product grid; rows follow `xs`.
    pub fn propagator_grid(
        &self,
        t: f64,
        xs: &[f64],
        xps: &[f64],
        window: Option<f64>,
    ) -> Result<Vec<Vec<C64>>> {
        self.check_time(t)?;
        let w = self.weights(t, window);
        let cols: Vec<Vec<f64>> = xps
            .iter()
            .map(|&x| self.modes_at(x))
            .collect::<Result<_>>()?;
        xs.par_iter()
            .map(|&x| {
                let a: Vec<C64> = self
                    .modes_at(x)?
                    .iter()
                    .zip(&w)
                    .map(|(a, w)| w * a)
                    .collect();
                Ok(cols
                    .iter()
                    .map(|b| a.iter().zip(b).map(|(a, b)| a * b).sum())
                    .collect())
            })
            .collect()
    }

    /// (e^{-itP} E f)(x_j) for f on the nodes.
    pub fn apply(&self, t: f64, f: &[C64]) -> Result<Vec<C64>> {
        self.check_time(t)?;
        if f.len() != self.xs.len() {
            return Err(Error::InvalidArgument(
                "f must have one value per node".into(),
            ));
        }
        let w = self.weights(t, None);
        let mut out = vec![C64::new(0.0, 0.0); f.len()];
        for (v, w) in self.modes.iter().zip(&w) {
            let c: C64 = v.iter().zip(f).map(|(a, b)| b * *a).sum::<C64>() * self.h * w;
            out.iter_mut().zip(v).for_each(|(o, a)| *o += c * *a);
        }
        Ok(out)
    }

    /// h-weighted L² norm on the nodes.
    pub fn norm(&self, f: &[C64]) -> f64 {
        (self.h * f.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Distance between the eigenvalues bracketing λ².
    pub fn level_spacing(&self, lambda2: f64) -> f64 {
        let v = &self.eigenvalues;
        let i = v.partition_point(|x| *x <= lambda2).clamp(1, v.len() - 1);
        v[i] - v[i - 1]
    }

    /// 2λ Σ_k g_η(λ²_k - λ²) ψ_k(x) ψ_k(x′), g_η the unit Gaussian of width η.
    pub fn density_ref(&self, lambda: f64, eta: f64, x: f64, xp: f64) -> Result<f64> {
        if !(lambda > 0.0 && eta > 0.0) {
            return Err(Error::InvalidArgument(
                "lambda and eta must be positive".into(),
            ));
        }
        let l2 = lambda * lambda;
        let spacing = self.level_spacing(l2);
        if eta < 3.0 * spacing {
            return Err(Error::BroadeningTooNarrow { eta, spacing });
        }
        if l2 + 8.0 * eta > self.lambda2_max_used || l2 - 8.0 * eta < self.zero_threshold {
            return Err(Error::InvalidArgument(format!(
                "Gaussian of width {eta} at λ² = {l2} leaves the retained window ({}, {}]",
                self.zero_threshold, self.lambda2_max_used
            )));
        }
        let (a, b) = (self.modes_at(x)?, self.modes_at(xp)?);
        let c = 1.0 / (eta * (2.0 * std::f64::consts::PI).sqrt());
        let s: f64 = self
            .mode_lambda2
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(&m, (a, b))| c * (-0.5 * ((m - l2) / eta).powi(2)).exp() * (a * b))
            .sum();
        Ok(2.0 * lambda * s)
    }
}

/// ∫_lo^hi a(λ) e^{iΦ(λ)} dλ by composite 16-point Gauss-Legendre, doubling
/// the panel count until two successive doublings agree within `tol`.
pub fn brute_oscillatory<A, P>(
    a: A,
    phi: P,
    lo: f64,
    hi: f64,
    tol: f64,
    max_panels: usize,
) -> Result<(C64, f64)>
where
    A: Fn(f64) -> C64 + Sync,
    P: Fn(f64) -> f64 + Sync,
{
    if !(lo.is_finite() && hi.is_finite() && hi > lo && tol > 0.0) {
        return Err(Error::InvalidArgument(
            "brute_oscillatory needs a finite interval and tol > 0".into(),
        ));
    }
    let (nodes, weights) = gl16();
    let rule = |n: usize| -> C64 {
        let w = (hi - lo) / n as f64;
        (0..n)
            .into_par_iter()
            .map(|p| {
                let mid = lo + (p as f64 + 0.5) * w;
                nodes
                    .iter()
                    .zip(weights)
                    .map(|(z, q)| {
                        let x = mid + 0.5 * w * z;
                        a(x) * C64::from_polar(0.5 * w * q, phi(x))
                    })
                    .sum::<C64>()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    };
    let mut n = 16;
    let mut prev = rule(n);
    let mut agreed = 0;
    while n * 2 <= max_panels {
        n *= 2;
        let cur = rule(n);
        let diff = (cur - prev).norm();
        prev = cur;
        agreed = if diff <= tol { agreed + 1 } else { 0 };
        if agreed == 2 {
            return Ok((cur, diff));
        }
    }
    Err(Error::NoConvergence(format!(
        "brute quadrature not settled at {n} panels"
    )))
}
