//! Smooth cutoffs, phase derivatives, regime classification and validated
//! evaluation of I(a) = ∫_0^∞ a(λ) e^{iΦ(λ)} dλ.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{japanese, PotentialModel};
use crate::quad::{integrate_to_infinity, integrate_vec};

fn g(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// χ(λ) = 1 on |λ| <= 1, 0 on |λ| >= 2, g(2-|λ|) / (g(2-|λ|) + g(|λ|-1)) between,
/// g(t) = exp(-1/t).
pub fn smooth_cutoff(lambda: f64) -> f64 {
    let s = lambda.abs() - 1.0;
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let (a, b) = (g(1.0 - s), g(s));
    a / (a + b)
}

/// χ'(λ).
pub fn smooth_cutoff_d1(lambda: f64) -> f64 {
    let s = lambda.abs() - 1.0;
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let (a, b) = (g(1.0 - s), g(s));
    let da = -a / ((1.0 - s) * (1.0 - s));
    let db = b / (s * s);
    lambda.signum() * (da * b - a * db) / ((a + b) * (a + b))
}

/// sup_s |s χ'(s)|, by dense sampling of the transition layer.
pub fn cutoff_log_derivative_sup() -> f64 {
    (0..=20_000)
        .map(|i| 1.0 + i as f64 / 20_000.0)
        .map(|s| (s * smooth_cutoff_d1(s)).abs())
        .fold(0.0, f64::max)
}

/// Result of the partition a = χ(Mλ) a + (1 - χ(Mλ)) a on a sample grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub lambdas: Vec<f64>,
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
    pub da1: Vec<C64>,
    pub da2: Vec<C64>,
    pub max_identity_error: f64,
    /// Σ_j (‖a_j‖ + ‖λ a_j'‖) / (‖a‖ + ‖λ a'‖).
    pub c_first: f64,
    /// Σ_j (‖a_j/λ‖ + ‖a_j'‖) / (‖a/λ‖ + ‖a'‖), over samples with λ > 0.
    pub c_second: f64,
}

fn sup<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.fold(0.0, f64::max)
}

/// ‖a‖ + ‖λ a'‖ over samples of (λ, a, a').
pub fn norm_first(samples: &[(f64, C64, C64)]) -> f64 {
    sup(samples.iter().map(|s| s.1.norm())) + sup(samples.iter().map(|s| (s.0 * s.2).norm()))
}

/// ‖a/λ‖ + ‖a'‖ over samples with λ > 0.
pub fn norm_second(samples: &[(f64, C64, C64)]) -> f64 {
    let pos = samples.iter().filter(|s| s.0 > 0.0);
    sup(pos.clone().map(|s| s.1.norm() / s.0)) + sup(pos.map(|s| s.2.norm()))
}

/// Splits a sampled amplitude (value and derivative) at scale M.
pub fn split_partition<A: Fn(f64) -> (C64, C64)>(
    lambdas: &[f64],
    a: A,
    big_m: f64,
) -> PartitionCheck {
    let mut out = PartitionCheck {
        lambdas: lambdas.to_vec(),
        a1: vec![],
        a2: vec![],
        da1: vec![],
        da2: vec![],
        max_identity_error: 0.0,
        c_first: 0.0,
        c_second: 0.0,
    };
    let mut s0 = vec![];
    let mut s1 = vec![];
    let mut s2 = vec![];
    for &l in lambdas {
        let (v, dv) = a(l);
        let c = smooth_cutoff(big_m * l);
        let dc = big_m * smooth_cutoff_d1(big_m * l);
        let (v1, v2) = (v * c, v * (1.0 - c));
        let (d1, d2) = (dv * c + v * dc, dv * (1.0 - c) - v * dc);
        out.max_identity_error = out.max_identity_error.max((v1 + v2 - v).norm());
        out.a1.push(v1);
        out.a2.push(v2);
        out.da1.push(d1);
        out.da2.push(d2);
        s0.push((l, v, dv));
        s1.push((l, v1, d1));
        s2.push((l, v2, d2));
    }
    out.c_first = (norm_first(&s1) + norm_first(&s2)) / norm_first(&s0);
    out.c_second = (norm_second(&s1) + norm_second(&s2)) / norm_second(&s0);
    out
}

/// A real phase with derivatives [Φ, Φ', Φ'', Φ'''].
pub trait Phase: Sync {
    fn derivs(&self, lambda: f64) -> [f64; 4];
}

/// Phase given by a closure.
pub struct FnPhase<F: Fn(f64) -> [f64; 4] + Sync>(pub F);

impl<F: Fn(f64) -> [f64; 4] + Sync> Phase for FnPhase<F> {
    fn derivs(&self, lambda: f64) -> [f64; 4] {
        (self.0)(lambda)
    }
}

/// Φ(λ) = -t λ² + σ₁ ∫_0^x √(λ² - V) + σ₂ ∫_0^{x'} √(λ² - V).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub model: PotentialModel,
    pub t: f64,
    pub x: f64,
    pub xp: f64,
    pub sigma: (i8, i8),
}

/// ∫_0^z of a vector integrand, each component rescaled by a sampled magnitude.
fn signed_integral<const N: usize, F: Fn(f64) -> [f64; N]>(f: F, z: f64) -> [f64; N] {
    if z == 0.0 {
        return [0.0; N];
    }
    let (lo, hi) = if z > 0.0 { (0.0, z) } else { (z, 0.0) };
    let mut scale = [1e-300f64; N];
    for i in 0..=8 {
        let v = f(lo + (hi - lo) * i as f64 / 8.0);
        for j in 0..N {
            scale[j] = scale[j].max(v[j].abs() * (hi - lo));
        }
    }
    let r = integrate_vec(
        |s| {
            let v = f(s);
            let mut o = [0.0; N];
            for j in 0..N {
                o[j] = v[j] / scale[j];
            }
            o
        },
        lo,
        hi,
        1e-14,
        4000,
    );
    let sgn = z.signum();
    let mut out = [0.0; N];
    for j in 0..N {
        out[j] = sgn * r.value[j] * scale[j];
    }
    out
}

/// [θ, ∂_λθ, ∂_λ²θ, ∂_λ³θ] for θ(λ) = ∫_base^x √(λ² - V), requiring λ² > V on the path.
pub fn liouville_phase_jet(model: &PotentialModel, base: f64, x: f64, lambda: f64) -> [f64; 4] {
    let l2 = lambda * lambda;
    signed_integral(
        |s| {
            let v = model.eval(base + s);
            let k = (l2 - v).sqrt();
            let k3 = k * k * k;
            [k, lambda / k, -v / k3, 3.0 * lambda * v / (k3 * k * k)]
        },
        x - base,
    )
}

impl PhaseSpec {
    pub fn new(model: &PotentialModel, t: f64, x: f64, xp: f64, sigma: (i8, i8)) -> Result<Self> {
        model.validate()?;
        if sigma.0.abs() != 1 || sigma.1.abs() != 1 {
            return Err(Error::InvalidArgument(format!(
                "sign pair {sigma:?} must be ±1"
            )));
        }
        Ok(PhaseSpec {
            model: *model,
            t,
            x,
            xp,
            sigma,
        })
    }

    /// σ = (+, -): Φ = -tλ² + ∫_{x'}^x √(λ² - V).
    pub fn diagonal(model: &PotentialModel, t: f64, x: f64, xp: f64) -> Result<Self> {
        Self::new(model, t, x, xp, (1, -1))
    }

    /// σ = (+, +).
    pub fn off_diagonal(model: &PotentialModel, t: f64, x: f64, xp: f64) -> Result<Self> {
        Self::new(model, t, x, xp, (1, 1))
    }

    fn combine<const N: usize>(&self, f: impl Fn(f64) -> [f64; N] + Copy) -> [f64; N] {
        let a = signed_integral(f, self.x);
        let b = signed_integral(f, self.xp);
        let (s1, s2) = (self.sigma.0 as f64, self.sigma.1 as f64);
        let mut o = [0.0; N];
        for j in 0..N {
            o[j] = s1 * a[j] + s2 * b[j];
        }
        o
    }

    /// [Φ, Φ', Φ'', Φ'''] at λ > 0.
    pub fn phase_derivatives(&self, lambda: f64) -> Result<[f64; 4]> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        let l2 = lambda * lambda;
        if self.model.is_bump() && l2 <= self.model.sup_v() {
            return Err(Error::WkbUnavailable(format!(
                "λ² = {l2} does not exceed sup V"
            )));
        }
        let m = self.model;
        let s = self.combine(move |s| {
            let v = m.eval(s);
            let k = (l2 - v).sqrt();
            let k3 = k * k * k;
            [k, lambda / k, -v / k3, 3.0 * lambda * v / (k3 * k * k)]
        });
        let t = self.t;
        Ok([
            -t * l2 + s[0],
            -2.0 * t * lambda + s[1],
            -2.0 * t + s[2],
            s[3],
        ])
    }

    /// (M₁, M₂) = |σ₁∫_0^x |V|^{-1/2} + σ₂∫_0^{x'} |V|^{-1/2}| and the same with |V|^{-3/2}.
    pub fn moments(&self) -> (f64, f64) {
        let m = self.model;
        let r = self.combine(move |s| {
            let v = m.eval(s).abs();
            [v.powf(-0.5), v.powf(-1.5)]
        });
        (r[0].abs(), r[1].abs())
    }
}

impl Phase for PhaseSpec {
    fn derivs(&self, lambda: f64) -> [f64; 4] {
        self.phase_derivatives(lambda).unwrap_or([f64::NAN; 4])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    K1_1,
    K1_2,
    K1_3,
    K2,
}

/// Which low-energy estimate applies to t relative to M₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowEnergyCase {
    /// t <= c₂M₁/4 or t >= M₁: non-degenerate.
    NonDegenerate,
    /// c₂M₁/4 <= t <= M₁/2: stationary point λ₀ >= 0.
    StationaryLow,
    /// M₁/2 < t < M₁: cubic zero parameter m < 0.
    CubicZero,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeReport {
    pub lambda: f64,
    pub r: f64,
    pub m1: f64,
    pub m2: f64,
    /// M₂ / (<x>^μ M₁)
    pub m2_over_m1_scaled: f64,
    pub in_k1: bool,
    pub in_k2: bool,
    pub in_k1_1: bool,
    pub in_k1_2: bool,
    pub in_k1_3: bool,
    pub label: Regime,
    pub low_case: LowEnergyCase,
    /// Fitted lower-bound constant of the low-energy integrals at λ = R<x>^{-μ/2}.
    pub c2: f64,
    pub lambda0: Option<f64>,
    /// λ₀ found inside ((x - x')/(12t), (x - x')/t).
    pub lambda0_in_bracket: bool,
    pub m_cubic: Option<f64>,
}

/// Zero of f(λ) = Φ'(λ)/λ on [lo, hi] by bisection, if f changes sign there.
pub fn stationary_point(spec: &PhaseSpec, lo: f64, hi: f64) -> Result<Option<f64>> {
    let f = |l: f64| -> Result<f64> {
        if l == 0.0 {
            let (m1, _) = spec.moments();
            // f(0) = -2t + M₁ for the diagonal phase
            return Ok(-2.0 * spec.t + spec.sigma.0 as f64 * m1.copysign(spec.x - spec.xp));
        }
        Ok(spec.phase_derivatives(l)?[1] / l)
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if c <= a || c >= b || b - a <= 1e-14 * b.abs().max(1e-300) {
            break;
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(Some(c));
        }
        if fc.signum() == fa.signum() {
            a = c;
        } else {
            b = c;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Regions and low-energy data for the diagonal phase; requires t > 0, x >= x', |x| >= |x'|.
pub fn regime_classify(spec: &PhaseSpec, lambda: f64, r: f64) -> Result<RegimeReport> {
    let (t, x, xp) = (spec.t, spec.x, spec.xp);
    if !(t > 0.0 && x >= xp && x.abs() >= xp.abs()) {
        return Err(Error::InvalidArgument(format!(
            "regime classification needs t > 0, x >= x', |x| >= |x'| (t = {t}, x = {x}, x' = {xp})"
        )));
    }
    if spec.sigma != (1, -1) {
        return Err(Error::InvalidArgument(
            "regime classification is for the (+,-) phase".into(),
        ));
    }
    let mu = spec.model.mu;
    let edge = r * japanese(x).powf(-mu / 2.0);
    let d = (x - xp).abs();
    let sr = r.sqrt();
    let in_k1 = lambda >= edge;
    let in_k2 = lambda <= edge;
    let in_k1_1 = in_k1 && lambda <= 2.0 * d / (sr * t);
    let in_k1_2 = in_k1 && lambda >= d / (sr * t) && lambda <= 2.0 * sr * d / t;
    let in_k1_3 = in_k1 && lambda >= sr * d / t;
    let label = if lambda < edge {
        Regime::K2
    } else if lambda < d / (sr * t) {
        Regime::K1_1
    } else if lambda > 2.0 * sr * d / t {
        Regime::K1_3
    } else {
        Regime::K1_2
    };
    let (m1, m2) = spec.moments();
    let dv = spec.phase_derivatives(edge)?;
    let c2 = if m1 > 0.0 && m2 > 0.0 {
        let first = (dv[1] + 2.0 * t * edge) / edge / m1;
        let third = (dv[3] / (3.0 * edge)).abs() / m2;
        first.min(third)
    } else {
        1.0
    };
    let low_case = if t <= 0.25 * c2 * m1 || t >= m1 {
        LowEnergyCase::NonDegenerate
    } else if t <= 0.5 * m1 {
        LowEnergyCase::StationaryLow
    } else {
        LowEnergyCase::CubicZero
    };
    let mut lambda0 = None;
    let mut lambda0_in_bracket = false;
    if d > 0.0 {
        let (lo, hi) = (d / (12.0 * t), d / t);
        let k12_nonempty = edge.max(d / (sr * t)) <= 2.0 * sr * d / t;
        if in_k1_2 || k12_nonempty {
            if let Some(l0) = stationary_point(spec, lo, hi)? {
                lambda0 = Some(l0);
                lambda0_in_bracket = true;
            }
        }
        if lambda0.is_none() && low_case == LowEnergyCase::StationaryLow {
            lambda0 = stationary_point(spec, 0.0, hi)?;
        }
    }
    let m_cubic = if t > 0.5 * m1 && m2 > 0.0 {
        Some(2.0 / c2 * (m1 - 2.0 * t) / m2)
    } else {
        None
    };
    Ok(RegimeReport {
        lambda,
        r,
        m1,
        m2,
        m2_over_m1_scaled: m2 / (japanese(x).powf(mu) * m1),
        in_k1,
        in_k2,
        in_k1_1,
        in_k1_2,
        in_k1_3,
        label,
        low_case,
        c2,
        lambda0,
        lambda0_in_bracket,
        m_cubic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscMethod {
    Brute,
    DampedTail,
    IbpTail,
}

/// Amplitude a(λ) on (0, ∞), identically zero beyond `support` when given.
pub struct Amplitude<'a> {
    pub f: &'a (dyn Fn(f64) -> C64 + Sync),
    pub support: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OscOptions {
    pub tol: f64,
    /// Start of the tail region; chosen from the phase when absent.
    pub cut: Option<f64>,
    /// First damping parameter; 1/cut² when absent.
    pub eps0: Option<f64>,
    /// Run a second, independent method and compare.
    pub cross_check: bool,
    pub max_panels: usize,
}

impl Default for OscOptions {
    fn default() -> Self {
        OscOptions {
            tol: 1e-8,
            cut: None,
            eps0: None,
            cross_check: true,
            max_panels: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OscResult {
    pub value: C64,
    pub error: f64,
    pub method: OscMethod,
    pub panels: usize,
    /// Value and error of the cross-check method.
    pub check: Option<(OscMethod, C64, f64)>,
}

struct Partial {
    value: C64,
    error: f64,
    panels: usize,
}

/// ∫_lo^hi a e^{iΦ} w with panels on which the phase moves by at most `phase_step`.
fn panel_quadrature<P: Phase + ?Sized, A: Fn(f64) -> C64>(
    a: &A,
    phase: &P,
    lo: f64,
    hi: f64,
    tol: f64,
    phase_step: f64,
    max_panels: usize,
) -> Result<Partial> {
    let mut l = lo;
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut panels = 0;
    let total = hi - lo;
    if total <= 0.0 {
        return Ok(Partial {
            value,
            error,
            panels,
        });
    }
    let dphi = |s: f64| phase.derivs(s)[1].abs();
    while l < hi {
        let d0 = dphi(l);
        if !d0.is_finite() {
            return Err(Error::NoConvergence(format!(
                "phase is not finite at λ = {l}"
            )));
        }
        let mut w = (hi - l).min(phase_step / d0.max(1e-300));
        for _ in 0..60 {
            let dm = dphi(l + 0.5 * w).max(dphi(l + w)).max(d0);
            if dm * w <= phase_step * (1.0 + 1e-12) {
                break;
            }
            w = (0.5 * w).max(phase_step / dm * 0.999).min(0.999 * w);
        }
        let b = if hi - (l + w) < 1e-12 * total {
            hi
        } else {
            l + w
        };
        let r = integrate_vec(
            |s| {
                let z = a(s) * C64::from_polar(1.0, phase.derivs(s)[0]);
                [z.re, z.im]
            },
            l,
            b,
            tol * (b - l) / total,
            500,
        );
        value += C64::new(r.value[0], r.value[1]);
        error += r.error;
        panels += 1;
        if panels > max_panels {
            return Err(Error::ResourceLimit(format!(
                "more than {max_panels} oscillation panels on [{lo}, {hi}]"
            )));
        }
        l = b;
    }
    Ok(Partial {
        value,
        error,
        panels,
    })
}

/// Start of the tail: beyond twice the last sign change of Φ' found on a log scan, at least 1.
pub fn auto_cut<P: Phase + ?Sized>(phase: &P) -> f64 {
    let mut last = 0.0;
    let n = 280;
    let mut prev: Option<f64> = None;
    for i in 0..=n {
        let l = 10f64.powf(-3.0 + 7.0 * i as f64 / n as f64);
        let d = phase.derivs(l)[1];
        if let Some(p) = prev {
            if p.signum() != d.signum() {
                last = l;
            }
        }
        prev = Some(d);
    }
    (2.0 * last).max(1.0)
}

fn sup_amplitude(a: &Amplitude, hi: f64) -> f64 {
    (0..=200)
        .map(|i| (a.f)(hi * i as f64 / 200.0).norm())
        .fold(0.0, f64::max)
}

fn brute(a: &Amplitude, phase: &dyn Phase, opts: &OscOptions, phase_step: f64) -> Result<Partial> {
    let hi = a.support.ok_or_else(|| {
        Error::InvalidArgument("brute quadrature needs a compactly supported amplitude".into())
    })?;
    panel_quadrature(
        &|s| (a.f)(s),
        phase,
        0.0,
        hi,
        opts.tol * 0.5,
        phase_step,
        opts.max_panels,
    )
}

fn damped(a: &Amplitude, phase: &dyn Phase, opts: &OscOptions) -> Result<Partial> {
    let cut = opts.cut.unwrap_or_else(|| auto_cut(phase));
    let amax = sup_amplitude(a, a.support.unwrap_or(cut).min(4.0 * cut)).max(1.0);
    let mut eps = opts.eps0.unwrap_or(1.0 / (cut * cut));
    let run = |e: f64| -> Result<Partial> {
        let reach = ((amax / (1e-3 * opts.tol)).ln() / e).sqrt();
        let hi = a.support.map_or(reach, |s| s.min(reach));
        panel_quadrature(
            &|s| (a.f)(s) * (-e * s * s).exp(),
            phase,
            0.0,
            hi,
            0.1 * opts.tol,
            PI / 4.0,
            opts.max_panels,
        )
    };
    let mut levels = vec![run(eps)?, run(0.5 * eps)?, run(0.25 * eps)?];
    for attempt in 0..8 {
        let n = levels.len();
        let (i1, i2, i4) = (
            levels[n - 3].value,
            levels[n - 2].value,
            levels[n - 1].value,
        );
        let r3 = (i4 * 8.0 - i2 * 6.0 + i1) / 3.0;
        let r2 = i4 * 2.0 - i2;
        let quad_err: f64 = levels[n - 3..].iter().map(|p| p.error).sum::<f64>() * 6.0;
        let err = (r3 - r2).norm() + quad_err;
        let panels = levels.iter().map(|p| p.panels).sum();
        if err <= opts.tol || attempt == 7 {
            return Ok(Partial {
                value: r3,
                error: err,
                panels,
            });
        }
        eps *= 0.5;
        match run(0.25 * eps) {
            Ok(p) => levels.push(p),
            Err(Error::ResourceLimit(_)) => {
                return Ok(Partial {
                    value: r3,
                    error: err,
                    panels,
                })
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on its last attempt")
}

/// a, a', a'' by central differences.
fn amp_jet(a: &Amplitude, l: f64) -> [C64; 3] {
    let h = 1e-3 * l.max(1e-3);
    let f = |s: f64| (a.f)(s);
    let (m, c, p) = (f(l - h), f(l), f(l + h));
    let (m2, p2) = (f(l - 2.0 * h), f(l + 2.0 * h));
    let d1 = (m2 - m * 8.0 + p * 8.0 - p2) / (12.0 * h);
    let d2 = (-m2 + m * 16.0 - c * 30.0 + p * 16.0 - p2) / (12.0 * h * h);
    [c, d1, d2]
}

/// (g₁ q, g₂ q) with q = 1/(iΦ'), g₁ = (a q)', g₂ = (g₁ q)'.
pub(crate) fn ibp_terms(a: &Amplitude, phase: &dyn Phase, l: f64) -> (C64, C64, C64, f64) {
    let [_, d1, d2, d3] = phase.derivs(l);
    let [a0, a1, a2] = amp_jet(a, l);
    let q = C64::new(0.0, -1.0 / d1);
    let q1 = C64::new(0.0, d2 / (d1 * d1));
    let q2 = C64::new(0.0, d3 / (d1 * d1) - 2.0 * d2 * d2 / (d1 * d1 * d1));
    let g1 = a1 * q + a0 * q1;
    let g1d = a2 * q + a1 * q1 * 2.0 + a0 * q2;
    let g2 = g1d * q + g1 * q1;
    (a0 * q, g1 * q, g2 * q, phase.derivs(l)[0])
}

fn tail_remainder_bound(a: &Amplitude, phase: &dyn Phase, cut: f64) -> f64 {
    // |∫ g₂ e^{iΦ}| <= |g₂q(Λ)| + TV(g₂q) on [Λ, ∞) after one more integration by parts
    let n = 400;
    let mut prev = ibp_terms(a, phase, cut).2;
    let mut bound = prev.norm();
    for i in 1..=n {
        let l = cut * 10f64.powf(4.0 * i as f64 / n as f64);
        let cur = ibp_terms(a, phase, l).2;
        bound += (cur - prev).norm();
        prev = cur;
    }
    bound + prev.norm()
}

fn ibp(a: &Amplitude, phase: &dyn Phase, opts: &OscOptions) -> Result<Partial> {
    let mut cut = opts.cut.unwrap_or_else(|| auto_cut(phase));
    if let Some(s) = a.support {
        if s <= cut {
            return panel_quadrature(
                &|x| (a.f)(x),
                phase,
                0.0,
                s,
                0.5 * opts.tol,
                PI / 4.0,
                opts.max_panels,
            );
        }
    }
    let mut bound = tail_remainder_bound(a, phase, cut);
    if opts.cut.is_none() {
        for _ in 0..30 {
            if bound <= 0.25 * opts.tol {
                break;
            }
            cut *= 2.0;
            bound = tail_remainder_bound(a, phase, cut);
        }
    }
    let core = panel_quadrature(
        &|x| (a.f)(x),
        phase,
        0.0,
        cut,
        0.5 * opts.tol,
        PI / 4.0,
        opts.max_panels,
    )?;
    let (g0q, g1q, _, phi) = ibp_terms(a, phase, cut);
    let tail = (g1q - g0q) * C64::from_polar(1.0, phi);
    Ok(Partial {
        value: core.value + tail,
        error: core.error + bound,
        panels: core.panels,
    })
}

fn run_method(
    a: &Amplitude,
    phase: &dyn Phase,
    method: OscMethod,
    opts: &OscOptions,
    fine: bool,
) -> Result<Partial> {
    match method {
        OscMethod::Brute => brute(a, phase, opts, if fine { PI / 8.0 } else { PI / 4.0 }),
        OscMethod::DampedTail => damped(a, phase, opts),
        OscMethod::IbpTail => ibp(a, phase, opts),
    }
}

/// I(a) by the chosen method. With `cross_check`, a second method (brute at half the
/// phase step for brute; the other tail treatment otherwise) must agree within 10·tol.
pub fn integrate_oscillatory(
    a: &Amplitude,
    phase: &dyn Phase,
    method: OscMethod,
    opts: &OscOptions,
) -> Result<OscResult> {
    let p = run_method(a, phase, method, opts, false)?;
    let mut out = OscResult {
        value: p.value,
        error: p.error,
        method,
        panels: p.panels,
        check: None,
    };
    if opts.cross_check {
        let (m2, fine) = match method {
            OscMethod::Brute => (OscMethod::Brute, true),
            OscMethod::DampedTail => (OscMethod::IbpTail, false),
            OscMethod::IbpTail => (OscMethod::DampedTail, false),
        };
        let q = run_method(a, phase, m2, opts, fine)?;
        let gap = (q.value - p.value).norm();
        out.check = Some((m2, q.value, q.error));
        if gap > 10.0 * opts.tol {
            return Err(Error::NoConvergence(format!(
                "{method:?} = {} and {m2:?} = {} differ by {gap:.3e} > 10 tol",
                p.value, q.value
            )));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lemma {
    /// |I| <= C M^{-1/2} (‖a‖ + ‖λa'‖)
    Stationary,
    /// |I| <= C M^{-1/2} (‖a/λ‖ + ‖a'‖)
    Degenerate,
}

/// One member (a, Φ) of a family at parameter M, with the declared hypothesis constants.
pub struct LemmaInstance {
    pub phase: Box<dyn Fn(f64) -> [f64; 4] + Sync>,
    pub amplitude: Box<dyn Fn(f64) -> (f64, f64) + Sync>,
    pub support: f64,
    pub c1: f64,
    pub c2: f64,
    pub m: f64,
    pub big_m: f64,
}

impl LemmaInstance {
    /// Checks the declared lower bound on |Φ'| and upper bound on |Φ''| on the support.
    pub fn verify(&self, lemma: Lemma) -> Result<()> {
        for i in 1..=4000 {
            let l = self.support * i as f64 / 4000.0;
            if (self.amplitude)(l).0 == 0.0 && (self.amplitude)(l).1 == 0.0 {
                continue;
            }
            let d = (self.phase)(l);
            let (lower, upper) = match lemma {
                Lemma::Stationary => (
                    self.c1 * self.big_m * (l - self.m).abs(),
                    self.c2 * self.big_m,
                ),
                Lemma::Degenerate => (
                    self.c1 * self.big_m * l * (l * l - self.m).abs(),
                    self.c2 * self.big_m * (l * l + self.m.abs()),
                ),
            };
            if d[1].abs() < lower * (1.0 - 1e-9) || d[2].abs() > upper * (1.0 + 1e-9) {
                return Err(Error::HypothesisViolated(format!(
                    "at λ = {l}: |Φ'| = {:.4e} vs {lower:.4e}, |Φ''| = {:.4e} vs {upper:.4e}",
                    d[1].abs(),
                    d[2].abs()
                )));
            }
        }
        Ok(())
    }
}

/// A parameterized family (a_M, Φ_M), the lemma it is checked against, and the
/// decay exponent used to normalize C_emp.
pub struct LemmaFamily {
    pub name: String,
    pub lemma: Lemma,
    pub exponent: f64,
    /// Norm of the amplitude: the lemma's own by default, ‖a‖ + ‖λa'‖ when set.
    pub first_norm: bool,
    pub make: Box<dyn Fn(f64) -> LemmaInstance + Sync>,
}

impl LemmaFamily {
    /// Φ = -(M/2)(λ - m)², a = χ: |Φ'| = M|λ - m|, |Φ''| = M.
    pub fn stationary_quadratic(m: f64) -> Self {
        LemmaFamily {
            name: format!("stationary_quadratic(m={m})"),
            lemma: Lemma::Stationary,
            exponent: 0.5,
            first_norm: true,
            make: Box::new(move |big_m| LemmaInstance {
                phase: Box::new(move |l| {
                    let d = l - m;
                    [-0.5 * big_m * d * d, -big_m * d, -big_m, 0.0]
                }),
                amplitude: Box::new(|l| (smooth_cutoff(l), smooth_cutoff_d1(l))),
                support: 2.0,
                c1: 1.0,
                c2: 1.0,
                m,
                big_m,
            }),
        }
    }

    fn quartic(name: &str, vanishing: bool) -> Self {
        LemmaFamily {
            name: name.to_string(),
            lemma: Lemma::Degenerate,
            exponent: if vanishing { 0.5 } else { 0.25 },
            first_norm: !vanishing,
            make: Box::new(move |big_m| {
                let m = -big_m.powf(-0.5);
                LemmaInstance {
                    phase: Box::new(move |l| {
                        let l2 = l * l;
                        [
                            big_m * (0.25 * l2 * l2 - 0.5 * m * l2),
                            big_m * l * (l2 - m),
                            big_m * (3.0 * l2 - m),
                            6.0 * big_m * l,
                        ]
                    }),
                    amplitude: if vanishing {
                        Box::new(|l| {
                            (
                                l * smooth_cutoff(l),
                                smooth_cutoff(l) + l * smooth_cutoff_d1(l),
                            )
                        })
                    } else {
                        Box::new(|l| (smooth_cutoff(l), smooth_cutoff_d1(l)))
                    },
                    support: 2.0,
                    c1: 1.0,
                    c2: 3.0,
                    m,
                    big_m,
                }
            }),
        }
    }

    /// Φ' = Mλ(λ² - m), m = -M^{-1/2}, a = λχ.
    pub fn degenerate_quartic() -> Self {
        Self::quartic("degenerate_quartic", true)
    }

    /// Same phase with a = χ, which does not vanish at 0; normalized with M^{1/4}.
    pub fn degenerate_nonvanishing() -> Self {
        Self::quartic("degenerate_nonvanishing", false)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LemmaRow {
    pub big_m: f64,
    pub abs_i: f64,
    pub norm: f64,
    pub c_emp: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaTable {
    pub family: String,
    pub lemma: Lemma,
    pub exponent: f64,
    pub rows: Vec<LemmaRow>,
    /// Largest ratio of C_emp between sweep points, per decade of M.
    pub drift_per_decade: f64,
    pub non_uniform: bool,
    /// Least-squares slope of ln|I| against ln M.
    pub fitted_exponent: f64,
}

/// Sweeps M, checks the hypotheses and tabulates C_emp(M) = |I| M^{exponent} / norm.
pub fn lemma_bound_check(family: &LemmaFamily, sweep: &[f64], tol: f64) -> Result<LemmaTable> {
    let rows: Vec<LemmaRow> = sweep
        .par_iter()
        .map(|&big_m| -> Result<LemmaRow> {
            let inst = (family.make)(big_m);
            inst.verify(family.lemma)?;
            let samples: Vec<(f64, C64, C64)> = (0..=4000)
                .map(|i| {
                    let l = inst.support * i as f64 / 4000.0;
                    let (a, da) = (inst.amplitude)(l);
                    (l, C64::new(a, 0.0), C64::new(da, 0.0))
                })
                .collect();
            let norm = if family.first_norm || family.lemma == Lemma::Stationary {
                norm_first(&samples)
            } else {
                norm_second(&samples)
            };
            let amp = |l: f64| C64::new((inst.amplitude)(l).0, 0.0);
            let a = Amplitude {
                f: &amp,
                support: Some(inst.support),
            };
            let phase = FnPhase(|l| (inst.phase)(l));
            let opts = OscOptions {
                tol,
                ..Default::default()
            };
            let r = integrate_oscillatory(&a, &phase, OscMethod::Brute, &opts)?;
            let abs_i = r.value.norm();
            Ok(LemmaRow {
                big_m,
                abs_i,
                norm,
                c_emp: abs_i * big_m.powf(family.exponent) / norm,
                error: r.error,
            })
        })
        .collect::<Result<_>>()?;
    let mut drift = 1.0f64;
    for w in rows.windows(2) {
        let decades = (w[1].big_m / w[0].big_m).log10().abs().max(1e-12);
        let ratio = (w[1].c_emp / w[0].c_emp).max(w[0].c_emp / w[1].c_emp);
        drift = drift.max(ratio.powf(1.0 / decades));
    }
    let n = rows.len() as f64;
    let (sx, sy): (f64, f64) = rows
        .iter()
        .fold((0.0, 0.0), |(a, b), r| (a + r.big_m.ln(), b + r.abs_i.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for r in &rows {
        num += (r.big_m.ln() - mx) * (r.abs_i.ln() - my);
        den += (r.big_m.ln() - mx).powi(2);
    }
    Ok(LemmaTable {
        family: family.name.clone(),
        lemma: family.lemma,
        exponent: family.exponent,
        rows,
        drift_per_decade: drift,
        non_uniform: drift > 2.0,
        fitted_exponent: if den > 0.0 { num / den } else { f64::NAN },
    })
}

/// ∫_0^∞ |f| for a decaying scalar, used for tail-mass diagnostics.
pub fn tail_mass<F: Fn(f64) -> f64>(f: F, from: f64, tol: f64) -> f64 {
    integrate_to_infinity(|s| [f(s).abs()], from, tol).value[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coulomb() -> PotentialModel {
        PotentialModel::coulomb(1.0, 1.0).unwrap()
    }

    fn opts(tol: f64) -> OscOptions {
        OscOptions {
            tol,
            ..Default::default()
        }
    }

    #[test]
    fn cutoff_values() {
        assert_eq!(smooth_cutoff(0.5), 1.0);
        assert_eq!(smooth_cutoff(-1.0), 1.0);
        assert_eq!(smooth_cutoff(3.0), 0.0);
        assert!((smooth_cutoff(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let c = smooth_cutoff(1.0 + i as f64 / 1000.0);
            assert!(c <= prev + 1e-15);
            prev = c;
        }
        for &l in &[1.1, 1.37, 1.5, 1.8, -1.6] {
            let h = 1e-5;
            let fd = (smooth_cutoff(l + h) - smooth_cutoff(l - h)) / (2.0 * h);
            assert!((fd - smooth_cutoff_d1(l)).abs() < 1e-8, "{l}");
        }
    }

    #[test]
    fn partition_constants_independent_of_scale() {
        let grid: Vec<f64> = (0..=20_000).map(|i| 3.0 * i as f64 / 20_000.0).collect();
        let bound = 2.0 * (1.0 + cutoff_log_derivative_sup());
        let a = |l: f64| {
            (
                C64::new(l * smooth_cutoff(l), 0.0),
                C64::new(smooth_cutoff(l) + l * smooth_cutoff_d1(l), 0.0),
            )
        };
        let mut cs = vec![];
        for m in [1.0, 10.0, 100.0] {
            let p = split_partition(&grid, a, m);
            assert!(p.max_identity_error < 1e-15);
            assert!(
                p.c_first <= bound && p.c_second <= bound,
                "M = {m}: {} {}",
                p.c_first,
                p.c_second
            );
            cs.push(p.c_first);
        }
        let (lo, hi) = cs
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), c| (a.min(*c), b.max(*c)));
        assert!(hi / lo < 2.0, "{cs:?}");
    }

    #[test]
    fn constant_potential_phase_closed_form() {
        let m = PotentialModel::constant(0.5).unwrap();
        let v = m.eval(0.0);
        let spec = PhaseSpec::diagonal(&m, 2.0, 3.0, -1.0).unwrap();
        for l in [0.2, 1.0, 3.0] {
            let d = spec.phase_derivatives(l).unwrap();
            let k = (l * l - v).sqrt();
            assert!((d[0] - (-2.0 * l * l + 4.0 * k)).abs() < 1e-12);
            assert!((d[1] - (-4.0 * l + 4.0 * l / k)).abs() < 1e-12);
            assert!((d[2] - (-4.0 - 4.0 * v / k.powi(3))).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_second_derivative_matches_differences() {
        let model = coulomb();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-50.0..50.0);
            let xp: f64 = rng.gen_range(-50.0..50.0);
            let t: f64 = rng.gen_range(0.1..10.0);
            let l: f64 = rng.gen_range(0.1..3.0);
            let spec = PhaseSpec::diagonal(&model, t, x, xp).unwrap();
            let h = 1e-4 * l;
            let fd = (spec.phase_derivatives(l + h).unwrap()[1]
                - spec.phase_derivatives(l - h).unwrap()[1])
                / (2.0 * h);
            let d2 = spec.phase_derivatives(l).unwrap()[2];
            assert!(
                (fd - d2).abs() <= 1e-6 * d2.abs().max(1.0),
                "x={x} x'={xp} t={t} λ={l}: {fd} vs {d2}"
            );
            let fd3 = (spec.phase_derivatives(l + h).unwrap()[2]
                - spec.phase_derivatives(l - h).unwrap()[2])
                / (2.0 * h);
            let d3 = spec.phase_derivatives(l).unwrap()[3];
            assert!((fd3 - d3).abs() <= 1e-5 * d3.abs().max(1.0));
            if x > xp {
                assert!(d3 < 0.0);
            }
        }
    }

    #[test]
    fn low_energy_taylor_coefficients() {
        let spec = PhaseSpec::diagonal(&coulomb(), 0.3, 10.0, 0.0).unwrap();
        let (m1, m2) = spec.moments();
        let phi0 = spec.phase_derivatives(1e-9).unwrap()[0];
        for l in [0.01, 0.02] {
            let dphi = spec.phase_derivatives(l).unwrap()[0] - phi0;
            let quartic = (dphi - (-0.3 + 0.5 * m1) * l * l) / l.powi(4);
            assert!(
                (quartic + m2 / 8.0).abs() < 0.02 * m2 / 8.0,
                "{quartic} vs {}",
                -m2 / 8.0
            );
        }
    }

    #[test]
    fn moment_ratio_scale() {
        for x in [10.0, 100.0, 1e3] {
            let spec = PhaseSpec::diagonal(&coulomb(), 1.0, x, 0.0).unwrap();
            let r = regime_classify(&spec, 1.0, 4.0).unwrap();
            assert!(
                r.m2_over_m1_scaled > 0.3 && r.m2_over_m1_scaled < 1.2,
                "x = {x}: {}",
                r.m2_over_m1_scaled
            );
        }
    }

    #[test]
    fn regions_and_stationary_point() {
        let spec = PhaseSpec::diagonal(&coulomb(), 10.0, 100.0, 0.0).unwrap();
        let edge = 4.0 * japanese(100.0).powf(-0.5);
        let r = regime_classify(&spec, edge, 4.0).unwrap();
        assert!(r.in_k1 && r.in_k2);
        let r = regime_classify(&spec, 5.0, 4.0).unwrap();
        assert_eq!(r.label, Regime::K1_2);
        let l0 = r.lambda0.unwrap();
        assert!(r.lambda0_in_bracket && l0 > 100.0 / 120.0 && l0 < 10.0);
        assert!(spec.phase_derivatives(l0).unwrap()[1].abs() < 1e-8 * 100.0);
        assert_eq!(regime_classify(&spec, 0.1, 4.0).unwrap().label, Regime::K2);
        assert_eq!(
            regime_classify(&spec, 100.0, 4.0).unwrap().label,
            Regime::K1_3
        );
        let bad = PhaseSpec::diagonal(&coulomb(), 10.0, 1.0, 5.0).unwrap();
        assert!(matches!(
            regime_classify(&bad, 1.0, 4.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn low_energy_cases() {
        // M₁ ≈ (2/3)·10^{1.5} ≈ 21
        let base = PhaseSpec::diagonal(&coulomb(), 1.0, 10.0, 0.0).unwrap();
        let (m1, _) = base.moments();
        let at = |t: f64| regime_classify(&PhaseSpec { t, ..base }, 0.5, 4.0).unwrap();
        let r = at(0.4 * m1);
        assert_eq!(r.low_case, LowEnergyCase::StationaryLow);
        let l0 = r.lambda0.unwrap();
        assert!(base.phase_derivatives(l0).map(|d| d[1]).is_ok());
        assert!(
            (PhaseSpec {
                t: 0.4 * m1,
                ..base
            })
            .phase_derivatives(l0)
            .unwrap()[1]
                .abs()
                < 1e-8 * m1
        );
        let r = at(0.75 * m1);
        assert_eq!(r.low_case, LowEnergyCase::CubicZero);
        assert!(r.m_cubic.unwrap() < 0.0);
        assert_eq!(at(2.0 * m1).low_case, LowEnergyCase::NonDegenerate);
    }

    #[test]
    fn bump_below_barrier_has_no_phase() {
        let m = PotentialModel::bump(1.0, 2.0, 2.0, 1.0).unwrap();
        let spec = PhaseSpec::diagonal(&m, 1.0, 3.0, -3.0).unwrap();
        assert!(matches!(
            spec.phase_derivatives(0.5),
            Err(Error::WkbUnavailable(_))
        ));
        assert!(spec.phase_derivatives(2.0).is_ok());
    }

    #[test]
    fn fresnel_constant_is_stable() {
        let amp = |l: f64| C64::new(smooth_cutoff(l), 0.0);
        let a = Amplitude {
            f: &amp,
            support: Some(2.0),
        };
        let exact = C64::from_polar(0.5 * PI.sqrt(), -PI / 4.0);
        for t in [1e2, 1e3, 1e4] {
            let phase = FnPhase(move |l: f64| [-t * l * l, -2.0 * t * l, -2.0 * t, 0.0]);
            let r = integrate_oscillatory(&a, &phase, OscMethod::Brute, &opts(1e-10)).unwrap();
            let c = r.value * t.sqrt();
            assert!((c - exact).norm() < 1e-6, "t = {t}: {c}");
        }
    }

    #[test]
    fn quartic_phase_with_vanishing_amplitude() {
        let amp = |l: f64| C64::new(l * smooth_cutoff(l), 0.0);
        let a = Amplitude {
            f: &amp,
            support: Some(2.0),
        };
        let exact = C64::from_polar(0.25 * PI.sqrt(), PI / 4.0);
        for m in [1e2, 1e3, 1e4] {
            let phase = FnPhase(move |l: f64| {
                [
                    m * l.powi(4),
                    4.0 * m * l.powi(3),
                    12.0 * m * l * l,
                    24.0 * m * l,
                ]
            });
            let r = integrate_oscillatory(&a, &phase, OscMethod::Brute, &opts(1e-10)).unwrap();
            assert!(
                (r.value * m.sqrt() - exact).norm() < 1e-5,
                "M = {m}: {}",
                r.value * m.sqrt()
            );
        }
    }

    #[test]
    fn zero_phase_is_plain_integral() {
        let amp = |l: f64| C64::new(smooth_cutoff(l), 0.0);
        let a = Amplitude {
            f: &amp,
            support: Some(2.0),
        };
        let r = integrate_oscillatory(&a, &FnPhase(|_| [0.0; 4]), OscMethod::Brute, &opts(1e-12))
            .unwrap();
        let (plain, _) = crate::quad::integrate(smooth_cutoff, 0.0, 2.0, 1e-14);
        assert!((r.value - C64::new(plain, 0.0)).norm() < 1e-11);
        // 1 + ∫_1^2 χ = 1.5 by the symmetry χ(1 + s) + χ(2 - s) = 1
        assert!((plain - 1.5).abs() < 1e-12);
    }

    #[test]
    fn tail_methods_match_gaussian_closed_form() {
        let t = 3.0;
        let amp = |l: f64| C64::new((-l * l).exp(), 0.0);
        let a = Amplitude {
            f: &amp,
            support: None,
        };
        let phase = FnPhase(move |l: f64| [-t * l * l, -2.0 * t * l, -2.0 * t, 0.0]);
        let exact = (C64::new(PI, 0.0) / C64::new(1.0, t)).sqrt() * 0.5;
        for m in [OscMethod::DampedTail, OscMethod::IbpTail] {
            let r = integrate_oscillatory(&a, &phase, m, &opts(1e-8)).unwrap();
            assert!(
                (r.value - exact).norm() < 1e-7,
                "{m:?}: {} vs {exact}",
                r.value
            );
            assert!(r.check.is_some());
        }
    }

    #[test]
    fn tail_methods_agree_on_slow_amplitude() {
        let amp = |l: f64| C64::new(1.0 / (1.0 + l * l), 0.0);
        let a = Amplitude {
            f: &amp,
            support: None,
        };
        let phase = FnPhase(|l: f64| [-l * l, -2.0 * l, -2.0, 0.0]);
        let r = integrate_oscillatory(&a, &phase, OscMethod::IbpTail, &opts(1e-7)).unwrap();
        let (_, other, _) = r.check.unwrap();
        assert!((r.value - other).norm() < 1e-6);
    }

    #[test]
    fn brute_needs_support() {
        let amp = |_l: f64| C64::new(1.0, 0.0);
        let a = Amplitude {
            f: &amp,
            support: None,
        };
        let phase = FnPhase(|l: f64| [-l * l, -2.0 * l, -2.0, 0.0]);
        assert!(matches!(
            integrate_oscillatory(&a, &phase, OscMethod::Brute, &opts(1e-8)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn linearity_and_conjugation() {
        let fa = |l: f64| C64::new(smooth_cutoff(l), 0.3 * l * smooth_cutoff(l));
        let fb = |l: f64| C64::new(l * l * smooth_cutoff(l), 0.0);
        let (alpha, beta) = (C64::new(0.7, -1.2), C64::new(-0.4, 0.5));
        let fc = move |l: f64| alpha * fa(l) + beta * fb(l);
        let conj_a = move |l: f64| fa(l).conj();
        let phase = FnPhase(|l: f64| [-20.0 * l * l + 3.0 * l, -40.0 * l + 3.0, -40.0, 0.0]);
        let neg = FnPhase(|l: f64| [20.0 * l * l - 3.0 * l, 40.0 * l - 3.0, 40.0, 0.0]);
        let run = |f: &(dyn Fn(f64) -> C64 + Sync), p: &dyn Phase| {
            integrate_oscillatory(
                &Amplitude {
                    f,
                    support: Some(2.0),
                },
                p,
                OscMethod::Brute,
                &opts(1e-12),
            )
            .unwrap()
            .value
        };
        let (ia, ib, ic) = (run(&fa, &phase), run(&fb, &phase), run(&fc, &phase));
        assert!((ic - (alpha * ia + beta * ib)).norm() < 1e-10);
        assert!((run(&conj_a, &neg) - ia.conj()).norm() < 1e-10);
    }

    #[test]
    fn lemma_tables() {
        let sweep = [1e1, 1e2, 1e3, 1e4];
        let st = lemma_bound_check(&LemmaFamily::stationary_quadratic(1.0), &sweep, 1e-11).unwrap();
        assert!(!st.non_uniform, "{st:?}");
        assert!(
            (st.fitted_exponent + 0.5).abs() < 0.05,
            "{}",
            st.fitted_exponent
        );
        let dq = lemma_bound_check(&LemmaFamily::degenerate_quartic(), &sweep, 1e-11).unwrap();
        assert!(!dq.non_uniform, "{dq:?}");
        assert!(
            (dq.fitted_exponent + 0.5).abs() < 0.1,
            "{}",
            dq.fitted_exponent
        );
        let nv = lemma_bound_check(&LemmaFamily::degenerate_nonvanishing(), &sweep, 1e-11).unwrap();
        assert!(
            (nv.fitted_exponent + 0.25).abs() < 0.05,
            "{}",
            nv.fitted_exponent
        );
        assert!(!nv.non_uniform);
    }

    #[test]
    fn violated_hypothesis_is_reported() {
        let mut fam = LemmaFamily::stationary_quadratic(1.0);
        fam.make = Box::new(|big_m| {
            let mut inst = (LemmaFamily::stationary_quadratic(1.0).make)(big_m);
            inst.c1 = 2.0;
            inst
        });
        assert!(matches!(
            lemma_bound_check(&fam, &[10.0], 1e-10),
            Err(Error::HypothesisViolated(_))
        ));
    }
}
