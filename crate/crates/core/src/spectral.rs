//! Outgoing/incoming resolvent kernels and the spectral density
//! Ẽ(λ, x, x') = 2λ (R(λ² + i0) - R(λ² - i0)) / (2πi), from Jost solutions and in
//! WKB-decomposed form Σ b_{σ₁σ₂} e^{i S_{σ₁σ₂}}.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::{JostConfig, JostPair, ScatteringData};
use crate::potential::{japanese, PotentialModel};
use crate::quad::gl16;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolventSign {
    Outgoing,
    Incoming,
}

/// Which Jost product the WKB amplitudes are built from: u₊(x) u₋(x') (used for
/// x >= x') or u₋(x) u₊(x') (used for x < x').
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    PlusMinus,
    MinusPlus,
}

impl Branch {
    pub fn for_points(x: f64, xp: f64) -> Self {
        if x >= xp {
            Branch::PlusMinus
        } else {
            Branch::MinusPlus
        }
    }
}

/// Amplitudes and phases of the four WKB terms, ordered (++, +-, -+, --).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WkbComponents {
    pub b: [C64; 4],
    pub s: [f64; 4],
    pub branch: Branch,
}

pub const SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

impl WkbComponents {
    pub fn sum(&self) -> C64 {
        self.b
            .iter()
            .zip(&self.s)
            .map(|(b, s)| b * C64::from_polar(1.0, *s))
            .sum()
    }
}

/// Jost pair and scattering data at one λ.
#[derive(Debug, Clone)]
pub struct SpectralDensityEvaluator {
    pub model: PotentialModel,
    pub lambda: f64,
    pub pair: JostPair,
    pub scattering: ScatteringData,
}

impl SpectralDensityEvaluator {
    /// Evaluator valid for |x|, |x'| <= x_span.
    pub fn new(model: &PotentialModel, lambda: f64, x_span: f64, cfg: &JostConfig) -> Result<Self> {
        let pair = JostPair::build(model, lambda, x_span, &[], cfg)?;
        let scattering = pair.scattering()?;
        Ok(SpectralDensityEvaluator {
            model: *model,
            lambda,
            pair,
            scattering,
        })
    }

    pub fn wr(&self) -> C64 {
        self.scattering.wr
    }

    /// R(λ² ± i0)(x, x').
    pub fn resolvent_kernel(&self, sign: ResolventSign, x: f64, xp: f64) -> Result<C64> {
        match sign {
            ResolventSign::Outgoing => {
                let (hi, lo) = if x >= xp { (x, xp) } else { (xp, x) };
                let up = self.pair.plus.jost_u(hi)?.0;
                let um = self.pair.minus.jost_u(lo)?.0;
                Ok(up * um / self.wr())
            }
            ResolventSign::Incoming => Ok(self
                .resolvent_kernel(ResolventSign::Outgoing, xp, x)?
                .conj()),
        }
    }

    /// Ẽ(λ, x, x') using the u₊(x)u₋(x') formula for x >= x' and the mirrored one otherwise.
    pub fn density(&self, x: f64, xp: f64) -> Result<f64> {
        Ok(self.density_branch(Branch::for_points(x, xp), x, xp)?.re)
    }

    /// Complex value of one branch formula; the imaginary part is round-off.
    pub fn density_branch(&self, branch: Branch, x: f64, xp: f64) -> Result<C64> {
        let (p, m) = match branch {
            Branch::PlusMinus => (self.pair.plus.jost_u(x)?.0, self.pair.minus.jost_u(xp)?.0),
            Branch::MinusPlus => (self.pair.minus.jost_u(x)?.0, self.pair.plus.jost_u(xp)?.0),
        };
        let wr = self.wr();
        let q = p * m / wr - (p * m).conj() / wr.conj();
        Ok(q * self.lambda / (PI * I))
    }

    /// 2λ (R₊ - R₋) / (2πi) from the two resolvent kernels.
    pub fn density_via_resolvents(&self, x: f64, xp: f64) -> Result<C64> {
        let rp = self.resolvent_kernel(ResolventSign::Outgoing, x, xp)?;
        let rm = self.resolvent_kernel(ResolventSign::Incoming, x, xp)?;
        Ok((rp - rm) * self.lambda / (PI * I))
    }

    /// (2λ / π|Wr|²)(u₊(x) conj u₊(x') + u₋(x) conj u₋(x')).
    pub fn density_abs_wr(&self, x: f64, xp: f64) -> Result<C64> {
        let (p, pp) = (self.pair.plus.jost_u(x)?.0, self.pair.plus.jost_u(xp)?.0);
        let (m, mp) = (self.pair.minus.jost_u(x)?.0, self.pair.minus.jost_u(xp)?.0);
        Ok((p * pp.conj() + m * mp.conj()) * (2.0 * self.lambda / (PI * self.wr().norm_sqr())))
    }

    fn wkb_available(&self) -> Result<()> {
        if self.model.is_bump() && self.lambda < self.model.c0() {
            return Err(Error::WkbUnavailable(format!(
                "bump profile: WKB form needs λ >= C0 = {}, got {}",
                self.model.c0(),
                self.lambda
            )));
        }
        Ok(())
    }

    /// WKB components for the branch selected by the ordering of x and x'.
    pub fn wkb_components(&self, x: f64, xp: f64) -> Result<WkbComponents> {
        self.wkb_components_branch(Branch::for_points(x, xp), x, xp)
    }

    pub fn wkb_components_branch(&self, branch: Branch, x: f64, xp: f64) -> Result<WkbComponents> {
        self.wkb_available()?;
        let (first, second) = match branch {
            Branch::PlusMinus => (&self.pair.plus, &self.pair.minus),
            Branch::MinusPlus => (&self.pair.minus, &self.pair.plus),
        };
        // index 0 is the e^{+iy} amplitude, 1 the e^{-iy} one
        let (f0, f1) = first.amplitudes(x)?;
        let (g0, g1) = second.amplitudes(xp)?;
        let f = [f0, f1];
        let g = [g0, g1];
        let (y, yp) = (self.pair.plus.phase(x)?, self.pair.plus.phase(xp)?);
        let l2 = self.lambda * self.lambda;
        let pref =
            self.lambda * ((l2 - self.model.eval(x)) * (l2 - self.model.eval(xp))).powf(-0.25);
        let wr = self.wr();
        let mut b = [C64::new(0.0, 0.0); 4];
        let mut s = [0.0; 4];
        for (n, (s1, s2)) in SIGNS.iter().enumerate() {
            let i1 = if *s1 > 0.0 { 0 } else { 1 };
            let i2 = if *s2 > 0.0 { 0 } else { 1 };
            let direct = f[i1] * g[i2] / wr;
            let mirrored = (f[1 - i1] * g[1 - i2]).conj() / wr.conj();
            b[n] = (-direct + mirrored) * (I / PI) * pref;
            s[n] = s1 * y + s2 * yp;
        }
        Ok(WkbComponents { b, s, branch })
    }
}

/// Evaluators for several λ, built in parallel; order follows `lambdas`.
pub fn evaluators(
    model: &PotentialModel,
    lambdas: &[f64],
    x_span: f64,
    cfg: &JostConfig,
) -> Result<Vec<SpectralDensityEvaluator>> {
    lambdas
        .par_iter()
        .map(|&l| SpectralDensityEvaluator::new(model, l, x_span, cfg))
        .collect()
}

/// Fitted constants for the amplitude bounds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AmplitudeFit {
    /// sup |b_{σ₁σ₂}| / min(λ <x>^{μ/4} <x'>^{μ/4}, 1) over all samples and terms.
    pub c_amplitude: f64,
    /// sup (|b₊₊| + |b₋₋|) λ² / max(|x|^{-2}, |x'|^{-2}) over samples with x > 0 > x'.
    pub c_off_diagonal: f64,
}

/// Fits the two amplitude constants on a sample grid.
pub fn fit_amplitude_bounds(
    model: &PotentialModel,
    lambdas: &[f64],
    xs: &[f64],
    cfg: &JostConfig,
) -> Result<AmplitudeFit> {
    let span = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let evs = evaluators(model, lambdas, span, cfg)?;
    let mu = model.mu;
    let mut c_amp = 0.0f64;
    let mut c_off = 0.0f64;
    for ev in &evs {
        let l = ev.lambda;
        for &x in xs {
            for &xp in xs {
                let w = ev.wkb_components_branch(Branch::PlusMinus, x, xp)?;
                let envelope = (l * (japanese(x) * japanese(xp)).powf(mu / 4.0)).min(1.0);
                for b in &w.b {
                    c_amp = c_amp.max(b.norm() / envelope);
                }
                if x > 0.0 && xp < 0.0 {
                    let decay = x.powi(-2).max(xp.powi(-2));
                    c_off = c_off.max((w.b[0].norm() + w.b[3].norm()) * l * l / decay);
                }
            }
        }
    }
    Ok(AmplitudeFit {
        c_amplitude: c_amp,
        c_off_diagonal: c_off,
    })
}

/// ∫∫ φ(x) Ẽ(λ, x, x') φ(x') dx dx' on [a, b]² with `panels` Gauss-Legendre panels per axis.
pub fn quadratic_form<F: Fn(f64) -> f64>(
    ev: &SpectralDensityEvaluator,
    phi: F,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<f64> {
    let (gx, gw) = gl16();
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * gx.len());
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (t, w) in gx.iter().zip(gw) {
            let x = c + 0.5 * h * t;
            nodes.push((x, 0.5 * h * w * phi(x)));
        }
    }
    let mut total = 0.0;
    for &(x, wx) in &nodes {
        for &(xp, wxp) in &nodes {
            total += wx * wxp * ev.density(x, xp)?;
        }
    }
    Ok(total)
}

/// (P - λ²) applied to the outgoing kernel column x' by the 3-point stencil at
/// x on a grid of step h.
pub fn discrete_delta(ev: &SpectralDensityEvaluator, x: f64, xp: f64, h: f64) -> Result<C64> {
    let g = |s: f64| ev.resolvent_kernel(ResolventSign::Outgoing, s, xp);
    let l2 = ev.lambda * ev.lambda;
    let lap = (g(x + h)? - g(x)? * 2.0 + g(x - h)?) / (h * h);
    Ok(-lap + g(x)? * (ev.model.eval(x) - l2))
}
