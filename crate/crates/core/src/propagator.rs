//! The kernel K(t, x, x') = ∫_0^∞ e^{-itλ²} Ẽ(λ, x, x') dλ and decay scans.
//!
//! Jost data is sampled once on a coarse logarithmic λ grid. Each u_±(x, ·) is
//! stored as smooth amplitudes times e^{±iθ(x, λ)} and splined in ln λ, so the
//! fine oscillatory λ quadrature only costs spline evaluations. Beyond the cut Λ
//! the four phase components are integrated by parts twice.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::{Direction, JostConfig, JostPair, JostSolution, PhaseConvention};
use crate::oscillatory::{ibp_terms, liouville_phase_jet, smooth_cutoff, Amplitude, FnPhase};
use crate::potential::PotentialModel;
use crate::quad::gl16;
use crate::spectral::SpectralDensityEvaluator;
use crate::spline::{Knots, Spline, Weights};

const FRAC_1_PI: f64 = std::f64::consts::FRAC_1_PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub jost: JostConfig,
    /// Smallest coarse λ; amplitudes are held constant below it.
    pub lambda_min: f64,
    pub ln_step_min: f64,
    pub ln_step_max: f64,
    /// Coarse ln-step so that 2 X λ Δ(ln λ) stays below this phase (X the largest |x|).
    pub knot_phase: f64,
    /// Above this λ the amplitudes are treated as slowly varying (ln_step_max).
    pub smooth_above: f64,
    /// Largest phase change of one fine Gauss-Legendre panel.
    pub panel_phase: f64,
    pub panel_max: f64,
    /// Λ >= tail_factor (|x| + |x'|) / (2|t|) + 1 keeps stationary points out of the tail.
    pub tail_factor: f64,
    /// K₁/K₂ boundary constant R, reported in metadata.
    pub r_regime: f64,
    /// Smooth energy window χ(λ/Λ_w) applied to the integrand (no tail then).
    pub window: Option<f64>,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            jost: JostConfig::default(),
            lambda_min: 1e-4,
            ln_step_min: 0.005,
            ln_step_max: 0.02,
            knot_phase: 2.0,
            smooth_above: 8.0,
            panel_phase: 1.5,
            panel_max: 0.1,
            tail_factor: 1.5,
            r_regime: 32.0,
            window: None,
        }
    }
}

/// Λ = max(4, 10/√|t|, f (|x| + |x'|)/(2|t|) + 1).
pub fn lambda_cut(t: f64, x: f64, xp: f64, cfg: &PropagatorConfig) -> f64 {
    let at = t.abs();
    let c = 4f64
        .max(10.0 / at.sqrt())
        .max(cfg.tail_factor * (x.abs() + xp.abs()) / (2.0 * at) + 1.0);
    match cfg.window {
        Some(w) => c.min(2.0 * w),
        None => c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Anchor {
    /// u = f₊ e^{iθ} + f₋ e^{-iθ}, θ = ∫_base^x √(λ² - V)
    Phase { base: f64 },
    /// Inside a bump core: u₊ e^{-iλ(x - R0)} and u₋ e^{iλ(x + R0)} are stored.
    Core { r0: f64 },
}

struct Table {
    knots: Knots,
    /// per x: [Re, Im] of f_{+,+}, f_{+,-}, f_{-,+}, f_{-,-}, then θ - λ(x - base)
    per_x: Vec<Spline<9>>,
    inv_wr: Spline<2>,
}

/// Reconstructed u₊(x), u₋(x) at one λ.
#[derive(Debug, Clone, Copy)]
struct NodeU {
    plus: C64,
    minus: C64,
}

/// One computed kernel entry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelEntry {
    pub x: f64,
    pub xp: f64,
    pub value: C64,
    pub error: f64,
    /// Λ actually used (rounded up to a panel edge).
    pub lambda_cut: f64,
    pub body: C64,
    pub tail: C64,
    pub tail_bound: f64,
    pub interp_error: f64,
}

/// Coarse data of one phase convention on a λ range.
struct Rep {
    convention: PhaseConvention,
    anchors: Vec<Anchor>,
    full: Table,
    half: Table,
    /// largest |x - base| (+ the core crossing for split phases)
    x_ext: f64,
}

/// Coarse spectral data for a fixed set of points, reusable across t.
pub struct PropagatorEngine {
    pub model: PotentialModel,
    pub cfg: PropagatorConfig,
    pub xs: Vec<f64>,
    /// Coarse λ of every representation, in order.
    pub lambdas: Vec<f64>,
    /// Split phases below, centred phases above (bump profiles only).
    switch: Option<f64>,
    reps: Vec<Rep>,
}

fn coarse_grid(cfg: &PropagatorConfig, lo: f64, hi: f64, x_ext: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let mut u = lo.ln();
    while u.exp() < hi {
        let l = u.exp();
        let step = if l > cfg.smooth_above {
            cfg.ln_step_max
        } else {
            (cfg.knot_phase / (2.0 * x_ext * l)).clamp(cfg.ln_step_min, cfg.ln_step_max)
        };
        u += step;
        out.push(u.exp());
    }
    out
}

fn build_pair(
    model: &PotentialModel,
    lambda: f64,
    span: f64,
    conv: PhaseConvention,
    cfg: &JostConfig,
) -> Result<JostPair> {
    let span = span.max(8.0 * (1.0 + model.core_radius()));
    let plus =
        JostSolution::build_with(model, lambda, Direction::Plus, conv, -span, span, &[], cfg)?;
    let minus =
        JostSolution::build_with(model, lambda, Direction::Minus, conv, -span, span, &[], cfg)?;
    Ok(JostPair {
        lambda,
        plus,
        minus,
    })
}

impl Rep {
    fn build(
        model: &PotentialModel,
        xs: &[f64],
        convention: PhaseConvention,
        lo: f64,
        hi: f64,
        cfg: &PropagatorConfig,
    ) -> Result<(Self, Vec<f64>)> {
        let r0 = model.core_radius();
        let anchors: Vec<Anchor> = xs
            .iter()
            .map(|&x| match convention {
                PhaseConvention::Split if x >= r0 => Anchor::Phase { base: r0 },
                PhaseConvention::Split if x <= -r0 => Anchor::Phase { base: -r0 },
                PhaseConvention::Split => Anchor::Core { r0 },
                PhaseConvention::Centered => Anchor::Phase { base: 0.0 },
            })
            .collect();
        let crossing = if convention == PhaseConvention::Split {
            2.0 * r0
        } else {
            0.0
        };
        let x_ext = xs
            .iter()
            .zip(&anchors)
            .map(|(x, a)| match a {
                Anchor::Phase { base } => (x - base).abs() + crossing,
                Anchor::Core { r0 } => x.abs() + r0,
            })
            .fold(1.0f64, f64::max);
        let span = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 1.0;
        let lambdas = coarse_grid(cfg, lo, hi, x_ext);
        let samples: Vec<([f64; 2], Vec<[f64; 9]>)> = lambdas
            .par_iter()
            .map(|&l| -> Result<_> {
                let pair = build_pair(model, l, span, convention, &cfg.jost)?;
                let iw = 1.0 / pair.scattering()?.wr;
                let mut rows = Vec::with_capacity(xs.len());
                for (&x, a) in xs.iter().zip(&anchors) {
                    let (fp, fm, gp, gm, corr) = match *a {
                        Anchor::Phase { base } => {
                            let d = (l * l - model.eval(x)).powf(-0.25);
                            let (pp, pm) = pair.plus.amplitudes(x)?;
                            let (mp, mm) = pair.minus.amplitudes(x)?;
                            let theta = pair.plus.phase(x)?;
                            (pp * d, pm * d, mp * d, mm * d, theta - l * (x - base))
                        }
                        Anchor::Core { r0 } => {
                            let z = C64::new(0.0, 0.0);
                            let up = pair.plus.jost_u(x)?.0 * C64::from_polar(1.0, -l * (x - r0));
                            let um = pair.minus.jost_u(x)?.0 * C64::from_polar(1.0, l * (x + r0));
                            (up, z, z, um, 0.0)
                        }
                    };
                    rows.push([fp.re, fp.im, fm.re, fm.im, gp.re, gp.im, gm.re, gm.im, corr]);
                }
                Ok(([iw.re, iw.im], rows))
            })
            .collect::<Result<_>>()?;
        let make = |idx: &[usize]| -> Table {
            let knots = Knots::new(idx.iter().map(|&i| lambdas[i].ln()).collect());
            let inv: Vec<[f64; 2]> = idx.iter().map(|&i| samples[i].0).collect();
            let per_x = (0..xs.len())
                .map(|k| knots.fit(&idx.iter().map(|&i| samples[i].1[k]).collect::<Vec<_>>()))
                .collect();
            let inv_wr = knots.fit(&inv);
            Table {
                knots,
                per_x,
                inv_wr,
            }
        };
        let all: Vec<usize> = (0..lambdas.len()).collect();
        let mut even: Vec<usize> = (0..lambdas.len()).step_by(2).collect();
        if *even.last().unwrap() != lambdas.len() - 1 {
            even.push(lambdas.len() - 1);
        }
        let rep = Rep {
            convention,
            anchors,
            full: make(&all),
            half: make(&even),
            x_ext,
        };
        Ok((rep, lambdas))
    }

    /// θ of u₊ (`plus`) or u₋ at x from the spline correction.
    fn theta_spline(&self, k: usize, x: f64, plus: bool, lambda: f64, corr: f64) -> f64 {
        match self.anchors[k] {
            Anchor::Phase { base } => lambda * (x - base) + corr,
            Anchor::Core { r0 } => lambda * (x + if plus { -r0 } else { r0 }),
        }
    }

    fn u_at(&self, table: &Table, w: &Weights, k: usize, x: f64, lambda: f64) -> NodeU {
        let v = table.per_x[k].eval(w);
        let ep = C64::from_polar(1.0, self.theta_spline(k, x, true, lambda, v[8]));
        let em = match self.anchors[k] {
            Anchor::Phase { .. } => ep,
            Anchor::Core { .. } => {
                C64::from_polar(1.0, self.theta_spline(k, x, false, lambda, v[8]))
            }
        };
        NodeU {
            plus: C64::new(v[0], v[1]) * ep + C64::new(v[2], v[3]) * ep.conj(),
            minus: C64::new(v[4], v[5]) * em + C64::new(v[6], v[7]) * em.conj(),
        }
    }

    fn inv_wr(table: &Table, w: &Weights) -> C64 {
        let v = table.inv_wr.eval(w);
        C64::new(v[0], v[1])
    }
}

impl PropagatorEngine {
    /// Samples Jost data at every coarse λ up to at least `lambda_max` for the points `xs`.
    pub fn new(
        model: &PotentialModel,
        xs: &[f64],
        lambda_max: f64,
        cfg: &PropagatorConfig,
    ) -> Result<Self> {
        model.validate()?;
        if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "propagator needs a non-empty finite point set".into(),
            ));
        }
        let hi = lambda_max * 1.3;
        let (switch, reps, lambdas) = if model.is_bump() {
            // split phases below the barrier; centred ones above, where the core is cheap to cross
            let sw = (2.0 * model.sup_v().max(0.0).sqrt()).max(model.c0());
            if hi <= sw * 1.1 {
                return Err(Error::InvalidArgument(format!(
                    "lambda_max = {lambda_max} must exceed the phase switch {sw}"
                )));
            }
            let (low, l1) = Rep::build(
                model,
                xs,
                PhaseConvention::Split,
                cfg.lambda_min,
                sw * 1.1,
                cfg,
            )?;
            let (high, l2) = Rep::build(model, xs, PhaseConvention::Centered, sw / 1.1, hi, cfg)?;
            (Some(sw), vec![low, high], [l1, l2].concat())
        } else {
            let (rep, l) = Rep::build(
                model,
                xs,
                PhaseConvention::Centered,
                cfg.lambda_min,
                hi,
                cfg,
            )?;
            (None, vec![rep], l)
        };
        Ok(PropagatorEngine {
            model: *model,
            cfg: *cfg,
            xs: xs.to_vec(),
            lambdas,
            switch,
            reps,
        })
    }

    /// Phase conventions in use, lowest energies first.
    pub fn conventions(&self) -> Vec<PhaseConvention> {
        self.reps.iter().map(|r| r.convention).collect()
    }

    /// Largest λ covered by the coarse data.
    pub fn lambda_end(&self) -> f64 {
        *self.lambdas.last().unwrap()
    }

    fn rep(&self, lambda: f64) -> &Rep {
        match self.switch {
            Some(s) if lambda < s => &self.reps[0],
            _ => self.reps.last().unwrap(),
        }
    }

    /// Spline-reconstructed Ẽ(λ, x_i, x_j).
    pub fn density(&self, lambda: f64, i: usize, j: usize) -> f64 {
        let r = self.rep(lambda);
        let w = r.full.knots.locate(lambda.ln());
        let ui = r.u_at(&r.full, &w, i, self.xs[i], lambda);
        let uj = r.u_at(&r.full, &w, j, self.xs[j], lambda);
        density_from(
            lambda,
            &ui,
            &uj,
            self.xs[i] >= self.xs[j],
            Rep::inv_wr(&r.full, &w),
        )
    }

    /// Amplitudes b_{s₁s₂}(λ) and phases S = s₁θ(x_i) + s₂θ(x_j), order (++, +-, -+, --).
    fn components(&self, lambda: f64, i: usize, j: usize) -> [(C64, f64); 4] {
        let r = self.rep(lambda);
        let w = r.full.knots.locate(lambda.ln());
        let iw = Rep::inv_wr(&r.full, &w);
        let vi = r.full.per_x[i].eval(&w);
        let vj = r.full.per_x[j].eval(&w);
        // x_i >= x_j: u₊ at x_i and u₋ at x_j; mirrored otherwise
        let ord = self.xs[i] >= self.xs[j];
        let th_i = r.theta_spline(i, self.xs[i], ord, lambda, vi[8]);
        let th_j = r.theta_spline(j, self.xs[j], !ord, lambda, vj[8]);
        let (oi, oj) = if ord { (0, 4) } else { (4, 0) };
        let f = [
            C64::new(vi[oi], vi[oi + 1]),
            C64::new(vi[oi + 2], vi[oi + 3]),
        ];
        let g = [
            C64::new(vj[oj], vj[oj + 1]),
            C64::new(vj[oj + 2], vj[oj + 3]),
        ];
        let coef = C64::new(0.0, -lambda * FRAC_1_PI);
        let mut out = [(C64::new(0.0, 0.0), 0.0); 4];
        for (n, (s1, s2)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)]
            .into_iter()
            .enumerate()
        {
            let b = coef * (f[s1] * g[s2] * iw - (f[1 - s1] * g[1 - s2] * iw).conj());
            let sg = |s: usize| if s == 0 { 1.0 } else { -1.0 };
            out[n] = (b, sg(s1) * th_i + sg(s2) * th_j);
        }
        out
    }

    /// [θ, θ', θ'', θ'''] in λ at x_k, by quadrature.
    fn theta_jet(&self, k: usize, plus: bool, lambda: f64) -> [f64; 4] {
        match self.rep(lambda).anchors[k] {
            Anchor::Phase { base } => liouville_phase_jet(&self.model, base, self.xs[k], lambda),
            Anchor::Core { r0 } => {
                let d = self.xs[k] + if plus { -r0 } else { r0 };
                [lambda * d, d, 0.0, 0.0]
            }
        }
    }

    fn window(&self, lambda: f64) -> f64 {
        self.cfg.window.map_or(1.0, |w| smooth_cutoff(lambda / w))
    }

    /// Twice-integrated-by-parts tail of the four components at Λ, and a bound on the remainder.
    fn tail(&self, t: f64, i: usize, j: usize, cut: f64) -> (C64, f64) {
        let mut value = C64::new(0.0, 0.0);
        let mut bound = 0.0;
        let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
        let end = self.lambda_end() / 1.05;
        for (n, &(s1, s2)) in signs.iter().enumerate() {
            let amp = move |l: f64| self.components(l, i, j)[n].0;
            let phase = FnPhase(move |l: f64| {
                let ord = self.xs[i] >= self.xs[j];
                let a = self.theta_jet(i, ord, l);
                let b = self.theta_jet(j, !ord, l);
                [
                    -t * l * l + s1 * a[0] + s2 * b[0],
                    -2.0 * t * l + s1 * a[1] + s2 * b[1],
                    -2.0 * t + s1 * a[2] + s2 * b[2],
                    s1 * a[3] + s2 * b[3],
                ]
            });
            let a = Amplitude {
                f: &amp,
                support: None,
            };
            let (g0q, g1q, g2q, phi) = ibp_terms(&a, &phase, cut);
            value += (g1q - g0q) * C64::from_polar(1.0, phi);
            // |∫_Λ^∞ g₂ e^{iΦ}| <= |g₂q(Λ)| + TV(g₂q) on [Λ, ∞); sampled to the end of the data
            let samples = 24;
            let mut prev = g2q;
            let mut b = prev.norm();
            for s in 1..=samples {
                let l = cut * (end / cut).max(1.0).powf(s as f64 / samples as f64);
                let cur = ibp_terms(&a, &phase, l).2;
                b += (cur - prev).norm();
                prev = cur;
            }
            bound += b + 2.0 * prev.norm();
        }
        (value, bound)
    }

    /// Kernel entries for index pairs into `xs`.
    pub fn kernel_entries(&self, t: f64, pairs: &[(usize, usize)]) -> Result<Vec<KernelEntry>> {
        if !(t != 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} must be nonzero and finite"
            )));
        }
        if pairs
            .iter()
            .any(|&(i, j)| i >= self.xs.len() || j >= self.xs.len())
        {
            return Err(Error::InvalidArgument(
                "pair index outside the engine's point set".into(),
            ));
        }
        let at = t.abs();
        let cuts: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| lambda_cut(t, self.xs[i], self.xs[j], &self.cfg))
            .collect();
        let cmax = cuts.iter().fold(0.0f64, |m, c| m.max(*c));
        if cmax * 1.05 > self.lambda_end() {
            return Err(Error::InvalidArgument(format!(
                "Λ = {cmax} exceeds the coarse data (λ <= {}); build the engine with a larger lambda_max",
                self.lambda_end()
            )));
        }
        // panel edges, phase change per panel <= panel_phase, one edge at the switch
        let mut edges = vec![0.0];
        let mut l = 0.0;
        while l < cmax {
            let ext = self.rep(l).x_ext;
            let mut w = (self.cfg.panel_phase / (2.0 * at * l + 2.0 * ext)).min(self.cfg.panel_max);
            w = w.min(self.cfg.panel_phase / (2.0 * at * (l + w) + 2.0 * ext));
            if let Some(s) = self.switch {
                if l < s && l + w > s {
                    w = s - l;
                }
            }
            l += w;
            edges.push(l);
        }
        let n_panels = edges.len() - 1;
        let stop: Vec<usize> = cuts
            .iter()
            .map(|c| edges.partition_point(|e| e < c).max(1))
            .collect();
        let mut used = vec![false; self.xs.len()];
        for &(i, j) in pairs {
            used[i] = true;
            used[j] = true;
        }
        let used: Vec<usize> = (0..self.xs.len()).filter(|k| used[*k]).collect();
        let (nodes, weights) = gl16();
        let chunk = 32;
        let chunks: Vec<usize> = (0..n_panels).step_by(chunk).collect();
        let partial: Vec<Vec<(C64, C64)>> = chunks
            .par_iter()
            .map(|&p0| {
                let mut acc = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); pairs.len()];
                let mut uf = vec![
                    NodeU {
                        plus: C64::new(0.0, 0.0),
                        minus: C64::new(0.0, 0.0)
                    };
                    self.xs.len()
                ];
                let mut uh = uf.clone();
                for p in p0..(p0 + chunk).min(n_panels) {
                    let (a, b) = (edges[p], edges[p + 1]);
                    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                    let r = self.rep(mid);
                    for (z, wq) in nodes.iter().zip(weights) {
                        let lam = mid + half * z;
                        let lu = lam.ln();
                        let (wf, wh) = (r.full.knots.locate(lu), r.half.knots.locate(lu));
                        for &k in &used {
                            uf[k] = r.u_at(&r.full, &wf, k, self.xs[k], lam);
                            uh[k] = r.u_at(&r.half, &wh, k, self.xs[k], lam);
                        }
                        let (iwf, iwh) = (Rep::inv_wr(&r.full, &wf), Rep::inv_wr(&r.half, &wh));
                        let e = C64::from_polar(half * wq * self.window(lam), -t * lam * lam);
                        for (n, &(i, j)) in pairs.iter().enumerate() {
                            if p >= stop[n] {
                                continue;
                            }
                            let ord = self.xs[i] >= self.xs[j];
                            acc[n].0 += e * density_from(lam, &uf[i], &uf[j], ord, iwf);
                            acc[n].1 += e * density_from(lam, &uh[i], &uh[j], ord, iwh);
                        }
                    }
                }
                acc
            })
            .collect();
        let tails: Vec<(C64, f64)> = pairs
            .par_iter()
            .zip(&stop)
            .map(|(&(i, j), &s)| {
                if self.cfg.window.is_some() {
                    (C64::new(0.0, 0.0), 0.0)
                } else {
                    self.tail(t, i, j, edges[s])
                }
            })
            .collect();
        let mut out = Vec::with_capacity(pairs.len());
        for (n, &(i, j)) in pairs.iter().enumerate() {
            let (mut body, mut body_h) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for part in &partial {
                body += part[n].0;
                body_h += part[n].1;
            }
            let interp_error = (body - body_h).norm() / 15.0;
            let (tail, tail_bound) = tails[n];
            out.push(KernelEntry {
                x: self.xs[i],
                xp: self.xs[j],
                value: body + tail,
                error: interp_error + tail_bound,
                lambda_cut: edges[stop[n]],
                body,
                tail,
                tail_bound,
                interp_error,
            });
        }
        Ok(out)
    }

    /// K(t, ·, ·) on the product of two index lists.
    pub fn kernel_grid(&self, t: f64, rows: &[usize], cols: &[usize]) -> Result<PropagatorKernel> {
        let pairs: Vec<(usize, usize)> = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .collect();
        let e = self.kernel_entries(t, &pairs)?;
        let nc = cols.len();
        Ok(PropagatorKernel {
            t,
            x: rows.iter().map(|&i| self.xs[i]).collect(),
            xp: cols.iter().map(|&j| self.xs[j]).collect(),
            values: e
                .chunks(nc)
                .map(|r| r.iter().map(|v| v.value).collect())
                .collect(),
            errors: e
                .chunks(nc)
                .map(|r| r.iter().map(|v| v.error).collect())
                .collect(),
            lambda_cut: e.iter().fold(0.0, |m, v| m.max(v.lambda_cut)),
            tail_bound: e.iter().fold(0.0, |m, v| m.max(v.tail_bound)),
        })
    }
}

fn density_from(lambda: f64, ui: &NodeU, uj: &NodeU, ordered: bool, iw: C64) -> f64 {
    let z = if ordered {
        ui.plus * uj.minus
    } else {
        ui.minus * uj.plus
    };
    2.0 * lambda * FRAC_1_PI * (z * iw).im
}

/// K(t) on a grid with per-entry error estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagatorKernel {
    pub t: f64,
    pub x: Vec<f64>,
    pub xp: Vec<f64>,
    pub values: Vec<Vec<C64>>,
    pub errors: Vec<Vec<f64>>,
    pub lambda_cut: f64,
    pub tail_bound: f64,
}

impl PropagatorKernel {
    /// sup |K| with its argument, ties resolved towards the lexicographically first (x, x').
    pub fn sup(&self) -> (f64, f64, f64) {
        let mut best = (-1.0, f64::NAN, f64::NAN);
        let mut order: Vec<(usize, usize)> = (0..self.x.len())
            .flat_map(|i| (0..self.xp.len()).map(move |j| (i, j)))
            .collect();
        order.sort_by(|a, b| {
            (self.x[a.0], self.xp[a.1])
                .partial_cmp(&(self.x[b.0], self.xp[b.1]))
                .unwrap()
        });
        for (i, j) in order {
            let v = self.values[i][j].norm();
            if v > best.0 {
                best = (v, self.x[i], self.xp[j]);
            }
        }
        best
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().flatten().fold(0.0, |m, e| m.max(*e))
    }
}

/// Largest coarse λ needed for a set of times and point extent.
pub fn required_lambda(t_list: &[f64], x_ext: f64, cfg: &PropagatorConfig) -> f64 {
    t_list
        .iter()
        .fold(4.0f64, |m, &t| m.max(lambda_cut(t, x_ext, x_ext, cfg)))
}

/// K(t, x, x') with its error estimate, building a dedicated engine.
pub fn kernel(
    model: &PotentialModel,
    t: f64,
    x: f64,
    xp: f64,
    cfg: &PropagatorConfig,
) -> Result<(C64, f64)> {
    let engine = PropagatorEngine::new(
        model,
        &[x, xp],
        required_lambda(&[t], x.abs().max(xp.abs()), cfg),
        cfg,
    )?;
    let e = engine.kernel_entries(t, &[(0, 1)])?[0];
    Ok((e.value, e.error))
}

/// ∫_0^Λ e^{-itλ²} Ẽ dλ with Ẽ evaluated from fresh Jost solutions at every node
/// (no interpolation), for cross-checking the engine on small examples.
pub fn direct_body(
    model: &PotentialModel,
    t: f64,
    x: f64,
    xp: f64,
    cut: f64,
    cfg: &PropagatorConfig,
) -> Result<C64> {
    let at = t.abs();
    let ext = x.abs().max(xp.abs()).max(1.0);
    let mut edges = vec![0.0];
    let mut l = 0.0;
    while l < cut {
        let w = (cfg.panel_phase / (2.0 * at * (l + 0.1) + 2.0 * ext))
            .min(cfg.panel_max)
            .min(cut - l);
        l += w;
        edges.push(l);
    }
    let (nodes, weights) = gl16();
    let span = ext + 1.0;
    let panels: Vec<C64> = edges
        .windows(2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|e| -> Result<C64> {
            let (mid, half) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
            let mut s = C64::new(0.0, 0.0);
            for (z, w) in nodes.iter().zip(weights) {
                let lam = mid + half * z;
                let ev = SpectralDensityEvaluator::new(model, lam, span, &cfg.jost)?;
                let win = cfg.window.map_or(1.0, |w| smooth_cutoff(lam / w));
                s += C64::from_polar(half * w * win, -t * lam * lam) * ev.density(x, xp)?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(panels.iter().sum())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub sup_abs_k: f64,
    pub sup_abs_k_sqrt_t: f64,
    pub x_star: f64,
    pub xp_star: f64,
    pub err_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayScan {
    pub rows: Vec<DecayRow>,
    /// max over rows of the ratio (either way) of sup|K|√t to the first row's value
    pub ratio_max: f64,
    /// ratio_max <= 3
    pub bounded: bool,
    pub lambda_cut_max: f64,
}

fn union_points(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
    let mut xs: Vec<f64> = a.iter().chain(b).copied().collect();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xs.dedup();
    let idx = |v: &[f64]| {
        v.iter()
            .map(|x| xs.iter().position(|y| y == x).unwrap())
            .collect::<Vec<_>>()
    };
    let (ia, ib) = (idx(a), idx(b));
    (xs, ia, ib)
}

fn check_times(t_list: &[f64]) -> Result<()> {
    if t_list.is_empty()
        || t_list.iter().any(|t| !(*t > 0.0))
        || t_list.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidArgument(
            "t list must be positive and increasing".into(),
        ));
    }
    Ok(())
}

/// sup_{x, x'} |K(t)| · √t over a list of times.
pub fn decay_scan(
    model: &PotentialModel,
    t_list: &[f64],
    x_grid: &[f64],
    xp_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<DecayScan> {
    check_times(t_list)?;
    let (xs, ia, ib) = union_points(x_grid, xp_grid);
    let ext = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let engine = PropagatorEngine::new(model, &xs, required_lambda(t_list, ext, cfg), cfg)?;
    let mut rows = vec![];
    let mut cut_max = 0.0f64;
    for &t in t_list {
        let k = engine.kernel_grid(t, &ia, &ib)?;
        let (s, xa, xb) = k.sup();
        cut_max = cut_max.max(k.lambda_cut);
        rows.push(DecayRow {
            t,
            sup_abs_k: s,
            sup_abs_k_sqrt_t: s * t.sqrt(),
            x_star: xa,
            xp_star: xb,
            err_max: k.max_error(),
        });
    }
    let r0 = rows[0].sup_abs_k_sqrt_t;
    let ratio_max = rows
        .iter()
        .map(|r| (r.sup_abs_k_sqrt_t / r0).max(r0 / r.sup_abs_k_sqrt_t))
        .fold(1.0, f64::max);
    Ok(DecayScan {
        rows,
        ratio_max,
        bounded: ratio_max <= 3.0,
        lambda_cut_max: cut_max,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocalDecayRow {
    pub t: f64,
    pub sup_abs_k: f64,
    pub sup_abs_k_t: f64,
    pub err_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalDecayScan {
    pub box_half_width: f64,
    pub rows: Vec<LocalDecayRow>,
    pub ratio_max: f64,
    pub bounded: bool,
}

/// sup over x, x' in [-K, K] ∩ grid of |K(t)| · t.
pub fn local_decay_scan(
    model: &PotentialModel,
    t_list: &[f64],
    box_half_width: f64,
    x_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<LocalDecayScan> {
    check_times(t_list)?;
    let lo = x_grid.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let hi = x_grid.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    if !(box_half_width > 0.0) || -box_half_width < lo || box_half_width > hi {
        return Err(Error::InvalidArgument(format!(
            "box [-{box_half_width}, {box_half_width}] is not inside the x grid"
        )));
    }
    let inside: Vec<f64> = x_grid
        .iter()
        .copied()
        .filter(|x| x.abs() <= box_half_width)
        .collect();
    let scan = decay_scan(model, t_list, &inside, &inside, cfg)?;
    let rows: Vec<LocalDecayRow> = scan
        .rows
        .iter()
        .map(|r| LocalDecayRow {
            t: r.t,
            sup_abs_k: r.sup_abs_k,
            sup_abs_k_t: r.sup_abs_k * r.t,
            err_max: r.err_max,
        })
        .collect();
    let r0 = rows[0].sup_abs_k_t;
    let ratio_max = rows
        .iter()
        .map(|r| (r.sup_abs_k_t / r0).max(r0 / r.sup_abs_k_t))
        .fold(1.0, f64::max);
    Ok(LocalDecayScan {
        box_half_width,
        rows,
        ratio_max,
        bounded: ratio_max <= 3.0,
    })
}

/// Geometric point set 0, ±x_min, ..., ±x_max with `per_side` points on each side.
pub fn log_grid(x_min: f64, x_max: f64, per_side: usize) -> Vec<f64> {
    let mut v = vec![0.0];
    for i in 0..per_side {
        let x = x_min * (x_max / x_min).powf(i as f64 / (per_side.max(2) - 1) as f64);
        v.push(x);
        v.push(-x);
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}
