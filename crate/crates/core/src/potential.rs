//! Potential families and sampled certification of the decay bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Shape of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// V = -c <x>^{-mu}
    CoulombSymmetric { c: f64 },
    /// V = -<x>^{-mu} (c_left + (c_right - c_left) s(x / blend_width)), s logistic
    Anisotropic {
        c_left: f64,
        c_right: f64,
        blend_width: f64,
    },
    /// Coulomb base plus a compactly supported bump of height `bump_height` on |x| < R0/2.
    Bump { c: f64, bump_height: f64, r0: f64 },
    /// V = -c everywhere. Not a decaying profile; used as a closed-form test stub
    /// and, with c = 0, as the free operator.
    Constant { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub profile: Profile,
    pub mu: f64,
    pub derivative_order_max: u32,
}

/// <x> = (1 + x^2)^{1/2}
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// exp(1 - 1/(1 - z^2)) on |z| < 1 as a jet in x, with z = x / half_width.
fn bump_jet(x: f64, half_width: f64) -> Jet {
    let z = Jet::var(x).scale(1.0 / half_width);
    let q = Jet::constant(1.0) - z * z;
    let q0 = q.0[0];
    if q0 <= 1e-2 {
        // exp(1 - 1/q) < 1e-42 here together with all derivatives
        return Jet::constant(0.0);
    }
    let r = q.compose([
        1.0 - 1.0 / q0,
        1.0 / (q0 * q0),
        -2.0 / (q0 * q0 * q0),
        6.0 / (q0 * q0 * q0 * q0),
    ]);
    r.exp()
}

impl PotentialModel {
    pub fn new(profile: Profile, mu: f64) -> Result<Self> {
        let m = PotentialModel {
            profile,
            mu,
            derivative_order_max: 3,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn coulomb(c: f64, mu: f64) -> Result<Self> {
        Self::new(Profile::CoulombSymmetric { c }, mu)
    }

    pub fn anisotropic(c_left: f64, c_right: f64, blend_width: f64, mu: f64) -> Result<Self> {
        Self::new(
            Profile::Anisotropic {
                c_left,
                c_right,
                blend_width,
            },
            mu,
        )
    }

    pub fn bump(c: f64, bump_height: f64, r0: f64, mu: f64) -> Result<Self> {
        Self::new(Profile::Bump { c, bump_height, r0 }, mu)
    }

    /// Constant potential -c. `mu` is irrelevant and set to 1.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(Profile::Constant { c }, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidModel(s.to_string()));
        if self.derivative_order_max < 3 {
            return bad("derivative_order_max must be at least 3");
        }
        if let Profile::Constant { c } = self.profile {
            if !(c >= 0.0 && c.is_finite()) {
                return bad("constant stub needs c >= 0");
            }
            return Ok(());
        }
        if !(self.mu > 0.0 && self.mu < 2.0) {
            return Err(Error::InvalidModel(format!(
                "mu = {} outside (0, 2)",
                self.mu
            )));
        }
        match self.profile {
            Profile::CoulombSymmetric { c } if !(c > 0.0 && c.is_finite()) => {
                bad("c must be positive")
            }
            Profile::Anisotropic {
                c_left,
                c_right,
                blend_width,
            } if !(c_left > 0.0 && c_right > 0.0 && blend_width > 0.0) => {
                bad("c_left, c_right and blend_width must be positive")
            }
            Profile::Bump { c, bump_height, r0 }
                if !(c > 0.0 && r0 > 0.0 && bump_height.is_finite()) =>
            {
                bad("bump needs c > 0, R0 > 0")
            }
            _ => Ok(()),
        }
    }

    /// V and its first three derivatives at x.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        let xj = Jet::var(x);
        let decay = || (Jet::constant(1.0) + xj * xj).powf(-0.5 * self.mu);
        match self.profile {
            Profile::CoulombSymmetric { c } => decay().scale(-c).0,
            Profile::Anisotropic {
                c_left,
                c_right,
                blend_width,
            } => {
                let s = logistic(x / blend_width);
                let s1 = s * (1.0 - s);
                let s2 = s1 * (1.0 - 2.0 * s);
                let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
                let sig = xj.scale(1.0 / blend_width).compose([s, s1, s2, s3]);
                let amp = Jet::constant(c_left) + sig.scale(c_right - c_left);
                (decay() * amp).scale(-1.0).0
            }
            Profile::Bump { c, bump_height, r0 } => {
                let base = decay().scale(-c);
                if x.abs() >= 0.5 * r0 {
                    base.0
                } else {
                    (base + bump_jet(x, 0.5 * r0).scale(bump_height)).0
                }
            }
            Profile::Constant { c } => [-c, 0.0, 0.0, 0.0],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.profile {
            Profile::CoulombSymmetric { c } => -c * (1.0 + x * x).powf(-0.5 * self.mu),
            Profile::Constant { c } => -c,
            _ => self.jet(x)[0],
        }
    }

    /// Potential of the reflected problem, V(-x).
    pub fn reflected(&self) -> PotentialModel {
        let mut m = *self;
        if let Profile::Anisotropic {
            c_left,
            c_right,
            blend_width,
        } = self.profile
        {
            m.profile = Profile::Anisotropic {
                c_left: c_right,
                c_right: c_left,
                blend_width,
            };
        }
        m
    }

    pub fn is_even(&self) -> bool {
        !matches!(self.profile, Profile::Anisotropic { c_left, c_right, .. } if c_left != c_right)
    }

    /// Radius outside which V is guaranteed negative (R0/2 for bump, 0 otherwise).
    pub fn negativity_radius(&self) -> f64 {
        match self.profile {
            Profile::Bump { r0, .. } => 0.5 * r0,
            _ => 0.0,
        }
    }

    /// Radius of the core treated by the raw (u, u_x) system (R0 for bump, 0 otherwise).
    pub fn core_radius(&self) -> f64 {
        match self.profile {
            Profile::Bump { r0, .. } => r0,
            _ => 0.0,
        }
    }

    pub fn is_bump(&self) -> bool {
        matches!(self.profile, Profile::Bump { .. })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.profile, Profile::Constant { .. })
    }

    /// sup V over the real line, attained in the core for bump profiles.
    pub fn sup_v(&self) -> f64 {
        match self.profile {
            Profile::Bump { r0, .. } => {
                let n = 400;
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0.0;
                for i in 0..=n {
                    let x = -0.5 * r0 + r0 * i as f64 / n as f64;
                    let v = self.eval(x);
                    if v > best {
                        best = v;
                        arg = x;
                    }
                }
                // golden refinement around the best sample
                let (mut a, mut b) = (arg - r0 / n as f64, arg + r0 / n as f64);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let c = b - g * (b - a);
                    let d = a + g * (b - a);
                    if self.eval(c) > self.eval(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                best.max(self.eval(0.5 * (a + b)))
            }
            // the decaying profiles are negative and tend to 0 at infinity
            Profile::Constant { c } => -c,
            _ => 0.0,
        }
    }

    /// Energy scale C0 >= 1 with sup|V| <= C0/2 on the core (bump only).
    pub fn c0(&self) -> f64 {
        match self.profile {
            Profile::Bump { .. } => {
                let n = 400;
                let r = self.core_radius();
                let mut m: f64 = 0.0;
                for i in 0..=n {
                    let x = -r + 2.0 * r * i as f64 / n as f64;
                    m = m.max(self.eval(x).abs());
                }
                (2.0 * m).max(1.0)
            }
            _ => 1.0,
        }
    }

    /// Asymptotic coefficient c_± with -V <x>^mu -> c_± as x -> ±inf.
    pub fn tail_coefficient(&self, right: bool) -> f64 {
        match self.profile {
            Profile::CoulombSymmetric { c } | Profile::Bump { c, .. } | Profile::Constant { c } => {
                c
            }
            Profile::Anisotropic {
                c_left, c_right, ..
            } => {
                if right {
                    c_right
                } else {
                    c_left
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// C_alpha = sup |d^alpha V| <x>^{mu + alpha}, alpha = 0..=alpha_max
    pub c_alpha: Vec<f64>,
    /// sup of -V <x>^mu on the negativity region
    pub c_v1: f64,
    /// inf of -V <x>^mu on the negativity region
    pub c_v2: f64,
    pub negativity_ok: bool,
    /// Largest relative change of any constant under 2x grid refinement.
    pub refinement_change: f64,
}

fn sampled_constants(
    model: &PotentialModel,
    grid: &[f64],
    alpha_max: usize,
) -> (Vec<f64>, f64, f64, bool) {
    let mut c_alpha = vec![0.0f64; alpha_max + 1];
    let (mut c1, mut c2) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut neg_ok = true;
    let r_neg = model.negativity_radius();
    for &x in grid {
        let j = model.jet(x);
        let w = japanese(x);
        for (a, ca) in c_alpha.iter_mut().enumerate() {
            *ca = ca.max(j[a].abs() * w.powf(model.mu + a as f64));
        }
        if x.abs() >= r_neg {
            let s = -j[0] * w.powf(model.mu);
            c1 = c1.max(s);
            c2 = c2.min(s);
            if j[0] >= 0.0 {
                neg_ok = false;
            }
        }
    }
    (c_alpha, c1, c2, neg_ok)
}

/// Certifies the sampled decay bounds |d^alpha V| <x>^{mu+alpha} <= C_alpha and
/// C_V2 <x>^{-mu} <= -V <= C_V1 <x>^{-mu} on the given grid.
pub fn certify_assumption(
    model: &PotentialModel,
    x_grid: &[f64],
    alpha_max: usize,
) -> Result<AssumptionReport> {
    model.validate()?;
    if alpha_max > model.derivative_order_max as usize || alpha_max > 3 {
        return Err(Error::InvalidArgument(format!(
            "alpha_max = {alpha_max} above derivative_order_max"
        )));
    }
    if x_grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "grid needs at least two points".into(),
        ));
    }
    let mut grid = x_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (c_alpha, c1, c2, neg_ok) = sampled_constants(model, &grid, alpha_max);

    let mut fine = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        fine.push(w[0]);
        fine.push(0.5 * (w[0] + w[1]));
    }
    fine.push(*grid.last().unwrap());
    let (fa, f1, f2, fneg) = sampled_constants(model, &fine, alpha_max);

    let rel = |a: f64, b: f64| {
        if b == 0.0 {
            (a - b).abs()
        } else {
            ((a - b) / b).abs()
        }
    };
    let mut change = rel(c1, f1).max(rel(c2, f2));
    for (a, b) in c_alpha.iter().zip(&fa) {
        change = change.max(rel(*a, *b));
    }
    if change > 0.01 {
        return Err(Error::GridTooCoarse(format!(
            "certified constants move by {:.2}% under 2x refinement",
            100.0 * change
        )));
    }
    Ok(AssumptionReport {
        c_alpha,
        c_v1: c1,
        c_v2: c2,
        negativity_ok: neg_ok && fneg,
        refinement_change: change,
    })
}

/// Symmetric grid with `per_decade` log-spaced points per decade on [x_min, x_max],
/// both signs, plus the origin.
pub fn log_symmetric_grid(x_min: f64, x_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (x_max / x_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut g = vec![0.0];
    for i in 0..=n {
        let x = x_min * 10f64.powf(decades * i as f64 / n as f64);
        g.push(x);
        g.push(-x);
    }
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(model: &PotentialModel, x: f64, k: usize) -> f64 {
        let h = if k == 3 { 1e-4 } else { 1e-3 } * japanese(x);
        let f = |s: f64| model.eval(x + s * h);
        match k {
            1 => (f(-2.0) - 8.0 * f(-1.0) + 8.0 * f(1.0) - f(2.0)) / (12.0 * h),
            2 => {
                (-f(-2.0) + 16.0 * f(-1.0) - 30.0 * f(0.0) + 16.0 * f(1.0) - f(2.0))
                    / (12.0 * h * h)
            }
            3 => (-f(-2.0) + 2.0 * f(-1.0) - 2.0 * f(1.0) + f(2.0)) / (2.0 * h * h * h),
            _ => unreachable!(),
        }
    }

    #[test]
    fn coulomb_values() {
        let m = PotentialModel::coulomb(1.0, 1.0).unwrap();
        assert_eq!(m.eval(0.0), -1.0);
        assert!((m.eval(3f64.sqrt()) + 0.5).abs() < 1e-15);
        for x in [0.3, 7.0, 123.0] {
            assert_eq!(m.eval(x), m.eval(-x));
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let models = [
            PotentialModel::coulomb(1.0, 1.0).unwrap(),
            PotentialModel::coulomb(0.7, 0.5).unwrap(),
            PotentialModel::anisotropic(2.0, 1.0, 1.5, 1.2).unwrap(),
            PotentialModel::bump(1.0, 2.0, 2.0, 1.0).unwrap(),
        ];
        for m in &models {
            for x in [-7.3, -0.6, -0.2, 0.0, 0.45, 0.8, 2.5, 40.0] {
                let j = m.jet(x);
                assert!((j[0] - m.eval(x)).abs() < 1e-15);
                for k in 1..=3 {
                    let tol = if k == 3 { 2e-4 } else { 1e-7 };
                    let scale = 1.0 + j[k].abs();
                    assert!(
                        (j[k] - fd(m, x, k)).abs() < tol * scale,
                        "{m:?} x={x} k={k}: {} vs {}",
                        j[k],
                        fd(m, x, k)
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_bound_c1_at_ten() {
        // |V'| <x>^2 at x = 10 against a dense sweep of the same quantity
        let m = PotentialModel::coulomb(1.0, 1.0).unwrap();
        let q = |x: f64| m.jet(x)[1].abs() * (1.0 + x * x);
        let c1 = (0..=200_000)
            .map(|i| -1e3 + 1e-2 * i as f64)
            .map(q)
            .fold(0.0, f64::max);
        // closed form: |V'| <x>^2 = |x| / <x>, sup -> 1 at infinity
        assert!(c1 <= 1.0 && c1 > 0.9999);
        assert!(q(10.0) <= c1);
        assert!((q(10.0) - 10.0 / 101f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn certify_coulomb_and_anisotropic() {
        let grid = log_symmetric_grid(1e-2, 1e4, 40);
        let m = PotentialModel::coulomb(1.0, 1.0).unwrap();
        let r = certify_assumption(&m, &grid, 3).unwrap();
        assert!((r.c_alpha[0] - 1.0).abs() < 1e-12);
        assert!((r.c_v1 - 1.0).abs() < 1e-12 && (r.c_v2 - 1.0).abs() < 1e-12);
        assert!(r.negativity_ok);

        let a = PotentialModel::anisotropic(2.0, 1.0, 1.0, 1.0).unwrap();
        let r = certify_assumption(&a, &grid, 3).unwrap();
        assert!(
            (r.c_v1 - 2.0).abs() < 1e-3 && (r.c_v2 - 1.0).abs() < 1e-3,
            "{r:?}"
        );
        assert!((a.eval(-500.0) / (-2.0 / japanese(500.0)) - 1.0).abs() < 1e-12);
        assert!((a.eval(500.0) / (-1.0 / japanese(500.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_profile_properties() {
        let m = PotentialModel::bump(1.0, 2.0, 2.0, 1.0).unwrap();
        let base = PotentialModel::coulomb(1.0, 1.0).unwrap();
        assert!(m.eval(0.0) > 0.0);
        assert!((m.eval(0.0) - 1.0).abs() < 1e-14);
        for x in [1.0, 1.5, 2.0, 3.0, -2.5, 100.0] {
            assert_eq!(m.eval(x), base.eval(x));
        }
        let mut grid = log_symmetric_grid(1e-2, 1e4, 60);
        grid.extend((0..=4000).map(|i| -2.0 + 1e-3 * i as f64));
        let r = certify_assumption(&m, &grid, 3).unwrap();
        assert!(r.negativity_ok);
        assert!((m.c0() - 2.0).abs() < 1e-9);
        assert!((m.sup_v() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let m = PotentialModel::bump(1.0, 2.0, 2.0, 1.0).unwrap();
        let grid = [-10.0, -5.0, 5.0, 10.0];
        assert!(matches!(
            certify_assumption(&m, &grid, 3),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn invalid_mu_rejected() {
        assert!(PotentialModel::coulomb(1.0, 2.5).is_err());
        assert!(PotentialModel::coulomb(1.0, 0.0).is_err());
    }

    #[test]
    fn reflection() {
        let a = PotentialModel::anisotropic(2.0, 1.0, 1.0, 1.0).unwrap();
        let r = a.reflected();
        for x in [-3.0, 0.2, 9.0] {
            assert!((a.eval(-x) - r.eval(x)).abs() < 1e-15);
        }
    }
}
