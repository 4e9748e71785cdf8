//! Run configuration: a flat TOML file with one table per block.
//!
//! ```toml
//! [potential]
//! profile = "coulomb_symmetric"   # anisotropic | bump | constant
//! c = 1.0
//! mu = 1.0
//!
//! [grids]
//! lambda_min = 0.05
//! lambda_max = 4.0
//! lambda_count = 40
//! x_min = 1.0          # smallest nonzero |x| of the log-spaced grid
//! x_max = 200.0
//! x_count = 8          # points per side
//! t = [1.0, 2.0, 4.0]
//!
//! [tolerances]
//! quad_tol = 1e-10
//! ode_tol = 1e-10
//! osc_tol = 1e-8
//!
//! [oracle]
//! L = 200.0
//! h = 0.05
//!
//! [regime]
//! R = 32.0
//!
//! [outputs]
//! dir = "out"
//! ```
//!
//! Every key is optional; missing keys take the defaults of [`RunConfig::default`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::jost::JostConfig;
use crate::oracle::OracleConfig;
use crate::potential::{PotentialModel, Profile};
use crate::propagator::{log_grid, PropagatorConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialBlock {
    /// coulomb_symmetric, anisotropic, bump or constant
    pub profile: String,
    pub c: f64,
    pub mu: f64,
    pub c_left: f64,
    pub c_right: f64,
    pub blend_width: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub bump_height: f64,
}

impl Default for PotentialBlock {
    fn default() -> Self {
        PotentialBlock {
            profile: "coulomb_symmetric".into(),
            c: 1.0,
            mu: 1.0,
            c_left: 2.0,
            c_right: 1.0,
            blend_width: 1.0,
            r0: 2.0,
            bump_height: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub x_count: usize,
    pub t: Vec<f64>,
    /// Half-width K of the local-decay box [-K, K].
    pub local_box: f64,
    pub local_t: Vec<f64>,
    /// M sweep of lemma-check.
    pub lemma_m: Vec<f64>,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            lambda_min: 0.05,
            lambda_max: 4.0,
            lambda_count: 40,
            x_min: 1.0,
            x_max: 200.0,
            x_count: 8,
            t: (0..7).map(|k| 2f64.powi(k)).collect(),
            local_box: 5.0,
            local_t: (2..9).map(|k| 2f64.powi(k)).collect(),
            lemma_m: vec![1e2, 1e3, 1e4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceBlock {
    pub quad_tol: f64,
    pub ode_tol: f64,
    pub osc_tol: f64,
}

impl Default for ToleranceBlock {
    fn default() -> Self {
        ToleranceBlock {
            quad_tol: 1e-10,
            ode_tol: 1e-10,
            osc_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBlock {
    #[serde(rename = "L")]
    pub l: f64,
    pub h: f64,
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock { l: 200.0, h: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeBlock {
    #[serde(rename = "R")]
    pub r: f64,
}

impl Default for RegimeBlock {
    fn default() -> Self {
        RegimeBlock { r: 32.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialBlock,
    pub grids: GridBlock,
    pub tolerances: ToleranceBlock,
    pub oracle: OracleBlock,
    pub regime: RegimeBlock,
    pub outputs: OutputBlock,
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::Config(s));
        let p = &self.potential;
        if p.profile != "constant" && !(p.mu > 0.0 && p.mu < 2.0) {
            return bad(format!("potential.mu = {} violates 0 < mu < 2", p.mu));
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("quad_tol", tol.quad_tol),
            ("ode_tol", tol.ode_tol),
            ("osc_tol", tol.osc_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} = {v} must be positive"));
            }
        }
        let g = &self.grids;
        for (name, list) in [("t", &g.t), ("local_t", &g.local_t)] {
            if list.is_empty() {
                return bad(format!("grids.{name} must not be empty"));
            }
            if let Some(t) = list.iter().find(|t| **t == 0.0 || !t.is_finite()) {
                return bad(format!(
                    "grids.{name} contains t = {t}; times must be nonzero and finite"
                ));
            }
        }
        if !(g.lambda_min > 0.0 && g.lambda_max > g.lambda_min && g.lambda_count >= 2) {
            return bad("grids need 0 < lambda_min < lambda_max and lambda_count >= 2".into());
        }
        if !(g.x_min > 0.0 && g.x_max > g.x_min && g.x_count >= 2) {
            return bad("grids need 0 < x_min < x_max and x_count >= 2".into());
        }
        if !(g.local_box > 0.0) {
            return bad(format!(
                "grids.local_box = {} must be positive",
                g.local_box
            ));
        }
        if g.lemma_m.iter().any(|m| !(*m > 0.0)) {
            return bad("grids.lemma_m entries must be positive".into());
        }
        if !(self.oracle.l > 0.0 && self.oracle.h > 0.0) {
            return bad("oracle.L and oracle.h must be positive".into());
        }
        if !(self.regime.r > 0.0) {
            return bad(format!("regime.R = {} must be positive", self.regime.r));
        }
        self.model()
            .map(|_| ())
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<PotentialModel> {
        let p = &self.potential;
        let profile = match p.profile.as_str() {
            "coulomb_symmetric" => Profile::CoulombSymmetric { c: p.c },
            "anisotropic" => Profile::Anisotropic {
                c_left: p.c_left,
                c_right: p.c_right,
                blend_width: p.blend_width,
            },
            "bump" => Profile::Bump {
                c: p.c,
                bump_height: p.bump_height,
                r0: p.r0,
            },
            "constant" => return PotentialModel::constant(p.c),
            other => return Err(Error::Config(format!("unknown profile `{other}`"))),
        };
        PotentialModel::new(profile, p.mu)
    }

    pub fn jost(&self) -> JostConfig {
        JostConfig {
            ode_tol: self.tolerances.ode_tol,
            quad_tol: self.tolerances.quad_tol,
            ..JostConfig::default()
        }
    }

    pub fn propagator(&self) -> PropagatorConfig {
        PropagatorConfig {
            jost: self.jost(),
            r_regime: self.regime.r,
            ..PropagatorConfig::default()
        }
    }

    pub fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            l: self.oracle.l,
            h: self.oracle.h,
            ..OracleConfig::default()
        }
    }

    /// Log-spaced λ grid.
    pub fn lambdas(&self) -> Vec<f64> {
        let g = &self.grids;
        let n = g.lambda_count;
        (0..n)
            .map(|i| g.lambda_min * (g.lambda_max / g.lambda_min).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    /// Symmetric log-spaced x grid with the origin.
    pub fn x_grid(&self) -> Vec<f64> {
        log_grid(self.grids.x_min, self.grids.x_max, self.grids.x_count)
    }

    /// SHA-256 of the canonical JSON of the resolved config.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(s.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
