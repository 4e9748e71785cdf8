//! Batch front-end. Every subcommand writes `<name>.csv` plus a `<name>.json`
//! sidecar into the output directory.
//!
//! Exit status: 0 when all property checks pass, 1 when one fails (listed in
//! the sidecar) or a numerical routine errors, 2 on a bad config or command
//! line, 3 when an integral or eigensolve does not converge.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::jost::{JostPair, JostSolution, PhaseConvention};
use crate::liouville::LiouvilleMap;
use crate::oracle::DiscreteOracle;
use crate::oscillatory::{lemma_bound_check, LemmaFamily};
use crate::potential::{certify_assumption, log_symmetric_grid};
use crate::propagator::{decay_scan, local_decay_scan, required_lambda, PropagatorEngine};
use crate::spectral::{evaluators, Branch};

/// Env var naming the Liouville cache directory used by `verify`.
pub const CACHE_ENV: &str = "WKB_DISPERSE_CACHE";

#[derive(Debug, Parser)]
#[command(
    name = "wkb-disperse",
    version,
    about = "Jost solutions, spectral densities and dispersive decay scans"
)]
pub struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `outputs.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed of the randomised checks in `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LemmaChoice {
    Stationary,
    Degenerate,
    Nonvanishing,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Potential certificate, scattering identities, Liouville roundtrip, oracle summary.
    Verify,
    /// Wronskian and scattering data on the λ grid.
    Jost,
    /// Spectral density and WKB amplitudes on λ × x × x'.
    Density,
    /// Empirical stationary-phase constants over the M sweep.
    LemmaCheck {
        #[arg(long, value_enum, default_value = "all")]
        lemma: LemmaChoice,
    },
    /// Kernel K(t, x, x') on the x grid for every t.
    Propagate,
    /// sup |K| · √t over the x grid.
    DecayScan,
    /// sup |K| · t over the box [-K, K].
    LocalDecay,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Jost => "jost",
            Command::Density => "density",
            Command::LemmaCheck { .. } => "lemma-check",
            Command::Propagate => "propagate",
            Command::DecayScan => "decay-scan",
            Command::LocalDecay => "local-decay",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

/// One CSV table with its checks and metadata.
struct Artifact {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    checks: Vec<Check>,
    meta: Value,
}

fn csv_text(a: &Artifact) -> String {
    let mut s = a.columns.join(",");
    s.push('\n');
    for row in &a.rows {
        for (i, c) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            match c {
                Cell::Num(v) => write!(s, "{v:e}").unwrap(),
                Cell::Text(t) => s.push_str(t),
            }
        }
        s.push('\n');
    }
    s
}

fn write_outputs(dir: &Path, name: &str, cfg: &RunConfig, a: &Artifact) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{name}.csv")), csv_text(a))?;
    let failures: Vec<&Check> = a.checks.iter().filter(|c| !c.passed).collect();
    let sidecar = json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": name,
        "file": format!("{name}.csv"),
        "columns": a.columns,
        "config_hash": cfg.hash(),
        "config": cfg,
        "version": env!("CARGO_PKG_VERSION"),
        "checks": a.checks,
        "failures": failures,
        "passed": failures.is_empty(),
        "meta": a.meta,
    });
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{name}.json")), text + "\n")?;
    Ok(())
}

/// Parses `args` (program name first), runs and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p),
        None => RunConfig::default()
            .validate()
            .map(|_| RunConfig::default()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.outputs.dir));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 2;
        }
    };
    let name = cli.command.name();
    let result = pool.install(|| execute(&cli.command, &cfg, cli.seed));
    match result.and_then(|a| write_outputs(&dir, name, &cfg, &a).map(|_| a)) {
        Ok(a) => {
            let failed: Vec<&Check> = a.checks.iter().filter(|c| !c.passed).collect();
            for c in &a.checks {
                eprintln!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if failed.is_empty() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidModel(_) => 2,
                Error::NoConvergence(_) => 3,
                _ => 1,
            }
        }
    }
}

fn execute(cmd: &Command, cfg: &RunConfig, seed: u64) -> Result<Artifact> {
    match cmd {
        Command::Verify => verify(cfg, seed),
        Command::Jost => jost(cfg),
        Command::Density => density(cfg),
        Command::LemmaCheck { lemma } => lemma_check(cfg, *lemma),
        Command::Propagate => propagate(cfg),
        Command::DecayScan => decay(cfg),
        Command::LocalDecay => local_decay(cfg),
    }
}

struct ScatterRow {
    lambda: f64,
    wr: num_complex::Complex64,
    flux: f64,
    defect: f64,
    spread: f64,
}

fn scattering_rows(cfg: &RunConfig) -> Result<Vec<ScatterRow>> {
    let model = cfg.model()?;
    let jc = cfg.jost();
    cfg.lambdas()
        .par_iter()
        .map(|&l| {
            let s = JostPair::build(&model, l, 0.0, &[], &jc)?.scattering()?;
            Ok(ScatterRow {
                lambda: l,
                wr: s.wr,
                flux: s.abs_a2_minus_abs_b2(),
                defect: s.unitarity_defect(),
                spread: s.wr_spread,
            })
        })
        .collect()
}

fn scattering_checks(rows: &[ScatterRow]) -> Vec<Check> {
    let wr_min = rows
        .iter()
        .map(|r| r.wr.norm())
        .fold(f64::INFINITY, f64::min);
    let spread = rows.iter().map(|r| r.spread).fold(0.0, f64::max);
    let flux = rows
        .iter()
        .map(|r| (r.flux + 1.0).abs())
        .fold(0.0, f64::max);
    let defect = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
    vec![
        check(
            "wronskian_floor",
            wr_min >= 2.0 - 1e-3,
            format!("min |Wr| = {wr_min:.9}"),
        ),
        check(
            "wronskian_constancy",
            spread <= 1e-4,
            format!("max relative spread = {spread:.3e}"),
        ),
        check(
            "flux_identity",
            flux <= 1e-6,
            format!("max ||b|^2 - |a|^2 - 1| = {flux:.3e}"),
        ),
        check(
            "s_matrix_unitarity",
            defect <= 1e-4,
            format!("max ||SS* - I|| = {defect:.3e}"),
        ),
    ]
}

fn jost(cfg: &RunConfig) -> Result<Artifact> {
    let rows = scattering_rows(cfg)?;
    let checks = scattering_checks(&rows);
    Ok(Artifact {
        columns: vec![
            "lambda",
            "re_wr",
            "im_wr",
            "abs_wr",
            "abs_a2_minus_abs_b2",
            "unitarity_defect",
            "wr_spread",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.lambda.into(),
                    r.wr.re.into(),
                    r.wr.im.into(),
                    r.wr.norm().into(),
                    r.flux.into(),
                    r.defect.into(),
                    r.spread.into(),
                ]
            })
            .collect(),
        checks,
        meta: json!({ "model": cfg.model()?, "jost": cfg.jost() }),
    })
}

/// Roundtrip x -> y(x, λ) -> x on random samples, caching the maps on disk when
/// the cache env var is set.
fn liouville_roundtrip(cfg: &RunConfig, seed: u64) -> Result<(f64, usize)> {
    let model = cfg.model()?;
    let cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lmin, lmax) = (cfg.grids.lambda_min, cfg.grids.lambda_max);
    let xmax = cfg.grids.x_max;
    let r0 = model.core_radius();
    let mut worst = 0.0f64;
    let mut count = 0;
    for _ in 0..20 {
        let l = lmin * (lmax / lmin).powf(rng.gen::<f64>());
        let centred = JostSolution::convention_for(&model, l) == PhaseConvention::Centered;
        let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let base = if centred { 0.0 } else { side * r0 };
        let mut map = LiouvilleMap::new(model, l, base, cfg.tolerances.quad_tol)?;
        if let Some(dir) = &cache {
            map.load_cache(dir)?;
        }
        for _ in 0..10 {
            let x = if centred {
                xmax * (2.0 * rng.gen::<f64>() - 1.0)
            } else {
                base + side * (xmax - r0) * rng.gen::<f64>()
            };
            let back = map.inverse(map.forward(x)?)?;
            worst = worst.max((back - x).abs());
            count += 1;
        }
        if let Some(dir) = &cache {
            map.warm(-xmax, xmax).ok();
            map.save_cache(dir)?;
        }
    }
    Ok((worst, count))
}

fn verify(cfg: &RunConfig, seed: u64) -> Result<Artifact> {
    let model = cfg.model()?;
    let mut checks = Vec::new();
    match certify_assumption(&model, &log_symmetric_grid(0.01, cfg.grids.x_max, 40), 3) {
        Ok(r) => {
            let ok = model.is_constant() || r.negativity_ok;
            checks.push(check(
                "potential_assumption",
                ok,
                format!(
                    "C_alpha = {:?}, C_V in [{:.4}, {:.4}]",
                    r.c_alpha, r.c_v2, r.c_v1
                ),
            ))
        }
        Err(e) => checks.push(check("potential_assumption", false, e.to_string())),
    }
    checks.extend(scattering_checks(&scattering_rows(cfg)?));
    let (rt, n) = liouville_roundtrip(cfg, seed)?;
    checks.push(check(
        "liouville_roundtrip",
        rt <= 1e-8,
        format!("max |x(y(x)) - x| = {rt:.3e} over {n} samples"),
    ));
    let oracle = DiscreteOracle::discretize_and_solve(&model, &cfg.oracle_config())?;
    let summary = oracle.summary();
    if !model.is_constant() {
        checks.push(check(
            "negative_spectrum",
            summary.negative_count > 0,
            format!(
                "{} negative eigenvalues, lowest {:.6}",
                summary.negative_count, summary.lowest_eigenvalue
            ),
        ));
    }
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                c.name.as_str().into(),
                if c.passed { "pass" } else { "fail" }.into(),
            ]
        })
        .collect();
    Ok(Artifact {
        columns: vec!["check", "status"],
        rows,
        checks,
        meta: json!({ "model": model, "oracle": summary, "seed": seed }),
    })
}

fn density(cfg: &RunConfig) -> Result<Artifact> {
    let model = cfg.model()?;
    let xs = cfg.x_grid();
    let span = cfg.grids.x_max;
    let evs = evaluators(&model, &cfg.lambdas(), span, &cfg.jost())?;
    let mut rows = Vec::new();
    let (mut wkb_worst, mut sym_worst) = (0.0f64, 0.0f64);
    for ev in &evs {
        for &x in &xs {
            for &xp in &xs {
                let d = ev.density(x, xp)?;
                sym_worst = sym_worst.max((d - ev.density(xp, x)?).abs());
                let b = match ev.wkb_components_branch(Branch::for_points(x, xp), x, xp) {
                    Ok(w) => {
                        wkb_worst = wkb_worst.max((w.sum().re - d).abs().max(w.sum().im.abs()));
                        w.b.map(|b| b.norm())
                    }
                    Err(Error::WkbUnavailable(_)) => [f64::NAN; 4],
                    Err(e) => return Err(e),
                };
                rows.push(vec![
                    ev.lambda.into(),
                    x.into(),
                    xp.into(),
                    d.into(),
                    b[0].into(),
                    b[1].into(),
                    b[2].into(),
                    b[3].into(),
                ]);
            }
        }
    }
    let checks = vec![
        check(
            "wkb_reconstruction",
            wkb_worst <= 1e-8,
            format!("max |sum b e^(iS) - density| = {wkb_worst:.3e}"),
        ),
        check(
            "density_symmetry",
            sym_worst <= 1e-10,
            format!("max |E(x,x') - E(x',x)| = {sym_worst:.3e}"),
        ),
    ];
    Ok(Artifact {
        columns: vec![
            "lambda", "x", "xp", "density", "abs_b_pp", "abs_b_pm", "abs_b_mp", "abs_b_mm",
        ],
        rows,
        checks,
        meta: json!({ "model": model, "jost": cfg.jost() }),
    })
}

fn lemma_check(cfg: &RunConfig, choice: LemmaChoice) -> Result<Artifact> {
    let mut families = Vec::new();
    if matches!(choice, LemmaChoice::Stationary | LemmaChoice::All) {
        families.push(LemmaFamily::stationary_quadratic(1.0));
    }
    if matches!(choice, LemmaChoice::Degenerate | LemmaChoice::All) {
        families.push(LemmaFamily::degenerate_quartic());
    }
    if matches!(choice, LemmaChoice::Nonvanishing | LemmaChoice::All) {
        families.push(LemmaFamily::degenerate_nonvanishing());
    }
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    for fam in &families {
        let t = lemma_bound_check(fam, &cfg.grids.lemma_m, cfg.tolerances.osc_tol)?;
        for r in &t.rows {
            rows.push(vec![
                t.family.as_str().into(),
                r.big_m.into(),
                r.abs_i.into(),
                r.norm.into(),
                r.c_emp.into(),
                r.error.into(),
            ]);
        }
        if fam.first_norm {
            let e = -t.fitted_exponent;
            checks.push(check(
                &format!("{}_exponent", t.family),
                (0.2..=0.3).contains(&e),
                format!("|I| ~ M^-{e:.4}"),
            ));
        } else {
            checks.push(check(
                &format!("{}_uniform", t.family),
                !t.non_uniform,
                format!("C_emp drift {:.4} per decade", t.drift_per_decade),
            ));
        }
        tables.push(json!({ "family": t.family, "exponent": t.exponent, "drift_per_decade": t.drift_per_decade, "fitted_exponent": t.fitted_exponent }));
    }
    Ok(Artifact {
        columns: vec!["family", "M", "abs_I", "norm", "C_emp", "error"],
        rows,
        checks,
        meta: json!({ "tables": tables, "osc_tol": cfg.tolerances.osc_tol }),
    })
}

fn propagate(cfg: &RunConfig) -> Result<Artifact> {
    let model = cfg.model()?;
    let pc = cfg.propagator();
    let xs = cfg.x_grid();
    let ts = &cfg.grids.t;
    let abs_t: Vec<f64> = ts.iter().map(|t| t.abs()).collect();
    let engine = PropagatorEngine::new(
        &model,
        &xs,
        required_lambda(&abs_t, cfg.grids.x_max, &pc),
        &pc,
    )?;
    let idx: Vec<usize> = (0..xs.len()).collect();
    let (mut rows, mut cuts) = (Vec::new(), Vec::new());
    let mut sym_worst = 0.0f64;
    for &t in ts {
        let k = engine.kernel_grid(t, &idx, &idx)?;
        cuts.push(json!({ "t": t, "lambda_cut": k.lambda_cut, "tail_bound": k.tail_bound }));
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                let v = k.values[i][j];
                let excess = (v - k.values[j][i]).norm() - (k.errors[i][j] + k.errors[j][i]);
                sym_worst = sym_worst.max(excess);
                rows.push(vec![
                    t.into(),
                    xs[i].into(),
                    xs[j].into(),
                    v.re.into(),
                    v.im.into(),
                    v.norm().into(),
                    k.errors[i][j].into(),
                ]);
            }
        }
    }
    let checks = vec![check(
        "kernel_symmetry",
        sym_worst <= 0.0,
        format!("max excess of |K(x,x') - K(x',x)| over the error sum = {sym_worst:.3e}"),
    )];
    Ok(Artifact {
        columns: vec!["t", "x", "xp", "re_K", "im_K", "abs_K", "err"],
        rows,
        checks,
        meta: json!({ "model": model, "propagator": pc, "cuts": cuts, "R": cfg.regime.r }),
    })
}

fn decay(cfg: &RunConfig) -> Result<Artifact> {
    let model = cfg.model()?;
    let pc = cfg.propagator();
    let xs = cfg.x_grid();
    let scan = decay_scan(&model, &cfg.grids.t, &xs, &xs, &pc)?;
    let checks = vec![check(
        "sqrt_t_bounded",
        scan.bounded,
        format!(
            "sup|K| sqrt(t) stays within a factor {:.4} of its first value (limit 3)",
            scan.ratio_max
        ),
    )];
    Ok(Artifact {
        columns: vec![
            "t",
            "sup_abs_K",
            "sup_abs_K_sqrt_t",
            "x_star",
            "xp_star",
            "err_max",
        ],
        rows: scan
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.t.into(),
                    r.sup_abs_k.into(),
                    r.sup_abs_k_sqrt_t.into(),
                    r.x_star.into(),
                    r.xp_star.into(),
                    r.err_max.into(),
                ]
            })
            .collect(),
        checks,
        meta: json!({ "model": model, "propagator": pc, "ratio_max": scan.ratio_max, "lambda_cut_max": scan.lambda_cut_max, "R": cfg.regime.r }),
    })
}

fn local_decay(cfg: &RunConfig) -> Result<Artifact> {
    let model = cfg.model()?;
    let pc = cfg.propagator();
    let k = cfg.grids.local_box;
    let mut xs = cfg.x_grid();
    xs.extend((0..=10).map(|i| -k + 0.2 * k * i as f64));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let scan = local_decay_scan(&model, &cfg.grids.local_t, k, &xs, &pc)?;
    let checks = vec![check(
        "t_bounded",
        scan.bounded,
        format!(
            "sup|K| t stays within a factor {:.4} of its first value (limit 3)",
            scan.ratio_max
        ),
    )];
    Ok(Artifact {
        columns: vec!["t", "sup_abs_K", "sup_abs_K_t", "err_max"],
        rows: scan
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.t.into(),
                    r.sup_abs_k.into(),
                    r.sup_abs_k_t.into(),
                    r.err_max.into(),
                ]
            })
            .collect(),
        checks,
        meta: json!({ "model": model, "propagator": pc, "box_half_width": k, "ratio_max": scan.ratio_max }),
    })
}
