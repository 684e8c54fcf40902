//! The Monte Carlo subcommands: sweep, near-defect, tradeoff and fit.

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use topoft::analysis::*;
use topoft::decoder::GraphMode;

use crate::config::{self, usage, FitConfig, RunConfig, TradeoffConfig};
use crate::output::{OutDir, SweepRow};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Independent,
    Model1,
    Model2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TrackedArg {
    Primal,
    Dual,
    Either,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GeometryArg {
    Torus,
    NearDefect,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    LogLikelihood,
}

/// Flags shared by every sweep-like subcommand; each overrides the config file.
#[derive(Args, Debug, Default)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lattice sizes, e.g. `8,12,16`.
    #[arg(long = "L")]
    pub sizes: Option<String>,
    /// Trials per point.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Which complexes are decoded; a trial fails if any tracked one fails.
    #[arg(long, value_enum)]
    pub tracked: Option<TrackedArg>,
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingArg>,
    /// Match on the complete defect graph instead of the sparse one.
    #[arg(long)]
    pub complete: bool,
    /// Nearest neighbours kept per defect by the sparse graph.
    #[arg(long)]
    pub sparse_k: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Directory of per-point checkpoints [default: <out>/checkpoints].
    #[arg(long)]
    pub checkpoints: Option<PathBuf>,
    /// Ignore existing checkpoints.
    #[arg(long)]
    pub fresh: bool,
}

impl Common {
    fn apply(&self, cfg: &mut SweepConfig) -> Result<()> {
        if let Some(s) = &self.sizes {
            cfg.sizes = config::parse_sizes(s)?;
        }
        if let Some(n) = self.trials {
            cfg.n_trials = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tracked {
            cfg.tracked = match t {
                TrackedArg::Primal => Tracked::Primal,
                TrackedArg::Dual => Tracked::Dual,
                TrackedArg::Either => Tracked::Either,
            };
        }
        if let Some(w) = self.weighting {
            cfg.decoder.weighting = match w {
                WeightingArg::Uniform => Weighting::Uniform,
                WeightingArg::LogLikelihood => Weighting::LogLikelihood,
            };
        }
        if self.complete {
            cfg.decoder.graph = GraphMode::Complete;
        } else if let Some(k) = self.sparse_k {
            if k == 0 {
                return Err(usage("--sparse-k must be at least 1"));
            }
            cfg.decoder.graph = GraphMode::Sparse { k };
        }
        cfg.validate().map_err(|e| usage(e.to_string()))
    }

    fn checkpoint_dir(&self) -> Option<PathBuf> {
        if self.fresh {
            return None;
        }
        Some(self.checkpoints.clone().unwrap_or_else(|| self.out.join("checkpoints")))
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Start from a named configuration (independent, gate-only, local-only, equal, near-defect).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Independent flip rates: `a`, `a,b,...` or `start:stop:step`.
    #[arg(long)]
    pub q: Option<String>,
    /// Model 1 depolarizing rates.
    #[arg(long)]
    pub p1: Option<String>,
    /// Model 2 gate rates with no local faults.
    #[arg(long)]
    pub p2: Option<String>,
    /// Model 2 local rates `pP = pS = pM` with no gate faults.
    #[arg(long = "pP")]
    pub p_p: Option<String>,
    /// Model 2 direction `local,gate`; the swept scale is `--t`.
    #[arg(long)]
    pub direction: Option<String>,
    /// Model 2 scales along `--direction`.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryArg>,
}

fn base_sweep() -> SweepConfig {
    SweepConfig {
        family: Family::Independent,
        geometry: Geometry::Torus,
        sizes: presets::SIZES.to_vec(),
        params: Vec::new(),
        n_trials: 10_000,
        seed: 1,
        tracked: Tracked::Either,
        decoder: DecoderOptions::default(),
    }
}

impl SweepArgs {
    /// Builds the sweep from config file or preset, then flags.
    pub fn resolve(&self, near_defect: bool) -> Result<SweepConfig> {
        let want = if near_defect { "near_defect" } else { "sweep" };
        let mut cfg = match (&self.common.config, &self.preset) {
            (Some(_), Some(_)) => return Err(usage("give either --config or --preset")),
            (Some(p), None) => config::load_as(p, want, |c| match c {
                RunConfig::Sweep(s) if !near_defect => Some(s),
                RunConfig::NearDefect(s) if near_defect => Some(s),
                _ => None,
            })?,
            (None, Some(name)) => presets::by_name(name).ok_or_else(|| {
                usage(format!("unknown preset `{name}`; known: {}", presets::NAMES.join(", ")))
            })?,
            (None, None) if near_defect => presets::near_defect(),
            (None, None) => base_sweep(),
        };
        self.apply_model(&mut cfg)?;
        if let Some(g) = self.geometry {
            cfg.geometry = match g {
                GeometryArg::Torus => Geometry::Torus,
                GeometryArg::NearDefect => Geometry::NearDefect,
            };
        }
        if near_defect {
            cfg.geometry = Geometry::NearDefect;
        }
        self.common.apply(&mut cfg)?;
        Ok(cfg)
    }

    fn apply_model(&self, cfg: &mut SweepConfig) -> Result<()> {
        let given: Vec<(&str, &String)> = [
            ("q", &self.q),
            ("p1", &self.p1),
            ("p2", &self.p2),
            ("pP", &self.p_p),
            ("t", &self.t),
        ]
        .into_iter()
        .filter_map(|(n, v)| v.as_ref().map(|v| (n, v)))
        .collect();
        if given.len() > 1 {
            return Err(usage("give exactly one of --q, --p1, --p2, --pP, --t"));
        }
        let Some(&(name, values)) = given.first() else {
            if self.model.is_some() || self.direction.is_some() {
                return Err(usage("a model needs its swept rates (--q, --p1, --p2, --pP or --t)"));
            }
            return Ok(());
        };
        let family = match (name, self.model) {
            ("q", None | Some(ModelArg::Independent)) => Family::Independent,
            ("p1", None | Some(ModelArg::Model1)) => Family::Model1,
            ("p2", None | Some(ModelArg::Model2)) => Family::Model2Direction { local: 0.0, gate: 1.0 },
            ("pP", None | Some(ModelArg::Model2)) => Family::Model2Direction { local: 1.0, gate: 0.0 },
            ("t", None | Some(ModelArg::Model2)) => {
                let d = self.direction.as_deref().ok_or_else(|| usage("--t needs --direction"))?;
                let (local, gate) = config::parse_pair(d)?;
                if local < 0.0 || gate < 0.0 || local + gate == 0.0 {
                    return Err(usage(format!("bad direction `{d}`")));
                }
                Family::Model2Direction { local, gate }
            }
            (n, Some(m)) => return Err(usage(format!("--{n} does not apply to {m:?}"))),
            (n, None) => return Err(usage(format!("--{n} needs a model"))),
        };
        if self.direction.is_some() && name != "t" {
            return Err(usage("--direction only applies with --t"));
        }
        let params = config::parse_values(values)?;
        if params.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(usage(format!("--{name} rates must lie in [0, 1]")));
        }
        cfg.family = family;
        cfg.params = params;
        Ok(())
    }
}

fn progress(r: &TrialBatchResult, cached: bool) {
    eprintln!(
        "L={:<3} t={:.6} fail {:>6}/{:<7} rate {:.5}{}",
        r.l,
        r.param,
        r.n_failures,
        r.n_trials,
        r.rate,
        if cached { " (checkpoint)" } else { "" }
    );
}

#[derive(Serialize)]
struct CrossingRow {
    l1: usize,
    l2: usize,
    crossing: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct FitRow {
    model: String,
    p_c: f64,
    p_c_err: f64,
    nu0: f64,
    nu0_err: f64,
    a: f64,
    b: f64,
    c: f64,
    r_squared: f64,
    chi2: f64,
    dof: usize,
}

impl FitRow {
    fn new(model: String, f: &ScalingFit) -> Self {
        FitRow {
            model,
            p_c: f.p_c,
            p_c_err: f.p_c_err,
            nu0: f.nu0,
            nu0_err: f.nu0_err,
            a: f.a,
            b: f.b,
            c: f.c,
            r_squared: f.r_squared,
            chi2: f.chi2,
            dof: f.dof,
        }
    }
}

fn crossing_rows(results: &[TrialBatchResult]) -> Vec<CrossingRow> {
    crossings(results)
        .into_iter()
        .map(|((l1, l2), crossing, stderr)| CrossingRow { l1, l2, crossing, stderr })
        .collect()
}

pub fn sweep(args: &SweepArgs, near_defect: bool) -> Result<()> {
    let started = chrono::Utc::now();
    let cfg = args.resolve(near_defect)?;
    if cfg.params.is_empty() {
        return Err(usage("no rates to sweep; give --q, --p1, --p2, --pP, --t, --preset or --config"));
    }
    let ckpt = args.common.checkpoint_dir();
    let results = run_sweep(&cfg, ckpt.as_deref(), progress)?;
    let mut out = OutDir::create(&args.common.out)?;
    let rows: Vec<SweepRow> = results.iter().map(|r| SweepRow::new(&cfg.family, r)).collect();
    out.csv("sweep.csv", &rows)?;
    out.csv("crossings.csv", &crossing_rows(&results))?;
    if near_defect {
        let report = serde_json::json!({
            "crossings": crossing_rows(&results).iter().map(|c| serde_json::json!({
                "sizes": [c.l1, c.l2], "crossing": c.crossing, "stderr": c.stderr
            })).collect::<Vec<_>>(),
            "fallbacks": results.iter().map(|r| r.fallbacks).sum::<u64>(),
        });
        out.json("report.json", &report)?;
    }
    let run = if near_defect { RunConfig::NearDefect(cfg) } else { RunConfig::Sweep(cfg) };
    out.manifest(&run, started)
}

#[derive(Args, Debug)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directions `local,gate;local,gate;...`.
    #[arg(long)]
    pub directions: Option<String>,
    /// Relative half-width of each direction's grid.
    #[arg(long)]
    pub spread: Option<f64>,
    /// Grid points per direction.
    #[arg(long)]
    pub points: Option<usize>,
    /// Thresholds `local,gate` of the two pure directions used to center the grids.
    #[arg(long)]
    pub anchors: Option<String>,
}

fn default_tradeoff() -> TradeoffConfig {
    TradeoffConfig {
        template: presets::gate_only(),
        directions: presets::TRADEOFF_DIRECTIONS.to_vec(),
        spread: presets::SPREAD,
        points: presets::POINTS,
        anchors: MODEL2_ANCHORS,
    }
}

pub fn tradeoff(args: &TradeoffArgs) -> Result<()> {
    let started = chrono::Utc::now();
    let mut cfg = match &args.common.config {
        Some(p) => config::load_as(p, "tradeoff", |c| match c {
            RunConfig::Tradeoff(t) => Some(t),
            _ => None,
        })?,
        None => default_tradeoff(),
    };
    if let Some(d) = &args.directions {
        cfg.directions = config::parse_directions(d)?;
    }
    if let Some(s) = args.spread {
        cfg.spread = s;
    }
    if let Some(n) = args.points {
        cfg.points = n;
    }
    if let Some(a) = &args.anchors {
        cfg.anchors = config::parse_pair(a)?;
    }
    if !(0.0..1.0).contains(&cfg.spread) || cfg.points < 4 {
        return Err(usage("need 0 <= spread < 1 and at least 4 points"));
    }
    cfg.template.params = vec![cfg.anchors.1];
    args.common.apply(&mut cfg.template)?;

    let ckpt = args.common.checkpoint_dir();
    let mut rows = Vec::new();
    let curve = tradeoff_curve(
        &cfg.directions,
        &cfg.template,
        cfg.spread,
        cfg.points,
        cfg.anchors,
        ckpt.as_deref(),
        |r, cached| {
            progress(r, cached);
            let family = match r.config.model {
                topoft::noise::NoiseModel::Model2 { p_p, p2, .. } if r.param > 0.0 => {
                    Family::Model2Direction { local: p_p / r.param, gate: p2 / r.param }
                }
                _ => Family::Independent,
            };
            rows.push(SweepRow::new(&family, r));
        },
    )?;
    let mut out = OutDir::create(&args.common.out)?;
    out.csv("sweep.csv", &rows)?;
    #[derive(Serialize)]
    struct Row {
        local: f64,
        gate: f64,
        t_c: f64,
        t_c_err: f64,
        p_local_c: f64,
        p2_c: f64,
        nu0: f64,
        r_squared: f64,
    }
    let table: Vec<Row> = curve
        .iter()
        .map(|p| Row {
            local: p.local,
            gate: p.gate,
            t_c: p.t_c,
            t_c_err: p.fit.p_c_err,
            p_local_c: p.p_local_c,
            p2_c: p.p2_c,
            nu0: p.fit.nu0,
            r_squared: p.fit.r_squared,
        })
        .collect();
    out.csv("tradeoff.csv", &table)?;
    out.json("report.json", &curve)?;
    out.manifest(&RunConfig::Tradeoff(cfg), started)
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// A `sweep.csv` produced by `sweep` or `tradeoff`.
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Reads `sweep.csv` rows grouped by model label, in file order.
pub fn read_sweep(path: &Path) -> Result<Vec<(String, Vec<ScalingPoint>)>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut groups: Vec<(String, Vec<ScalingPoint>)> = Vec::new();
    for (i, row) in r.deserialize::<SweepRow>().enumerate() {
        let row = row.map_err(|e| usage(format!("{} row {}: {e}", path.display(), i + 1)))?;
        let pt = ScalingPoint {
            l: row.l as f64,
            p: row.p_or_q,
            f: row.rate,
            sigma: (row.hi95 - row.lo95) / (2.0 * Z95),
        };
        match groups.iter_mut().find(|g| g.0 == row.model) {
            Some(g) => g.1.push(pt),
            None => groups.push((row.model, vec![pt])),
        }
    }
    Ok(groups)
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let started = chrono::Utc::now();
    let cfg = match (&args.input, &args.config) {
        (Some(input), None) => FitConfig { input: input.clone() },
        (None, Some(p)) => config::load_as(p, "fit", |c| match c {
            RunConfig::Fit(f) => Some(f),
            _ => None,
        })?,
        _ => return Err(usage("give a sweep.csv or --config")),
    };
    let groups = read_sweep(&cfg.input)?;
    if groups.is_empty() {
        return Err(usage(format!("{} has no rows", cfg.input.display())));
    }
    let mut rows = Vec::new();
    for (model, pts) in &groups {
        let f = fit_scaling(pts).map_err(|e| anyhow::anyhow!("fit of {model}: {e}"))?;
        eprintln!("{model}: p_c = {:.6} +- {:.6}, nu0 = {:.3}, R^2 = {:.5}", f.p_c, f.p_c_err, f.nu0, f.r_squared);
        rows.push(FitRow::new(model.clone(), &f));
    }
    let mut out = OutDir::create(&args.out)?;
    out.csv("fit.csv", &rows)?;
    out.manifest(&RunConfig::Fit(cfg), started)
}
