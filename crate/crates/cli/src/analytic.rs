//! The closed-form subcommands: analytic and overhead.

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;
use topoft::analytic::*;

use crate::config::{self, usage, RunConfig};
use crate::output::{print_stdout, OutDir};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    pub rates: ErrorRates<f64>,
    /// Include the enumeration of the central S-qubit channel and its discrepancy.
    #[serde(default)]
    pub central_attempt: bool,
    /// Topological threshold of the evaluated direction, if known from a sweep.
    #[serde(default)]
    pub topological: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model 1 depolarizing rate.
    #[arg(long)]
    pub p1: Option<f64>,
    /// Use Model 2 with the rates below (each defaults to 0).
    #[arg(long)]
    pub model2: bool,
    #[arg(long = "pP")]
    pub p_p: Option<f64>,
    #[arg(long = "pS")]
    pub p_s: Option<f64>,
    #[arg(long = "pM")]
    pub p_m: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    /// Also enumerate the central S-qubit channel and report where it departs from the
    /// reference constants.
    #[arg(long)]
    pub central_attempt: bool,
    /// Topological threshold along the direction of the given rates.
    #[arg(long)]
    pub topological: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl AnalyticArgs {
    fn resolve(&self) -> Result<AnalyticConfig> {
        let model2_flags = self.p_p.is_some() || self.p_s.is_some() || self.p_m.is_some() || self.p2.is_some();
        let mut cfg = match &self.config {
            Some(p) => config::load_as(p, "analytic", |c| match c {
                RunConfig::Analytic(a) => Some(a),
                _ => None,
            })?,
            None => AnalyticConfig {
                rates: ErrorRates::Model1 { p1: 0.0 },
                central_attempt: false,
                topological: None,
            },
        };
        if self.p1.is_some() && (self.model2 || model2_flags) {
            return Err(usage("--p1 belongs to Model 1; --model2 takes --pP, --pS, --pM, --p2"));
        }
        if model2_flags && !self.model2 {
            return Err(usage("--pP, --pS, --pM and --p2 need --model2"));
        }
        if let Some(p1) = self.p1 {
            cfg.rates = ErrorRates::Model1 { p1 };
        } else if self.model2 {
            let (p_p, p_s, p_m, p2) = match cfg.rates {
                ErrorRates::Model2 { p_p, p_s, p_m, p2 } => (p_p, p_s, p_m, p2),
                ErrorRates::Model1 { .. } => (0.0, 0.0, 0.0, 0.0),
            };
            cfg.rates = ErrorRates::Model2 {
                p_p: self.p_p.unwrap_or(p_p),
                p_s: self.p_s.unwrap_or(p_s),
                p_m: self.p_m.unwrap_or(p_m),
                p2: self.p2.unwrap_or(p2),
            };
        } else if self.config.is_none() {
            return Err(usage("give --p1, or --model2 with its rates, or --config"));
        }
        cfg.central_attempt |= self.central_attempt;
        if self.topological.is_some() {
            cfg.topological = self.topological;
        }
        Ok(cfg)
    }
}

fn exact(x: Q) -> Value {
    json!({ "exact": x.to_string(), "value": Scalar::to_f64(&x) })
}

fn form_json(f: &ChannelForm) -> Value {
    json!({ "x": f.x.to_string(), "y": f.y.to_string(), "z": f.z.to_string() })
}

fn kind_of(r: &ErrorRates<f64>) -> ModelKind {
    match r {
        ErrorRates::Model1 { .. } => ModelKind::Model1,
        ErrorRates::Model2 { .. } => ModelKind::Model2,
    }
}

fn threshold_table() -> Result<Vec<Value>> {
    let m2 = |l: i64, g: i64| Direction::Model2 { local: Q::from_integer(l), gate: Q::from_integer(g) };
    let mut rows = Vec::new();
    for (name, d) in [
        ("model1", Direction::Model1),
        ("model2 local", m2(1, 0)),
        ("model2 gate", m2(0, 1)),
        ("model2 equal", m2(1, 1)),
    ] {
        let topo = d.reference_topological_threshold().expect("standard direction");
        let c = combined_threshold(d, topo)?;
        rows.push(json!({
            "direction": name,
            "topological": c.topological,
            "reed_muller": exact(c.reed_muller),
            "overall": c.overall,
            "limiting": c.limiting,
        }));
    }
    Ok(rows)
}

/// Every closed-form quantity at the given rates.
pub fn report(cfg: &AnalyticConfig) -> Result<Value> {
    let kind = kind_of(&cfg.rates);
    let form = effective_s_channel_form(kind);
    let channel = form.evaluate(&cfg.rates).map_err(|e| usage(e.to_string()))?;
    let z_form = equivalent_z_rate(kind);
    let p_z = z_form.eval(&cfg.rates);
    let coherent = convert_xy_to_z(&channel);
    let rm_c = rm_leading_order_threshold();
    let rm_c_f = Scalar::to_f64(&rm_c);
    let transfer = rm_exhaustive_oracle(4);
    let full = rm_exhaustive_oracle(15);
    let coeffs: Vec<Value> = transfer
        .q_next
        .iter()
        .map(|t| json!({ "line": "q", "term": t }))
        .chain(transfer.q_tilde_next.iter().map(|t| json!({ "line": "q_tilde", "term": t })))
        .collect();
    // One level of the code applied to the equivalent coherent channel.
    let (q1, qt1) = full.step(coherent.q, coherent.q_tilde);
    let mut out = json!({
        "rates": cfg.rates,
        "effective_channel": {
            "form": form_json(&form),
            "p_i": channel.p_i, "p_x": channel.p_x, "p_y": channel.p_y, "p_z": channel.p_z,
        },
        "equivalent_z": { "form": z_form.to_string(), "pZ": p_z },
        "coherent_z": { "q": coherent.q, "q_tilde": coherent.q_tilde, "after_one_level": { "q": q1, "q_tilde": qt1 } },
        "defect_line_channel": form_json(&enumerate_defect_line_channel()),
        "reed_muller": {
            "transfer_to_fourth_order": coeffs,
            "threshold_full_recursion": rm_threshold(|a, b| full.step(a, b), 1e-10),
            "threshold_fourth_order": rm_threshold(rm_recursion_step, 1e-10),
            "threshold_leading_order": exact(rm_c),
            "pZ_over_threshold": p_z / rm_c_f,
            "below_threshold": p_z < rm_c_f,
        },
        "thresholds": threshold_table()?,
    });
    if let Some(topo) = cfg.topological {
        let dir = match cfg.rates {
            ErrorRates::Model1 { .. } => Direction::Model1,
            ErrorRates::Model2 { p_p, p_s, p_m, p2 } => {
                if p_p != p_s || p_s != p_m {
                    return Err(usage("--topological needs pP = pS = pM to fix a direction"));
                }
                let scale = p_p.max(p2);
                let r = |x: f64| Q::approximate_float(x / scale).ok_or_else(|| usage("rates have no direction"));
                Direction::Model2 { local: r(p_p)?, gate: r(p2)? }
            }
        };
        let c = combined_threshold(dir, topo).map_err(|e| usage(e.to_string()))?;
        out["combined"] = json!({
            "topological": c.topological,
            "reed_muller": exact(c.reed_muller),
            "overall": c.overall,
            "limiting": c.limiting,
        });
    }
    if cfg.central_attempt {
        let a = enumerate_central_channel_attempt();
        out["central_attempt"] = json!({
            "enumerated": form_json(&a.enumerated),
            "reference": form_json(&a.reference),
            "discrepancy": form_json(&a.discrepancy()),
            "agrees": a.agrees(),
        });
    }
    Ok(out)
}

pub fn analytic(args: &AnalyticArgs) -> Result<()> {
    let started = chrono::Utc::now();
    let cfg = args.resolve()?;
    if let ErrorRates::Model2 { p_p, p_s, p_m, p2 } = cfg.rates {
        if [p_p, p_s, p_m, p2].iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(usage("rates must lie in [0, 1]"));
        }
    }
    let value = report(&cfg)?;
    let mut out = OutDir::create(&args.out)?;
    out.json("report.json", &value)?;
    print_stdout(&serde_json::to_string_pretty(&value)?)?;
    out.manifest(&RunConfig::Analytic(cfg), started)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadConfig {
    /// Numbers of non-Clifford rotations.
    pub n: Vec<f64>,
    /// Error rate on S-qubits in the units of `p_c`.
    pub p: f64,
    pub p_c: f64,
    /// Edge flip rate setting the winding decay.
    pub q: f64,
    /// Optional winding estimate at circumference `u` and length `l`.
    #[serde(default)]
    pub winding: Option<(u32, f64)>,
}

#[derive(Args, Debug)]
pub struct OverheadArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Numbers of rotations: `a`, `a,b,...` or `start:stop:step`.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Model 1 rate `p1`; sets `p`, and `q = 2 p1 / 3` unless `--q` is given.
    #[arg(long)]
    pub p1: Option<f64>,
    /// Reed-Muller threshold in the units of `--p1` [default: 1/70].
    #[arg(long)]
    pub p_c: Option<f64>,
    /// Edge flip rate for the winding decay.
    #[arg(long)]
    pub q: Option<f64>,
    /// Winding estimate at even circumference `u`...
    #[arg(long)]
    pub u: Option<u32>,
    /// ...and defect length `l`.
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl OverheadArgs {
    fn resolve(&self) -> Result<OverheadConfig> {
        let mut cfg = match &self.config {
            Some(p) => config::load_as(p, "overhead", |c| match c {
                RunConfig::Overhead(o) => Some(o),
                _ => None,
            })?,
            None => {
                let p1 = self.p1.ok_or_else(|| usage("give --p1 or --config"))?;
                OverheadConfig {
                    n: vec![1e6],
                    p: p1,
                    p_c: 1.0 / 70.0,
                    q: model1_edge_rate(p1),
                    winding: None,
                }
            }
        };
        if let Some(p1) = self.p1 {
            cfg.p = p1;
            cfg.q = model1_edge_rate(p1);
        }
        if let Some(n) = &self.n {
            cfg.n = config::parse_values(n)?;
        }
        if let Some(pc) = self.p_c {
            cfg.p_c = pc;
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(u) = self.u {
            cfg.winding = Some((u, self.l));
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct OverheadRow {
    n: f64,
    o_rm: f64,
    r: f64,
    n_ft: f64,
    n_ft_scaling: f64,
}

pub fn overhead(args: &OverheadArgs) -> Result<()> {
    let started = chrono::Utc::now();
    let cfg = args.resolve()?;
    let mut rows = Vec::new();
    let mut last = None;
    for &n in &cfg.n {
        // Arguments out of range are usage errors; the inputs are all user supplied.
        let o = topoft::analytic::overhead(n, cfg.p, cfg.p_c, cfg.q).map_err(|e| usage(e.to_string()))?;
        rows.push(OverheadRow { n, o_rm: o.o_rm, r: o.r, n_ft: o.n_ft, n_ft_scaling: o.n_ft_scaling });
        last = Some(o);
    }
    let Some(o) = last else {
        return Err(usage("--N needs at least one value"));
    };
    let mut report = json!({
        "p": cfg.p, "p_c": cfg.p_c, "q": cfg.q,
        "gamma": o.gamma, "kappa": o.kappa,
        "rows": rows,
    });
    if let Some((u, l)) = cfg.winding {
        let w = winding_error_probability(u, l, cfg.q).map_err(|e| usage(e.to_string()))?;
        report["winding"] = json!({ "u": u, "l": l, "combinatorial": w.combinatorial, "asymptotic": w.asymptotic });
    }
    let mut out = OutDir::create(&args.out)?;
    out.csv("overhead.csv", &rows)?;
    out.json("report.json", &report)?;
    print_stdout(&serde_json::to_string_pretty(&report)?)?;
    out.manifest(&RunConfig::Overhead(cfg), started)
}
