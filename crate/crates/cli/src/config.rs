//! Run configurations: JSON files, presets and parameter ranges.

use anyhow::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use topoft::analysis::SweepConfig;

/// Error reported with exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffConfig {
    /// Sweep settings shared by every direction; its family and parameters are replaced.
    pub template: SweepConfig,
    pub directions: Vec<(f64, f64)>,
    pub spread: f64,
    pub points: usize,
    pub anchors: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum RunConfig {
    Sweep(SweepConfig),
    Fit(FitConfig),
    Tradeoff(TradeoffConfig),
    NearDefect(SweepConfig),
    Analytic(crate::analytic::AnalyticConfig),
    Overhead(crate::analytic::OverheadConfig),
    Oracle(crate::oracle::OracleConfig),
}

impl RunConfig {
    pub fn experiment(&self) -> &'static str {
        match self {
            RunConfig::Sweep(_) => "sweep",
            RunConfig::Fit(_) => "fit",
            RunConfig::Tradeoff(_) => "tradeoff",
            RunConfig::NearDefect(_) => "near_defect",
            RunConfig::Analytic(_) => "analytic",
            RunConfig::Overhead(_) => "overhead",
            RunConfig::Oracle(_) => "oracle",
        }
    }
}

/// Reads a config file, reporting the JSON path of the first bad field.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let bad = |at: String, msg: String| usage(format!("invalid config {} at `{at}`: {msg}", path.display()));
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| bad(".".into(), e.to_string()))?;
    let tag = value
        .as_object_mut()
        .and_then(|o| o.remove("experiment"))
        .ok_or_else(|| bad(".".into(), "missing field `experiment`".into()))?;
    let tag = tag
        .as_str()
        .ok_or_else(|| bad("experiment".into(), "expected a string".into()))?
        .to_string();
    fn body<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> std::result::Result<T, (String, String)> {
        serde_path_to_error::deserialize(v).map_err(|e| (e.path().to_string(), e.inner().to_string()))
    }
    let parsed = match tag.as_str() {
        "sweep" => body(value).map(RunConfig::Sweep),
        "fit" => body(value).map(RunConfig::Fit),
        "tradeoff" => body(value).map(RunConfig::Tradeoff),
        "near_defect" => body(value).map(RunConfig::NearDefect),
        "analytic" => body(value).map(RunConfig::Analytic),
        "overhead" => body(value).map(RunConfig::Overhead),
        "oracle" => body(value).map(RunConfig::Oracle),
        other => Err(("experiment".into(), format!("unknown experiment `{other}`"))),
    };
    parsed.map_err(|(at, msg)| bad(at, msg))
}

/// Loads `path` and checks that it describes the experiment `want`.
pub fn load_as<T>(path: &Path, want: &str, pick: impl FnOnce(RunConfig) -> Option<T>) -> Result<T> {
    let cfg = load(path)?;
    let found = cfg.experiment();
    pick(cfg).ok_or_else(|| {
        usage(format!("config {} is a `{found}` experiment, expected `{want}`", path.display()))
    })
}

/// Parses `a`, `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim().parse::<f64>().map_err(|_| usage(format!("`{t}` is not a number")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || b < a {
                return Err(usage(format!("bad range `{s}`")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| round_sig(a + i as f64 * step)).collect())
        }
        _ => Err(usage(format!("bad range `{s}`, expected start:stop:step"))),
    }
}

/// Rounds to 12 significant digits so range steps print cleanly.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    format!("{x:.11e}").parse().unwrap()
}

pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&l| l >= 2)
                .ok_or_else(|| usage(format!("`{t}` is not a lattice size")))
        })
        .collect()
}

/// Parses directions `local,gate;local,gate;...`.
pub fn parse_directions(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(';')
        .map(|d| {
            let v = parse_values(d)?;
            match v[..] {
                [a, b] => Ok((a, b)),
                _ => Err(usage(format!("direction `{d}` needs two numbers"))),
            }
        })
        .collect()
}

pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let v = parse_values(s)?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(usage(format!("`{s}` needs two numbers"))),
    }
}
