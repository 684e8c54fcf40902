//! The oracle subcommand: library results against brute-force oracles.

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use topoft::checks::{self, Check};

use crate::config::{self, RunConfig};
use crate::output::{print_stdout, OutDir};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    /// Sampled faces per rate of the noise-mapping check.
    pub mapping_faces: u64,
    pub algebra_instances: usize,
    pub decoder_syndromes: usize,
    pub random_channels: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: 1,
            mapping_faces: 10_000_000,
            algebra_instances: 1000,
            decoder_syndromes: 1000,
            random_channels: 100,
        }
    }
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Smaller instance counts for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Reported with exit status 3.
#[derive(Debug)]
pub struct OracleFailure(pub usize);

impl std::fmt::Display for OracleFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} oracle check(s) failed", self.0)
    }
}

impl std::error::Error for OracleFailure {}

pub fn run_checks(cfg: &OracleConfig) -> Result<Vec<Check>> {
    let s = cfg.seed;
    Ok(vec![
        checks::mapping(&[0.002, 0.0096, 0.02], 8, cfg.mapping_faces, 3.0, s)?,
        checks::reed_muller(),
        checks::rational_thresholds(),
        checks::channels(cfg.random_channels, s),
        checks::algebra(cfg.algebra_instances, 6, s)?,
        checks::decoder_optimality(cfg.decoder_syndromes, 4, 8, s)?,
    ])
}

pub fn oracle(args: &OracleArgs) -> Result<()> {
    let started = chrono::Utc::now();
    let mut cfg = match &args.config {
        Some(p) => config::load_as(p, "oracle", |c| match c {
            RunConfig::Oracle(o) => Some(o),
            _ => None,
        })?,
        None => OracleConfig::default(),
    };
    if args.quick {
        cfg.mapping_faces = 1_000_000;
        cfg.algebra_instances = 100;
        cfg.decoder_syndromes = 100;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let results = run_checks(&cfg)?;
    for c in &results {
        print_stdout(&format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))?;
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    let mut out = OutDir::create(&args.out)?;
    out.json("report.json", &serde_json::json!({ "checks": results, "failed": failed }))?;
    out.manifest(&RunConfig::Oracle(cfg), started)?;
    if failed > 0 {
        return Err(OracleFailure(failed).into());
    }
    Ok(())
}
