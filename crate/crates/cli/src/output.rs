//! Artifact files: CSV tables, JSON reports and the run manifest.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use topoft::analysis::{Family, TrialBatchResult};

use crate::config::RunConfig;

pub struct OutDir {
    pub dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }

    /// Writes `manifest.json`, listing every file written so far.
    pub fn manifest(mut self, config: &RunConfig, started: chrono::DateTime<chrono::Utc>) -> Result<()> {
        let canonical = serde_json::to_string(config)?;
        let hash: String = Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        let files = std::mem::take(&mut self.files);
        let m = Manifest {
            experiment: config.experiment(),
            config,
            config_sha256: hash,
            seed: seed_of(config),
            code_version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            started: started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
            files,
        };
        self.json("manifest.json", &m)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config: &'a RunConfig,
    config_sha256: String,
    seed: Option<u64>,
    code_version: &'a str,
    threads: usize,
    started: String,
    finished: String,
    files: Vec<String>,
}

fn seed_of(c: &RunConfig) -> Option<u64> {
    match c {
        RunConfig::Sweep(s) | RunConfig::NearDefect(s) => Some(s.seed),
        RunConfig::Tradeoff(t) => Some(t.template.seed),
        RunConfig::Oracle(o) => Some(o.seed),
        _ => None,
    }
}

/// One row of `sweep.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub p_or_q: f64,
    pub model: String,
    pub n_trials: u64,
    pub n_fail: u64,
    pub rate: f64,
    pub lo95: f64,
    pub hi95: f64,
}

impl SweepRow {
    pub fn new(family: &Family, r: &TrialBatchResult) -> Self {
        SweepRow {
            l: r.l,
            p_or_q: r.param,
            model: family.label(),
            n_trials: r.n_trials,
            n_fail: r.n_failures,
            rate: r.rate,
            lo95: r.wilson.0,
            hi95: r.wilson.1,
        }
    }
}

/// Prints to standard output; a closed pipe is not an error.
pub fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}
