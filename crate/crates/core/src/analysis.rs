//! Monte Carlo threshold estimation.
//!
//! Trial batches run sample, syndrome, matching and classification per trial; trial `t`
//! of a batch seeded with `s` always draws from stream `t` of `s`, so results do not
//! depend on the number of worker threads. Sweeps persist one checkpoint file per
//! point. Thresholds come from the scaling ansatz `F = A + B x + C x^2` with
//! `x = (p - p_c) L^(1/nu0)`, or from pairwise crossings of failure curves.

use crate::decoder::{EdgeWeights, GraphMode, MatchingDecoder};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Complex, Lattice3D, LatticeSpec};
use crate::noise::{trial_rng, EdgeMoments, NoiseModel, RpgmParams, Sampler};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Which complexes are decoded and what counts as a failure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tracked {
    Primal,
    Dual,
    /// Both are decoded; a trial fails if either does.
    #[default]
    Either,
}

impl Tracked {
    fn complexes(self) -> &'static [Complex] {
        match self {
            Tracked::Primal => &[Complex::Primal],
            Tracked::Dual => &[Complex::Dual],
            Tracked::Either => &[Complex::Primal, Complex::Dual],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tracked::Primal => "primal",
            Tracked::Dual => "dual",
            Tracked::Either => "either",
        }
    }
}

/// Edge costs handed to the matching decoder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// `ln((1-q)/q)` per edge from the model's per-edge flip rate.
    LogLikelihood,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecoderOptions {
    pub graph: GraphMode,
    pub weighting: Weighting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub spec: LatticeSpec,
    pub model: NoiseModel,
    pub n_trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub tracked: Tracked,
    #[serde(default)]
    pub decoder: DecoderOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialBatchResult {
    pub config: BatchConfig,
    /// Linear size `L` (the x extent).
    pub l: usize,
    /// The swept parameter of the point (`q`, `p1` or the Model 2 scale).
    pub param: f64,
    pub n_trials: u64,
    pub failures_primal: Option<u64>,
    pub failures_dual: Option<u64>,
    pub n_failures: u64,
    pub rate: f64,
    pub wilson: (f64, f64),
    /// Trials whose sparse matching graph had no perfect matching.
    pub fallbacks: u64,
}

impl TrialBatchResult {
    /// Standard deviation used to weight fits: the 95% interval half-width over `Z95`.
    pub fn sigma(&self) -> f64 {
        (self.wilson.1 - self.wilson.0) / (2.0 * Z95)
    }
}

/// Per-edge flip rate of an edge-flip model, for log-likelihood weights.
fn edge_rate(model: &NoiseModel) -> f64 {
    match *model {
        NoiseModel::Independent { q } => q,
        NoiseModel::Model1 { p1 } => 2.0 * p1 / 3.0,
        NoiseModel::Model2 { .. } => crate::noise::analytic_q(model, false)
            .map(|r| r.q1 + 4.0 * r.q2)
            .unwrap_or(0.0),
    }
}

fn build_decoder(
    lattice: &Lattice3D,
    complex: Complex,
    model: &NoiseModel,
    opts: &DecoderOptions,
) -> Result<MatchingDecoder> {
    let weights = match opts.weighting {
        Weighting::Uniform => EdgeWeights::Uniform,
        Weighting::LogLikelihood => {
            let q = edge_rate(model).clamp(1e-9, 0.25);
            let rates = lattice.points(complex, 1).iter().map(|p| {
                if lattice.near_defect_surface(p) {
                    2.0 * q
                } else {
                    q
                }
            });
            EdgeWeights::log_likelihood(rates, 1000.0)
        }
    };
    MatchingDecoder::new(lattice, complex, weights, opts.graph)
}

#[derive(Clone, Copy, Default)]
struct Tally {
    primal: u64,
    dual: u64,
    either: u64,
    fallbacks: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            primal: self.primal + o.primal,
            dual: self.dual + o.dual,
            either: self.either + o.either,
            fallbacks: self.fallbacks + o.fallbacks,
        }
    }
}

/// Runs `n_trials` independent trials. The result is identical for any thread count.
pub fn run_batch(cfg: &BatchConfig) -> Result<TrialBatchResult> {
    run_batch_param(cfg, model_param(&cfg.model))
}

/// The headline rate of a model: `q`, `p1`, or `p2` (the local rate when `p2 = 0`).
pub fn model_param(model: &NoiseModel) -> f64 {
    match *model {
        NoiseModel::Independent { q } => q,
        NoiseModel::Model1 { p1 } => p1,
        NoiseModel::Model2 { p_p, p2, .. } => {
            if p2 > 0.0 {
                p2
            } else {
                p_p
            }
        }
    }
}

fn run_batch_param(cfg: &BatchConfig, param: f64) -> Result<TrialBatchResult> {
    if cfg.n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
    }
    cfg.model.validate()?;
    let lattice = Lattice3D::from_spec(&cfg.spec)?;
    let sampler = Sampler::new(&lattice);
    let decoders: Vec<MatchingDecoder> = cfg
        .tracked
        .complexes()
        .iter()
        .map(|&c| build_decoder(&lattice, c, &cfg.model, &cfg.decoder))
        .collect::<Result<_>>()?;

    let tally = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| -> Result<Tally> {
            let mut rng = trial_rng(cfg.seed, t);
            let errors = sampler.sample(&lattice, &cfg.model, &mut rng, false)?;
            let mut out = Tally::default();
            for dec in &decoders {
                let syn = crate::decoder::extract_syndrome(&lattice, &errors, dec.complex());
                let corr = dec.decode(&lattice, &syn)?;
                out.fallbacks += corr.fell_back as u64;
                let (_, ok) = crate::decoder::classify_residual(
                    &lattice,
                    dec.complex(),
                    errors.edges(dec.complex()),
                    &corr.chain,
                )?;
                if !ok {
                    match dec.complex() {
                        Complex::Primal => out.primal = 1,
                        Complex::Dual => out.dual = 1,
                    }
                    out.either = 1;
                }
            }
            Ok(out)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let has = |c: Complex| cfg.tracked.complexes().contains(&c);
    let n = cfg.n_trials;
    Ok(TrialBatchResult {
        config: cfg.clone(),
        l: cfg.spec.dims[0],
        param,
        n_trials: n,
        failures_primal: has(Complex::Primal).then_some(tally.primal),
        failures_dual: has(Complex::Dual).then_some(tally.dual),
        n_failures: tally.either,
        rate: tally.either as f64 / n as f64,
        wilson: wilson_interval(tally.either, n, Z95),
        fallbacks: tally.fallbacks,
    })
}

/// Shape of the lattice used at size `L`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `L x L x L`, periodic.
    #[default]
    Torus,
    /// `L x L x 2L`, periodic, with the upper half a defect.
    NearDefect,
}

impl Geometry {
    pub fn spec(self, l: usize) -> LatticeSpec {
        match self {
            Geometry::Torus => LatticeSpec {
                dims: [l, l, l],
                boundary: Boundary::Periodic,
            },
            Geometry::NearDefect => LatticeSpec {
                dims: [l, l, 2 * l],
                boundary: Boundary::DefectSlab { defect_depth: l },
            },
        }
    }
}

/// A one-parameter family of noise models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independent,
    Model1,
    /// Model 2 with rates `t * (local, local, local, gate)`.
    Model2Direction { local: f64, gate: f64 },
}

impl Family {
    pub fn model(&self, t: f64) -> NoiseModel {
        match *self {
            Family::Independent => NoiseModel::Independent { q: t },
            Family::Model1 => NoiseModel::Model1 { p1: t },
            Family::Model2Direction { local, gate } => NoiseModel::Model2 {
                p_p: local * t,
                p_s: local * t,
                p_m: local * t,
                p2: gate * t,
            },
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Family::Independent => "independent".into(),
            Family::Model1 => "model1".into(),
            Family::Model2Direction { local, gate } => format!("model2-l{local}-g{gate}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: Family,
    #[serde(default)]
    pub geometry: Geometry,
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub n_trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub tracked: Tracked,
    #[serde(default)]
    pub decoder: DecoderOptions,
}

/// Grid of `count` values spanning `center * (1 - spread) ..= center * (1 + spread)`.
pub fn param_grid(center: f64, spread: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![center];
    }
    (0..count)
        .map(|i| center * (1.0 - spread + 2.0 * spread * i as f64 / (count - 1) as f64))
        .collect()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed of the point `(L, param)` of a sweep seeded with `seed`.
pub fn point_seed(seed: u64, l: usize, param: f64) -> u64 {
    splitmix(splitmix(seed ^ (l as u64).rotate_left(40)) ^ param.to_bits())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.params.is_empty() {
            return Err(Error::InvalidArgument("sweep needs sizes and parameters".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn batch(&self, l: usize, t: f64) -> BatchConfig {
        BatchConfig {
            spec: self.geometry.spec(l),
            model: self.family.model(t),
            n_trials: self.n_trials,
            seed: point_seed(self.seed, l, t),
            tracked: self.tracked,
            decoder: self.decoder,
        }
    }

    /// File name of the checkpoint of point `(l, t)`.
    pub fn checkpoint_name(&self, l: usize, t: f64) -> String {
        let graph = match self.decoder.graph {
            GraphMode::Complete => "complete".to_string(),
            GraphMode::Sparse { k } => format!("k{k}"),
        };
        let weight = match self.decoder.weighting {
            Weighting::Uniform => "unif",
            Weighting::LogLikelihood => "llr",
        };
        format!(
            "{:?}_{}_L{}_t{:.6e}_n{}_s{}_{}_{}_{}.json",
            self.geometry,
            self.family.label(),
            l,
            t,
            self.n_trials,
            self.seed,
            self.tracked.name(),
            graph,
            weight
        )
        .to_lowercase()
    }
}

/// Loads a checkpoint if it exists and was produced by the same batch configuration.
pub fn load_checkpoint(path: &Path, expected: &BatchConfig) -> Result<Option<TrialBatchResult>> {
    if !path.exists() {
        return Ok(None);
    }
    let r: TrialBatchResult = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok((r.config == *expected).then_some(r))
}

pub fn save_checkpoint(path: &Path, r: &TrialBatchResult) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_string_pretty(r)?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

/// Runs every `(L, t)` point, reusing checkpoints in `dir` when present. `progress`
/// sees each point as it completes, with a flag telling whether it came from disk.
pub fn run_sweep(
    cfg: &SweepConfig,
    dir: Option<&Path>,
    mut progress: impl FnMut(&TrialBatchResult, bool),
) -> Result<Vec<TrialBatchResult>> {
    cfg.validate()?;
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    let mut out = Vec::new();
    for &l in &cfg.sizes {
        for &t in &cfg.params {
            let batch = cfg.batch(l, t);
            let path: Option<PathBuf> = dir.map(|d| d.join(cfg.checkpoint_name(l, t)));
            if let Some(p) = &path {
                if let Some(r) = load_checkpoint(p, &batch)? {
                    progress(&r, true);
                    out.push(r);
                    continue;
                }
            }
            let r = run_batch_param(&batch, t)?;
            if let Some(p) = &path {
                save_checkpoint(p, &r)?;
            }
            progress(&r, false);
            out.push(r);
        }
    }
    Ok(out)
}

/// Fit input: failure rate `f` with standard deviation `sigma` at size `l`, parameter `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub l: f64,
    pub p: f64,
    pub f: f64,
    pub sigma: f64,
}

impl From<&TrialBatchResult> for ScalingPoint {
    fn from(r: &TrialBatchResult) -> Self {
        ScalingPoint {
            l: r.l as f64,
            p: r.param,
            f: r.rate,
            sigma: r.sigma(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p_c: f64,
    pub nu0: f64,
    pub r_squared: f64,
    pub chi2: f64,
    pub dof: usize,
    /// Standard errors of `p_c` and `nu0` from the curvature of `chi2`.
    pub p_c_err: f64,
    pub nu0_err: f64,
}

/// Weighted linear solve for `(A, B, C)` at fixed `(p_c, nu0)`; returns them and `chi2`.
fn profile(points: &[ScalingPoint], p_c: f64, nu0: f64) -> Option<([f64; 3], f64)> {
    let mut m = Matrix3::zeros();
    let mut v = Vector3::zeros();
    for pt in points {
        let x = (pt.p - p_c) * pt.l.powf(1.0 / nu0);
        let w = 1.0 / (pt.sigma * pt.sigma);
        let row = Vector3::new(1.0, x, x * x);
        m += row * row.transpose() * w;
        v += row * (w * pt.f);
    }
    let abc = m.lu().solve(&v)?;
    let chi2 = points
        .iter()
        .map(|pt| {
            let x = (pt.p - p_c) * pt.l.powf(1.0 / nu0);
            let r = (pt.f - abc[0] - abc[1] * x - abc[2] * x * x) / pt.sigma;
            r * r
        })
        .sum();
    Some(([abc[0], abc[1], abc[2]], chi2))
}

/// Minimizes `f` with the Nelder-Mead simplex method from `start` with initial steps `step`.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    step: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step[i];
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (simplex[n].1 - simplex[0].1).abs();
        if spread <= tol * (simplex[0].1.abs() + tol) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (towards, ft) = if fr < worst.1 { (&reflected, fr) } else { (&worst.0, worst.1) };
            let contracted = combine(&centroid, towards, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = combine(&best, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Weighted least-squares fit of the scaling ansatz over `(A, B, C, p_c, nu0)`.
///
/// `(A, B, C)` are solved linearly for each `(p_c, nu0)`; the outer search is a grid
/// scan followed by simplex refinement.
pub fn fit_scaling(points: &[ScalingPoint]) -> Result<ScalingFit> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.l).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 lattice sizes, got {}", sizes.len())));
    }
    for &l in &sizes {
        let mut ps: Vec<f64> = points.iter().filter(|p| p.l == l).map(|p| p.p).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        if ps.len() < 4 {
            return Err(Error::Fit(format!("size {l} has {} distinct parameters, need 4", ps.len())));
        }
    }
    if points.iter().any(|p| !(p.sigma > 0.0) || !p.f.is_finite() || !p.p.is_finite()) {
        return Err(Error::Fit("every point needs a finite rate and positive sigma".into()));
    }
    let pmin = points.iter().map(|p| p.p).fold(f64::INFINITY, f64::min);
    let pmax = points.iter().map(|p| p.p).fold(f64::NEG_INFINITY, f64::max);
    let width = pmax - pmin;
    // Search in (u, ln nu0) with p_c = pmin + u * width.
    let objective = |z: &[f64]| -> f64 {
        let p_c = pmin + z[0] * width;
        let nu0 = z[1].exp();
        profile(points, p_c, nu0).map_or(f64::INFINITY, |(_, c)| c)
    };
    let mut best = (vec![0.5, 0.0], f64::INFINITY);
    for i in 0..=40 {
        for j in 0..=40 {
            let z = vec![-0.25 + 1.5 * i as f64 / 40.0, (0.3f64).ln() + (3.0f64 / 0.3).ln() * j as f64 / 40.0];
            let v = objective(&z);
            if v < best.1 {
                best = (z, v);
            }
        }
    }
    let (mut z, mut v) = (best.0, best.1);
    for _ in 0..4 {
        let (z2, v2) = nelder_mead(objective, &z, &[0.02, 0.05], 1e-15, 4000);
        let done = (v - v2).abs() <= 1e-14 * (1.0 + v.abs());
        z = z2;
        v = v2;
        if done {
            break;
        }
    }
    let p_c = pmin + z[0] * width;
    let nu0 = z[1].exp();
    let (abc, chi2) = profile(points, p_c, nu0)
        .ok_or_else(|| Error::Fit("singular design at the optimum".into()))?;

    let wsum: f64 = points.iter().map(|p| 1.0 / (p.sigma * p.sigma)).sum();
    let mean = points.iter().map(|p| p.f / (p.sigma * p.sigma)).sum::<f64>() / wsum;
    let ss_tot: f64 = points.iter().map(|p| ((p.f - mean) / p.sigma).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - chi2 / ss_tot).clamp(0.0, 1.0) } else { 1.0 };

    // Curvature of the profiled chi2 in (p_c, nu0).
    let g = |a: f64, b: f64| profile(points, a, b).map_or(f64::INFINITY, |(_, c)| c);
    let hp = 1e-3 * width.max(1e-12);
    let hn = 1e-3 * nu0;
    let f0 = g(p_c, nu0);
    let faa = (g(p_c + hp, nu0) - 2.0 * f0 + g(p_c - hp, nu0)) / (hp * hp);
    let fbb = (g(p_c, nu0 + hn) - 2.0 * f0 + g(p_c, nu0 - hn)) / (hn * hn);
    let fab = (g(p_c + hp, nu0 + hn) - g(p_c + hp, nu0 - hn) - g(p_c - hp, nu0 + hn)
        + g(p_c - hp, nu0 - hn))
        / (4.0 * hp * hn);
    let det = faa * fbb - fab * fab;
    let (p_c_err, nu0_err) = if det > 0.0 && faa > 0.0 {
        ((2.0 * fbb / det).sqrt(), (2.0 * faa / det).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ScalingFit {
        a: abc[0],
        b: abc[1],
        c: abc[2],
        p_c,
        nu0,
        r_squared,
        chi2,
        dof: points.len().saturating_sub(5),
        p_c_err,
        nu0_err,
    })
}

/// Crossing of two failure curves sampled on the same parameters: the root of a
/// weighted straight-line fit to their difference. Returns the crossing and its
/// standard error, or `None` when the difference has no usable slope.
pub fn curve_crossing(a: &[ScalingPoint], b: &[ScalingPoint]) -> Option<(f64, f64)> {
    let mut rows = Vec::new();
    for pa in a {
        if let Some(pb) = b.iter().find(|pb| pb.p == pa.p) {
            let d = pa.f - pb.f;
            let s2 = pa.sigma * pa.sigma + pb.sigma * pb.sigma;
            rows.push((pa.p, d, 1.0 / s2));
        }
    }
    if rows.len() < 2 {
        return None;
    }
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let mx = rows.iter().map(|r| r.0 * r.2).sum::<f64>() / sw;
    let my = rows.iter().map(|r| r.1 * r.2).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - mx) * (r.1 - my)).sum();
    if sxx <= 0.0 || sxy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let root = mx - my / slope;
    // Var(root) from Var(my) = 1/sw and Var(slope) = 1/sxx (independent at the mean).
    let var = (1.0 / sw + (root - mx).powi(2) / sxx) / (slope * slope);
    Some((root, var.sqrt()))
}

/// Groups sweep results by size, in ascending size and parameter order.
pub fn by_size(results: &[TrialBatchResult]) -> Vec<(usize, Vec<ScalingPoint>)> {
    let mut sizes: Vec<usize> = results.iter().map(|r| r.l).collect();
    sizes.sort();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|l| {
            let mut pts: Vec<ScalingPoint> =
                results.iter().filter(|r| r.l == l).map(ScalingPoint::from).collect();
            pts.sort_by(|a, b| a.p.total_cmp(&b.p));
            (l, pts)
        })
        .collect()
}

/// Crossings of consecutive sizes: `((L1, L2), crossing, stderr)`.
pub fn crossings(results: &[TrialBatchResult]) -> Vec<((usize, usize), f64, f64)> {
    let groups = by_size(results);
    groups
        .windows(2)
        .filter_map(|w| {
            curve_crossing(&w[0].1, &w[1].1).map(|(x, s)| ((w[0].0, w[1].0), x, s))
        })
        .collect()
}

/// One direction of the local/gate trade-off and its fitted threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub local: f64,
    pub gate: f64,
    /// Threshold of the scale `t`.
    pub t_c: f64,
    pub p_local_c: f64,
    pub p2_c: f64,
    pub fit: ScalingFit,
}

/// Grid center for a direction: the straight line joining the two single-mechanism
/// thresholds `(local_c, 0)` and `(0, gate_c)` of the trade-off plane.
pub fn direction_center(local: f64, gate: f64, local_c: f64, gate_c: f64) -> f64 {
    1.0 / (local / local_c + gate / gate_c)
}

/// Fits a threshold along each `(local, gate)` direction of Model 2 from a sweep
/// template whose parameter grid is rescaled around `direction_center`.
pub fn tradeoff_curve(
    directions: &[(f64, f64)],
    template: &SweepConfig,
    spread: f64,
    points: usize,
    anchors: (f64, f64),
    dir: Option<&Path>,
    mut progress: impl FnMut(&TrialBatchResult, bool),
) -> Result<Vec<TradeoffPoint>> {
    let mut out = Vec::new();
    for &(local, gate) in directions {
        if local < 0.0 || gate < 0.0 || local + gate == 0.0 {
            return Err(Error::InvalidArgument(format!("bad direction ({local}, {gate})")));
        }
        let center = direction_center(local, gate, anchors.0, anchors.1);
        let cfg = SweepConfig {
            family: Family::Model2Direction { local, gate },
            params: param_grid(center, spread, points),
            ..template.clone()
        };
        let results = run_sweep(&cfg, dir, &mut progress)?;
        let pts: Vec<ScalingPoint> = results.iter().map(ScalingPoint::from).collect();
        let fit = fit_scaling(&pts)?;
        out.push(TradeoffPoint {
            local,
            gate,
            t_c: fit.p_c,
            p_local_c: local * fit.p_c,
            p2_c: gate * fit.p_c,
            fit,
        });
    }
    Ok(out)
}

/// Empirical `(q1, q2)` of a model with jackknife standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingEstimate {
    pub q1: f64,
    pub q2: f64,
    pub q1_err: f64,
    pub q2_err: f64,
    /// Number of four-edge faces whose opposite pairs entered the estimate.
    pub faces: u64,
}

/// Samples `model` on an `L^3` torus until at least `min_faces` faces (both complexes)
/// have been observed, then inverts the edge and pair moments. Errors come from a
/// delete-one jackknife over `groups` contiguous groups of samples.
pub fn estimate_mapping(
    model: &NoiseModel,
    l: usize,
    min_faces: u64,
    seed: u64,
    groups: usize,
) -> Result<MappingEstimate> {
    let lattice = Lattice3D::build([l, l, l], Boundary::Periodic)?;
    let sampler = Sampler::new(&lattice);
    let faces_per_sample = (lattice.count(Complex::Primal, 2) + lattice.count(Complex::Dual, 2)) as u64;
    let samples = min_faces.div_ceil(faces_per_sample).max(groups as u64);
    let groups = groups.max(2);
    let per_group = samples.div_ceil(groups as u64);
    let moments: Vec<EdgeMoments> = (0..groups as u64)
        .into_par_iter()
        .map(|g| -> Result<EdgeMoments> {
            let mut m = EdgeMoments::default();
            for t in g * per_group..(g + 1) * per_group {
                let mut rng = trial_rng(seed, t);
                let e = sampler.sample(&lattice, model, &mut rng, false)?;
                m.observe(&lattice, Complex::Primal, &e.primal);
                m.observe(&lattice, Complex::Dual, &e.dual);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut total = EdgeMoments::default();
    for m in &moments {
        total.add(m);
    }
    let est = |m: &EdgeMoments| -> Result<RpgmParams> {
        m.estimate()
            .ok_or_else(|| Error::Fit("edge moments are not positive".into()))
    };
    let full = est(&total)?;
    let mut loo = Vec::with_capacity(groups);
    for m in &moments {
        let mut rest = total;
        rest.edges -= m.edges;
        rest.edge_flips -= m.edge_flips;
        rest.pairs -= m.pairs;
        rest.pair_odd -= m.pair_odd;
        loo.push(est(&rest)?);
    }
    let k = groups as f64;
    let jk = |f: fn(&RpgmParams) -> f64| -> f64 {
        let mean = loo.iter().map(f).sum::<f64>() / k;
        ((k - 1.0) / k * loo.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>()).sqrt()
    };
    Ok(MappingEstimate {
        q1: full.q1,
        q2: full.q2,
        q1_err: jk(|r| r.q1),
        q2_err: jk(|r| r.q2),
        faces: total.pairs / 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for (k, n) in [(0, 10), (3, 10), (10, 10), (500, 30000)] {
            let (lo, hi) = wilson_interval(k, n, Z95);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        // Textbook value: 8 of 10 gives about (0.490, 0.943).
        let (lo, hi) = wilson_interval(8, 10, Z95);
        assert!((lo - 0.4902).abs() < 1e-3 && (hi - 0.9433).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, v) = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], 1e-18, 10000);
        assert!(v < 1e-12, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn grid_spans_center() {
        let g = param_grid(0.01, 0.15, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 0.0085).abs() < 1e-15 && (g[6] - 0.0115).abs() < 1e-15);
        assert!((g[3] - 0.01).abs() < 1e-15);
    }
}

/// Bulk thresholds of the single-mechanism Model 2 directions `(local, gate)` used to
/// center trade-off grids.
pub const MODEL2_ANCHORS: (f64, f64) = (0.0146, 0.0096);

/// Standard experiment configurations.
pub mod presets {
    use super::*;

    pub const SIZES: [usize; 3] = [8, 12, 16];
    pub const SPREAD: f64 = 0.15;
    pub const POINTS: usize = 7;
    pub const TRIALS: u64 = 30_000;

    fn torus(family: Family, center: f64, seed: u64) -> SweepConfig {
        SweepConfig {
            family,
            geometry: Geometry::Torus,
            sizes: SIZES.to_vec(),
            params: param_grid(center, SPREAD, POINTS),
            n_trials: TRIALS,
            seed,
            tracked: Tracked::Primal,
            decoder: DecoderOptions::default(),
        }
    }

    /// Independent flips on the torus around `q = 0.0293`.
    pub fn independent() -> SweepConfig {
        torus(Family::Independent, 0.0293, 11)
    }

    /// A Model 2 direction, gridded around the line joining the anchors.
    pub fn model2_direction(local: f64, gate: f64) -> SweepConfig {
        let (lc, gc) = MODEL2_ANCHORS;
        torus(
            Family::Model2Direction { local, gate },
            direction_center(local, gate, lc, gc),
            12,
        )
    }

    pub fn gate_only() -> SweepConfig {
        model2_direction(0.0, 1.0)
    }

    /// Directions of the trade-off curve: local only, equal rates, gate only.
    pub const TRADEOFF_DIRECTIONS: [(f64, f64); 3] = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

    /// Independent flips on `L x L x 2L` next to a defect, both complexes decoded with
    /// log-likelihood weights.
    pub fn near_defect() -> SweepConfig {
        SweepConfig {
            family: Family::Independent,
            geometry: Geometry::NearDefect,
            sizes: SIZES.to_vec(),
            params: param_grid(0.028, 0.2, POINTS),
            n_trials: 15_000,
            seed: 13,
            tracked: Tracked::Either,
            decoder: DecoderOptions {
                graph: GraphMode::default(),
                weighting: Weighting::LogLikelihood,
            },
        }
    }

    /// Looks a preset up by name.
    pub fn by_name(name: &str) -> Option<SweepConfig> {
        Some(match name {
            "independent" => independent(),
            "gate-only" => gate_only(),
            "local-only" => model2_direction(1.0, 0.0),
            "equal" => model2_direction(1.0, 1.0),
            "near-defect" => near_defect(),
            _ => return None,
        })
    }

    pub const NAMES: [&str; 5] = ["independent", "gate-only", "local-only", "equal", "near-defect"];
}
