use proptest::prelude::*;
use topoft::analysis::*;
use topoft::decoder::MatchingDecoder;
use topoft::lattice::*;
use topoft::noise::*;

fn torus_batch(l: usize, q: f64, n: u64, seed: u64, tracked: Tracked) -> BatchConfig {
    BatchConfig {
        spec: LatticeSpec {
            dims: [l, l, l],
            boundary: Boundary::Periodic,
        },
        model: NoiseModel::Independent { q },
        n_trials: n,
        seed,
        tracked,
        decoder: DecoderOptions::default(),
    }
}

#[test]
fn no_noise_no_failures() {
    let r = run_batch(&torus_batch(6, 0.0, 50, 1, Tracked::Either)).unwrap();
    assert_eq!(r.n_failures, 0);
    assert_eq!(r.failures_primal, Some(0));
    assert_eq!(r.failures_dual, Some(0));
    assert_eq!(r.wilson.0, 0.0);
}

fn separated(lo: &TrialBatchResult, hi: &TrialBatchResult) -> bool {
    let s = (lo.sigma().powi(2) + hi.sigma().powi(2)).sqrt();
    hi.rate - lo.rate > 3.0 * s
}

#[test]
fn failure_rate_grows_with_noise() {
    let a = run_batch(&torus_batch(8, 0.02, 10_000, 2, Tracked::Primal)).unwrap();
    let b = run_batch(&torus_batch(8, 0.04, 10_000, 3, Tracked::Primal)).unwrap();
    assert!(separated(&a, &b), "{} vs {}", a.rate, b.rate);
}

#[test]
fn larger_lattice_is_better_below_threshold() {
    let small = run_batch(&torus_batch(4, 0.02, 10_000, 4, Tracked::Primal)).unwrap();
    let large = run_batch(&torus_batch(8, 0.02, 10_000, 5, Tracked::Primal)).unwrap();
    assert!(separated(&large, &small), "{} vs {}", large.rate, small.rate);
}

#[test]
fn batches_do_not_depend_on_thread_count() {
    let cfg = BatchConfig {
        model: NoiseModel::gate_only(0.012),
        ..torus_batch(5, 0.0, 300, 9, Tracked::Either)
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_batch(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
}

#[test]
fn half_flip_rate_gives_uniform_sectors() {
    // At q = 1/2 every edge set is equally likely, so each of the 8 winding sectors of
    // one complex has probability 1/8.
    let lat = Lattice3D::build([4, 4, 4], Boundary::Periodic).unwrap();
    let sampler = Sampler::new(&lat);
    let dec = MatchingDecoder::uniform(&lat, Complex::Primal).unwrap();
    let n = 4000;
    let mut counts = [0u64; 8];
    for t in 0..n {
        let mut rng = trial_rng(77, t);
        let e = sampler.sample(&lat, &NoiseModel::Independent { q: 0.5 }, &mut rng, false).unwrap();
        let r = dec.run(&lat, &e).unwrap();
        counts[r.residual_class.sector()] += 1;
    }
    let expect = n as f64 / 8.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    // 7 degrees of freedom; the 0.999 quantile is 24.3.
    assert!(chi2 < 24.3, "{counts:?}");
}

#[test]
fn scaling_fit_recovers_exact_parameters() {
    let (a, b, c, pc, nu) = (0.5, 2.0, 1.0, 0.0096, 1.0);
    let mut pts = Vec::new();
    for l in [8.0, 12.0, 16.0] {
        for p in param_grid(pc, 0.15, 7) {
            let x: f64 = (p - pc) * f64::powf(l, 1.0 / nu);
            pts.push(ScalingPoint {
                l,
                p,
                f: a + b * x + c * x * x,
                sigma: 0.01,
            });
        }
    }
    let fit = fit_scaling(&pts).unwrap();
    assert!((fit.p_c - pc).abs() < 1e-6, "{fit:?}");
    assert!((fit.nu0 - nu).abs() < 1e-6, "{fit:?}");
    assert!((fit.a - a).abs() < 1e-6 && (fit.b - b).abs() < 1e-4 && (fit.c - c).abs() < 1e-2);
    assert!(fit.r_squared > 0.999999);
}

#[test]
fn degenerate_designs_are_rejected() {
    let pt = |l: f64, p: f64| ScalingPoint { l, p, f: 0.1, sigma: 0.01 };
    let two_sizes: Vec<_> = [8.0, 12.0].iter().flat_map(|&l| (0..5).map(move |i| pt(l, 0.01 + i as f64 * 1e-3))).collect();
    assert!(fit_scaling(&two_sizes).is_err());
    let same_p: Vec<_> = [8.0, 12.0, 16.0].iter().flat_map(|&l| (0..5).map(move |_| pt(l, 0.01))).collect();
    assert!(fit_scaling(&same_p).is_err());
}

#[test]
fn crossing_of_two_lines() {
    let line = |a: f64, b: f64| -> Vec<ScalingPoint> {
        (0..5)
            .map(|i| {
                let p = 0.02 + 0.0025 * i as f64;
                ScalingPoint { l: 0.0, p, f: a + b * p, sigma: 0.01 }
            })
            .collect()
    };
    let (x, s) = curve_crossing(&line(0.0, 10.0), &line(0.15, 5.0)).unwrap();
    assert!((x - 0.03).abs() < 1e-12);
    assert!(s > 0.0);
}

#[test]
fn mapping_estimate_recovers_independent_flips() {
    let est = estimate_mapping(&NoiseModel::Independent { q: 0.03 }, 6, 400_000, 3, 10).unwrap();
    assert!((est.q1 - 0.03).abs() < 4.0 * est.q1_err, "{est:?}");
    assert!(est.q2.abs() < 4.0 * est.q2_err, "{est:?}");
}

#[test]
fn sweep_checkpoints_round_trip() {
    let dir = std::env::temp_dir().join(format!("topoft-sweep-{}", std::process::id()));
    let cfg = SweepConfig {
        family: Family::Independent,
        geometry: Geometry::Torus,
        sizes: vec![4],
        params: vec![0.03, 0.05],
        n_trials: 40,
        seed: 5,
        tracked: Tracked::Primal,
        decoder: DecoderOptions::default(),
    };
    let mut fresh = 0;
    let first = run_sweep(&cfg, Some(&dir), |_, cached| fresh += (!cached) as u32).unwrap();
    assert_eq!(fresh, 2);
    let mut cached = 0;
    let second = run_sweep(&cfg, Some(&dir), |_, c| cached += c as u32).unwrap();
    assert_eq!(cached, 2);
    assert_eq!(first, second);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn near_defect_geometry_runs() {
    let cfg = SweepConfig {
        family: Family::Independent,
        geometry: Geometry::NearDefect,
        sizes: vec![4],
        params: vec![0.02],
        n_trials: 30,
        seed: 1,
        tracked: Tracked::Either,
        decoder: DecoderOptions {
            weighting: Weighting::LogLikelihood,
            ..Default::default()
        },
    };
    let r = run_sweep(&cfg, None, |_, _| {}).unwrap();
    assert_eq!(r[0].config.spec.dims, [4, 4, 8]);
    assert!(r[0].n_failures <= 30);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wilson_interval_contains_point(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}

#[test]
fn preset_checkpoints_reload() {
    let dir = std::env::temp_dir().join(format!("topoft-ck-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for name in presets::NAMES {
        let cfg = presets::by_name(name).unwrap();
        for &l in &cfg.sizes {
            for &t in &cfg.params {
                let r = TrialBatchResult {
                    config: cfg.batch(l, t),
                    l,
                    param: t,
                    n_trials: cfg.n_trials,
                    failures_primal: Some(1),
                    failures_dual: None,
                    n_failures: 1,
                    rate: 1.0 / cfg.n_trials as f64,
                    wilson: (0.0, 0.001),
                    fallbacks: 0,
                };
                let path = dir.join(cfg.checkpoint_name(l, t));
                save_checkpoint(&path, &r).unwrap();
                assert_eq!(load_checkpoint(&path, &cfg.batch(l, t)).unwrap(), Some(r), "{name} L={l} t={t}");
            }
        }
    }
    std::fs::remove_dir_all(dir).unwrap();
}
