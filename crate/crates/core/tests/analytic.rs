use nalgebra::Matrix2;
type Complex64 = nalgebra::Complex<f64>;
use proptest::prelude::*;
use std::sync::OnceLock;
use topoft::analytic::*;
use topoft::Error;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn transfer() -> &'static RmTransfer {
    static T: OnceLock<RmTransfer> = OnceLock::new();
    T.get_or_init(|| rm_exhaustive_oracle(15))
}

#[test]
fn rm_code_structure() {
    let code = RmCode::new();
    assert_eq!(code.g_x.len(), 4);
    assert_eq!(code.g_z.len(), 10);
    // Every stabilizer pair commutes and the logicals anticommute.
    for &x in &code.g_x {
        for &z in &code.g_z {
            assert_eq!((x & z).count_ones() % 2, 0);
        }
        assert_eq!((x & code.logical_z).count_ones() % 2, 0);
    }
    assert_eq!((code.logical_x & code.logical_z).count_ones() % 2, 1);
    assert_eq!(code.syndrome_free().len(), 1 << 11);
}

#[test]
fn rm_decoder_corrects_single_errors_only() {
    let code = RmCode::new();
    assert!(!code.logical_fault(0));
    for j in 0..15 {
        assert!(!code.logical_fault(1 << j));
    }
    let mut weight2_failures = 0;
    for a in 0..15 {
        for b in (a + 1)..15 {
            weight2_failures += code.logical_fault(1 << a | 1 << b) as u32;
        }
    }
    assert_eq!(weight2_failures, 105);
}

#[test]
fn probabilistic_weight_distribution() {
    // Brute-force count of logical failures by error weight, independent of the
    // oracle's bookkeeping.
    let code = RmCode::new();
    let mut n_w = [0u64; 16];
    for e in 0u16..1 << 15 {
        if code.logical_fault(e) {
            n_w[e.count_ones() as usize] += 1;
        }
    }
    assert_eq!(
        n_w,
        [0, 0, 105, 35, 1260, 168, 4725, 435, 6000, 280, 2835, 105, 420, 0, 15, 1]
    );
    let t = transfer();
    for w in 2..16u32 {
        assert_eq!(t.coeff(false, 0, w), n_w[w as usize] as i64, "weight {w}");
    }
}

#[test]
fn recursion_coefficients_to_fourth_order() {
    let t = transfer().truncated(4);
    let mut q_terms: Vec<_> = t.q_next.iter().map(|t| (t.q_tilde_pow, t.q_pow, t.coeff)).collect();
    q_terms.sort();
    assert_eq!(q_terms, vec![(0, 2, 105), (0, 3, 35), (0, 4, 1260), (4, 0, 630)]);
    let mut qt_terms: Vec<_> = t.q_tilde_next.iter().map(|t| (t.q_tilde_pow, t.q_pow, t.coeff)).collect();
    qt_terms.sort();
    assert_eq!(qt_terms, vec![(3, 0, 70), (3, 1, -1680)]);
    for term in t.q_next.iter().chain(&t.q_tilde_next) {
        assert_eq!(term.q_tilde_pow + term.q_pow + term.one_minus_q_pow, 15);
    }
}

#[test]
fn closed_form_step_matches_truncated_oracle() {
    let t = transfer().truncated(4);
    for &(a, b) in &[(0.01, 0.0), (0.02, 0.013), (0.05, -0.04), (0.001, 0.0009)] {
        let (x, y) = t.step(a, b);
        let (u, v) = rm_recursion_step(a, b);
        assert!((x - u).abs() < 1e-15 && (y - v).abs() < 1e-15, "{a} {b}");
    }
}

#[test]
fn full_transfer_preserves_trace_structure() {
    // With q~ = 0 the full map is the exact logical failure probability, which must sum
    // with the success probability to one over all error patterns.
    let t = transfer();
    for &p in &[0.0, 0.1, 0.3, 0.5] {
        let (qn, qtn) = t.step(p, 0.0);
        assert_eq!(qtn, 0.0);
        let code = RmCode::new();
        let direct: f64 = (0u16..1 << 15)
            .filter(|&e| code.logical_fault(e))
            .map(|e| {
                let w = e.count_ones() as i32;
                p.powi(w) * (1.0 - p).powi(15 - w)
            })
            .sum();
        assert!((qn - direct).abs() < 1e-12, "{p}: {qn} vs {direct}");
    }
}

#[test]
fn transfer_output_is_completely_positive() {
    // A one-qubit amplitude check: for the map to be physical, q' must be at least |q~'|^2
    // up to (1 - q') for physical input channels.
    let t = transfer();
    for &(a, b) in &[(0.05, 0.2), (0.1, 0.3), (0.2, 0.4), (0.5, 0.5)] {
        let (qn, qtn) = t.step(a, b);
        assert!(qtn * qtn <= qn * (1.0 - qn) + 1e-12, "{a} {b}: {qn} {qtn}");
    }
}

#[test]
fn rm_threshold_value() {
    let exact = rm_threshold(|a, b| transfer().step(a, b), 1e-9);
    let fourth = rm_threshold(rm_recursion_step, 1e-9);
    assert!((exact - 1.093e-2).abs() < 5e-6, "{exact}");
    assert!((fourth - 1.093e-2).abs() < 5e-6, "{fourth}");
    assert_eq!(rm_leading_order_threshold(), q(1, 105));
}

#[test]
fn model1_channel_is_depolarizing() {
    let f = effective_s_channel_form(ModelKind::Model1);
    for c in [f.x, f.y, f.z] {
        assert_eq!(c.p1, q(1, 3));
        assert_eq!(c.p2, Q::from_integer(0));
    }
    assert_eq!(equivalent_z_rate(ModelKind::Model1).p1, q(2, 3));
}

#[test]
fn model2_channel_coefficients() {
    let f = effective_s_channel_form(ModelKind::Model2);
    assert_eq!(f.x, RateForm::model2(q(0, 1), q(5, 3), q(5, 3), q(2, 1)));
    assert_eq!(f.y, RateForm::model2(q(0, 1), q(1, 3), q(1, 3), q(2, 5)));
    assert_eq!(f.z, RateForm::model2(q(2, 3), q(1, 3), q(1, 3), q(58, 15)));
    assert_eq!(
        equivalent_z_rate(ModelKind::Model2),
        RateForm::model2(q(2, 3), q(4, 3), q(4, 3), q(76, 15))
    );
}

#[test]
fn defect_line_enumeration() {
    let d = enumerate_defect_line_channel();
    assert_eq!(d.x, RateForm::model2(q(0, 1), q(2, 3), q(2, 3), q(4, 5)));
    assert!(d.y.is_zero() && d.z.is_zero());
}

#[test]
fn central_attempt_reports_gate_z_discrepancy() {
    let a = enumerate_central_channel_attempt();
    assert!(!a.agrees());
    let d = a.discrepancy();
    assert!(d.x.is_zero() && d.y.is_zero());
    assert_eq!(d.z, RateForm::model2(q(0, 1), q(0, 1), q(0, 1), q(-32, 15)));
}

#[test]
fn reed_muller_thresholds_along_directions() {
    let m2 = |l: i64, g: i64| Direction::Model2 { local: q(l, 1), gate: q(g, 1) };
    assert_eq!(reed_muller_threshold(Direction::Model1).unwrap(), q(1, 70));
    assert_eq!(reed_muller_threshold(m2(1, 0)).unwrap(), q(1, 350));
    assert_eq!(reed_muller_threshold(m2(0, 1)).unwrap(), q(1, 532));
    assert_eq!(reed_muller_threshold(m2(1, 1)).unwrap(), q(1, 882));
    assert!(reed_muller_threshold(m2(0, 0)).is_err());
    for d in [Direction::Model1, m2(1, 0), m2(0, 1), m2(1, 1)] {
        let c = combined_threshold(d, d.reference_topological_threshold().unwrap()).unwrap();
        assert_eq!(c.limiting, Limiting::ReedMuller, "{d:?}");
        assert!(c.overall < c.topological);
    }
    let c = combined_threshold(Direction::Model1, 0.001).unwrap();
    assert_eq!(c.limiting, Limiting::Topological);
    assert_eq!(c.overall, 0.001);
}

#[test]
fn xy_to_z_conversion_examples() {
    let ch = PauliChannel::new(0.03, 0.01, 0.02).unwrap();
    let c = convert_xy_to_z(&ch);
    assert!((c.q - 0.04).abs() < 1e-15 && (c.q_tilde - 0.01).abs() < 1e-15);
    let exact = PauliChannel::new(q(1, 10), q(0, 1), q(0, 1)).unwrap();
    let c = convert_xy_to_z(&exact);
    assert_eq!((c.q, c.q_tilde), (q(1, 20), q(1, 20)));
    assert!(CoherentZ::new(c.q, c.q_tilde).is_ok());
    assert!(CoherentZ::new(0.01, 0.2).is_err());
    assert!(PauliChannel::new(0.6, 0.6, 0.0).is_err());
    assert!(PauliChannel::new(-0.1, 0.0, 0.0).is_err());
}

type M2 = Matrix2<Complex64>;

fn paulis() -> [M2; 4] {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    [
        M2::new(l, o, o, l),
        M2::new(o, l, l, o),
        M2::new(o, -i, i, o),
        M2::new(l, o, o, -l),
    ]
}

fn pauli_apply(ch: &PauliChannel<f64>, rho: &M2) -> M2 {
    let s = paulis();
    let w = [ch.p_i, ch.p_x, ch.p_y, ch.p_z];
    (0..4).fold(M2::zeros(), |acc, k| acc + s[k] * rho * s[k] * Complex64::from(w[k]))
}

fn coherent_apply(c: &CoherentZ<f64>, rho: &M2) -> M2 {
    let z = paulis()[3];
    let i = Complex64::new(0.0, 1.0);
    rho * Complex64::from(1.0 - c.q) + z * rho * z * Complex64::from(c.q) + (rho * z - z * rho) * (i * c.q_tilde)
}

fn expect(op: &M2, rho: &M2) -> f64 {
    (op * rho).trace().re
}

fn density(bloch: [f64; 3]) -> M2 {
    let s = paulis();
    (s[0] + s[1] * Complex64::from(bloch[0]) + s[2] * Complex64::from(bloch[1]) + s[3] * Complex64::from(bloch[2]))
        * Complex64::from(0.5)
}

/// The 4x4 Choi matrix of a coherent-Z channel must be positive semidefinite.
fn choi_min_eigenvalue(c: &CoherentZ<f64>) -> f64 {
    let mut choi = nalgebra::Matrix4::<Complex64>::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let mut e = M2::zeros();
            e[(a, b)] = Complex64::new(1.0, 0.0);
            let out = coherent_apply(c, &e);
            for r in 0..2 {
                for s in 0..2 {
                    choi[(2 * a + r, 2 * b + s)] = out[(r, s)];
                }
            }
        }
    }
    choi.symmetric_eigenvalues().min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conversion_matches_density_matrix_statistics(
        w in prop::array::uniform3(0.0f64..1.0),
        scale in 0.0f64..1.0,
        bloch in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let total = w[0] + w[1] + w[2] + 1e-9;
        let ch = PauliChannel::new(w[0] / total * scale, w[1] / total * scale, w[2] / total * scale).unwrap();
        let c = convert_xy_to_z(&ch);
        prop_assert!(CoherentZ::new(c.q, c.q_tilde).is_ok());
        prop_assert!(choi_min_eigenvalue(&c) > -1e-12);
        let norm = (bloch.iter().map(|x| x * x).sum::<f64>()).sqrt().max(1.0);
        let rho = density(bloch.map(|x| x / norm));
        let s = paulis();
        let measured = (s[1] + s[2]) * Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
        let a = pauli_apply(&ch, &rho);
        let b = coherent_apply(&c, &rho);
        prop_assert!((expect(&measured, &a) - expect(&measured, &b)).abs() < 1e-12);
        prop_assert!((a.trace().re - 1.0).abs() < 1e-12 && (b.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_channel_is_exact_rational(
        pp in 0i64..100, ps in 0i64..100, pm in 0i64..100, p2 in 0i64..100,
    ) {
        let rates = ErrorRates::Model2 { p_p: q(pp, 10_000), p_s: q(ps, 10_000), p_m: q(pm, 10_000), p2: q(p2, 10_000) };
        let ch = effective_s_channel(&rates).unwrap();
        prop_assert_eq!(ch.p_x, q(2 * p2, 10_000) + q(5 * (ps + pm), 30_000));
        prop_assert_eq!(ch.p_i + ch.p_x + ch.p_y + ch.p_z, Q::from_integer(1));
        let f = effective_s_channel(&ErrorRates::Model2 {
            p_p: pp as f64 / 1e4, p_s: ps as f64 / 1e4, p_m: pm as f64 / 1e4, p2: p2 as f64 / 1e4,
        }).unwrap();
        let to_f = |x: Q| *x.numer() as f64 / *x.denom() as f64;
        prop_assert!((f.p_z - to_f(ch.p_z)).abs() < 1e-15);
    }

    #[test]
    fn overhead_is_monotone_in_n(n in 2.0f64..1e9, p in 1e-5f64..5e-3) {
        let pc = 1.0 / 70.0;
        let a = overhead(n, p, pc, 0.01).unwrap();
        let b = overhead(n * 2.0, p, pc, 0.01).unwrap();
        prop_assert!(b.n_ft > a.n_ft && b.r > a.r);
    }
}

#[test]
fn winding_counts_match_stirling() {
    let w = winding_error_probability(20, 1.0, 0.01).unwrap();
    assert!((w.combinatorial - 184_756.0 * 1e-20).abs() < 1e-27);
    assert!((w.asymptotic / w.combinatorial - 1.0).abs() < 0.2);
    assert!(winding_error_probability(7, 1.0, 0.01).is_err());
    assert!(winding_error_probability(0, 1.0, 0.01).is_err());
    let l3 = winding_error_probability(20, 3.0, 0.01).unwrap();
    assert!((l3.combinatorial / w.combinatorial - 3.0).abs() < 1e-12);
}

/// Counts the shortest closed walks of length 4 in a cubic grid that wind once around a
/// straight line defect along the z axis through the centre of a plaquette, per unit
/// length: walks that cross the half-plane `x > 0, y = 1/2` an odd number of times.
#[test]
fn winding_four_cycles_per_unit_length() {
    use std::collections::HashSet;
    // Line defect at (x, y) = (1/2, 1/2); vertices on the integer lattice.
    let mut cycles: HashSet<Vec<(i32, i32, i32)>> = HashSet::new();
    let steps = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)];
    let start_z = 0;
    for sx in -2..=3 {
        for sy in -2..=3 {
            let start = (sx, sy, start_z);
            let mut stack = vec![vec![start]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                if path.len() == 5 {
                    if last == start {
                        let crossings = path
                            .windows(2)
                            .filter(|w| {
                                let (a, b) = (w[0], w[1]);
                                a.0 == b.0 && a.0 >= 1 && a.1 + b.1 == 1
                            })
                            .count();
                        if crossings % 2 == 1 {
                            let mut verts: Vec<_> = path[..4].to_vec();
                            verts.sort();
                            cycles.insert(verts);
                        }
                    }
                    continue;
                }
                for s in steps {
                    let next = (last.0 + s.0, last.1 + s.1, last.2 + s.2);
                    if path.len() < 4 && path.contains(&next) {
                        continue;
                    }
                    let mut p = path.clone();
                    p.push(next);
                    stack.push(p);
                }
            }
        }
    }
    // Only the unit square around the line at each height qualifies; counting the cycles
    // whose lowest vertex sits at z = 0 gives the number per unit length.
    assert_eq!(cycles.len(), 1);
    let w = winding_error_probability(4, 1.0, 0.1).unwrap();
    assert!((w.combinatorial - 6.0 * 0.01).abs() < 1e-15);
}

#[test]
fn overhead_values() {
    let p = 1e-3;
    let pc = 1.0 / 70.0;
    let qe = model1_edge_rate(p);
    let o = overhead(1e6, p, pc, qe).unwrap();
    let gamma = 15f64.log2();
    assert!((o.gamma - gamma).abs() < 1e-15);
    let kappa = -(4.0 * qe).ln() / 2.0;
    assert!((o.kappa - kappa).abs() < 1e-15);
    let ln_n = 1e6f64.ln();
    let o_rm = (ln_n / (pc / p).ln()).powf(gamma);
    assert!((o.o_rm / o_rm - 1.0).abs() < 1e-12);
    let r = 2.0 * ln_n / kappa;
    assert!((o.n_ft / (9.0 * r.powi(3) * (1e6 * o_rm).powi(2)) - 1.0).abs() < 1e-12);
    assert!(matches!(overhead(1e6, 0.02, pc, qe), Err(Error::NoThreshold { .. })));
    assert!(matches!(overhead(1.0, p, pc, qe), Err(Error::InvalidArgument(_))));
}
