//! Verification suites that compare the library against independent brute-force
//! oracles: exhaustive pairing, single-qubit density matrices, direct symplectic
//! products and moment estimates from sampled noise.
//!
//! Each suite returns a [`Check`] rather than panicking so that callers can report
//! every result.

use crate::analysis::estimate_mapping;
use crate::analytic::{self, Direction, ModelKind, PauliChannel, RateForm, Q};
use crate::decoder::{GraphMode, EdgeWeights, MatchingDecoder, Syndrome};
use crate::error::Result;
use crate::lattice::{AxisBoundary, Boundary, Chain, Complex, EndKind, Lattice3D};
use crate::noise::{analytic_q, NoiseModel};
use crate::pauli::{correlation_operator, error_operator, stabilizer_generator, x_operator, z_operator, PauliOperator};
use crate::BitVector;
use nalgebra::{Complex as C64, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, failures: &[String], ok_detail: String) -> Check {
        Check {
            name: name.to_string(),
            passed: failures.is_empty(),
            detail: if failures.is_empty() {
                ok_detail
            } else {
                failures.join("; ")
            },
        }
    }
}

/// Empirical `(q1, q2)` from gate-only noise against the exact mapping, within `sigmas`
/// standard errors, each point from at least `min_faces` sampled faces.
pub fn mapping(p2s: &[f64], l: usize, min_faces: u64, sigmas: f64, seed: u64) -> Result<Check> {
    let mut fails = Vec::new();
    let mut report = Vec::new();
    for (i, &p2) in p2s.iter().enumerate() {
        let model = NoiseModel::gate_only(p2);
        let want = analytic_q(&model, true)?;
        let got = estimate_mapping(&model, l, min_faces, seed + i as u64, 16)?;
        let z1 = (got.q1 - want.q1) / got.q1_err;
        let z2 = (got.q2 - want.q2) / got.q2_err;
        let line = format!(
            "p2={p2}: q1 {:.6}±{:.1e} vs {:.6} ({z1:+.2}σ), q2 {:.6}±{:.1e} vs {:.6} ({z2:+.2}σ), {} faces",
            got.q1, got.q1_err, want.q1, got.q2, got.q2_err, want.q2, got.faces
        );
        if z1.abs() > sigmas || z2.abs() > sigmas || got.faces < min_faces {
            fails.push(line.clone());
        }
        report.push(line);
    }
    Ok(Check::new("mapping", &fails, report.join("; ")))
}

/// Transfer coefficients of the [15,1,3] code to fourth order, the threshold of the full
/// recursion and the leading-order fixed point.
pub fn reed_muller() -> Check {
    let mut fails = Vec::new();
    let t = analytic::rm_exhaustive_oracle(4);
    let expect = [
        (false, 0, 2, 105),
        (false, 0, 3, 35),
        (false, 0, 4, 1260),
        (false, 4, 0, 630),
        (true, 3, 0, 70),
        (true, 3, 1, -1680),
    ];
    for (qt, a, b, c) in expect {
        let got = t.coeff(qt, a, b);
        if got != c {
            fails.push(format!("coefficient of q~^{a} q^{b} in {}: {got}, expected {c}", if qt { "q~'" } else { "q'" }));
        }
    }
    let extra = t.q_next.len() + t.q_tilde_next.len() - expect.len();
    if extra != 0 {
        fails.push(format!("{extra} unexpected terms up to fourth order"));
    }
    let full = analytic::rm_exhaustive_oracle(15);
    let pc = analytic::rm_threshold(|a, b| full.step(a, b), 1e-9);
    if (pc - 1.09e-2).abs() > 0.01e-2 {
        fails.push(format!("threshold {pc:.6}"));
    }
    let lead = analytic::rm_leading_order_threshold();
    if lead != Q::new(1, 105) {
        fails.push(format!("leading-order fixed point {lead}"));
    }
    Check::new(
        "reed_muller",
        &fails,
        format!("coefficients 105, 35, 1260, 630, 70, -1680; threshold {pc:.6}; fixed point {lead}"),
    )
}

/// Reed-Muller thresholds along the standard directions as exact rationals.
pub fn rational_thresholds() -> Check {
    let m2 = |l: i64, g: i64| Direction::Model2 { local: Q::from_integer(l), gate: Q::from_integer(g) };
    let cases = [
        (Direction::Model1, Q::new(1, 70)),
        (m2(1, 0), Q::new(1, 350)),
        (m2(0, 1), Q::new(1, 532)),
        (m2(1, 1), Q::new(1, 882)),
    ];
    let mut fails = Vec::new();
    let mut got_all = Vec::new();
    for (d, want) in cases {
        let topo = d.reference_topological_threshold().unwrap_or(1.0);
        match analytic::combined_threshold(d, topo) {
            Ok(c) => {
                if c.reed_muller != want {
                    fails.push(format!("{d:?}: {} instead of {want}", c.reed_muller));
                }
                got_all.push(c.reed_muller.to_string());
            }
            Err(e) => fails.push(format!("{d:?}: {e}")),
        }
    }
    Check::new("rational_thresholds", &fails, got_all.join(", "))
}

type M2 = Matrix2<C64<f64>>;

fn c(re: f64, im: f64) -> C64<f64> {
    C64::new(re, im)
}

fn pauli_matrices() -> [M2; 4] {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    [
        M2::new(l, o, o, l),
        M2::new(o, l, l, o),
        M2::new(o, -i, i, o),
        M2::new(l, o, o, -l),
    ]
}

/// Probability of the `+1` outcome of `(X + Y)/sqrt 2` after each channel acts on `rho`.
fn measured_plus(rho: &M2, ch: &PauliChannel<f64>, q: f64, qt: f64) -> (f64, f64) {
    let s = pauli_matrices();
    let w = [ch.p_i, ch.p_x, ch.p_y, ch.p_z];
    let a = (0..4).fold(M2::zeros(), |acc, k| acc + s[k] * rho * s[k] * c(w[k], 0.0));
    let z = s[3];
    let b = rho * c(1.0 - q, 0.0) + z * rho * z * c(q, 0.0) + (rho * z - z * rho) * c(0.0, qt);
    let proj = (s[0] + (s[1] + s[2]) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)) * c(0.5, 0.0);
    ((proj * a).trace().re, (proj * b).trace().re)
}

/// Effective S-qubit channel constants, the defect-line enumeration and the X/Y to Z
/// conversion against a density-matrix simulation on `n_random` random channels.
pub fn channels(n_random: usize, seed: u64) -> Check {
    let r = |n: i64, d: i64| Q::new(n, d);
    let zero = Q::from_integer(0);
    let mut fails = Vec::new();
    let f = analytic::effective_s_channel_form(ModelKind::Model2);
    let want_x = RateForm::model2(zero, r(5, 3), r(5, 3), r(2, 1));
    let want_y = RateForm::model2(zero, r(1, 3), r(1, 3), r(2, 5));
    let want_z = RateForm::model2(r(2, 3), r(1, 3), r(1, 3), r(58, 15));
    if (f.x, f.y, f.z) != (want_x, want_y, want_z) {
        fails.push(format!("effective channel X: {}, Y: {}, Z: {}", f.x, f.y, f.z));
    }
    if f.z_equivalent() != RateForm::model2(r(2, 3), r(4, 3), r(4, 3), r(76, 15)) {
        fails.push(format!("equivalent Z rate {}", f.z_equivalent()));
    }
    let d = analytic::enumerate_defect_line_channel();
    if d.x != RateForm::model2(zero, r(2, 3), r(2, 3), r(4, 5)) || !d.y.is_zero() || !d.z.is_zero() {
        fails.push(format!("defect line X: {}, Y: {}, Z: {}", d.x, d.y, d.z));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_random {
        let w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
        let total: f64 = w.iter().sum();
        let Ok(ch) = PauliChannel::new(w[1] / total, w[2] / total, w[3] / total) else {
            fails.push("random channel rejected".into());
            continue;
        };
        let cz = analytic::convert_xy_to_z(&ch);
        if analytic::CoherentZ::new(cz.q, cz.q_tilde).is_err() {
            fails.push(format!("converted channel not CP: {cz:?}"));
        }
        // A random mixed state from a Bloch vector inside the unit ball.
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        let s = pauli_matrices();
        let rho = (s[0] + s[1] * c(v[0] / norm, 0.0) + s[2] * c(v[1] / norm, 0.0) + s[3] * c(v[2] / norm, 0.0))
            * c(0.5, 0.0);
        let (a, b) = measured_plus(&rho, &ch, cz.q, cz.q_tilde);
        worst = worst.max((a - b).abs());
    }
    if worst > 1e-12 {
        fails.push(format!("density-matrix deviation {worst:.2e}"));
    }
    Check::new(
        "channels",
        &fails,
        format!("effective channel and defect line exact; {n_random} conversions within {worst:.1e}"),
    )
}

fn random_lattice(rng: &mut ChaCha8Rng, max_l: usize) -> Lattice3D {
    let dim = |rng: &mut ChaCha8Rng| rng.random_range(2..=max_l);
    let boundary = match rng.random_range(0..3) {
        0 => Boundary::Periodic,
        1 => {
            let axes = std::array::from_fn(|_| match rng.random_range(0..4) {
                0 => AxisBoundary::Periodic,
                k => {
                    let end = |b: bool| if b { EndKind::Rough } else { EndKind::Smooth };
                    AxisBoundary::Open { low: end(k & 1 == 1), high: end(k & 2 == 2) }
                }
            });
            Boundary::Slab { axes }
        }
        _ => {
            let z = rng.random_range(3..=max_l.max(3));
            let depth = rng.random_range(1..z);
            let l = dim(rng);
            return Lattice3D::build([l, l, z], Boundary::DefectSlab { defect_depth: depth }).expect("valid defect slab");
        }
    };
    Lattice3D::build([dim(rng), dim(rng), dim(rng)], boundary).expect("valid lattice")
}

fn random_chain(rng: &mut ChaCha8Rng, lat: &Lattice3D, complex: Complex, dim: usize, density: f64) -> Chain {
    let n = lat.count(complex, dim);
    Chain::from_indices(lat, complex, dim, (0..n).filter(|_| rng.random_bool(density)))
}

fn restrict_to(lat: &Lattice3D, chain: &Chain, region: &[usize]) -> Chain {
    Chain::from_indices(lat, chain.complex, chain.dim, region.iter().copied().filter(|&i| chain.bits.get(i)))
}

fn qubits(lat: &Lattice3D, chain: &Chain) -> BitVector {
    crate::pauli::qubit_set(lat, chain).expect("chain of qubit cells")
}

fn product(ops: &[PauliOperator]) -> PauliOperator {
    ops[1..].iter().fold(ops[0].clone(), |acc, o| acc.mul(o))
}

/// One random instance of every algebraic relation; returns the violations.
fn algebra_instance(rng: &mut ChaCha8Rng, lat: &Lattice3D) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let dens = rng.random_range(0.05..0.5);
    for complex in [Complex::Primal, Complex::Dual] {
        for dim in [2, 3] {
            let ch = random_chain(rng, lat, complex, dim, dens);
            let dd = lat.boundary(&lat.boundary(&ch)?)?;
            if !dd.is_zero() {
                bad.push(format!("boundary of boundary nonzero ({complex:?} {dim}-chain)"));
            }
        }
    }
    let c2 = random_chain(rng, lat, Complex::Primal, 2, dens);
    let c1 = random_chain(rng, lat, Complex::Primal, 1, dens);
    let d2 = random_chain(rng, lat, Complex::Dual, 2, dens);
    let d1 = random_chain(rng, lat, Complex::Dual, 1, dens);
    let k = correlation_operator(lat, &c2)?;
    let kd = correlation_operator(lat, &d2)?;
    let e = error_operator(lat, &c1)?;
    let ed = error_operator(lat, &d1)?;
    let parity = |a: &Chain, b: &Chain| qubits(lat, a).dot(&qubits(lat, b));
    if !k.commutes(&e) {
        bad.push("primal correlation anticommutes with primal error".into());
    }
    if !kd.commutes(&ed) {
        bad.push("dual correlation anticommutes with dual error".into());
    }
    if k.commutes(&ed) == parity(&c2, &d1) {
        bad.push("primal correlation vs dual error differs from intersection parity".into());
    }
    if kd.commutes(&e) == parity(&d2, &c1) {
        bad.push("dual correlation vs primal error differs from intersection parity".into());
    }
    if !k.commutes(&kd) {
        bad.push("primal and dual correlations anticommute".into());
    }
    if !e.commutes(&ed) {
        bad.push("primal and dual errors anticommute".into());
    }
    // Correlations are products of cluster stabilizer generators.
    for (corr, chain) in [(&k, &c2), (&kd, &d2)] {
        let gens: Vec<PauliOperator> = std::iter::once(Ok(PauliOperator::identity(lat.num_qubits())))
            .chain(
                chain
                    .bits
                    .iter_ones()
                    .map(|i| stabilizer_generator(lat, lat.qubit_index(lat.point(chain.complex, 2, i)).unwrap())),
            )
            .collect::<Result<_>>()?;
        let p = product(&gens);
        if p != *corr {
            bad.push(format!("{:?} correlation is not the product of its generators", chain.complex));
        }
    }
    // A syndrome appears exactly at the ends of an error chain.
    for (err, chain) in [(&e, &c1), (&ed, &d1)] {
        let ends = lat.boundary(chain)?;
        let other = chain.complex.other();
        for v in 0..lat.count(chain.complex, 0) {
            let cell = Chain::from_indices(lat, other, 3, [v]);
            let kq = correlation_operator(lat, &lat.boundary(&cell)?)?;
            if kq.commutes(err) == ends.bits.get(v) {
                bad.push(format!("{:?} syndrome at vertex {v} differs from the chain boundary", chain.complex));
                break;
            }
        }
    }
    // Homologically equivalent chains relative to the defect are physically equivalent.
    let d2_faces = lat.defect_region(Complex::Primal, 2);
    let d1_edges = lat.defect_region(Complex::Primal, 1);
    let d1_set = BitVector::from_indices(lat.num_qubits(), d1_edges.iter().map(|&i| lat.qubit_index(lat.point(Complex::Primal, 1, i)).unwrap()));
    let c3 = random_chain(rng, lat, Complex::Primal, 3, dens);
    let gamma2 = restrict_to(lat, &random_chain(rng, lat, Complex::Primal, 2, dens), &d2_faces);
    let c2_prime = c2.add(&lat.boundary(&c3)?).add(&gamma2);
    let diff = correlation_operator(lat, &c2)?.mul(&correlation_operator(lat, &c2_prime)?);
    let mut x_on_d1 = diff.x.clone();
    x_on_d1.and_assign(&d1_set);
    let mut z_off_d1 = diff.z.clone();
    z_off_d1.xor_assign(&{
        let mut t = diff.z.clone();
        t.and_assign(&d1_set);
        t
    });
    if !x_on_d1.is_zero() || !z_off_d1.is_zero() {
        bad.push("equivalent correlations differ outside the measured pattern".into());
    }
    let gamma1 = restrict_to(lat, &random_chain(rng, lat, Complex::Primal, 1, dens), &d1_edges);
    let c1_prime = c1.add(&lat.boundary(&c2)?).add(&gamma1);
    let lhs = product(&[
        error_operator(lat, &c1_prime)?,
        error_operator(lat, &c1)?,
        correlation_operator(lat, &c2)?,
        x_operator(lat, &c2)?,
        z_operator(lat, &gamma1)?,
    ]);
    if !lhs.x.is_zero() || !lhs.z.is_zero() {
        bad.push("equivalent errors differ by more than a stabilizer and measured operators".into());
    }
    Ok(bad)
}

/// Boundary, commutation, syndrome and equivalence relations on `instances` random
/// lattices with sides at most `max_l`.
pub fn algebra(instances: usize, max_l: usize, seed: u64) -> Result<Check> {
    let mut fails = Vec::new();
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let lat = random_lattice(&mut rng, max_l);
        for b in algebra_instance(&mut rng, &lat)? {
            fails.push(format!("instance {i} ({:?} {:?}): {b}", lat.dims(), lat.boundary_condition()));
        }
        if fails.len() > 5 {
            break;
        }
    }
    Ok(Check::new("algebra", &fails, format!("{instances} random instances")))
}

/// Minimum total length over all pairings of `lit`, by exhaustive recursion.
fn best_pairing(dist: &[Vec<u64>], lit: &mut Vec<usize>) -> u64 {
    let Some(a) = lit.pop() else { return 0 };
    let mut best = u64::MAX;
    for i in 0..lit.len() {
        let b = lit.swap_remove(i);
        best = best.min(dist[a][b] + best_pairing(dist, lit));
        lit.push(b);
        let last = lit.len() - 1;
        lit.swap(i, last);
    }
    lit.push(a);
    best
}

/// Matching weight on an `l`^3 torus against exhaustive pairing of `n` random syndromes
/// with at most `max_defects` defects, split over both complexes and both graph modes.
pub fn decoder_optimality(n: usize, l: usize, max_defects: usize, seed: u64) -> Result<Check> {
    let lat = Lattice3D::build([l, l, l], Boundary::Periodic)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fails = Vec::new();
    let mut done = 0;
    for complex in [Complex::Primal, Complex::Dual] {
        let nv = lat.count(complex, 0);
        let mut adj = vec![Vec::new(); nv];
        for e in 0..lat.count(complex, 1) {
            if let [a, b] = lat.boundary_of(complex, 1, e) {
                adj[*a as usize].push(*b as usize);
                adj[*b as usize].push(*a as usize);
            }
        }
        let dist: Vec<Vec<u64>> = (0..nv)
            .map(|s| {
                let mut d = vec![u64::MAX; nv];
                d[s] = 0;
                let mut queue = VecDeque::from([s]);
                while let Some(v) = queue.pop_front() {
                    for &u in &adj[v] {
                        if d[u] == u64::MAX {
                            d[u] = d[v] + 1;
                            queue.push_back(u);
                        }
                    }
                }
                d
            })
            .collect();
        let decoders = [
            MatchingDecoder::new(&lat, complex, EdgeWeights::Uniform, GraphMode::Complete)?,
            MatchingDecoder::new(&lat, complex, EdgeWeights::Uniform, GraphMode::default())?,
        ];
        let count = n / 2 + if complex == Complex::Primal { n % 2 } else { 0 };
        for _ in 0..count {
            let k = 2 * rng.random_range(1..=max_defects / 2);
            let mut lit = rand::seq::index::sample(&mut rng, nv, k).into_vec();
            lit.sort_unstable();
            let want = best_pairing(&dist, &mut lit.clone());
            let syn = Syndrome { complex, lit, boundary_node: false };
            for dec in &decoders {
                let got = dec.decode(&lat, &syn)?;
                if got.weight != want {
                    fails.push(format!("{complex:?} {:?} {:?}: weight {} vs {want}", dec.mode(), syn.lit, got.weight));
                }
            }
            done += 1;
        }
    }
    Ok(Check::new("decoder_optimality", &fails, format!("{done} syndromes on {l}^3 match exhaustive pairing")))
}
