//! Error models for the cluster-state preparation and their reduction to edge errors.
//!
//! Qubits are measured in the X basis, so a qubit's outcome flips iff its final
//! Pauli frame has a Z component. Flips on the odd sublattice (primal edges) are
//! primal edge errors; flips on the even sublattice (primal faces) are dual edge errors.
//!
//! Model 2 builds the cluster with four rounds of controlled-phase gates. Every
//! gate joins an edge qubit and a face qubit one step apart along some axis, and
//! lies on an axis line whose transverse coordinates have exactly one odd entry.
//! All gates on a line share a block: steps {1,2} or {3,4}. Lines along x use the
//! late block when their z coordinate is odd, lines along y when x is odd, lines
//! along z when y is odd. Within a line the step alternates with the parity of the
//! lower endpoint. Each qubit then has one gate per step, with the two partners of
//! a block sitting on opposite sides of it.

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::lattice::{odd_count, Boundary, Complex, Lattice3D};
use crate::pauli::Pauli;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Every primal and dual edge flips independently with probability `q`.
    Independent { q: f64 },
    /// Depolarizing noise of strength `p1` on every cluster qubit.
    Model1 { p1: f64 },
    /// Faulty preparation, gates, storage and measurement.
    #[serde(rename = "model2")]
    Model2 {
        #[serde(rename = "pP")]
        p_p: f64,
        #[serde(rename = "pS")]
        p_s: f64,
        #[serde(rename = "pM")]
        p_m: f64,
        p2: f64,
    },
}

impl NoiseModel {
    pub fn gate_only(p2: f64) -> Self {
        NoiseModel::Model2 {
            p_p: 0.0,
            p_s: 0.0,
            p_m: 0.0,
            p2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs: Vec<f64> = match *self {
            NoiseModel::Independent { q } => vec![q],
            NoiseModel::Model1 { p1 } => vec![p1],
            NoiseModel::Model2 { p_p, p_s, p_m, p2 } => vec![p_p, p_s, p_m, p2],
        };
        for p in probs {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::InvalidArgument(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Independent { .. } => "independent",
            NoiseModel::Model1 { .. } => "model1",
            NoiseModel::Model2 { .. } => "model2",
        }
    }
}

/// Number of storage steps between the last gate and the measurement of a qubit.
pub const STORAGE_STEPS: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Direct flip of an edge (independent and Model 1 sampling).
    EdgeFlip,
    Preparation,
    Gate { step: u8 },
    Storage,
    Measurement,
}

impl Mechanism {
    /// Position in time: 0 preparation, 1..=4 after a gate step, then storage and measurement.
    pub fn time(self) -> u8 {
        match self {
            Mechanism::EdgeFlip => 6,
            Mechanism::Preparation => 0,
            Mechanism::Gate { step } => step,
            Mechanism::Storage => 5,
            Mechanism::Measurement => 6,
        }
    }
}

/// One sampled fault: Paulis on one or two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub mechanism: Mechanism,
    pub qubits: [u32; 2],
    /// `paulis[1]` is `I` for single-qubit faults.
    #[serde(with = "pauli_pair")]
    pub paulis: [Pauli; 2],
}

mod pauli_pair {
    use super::Pauli;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    fn ch(p: Pauli) -> char {
        match p {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn serialize<S: Serializer>(p: &[Pauli; 2], s: S) -> Result<S::Ok, S::Error> {
        let text: String = [ch(p[0]), ch(p[1])].iter().collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Pauli; 2], D::Error> {
        let text = String::deserialize(d)?;
        let mut out = [Pauli::I; 2];
        for (i, c) in text.chars().take(2).enumerate() {
            out[i] = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(serde::de::Error::custom(format!("bad Pauli {c}"))),
            };
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorConfiguration {
    pub primal: BitVector,
    pub dual: BitVector,
    pub fault_log: Option<Vec<Fault>>,
}

impl ErrorConfiguration {
    pub fn zero(lattice: &Lattice3D) -> Self {
        ErrorConfiguration {
            primal: BitVector::zeros(lattice.count(Complex::Primal, 1)),
            dual: BitVector::zeros(lattice.count(Complex::Dual, 1)),
            fault_log: None,
        }
    }

    pub fn edges(&self, complex: Complex) -> &BitVector {
        match complex {
            Complex::Primal => &self.primal,
            Complex::Dual => &self.dual,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.primal.is_zero() && self.dual.is_zero()
    }

    /// Flips the measurement outcome of a cluster qubit.
    pub fn flip_qubit(&mut self, lattice: &Lattice3D, qubit: usize) {
        match lattice.qubit_as_edge(qubit) {
            Some(e) => self.primal.flip(e),
            None => self.dual.flip(lattice.qubit_as_face(qubit).unwrap()),
        }
    }
}

/// How an X component is rewritten before it reaches the measurements.
///
/// `Forward` is the literal Heisenberg propagation: an X on qubit `a` after step `t`
/// picks up Z on every partner of `a` gated later. `Reduced` multiplies by the
/// stabilizer `K_a` when that gives fewer Z's: for `t <= 2` the X becomes Z on the
/// partners gated at or before `t`. Both give the same syndrome; the two residuals
/// differ by boundaries only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameRule {
    Forward,
    #[default]
    Reduced,
}

/// A controlled-phase gate of the preparation schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    /// Qubit on the odd sublattice (a primal edge).
    pub edge_qubit: u32,
    /// Qubit on the even sublattice (a primal face).
    pub face_qubit: u32,
    pub step: u8,
}

/// The four-step gate schedule on a periodic lattice.
#[derive(Clone, Debug)]
pub struct Schedule {
    /// `partner[q][s - 1]` is the qubit gated with `q` at step `s`.
    pub partner: Vec<[u32; 4]>,
    /// Gates ordered by step, then by edge qubit, then by face qubit.
    pub gates: Vec<Gate>,
}

/// Block of steps for the line along `axis` with transverse coordinates from `p`.
fn late_block(axis: usize, p: &[i32; 3]) -> bool {
    match axis {
        0 => p[2] & 1 == 1,
        1 => p[0] & 1 == 1,
        _ => p[1] & 1 == 1,
    }
}

impl Schedule {
    pub fn build(lattice: &Lattice3D) -> Result<Schedule> {
        if lattice.boundary_condition() != Boundary::Periodic {
            return Err(Error::Unsupported(
                "the gate schedule is defined on periodic lattices".to_string(),
            ));
        }
        let n = lattice.num_qubits();
        let mut partner = vec![[u32::MAX; 4]; n];
        let mut gates = Vec::with_capacity(2 * n);
        for q in 0..n {
            let p = lattice.qubit_point(q);
            if odd_count(&p) != 1 {
                continue;
            }
            for axis in 0..3 {
                if p[axis] & 1 == 1 {
                    continue;
                }
                for d in [-1, 1] {
                    let mut r = p;
                    r[axis] += d;
                    let face = lattice.qubit_index(r).expect("periodic neighbour");
                    let lower = if d == 1 { p[axis] } else { p[axis] - 1 };
                    let lower = lower.rem_euclid(2 * lattice.dims()[axis] as i32);
                    let base = if late_block(axis, &p) { 3 } else { 1 };
                    let step = base + (lower & 1) as u8;
                    gates.push(Gate {
                        edge_qubit: q as u32,
                        face_qubit: face as u32,
                        step,
                    });
                    let s = (step - 1) as usize;
                    if partner[q][s] != u32::MAX || partner[face][s] != u32::MAX {
                        return Err(Error::InvalidGeometry(format!(
                            "schedule conflict at step {step} for qubits {q}, {face}"
                        )));
                    }
                    partner[q][s] = face as u32;
                    partner[face][s] = q as u32;
                }
            }
        }
        gates.sort_by_key(|g| (g.step, g.edge_qubit, g.face_qubit));
        Ok(Schedule { partner, gates })
    }
}

/// Precomputed sampling context for one lattice.
#[derive(Clone, Debug)]
pub struct Sampler {
    /// Qubits subject to noise at the base rate.
    normal: Vec<u32>,
    /// Qubits subject to noise at twice the base rate (next to a defect surface).
    doubled: Vec<u32>,
    schedule: Option<Schedule>,
    pub frame_rule: FrameRule,
}

impl Sampler {
    pub fn new(lattice: &Lattice3D) -> Sampler {
        let mut normal = Vec::new();
        let mut doubled = Vec::new();
        for q in 0..lattice.num_qubits() {
            let p = lattice.qubit_point(q);
            if lattice.in_defect(&p) {
                continue;
            }
            if lattice.near_defect_surface(&p) {
                doubled.push(q as u32);
            } else {
                normal.push(q as u32);
            }
        }
        let schedule = Schedule::build(lattice).ok();
        Sampler {
            normal,
            doubled,
            schedule,
            frame_rule: FrameRule::Reduced,
        }
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        self.schedule.as_ref()
    }

    pub fn sample(
        &self,
        lattice: &Lattice3D,
        model: &NoiseModel,
        rng: &mut ChaCha8Rng,
        log_faults: bool,
    ) -> Result<ErrorConfiguration> {
        match *model {
            NoiseModel::Independent { q } => Ok(self.sample_flips(lattice, q, rng, log_faults)),
            NoiseModel::Model1 { p1 } => {
                Ok(self.sample_flips(lattice, 2.0 * p1 / 3.0, rng, log_faults))
            }
            NoiseModel::Model2 { .. } => self.sample_model2(lattice, model, rng, log_faults),
        }
    }

    fn sample_flips(
        &self,
        lattice: &Lattice3D,
        q: f64,
        rng: &mut ChaCha8Rng,
        log_faults: bool,
    ) -> ErrorConfiguration {
        let mut cfg = ErrorConfiguration::zero(lattice);
        let mut log = log_faults.then(Vec::new);
        for (set, rate) in [(&self.normal, q), (&self.doubled, (2.0 * q).min(1.0))] {
            for_each_bernoulli(rng, set.len(), rate, |_, i| {
                let qb = set[i] as usize;
                cfg.flip_qubit(lattice, qb);
                if let Some(log) = log.as_mut() {
                    log.push(Fault {
                        mechanism: Mechanism::EdgeFlip,
                        qubits: [qb as u32, u32::MAX],
                        paulis: [Pauli::Z, Pauli::I],
                    });
                }
            });
        }
        cfg.fault_log = log;
        cfg
    }

    fn sample_model2(
        &self,
        lattice: &Lattice3D,
        model: &NoiseModel,
        rng: &mut ChaCha8Rng,
        log_faults: bool,
    ) -> Result<ErrorConfiguration> {
        let NoiseModel::Model2 { p_p, p_s, p_m, p2 } = *model else {
            unreachable!()
        };
        let schedule = self.schedule.as_ref().ok_or_else(|| {
            Error::Unsupported("Model 2 sampling needs a periodic lattice".to_string())
        })?;
        let mut cfg = ErrorConfiguration::zero(lattice);
        let mut log = log_faults.then(Vec::new);
        let n = lattice.num_qubits();
        let mut record = |cfg: &mut ErrorConfiguration, fault: Fault| {
            apply_fault(lattice, schedule, self.frame_rule, &fault, cfg);
            if let Some(log) = log.as_mut() {
                log.push(fault);
            }
        };
        let single = |rng: &mut ChaCha8Rng| Pauli::ALL[1 + rng.random_range(0..3usize)];

        for_each_bernoulli(rng, n, p_p, |rng, q| {
            let p = single(rng);
            record(&mut cfg, Fault {
                mechanism: Mechanism::Preparation,
                qubits: [q as u32, u32::MAX],
                paulis: [p, Pauli::I],
            })
        });
        for step in 1..=4u8 {
            let lo = schedule.gates.partition_point(|g| g.step < step);
            let hi = schedule.gates.partition_point(|g| g.step <= step);
            let gates = &schedule.gates[lo..hi];
            for_each_bernoulli(rng, gates.len(), p2, |rng, i| {
                let g = gates[i];
                let k = 1 + rng.random_range(0..15usize);
                record(&mut cfg, Fault {
                    mechanism: Mechanism::Gate { step },
                    qubits: [g.edge_qubit, g.face_qubit],
                    paulis: [Pauli::ALL[k >> 2], Pauli::ALL[k & 3]],
                })
            });
        }
        for _ in 0..STORAGE_STEPS {
            for_each_bernoulli(rng, n, p_s, |rng, q| {
                let p = single(rng);
                record(&mut cfg, Fault {
                    mechanism: Mechanism::Storage,
                    qubits: [q as u32, u32::MAX],
                    paulis: [p, Pauli::I],
                })
            });
        }
        for_each_bernoulli(rng, n, p_m, |rng, q| {
            let p = single(rng);
            record(&mut cfg, Fault {
                mechanism: Mechanism::Measurement,
                qubits: [q as u32, u32::MAX],
                paulis: [p, Pauli::I],
            })
        });
        cfg.fault_log = log;
        Ok(cfg)
    }
}

/// Adds the measurement flips caused by one fault.
pub fn apply_fault(
    lattice: &Lattice3D,
    schedule: &Schedule,
    rule: FrameRule,
    fault: &Fault,
    cfg: &mut ErrorConfiguration,
) {
    if fault.mechanism == Mechanism::EdgeFlip {
        cfg.flip_qubit(lattice, fault.qubits[0] as usize);
        return;
    }
    let t = fault.mechanism.time();
    for (k, &p) in fault.paulis.iter().enumerate() {
        if p == Pauli::I {
            continue;
        }
        let q = fault.qubits[k] as usize;
        if p.z_bit() {
            cfg.flip_qubit(lattice, q);
        }
        if p.x_bit() {
            let partners = &schedule.partner[q];
            for s in 1..=4u8 {
                let hit = match rule {
                    FrameRule::Forward => s > t,
                    FrameRule::Reduced => {
                        if t <= 2 {
                            s <= t
                        } else {
                            s > t
                        }
                    }
                };
                if hit {
                    cfg.flip_qubit(lattice, partners[(s - 1) as usize] as usize);
                }
            }
        }
    }
}

/// Rebuilds the edge errors of a Model 2 sample from its fault log.
pub fn replay_faults(
    lattice: &Lattice3D,
    schedule: &Schedule,
    rule: FrameRule,
    faults: &[Fault],
) -> ErrorConfiguration {
    let mut cfg = ErrorConfiguration::zero(lattice);
    for f in faults {
        apply_fault(lattice, schedule, rule, f, &mut cfg);
    }
    cfg
}

/// Calls `f(rng, i)` for each `i < n` selected independently with probability `p`,
/// in increasing order, drawing geometric gaps from `rng`.
pub fn for_each_bernoulli(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: f64,
    mut f: impl FnMut(&mut ChaCha8Rng, usize),
) {
    if p <= 0.0 || n == 0 {
        return;
    }
    if p >= 1.0 {
        for i in 0..n {
            f(rng, i);
        }
        return;
    }
    let log_q = (-p).ln_1p();
    let mut i: usize = 0;
    loop {
        // u in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        let gap = (u.ln() / log_q).floor();
        if gap >= (n - i) as f64 {
            return;
        }
        i += gap as usize;
        f(rng, i);
        i += 1;
        if i >= n {
            return;
        }
    }
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Convenience wrapper: sample Model 1 edge errors.
pub fn sample_model1(lattice: &Lattice3D, p1: f64, rng: &mut ChaCha8Rng) -> ErrorConfiguration {
    Sampler::new(lattice).sample_flips(lattice, 2.0 * p1 / 3.0, rng, false)
}

/// Convenience wrapper: sample Model 2 edge errors with the reduced frame rule.
pub fn sample_model2(
    lattice: &Lattice3D,
    model: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> Result<ErrorConfiguration> {
    model.validate()?;
    Sampler::new(lattice).sample_model2(lattice, model, rng, false)
}

/// Parameters of the random-plaquette model reached by Model 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RpgmParams {
    pub q1: f64,
    pub q2: f64,
}

/// Mapped local and pair error rates. `exact` uses the closed form valid for gate
/// errors alone; otherwise the leading-order form including local faults.
pub fn analytic_q(model: &NoiseModel, exact: bool) -> Result<RpgmParams> {
    let NoiseModel::Model2 { p_p, p_s, p_m, p2 } = *model else {
        return match *model {
            NoiseModel::Independent { q } => Ok(RpgmParams { q1: q, q2: 0.0 }),
            NoiseModel::Model1 { p1 } => Ok(RpgmParams {
                q1: 2.0 * p1 / 3.0,
                q2: 0.0,
            }),
            NoiseModel::Model2 { .. } => unreachable!(),
        };
    };
    if exact {
        if p_p != 0.0 || p_s != 0.0 || p_m != 0.0 {
            return Err(Error::Unsupported(
                "the exact mapping covers gate errors only".to_string(),
            ));
        }
        let a = 8.0 / 15.0 * p2;
        let q1 = 32.0 / 15.0 * p2 * (1.0 - a) * (a * a + (1.0 - a) * (1.0 - a));
        let q2 = 0.5 - (0.25 - 4.0 / 15.0 * p2).sqrt();
        Ok(RpgmParams { q1, q2 })
    } else {
        Ok(RpgmParams {
            q1: 32.0 / 15.0 * p2 + 2.0 / 3.0 * (p_p + p_s + p_m),
            q2: 4.0 / 15.0 * p2,
        })
    }
}

/// Moments of the edge-flip statistics used to recover `(q1, q2)` from samples.
///
/// With independent local flips at rate `q1` and pair flips at rate `q2` on every
/// opposite pair of every face, an edge sits in four pairs:
/// `E[(-1)^b_e] = (1-2q1)(1-2q2)^4` and for an opposite pair of one face
/// `E[(-1)^(b_e + b_e')] = (1-2q1)^2 (1-2q2)^6`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeMoments {
    pub edges: u64,
    pub edge_flips: u64,
    pub pairs: u64,
    pub pair_odd: u64,
}

impl EdgeMoments {
    pub fn add(&mut self, other: &EdgeMoments) {
        self.edges += other.edges;
        self.edge_flips += other.edge_flips;
        self.pairs += other.pairs;
        self.pair_odd += other.pair_odd;
    }

    /// Accumulates statistics of one complex of one sample.
    pub fn observe(&mut self, lattice: &Lattice3D, complex: Complex, edges: &BitVector) {
        self.edges += edges.len() as u64;
        self.edge_flips += edges.count_ones() as u64;
        for f in 0..lattice.count(complex, 2) {
            let bd = lattice.boundary_of(complex, 2, f);
            if bd.len() != 4 {
                continue;
            }
            // The boundary list is ordered axis by axis, so entries 0,1 and 2,3 are opposite.
            for (a, b) in [(bd[0], bd[1]), (bd[2], bd[3])] {
                self.pairs += 1;
                if edges.get(a as usize) ^ edges.get(b as usize) {
                    self.pair_odd += 1;
                }
            }
        }
    }

    /// Method-of-moments estimate; `None` when a moment is not positive.
    pub fn estimate(&self) -> Option<RpgmParams> {
        let s = 1.0 - 2.0 * self.edge_flips as f64 / self.edges as f64;
        let c = 1.0 - 2.0 * self.pair_odd as f64 / self.pairs as f64;
        if s <= 0.0 || c <= 0.0 {
            return None;
        }
        let r = s / c.sqrt();
        let q2 = 0.5 * (1.0 - r);
        let q1 = 0.5 * (1.0 - s / r.powi(4));
        Some(RpgmParams { q1, q2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_qubit_has_one_gate_per_step() {
        let lat = Lattice3D::build([4, 4, 4], Boundary::Periodic).unwrap();
        let s = Schedule::build(&lat).unwrap();
        assert_eq!(s.gates.len(), 2 * lat.num_qubits());
        for (q, row) in s.partner.iter().enumerate() {
            assert!(row.iter().all(|&p| p != u32::MAX), "qubit {q}");
            let mut sorted = *row;
            sorted.sort();
            assert!(sorted.windows(2).all(|w| w[0] != w[1]));
            // Partners within a block sit on opposite sides of the qubit.
            let pq = lat.qubit_point(q);
            for (s1, s2) in [(0, 1), (2, 3)] {
                let a = lat.qubit_point(row[s1] as usize);
                let b = lat.qubit_point(row[s2] as usize);
                let axis = (0..3).find(|&i| a[i] != pq[i]).unwrap();
                assert!((0..3).all(|i| i == axis || (a[i] == pq[i] && b[i] == pq[i])));
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn bernoulli_skipping_endpoints() {
        let mut rng = trial_rng(1, 0);
        let mut hits = Vec::new();
        for_each_bernoulli(&mut rng, 10, 1.0, |_, i| hits.push(i));
        assert_eq!(hits, (0..10).collect::<Vec<_>>());
        hits.clear();
        for_each_bernoulli(&mut rng, 10, 0.0, |_, i| hits.push(i));
        assert!(hits.is_empty());
    }

    #[test]
    fn analytic_mapping_leading_order() {
        let m = NoiseModel::gate_only(1e-6);
        let ex = analytic_q(&m, true).unwrap();
        assert!((ex.q2 / (4.0 / 15.0 * 1e-6) - 1.0).abs() < 1e-5);
        assert!((ex.q1 / (32.0 / 15.0 * 1e-6) - 1.0).abs() < 1e-5);
        let bad = NoiseModel::Model2 {
            p_p: 0.1,
            p_s: 0.0,
            p_m: 0.0,
            p2: 0.1,
        };
        assert!(analytic_q(&bad, true).is_err());
    }
}
