//! Closed-form results for the non-Clifford region: first-order effective channels on
//! an S-qubit, the X/Y to coherent-Z conversion, the concatenated [15,1,3] Reed-Muller
//! transfer map, equivalent Z rates, combined thresholds, winding-error estimates and
//! resource overhead.
//!
//! Coefficients are exact rationals; floats appear only when a form is evaluated at
//! floating-point rates.

use crate::error::{Error, Result};
use crate::noise::Mechanism;
use crate::pauli::Pauli;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Sub};

pub type Q = Rational64;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// Numbers a rate form can be evaluated at.
pub trait Scalar:
    Clone + PartialOrd + fmt::Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn from_q(x: Q) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_q(x: Q) -> Self {
        ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Q {
    fn from_q(x: Q) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Error-model parameters at which channels are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ErrorRates<T> {
    /// Local depolarizing noise of strength `p1` on every cluster qubit.
    Model1 { p1: T },
    /// Preparation, storage, measurement and two-qubit gate faults.
    Model2 { p_p: T, p_s: T, p_m: T, p2: T },
}

impl<T: Scalar> ErrorRates<T> {
    fn validate(&self) -> Result<()> {
        let zero = T::from_q(Q::zero());
        let one = T::from_q(Q::one());
        let ok = |x: &T| *x >= zero && *x <= one;
        let all = match self {
            ErrorRates::Model1 { p1 } => ok(p1),
            ErrorRates::Model2 { p_p, p_s, p_m, p2 } => ok(p_p) && ok(p_s) && ok(p_m) && ok(p2),
        };
        if all {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("error rates must lie in [0, 1]: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Model1,
    Model2,
}

/// A linear form in the error rates `p1, pP, pS, pM, p2` with exact coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RateForm {
    pub p1: Q,
    pub p_p: Q,
    pub p_s: Q,
    pub p_m: Q,
    pub p2: Q,
}

impl RateForm {
    pub fn model2(p_p: Q, p_s: Q, p_m: Q, p2: Q) -> Self {
        RateForm { p1: Q::zero(), p_p, p_s, p_m, p2 }
    }

    fn coeffs(&self) -> [Q; 5] {
        [self.p1, self.p_p, self.p_s, self.p_m, self.p2]
    }

    fn from_coeffs(c: [Q; 5]) -> Self {
        RateForm { p1: c[0], p_p: c[1], p_s: c[2], p_m: c[3], p2: c[4] }
    }

    pub fn scale(&self, k: Q) -> Self {
        Self::from_coeffs(self.coeffs().map(|c| c * k))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs().iter().all(Zero::is_zero)
    }

    /// Value at `rates`; rates of the other model count as zero.
    pub fn eval<T: Scalar>(&self, rates: &ErrorRates<T>) -> T {
        let c = |x: Q| T::from_q(x);
        match rates {
            ErrorRates::Model1 { p1 } => c(self.p1) * p1.clone(),
            ErrorRates::Model2 { p_p, p_s, p_m, p2 } => {
                c(self.p_p) * p_p.clone()
                    + c(self.p_s) * p_s.clone()
                    + c(self.p_m) * p_m.clone()
                    + c(self.p2) * p2.clone()
            }
        }
    }
}

impl Add for RateForm {
    type Output = RateForm;
    fn add(self, o: RateForm) -> RateForm {
        let (a, b) = (self.coeffs(), o.coeffs());
        Self::from_coeffs(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl Sub for RateForm {
    type Output = RateForm;
    fn sub(self, o: RateForm) -> RateForm {
        self + o.scale(-Q::one())
    }
}

impl fmt::Display for RateForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["p1", "pP", "pS", "pM", "p2"];
        let terms: Vec<String> = self
            .coeffs()
            .iter()
            .zip(names)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, n)| format!("{c} {n}"))
            .collect();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join(" + "))
        }
    }
}

/// First-order single-qubit Pauli channel: weights of `X`, `Y`, `Z` as rate forms. The
/// identity carries the remainder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChannelForm {
    pub x: RateForm,
    pub y: RateForm,
    pub z: RateForm,
}

impl ChannelForm {
    pub fn scale(&self, k: Q) -> Self {
        ChannelForm { x: self.x.scale(k), y: self.y.scale(k), z: self.z.scale(k) }
    }

    pub fn identity_loss(&self) -> RateForm {
        self.x + self.y + self.z
    }

    /// Z rate equivalent under an `(X +- Y)/sqrt 2` measurement: `z + (x + y)/2`.
    pub fn z_equivalent(&self) -> RateForm {
        self.z + (self.x + self.y).scale(q(1, 2))
    }

    pub fn evaluate<T: Scalar>(&self, rates: &ErrorRates<T>) -> Result<PauliChannel<T>> {
        rates.validate()?;
        PauliChannel::new(self.x.eval(rates), self.y.eval(rates), self.z.eval(rates))
    }

    fn add_pauli(&mut self, p: Pauli, w: RateForm) {
        match p {
            Pauli::I => {}
            Pauli::X => self.x = self.x + w,
            Pauli::Y => self.y = self.y + w,
            Pauli::Z => self.z = self.z + w,
        }
    }
}

impl Add for ChannelForm {
    type Output = ChannelForm;
    fn add(self, o: ChannelForm) -> ChannelForm {
        ChannelForm { x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }
}

impl Sub for ChannelForm {
    type Output = ChannelForm;
    fn sub(self, o: ChannelForm) -> ChannelForm {
        ChannelForm { x: self.x - o.x, y: self.y - o.y, z: self.z - o.z }
    }
}

/// `rho -> p_i rho + p_x X rho X + p_y Y rho Y + p_z Z rho Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel<T> {
    pub p_i: T,
    pub p_x: T,
    pub p_y: T,
    pub p_z: T,
}

impl<T: Scalar> PauliChannel<T> {
    /// Checks that the weights are non-negative and sum to at most one.
    pub fn new(p_x: T, p_y: T, p_z: T) -> Result<Self> {
        let zero = T::from_q(Q::zero());
        let p_i = T::from_q(Q::one()) - p_x.clone() - p_y.clone() - p_z.clone();
        if p_x < zero || p_y < zero || p_z < zero || p_i < zero {
            return Err(Error::InvalidArgument(format!(
                "not a probability distribution: pX={p_x:?} pY={p_y:?} pZ={p_z:?}"
            )));
        }
        Ok(PauliChannel { p_i, p_x, p_y, p_z })
    }
}

/// `rho -> (1-q) rho + q Z rho Z + i q~ (rho Z - Z rho)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentZ<T> {
    pub q: T,
    pub q_tilde: T,
}

impl<T: Scalar> CoherentZ<T> {
    /// Checks complete positivity, `q~^2 <= q (1-q)`.
    pub fn new(q: T, q_tilde: T) -> Result<Self> {
        let zero = T::from_q(Q::zero());
        let one = T::from_q(Q::one());
        let cp = q_tilde.clone() * q_tilde.clone() <= q.clone() * (one.clone() - q.clone());
        if q < zero || q > one || !cp {
            return Err(Error::InvalidArgument(format!(
                "not completely positive: q={q:?} q~={q_tilde:?}"
            )));
        }
        Ok(CoherentZ { q, q_tilde })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Channel1Q<T> {
    Probabilistic(PauliChannel<T>),
    CoherentZ(CoherentZ<T>),
}

/// The coherent-Z channel with the same outcome statistics under a measurement of
/// `(X + Y)/sqrt 2`: `q = pZ + (pX + pY)/2`, `q~ = (pX - pY)/2`.
pub fn convert_xy_to_z<T: Scalar>(ch: &PauliChannel<T>) -> CoherentZ<T> {
    let half = T::from_q(q(1, 2));
    CoherentZ {
        q: ch.p_z.clone() + half.clone() * (ch.p_x.clone() + ch.p_y.clone()),
        q_tilde: half * (ch.p_x.clone() - ch.p_y.clone()),
    }
}

/// The channel an error model induces on an S-qubit after topological correction of its
/// surroundings, valid to first order in the rates.
pub fn effective_s_channel_form(model: ModelKind) -> ChannelForm {
    match model {
        ModelKind::Model1 => {
            let third = RateForm { p1: q(1, 3), ..Default::default() };
            ChannelForm { x: third, y: third, z: third }
        }
        ModelKind::Model2 => central_channel_form() + enumerate_defect_line_channel().scale(q(2, 1)),
    }
}

pub fn effective_s_channel<T: Scalar>(rates: &ErrorRates<T>) -> Result<PauliChannel<T>> {
    let kind = match rates {
        ErrorRates::Model1 { .. } => ModelKind::Model1,
        ErrorRates::Model2 { .. } => ModelKind::Model2,
    };
    effective_s_channel_form(kind).evaluate(rates)
}

/// Contribution of the S-qubit and its immediate surrounding (depends on the defect
/// tip geometry; taken as given).
pub fn central_channel_form() -> ChannelForm {
    let xy = RateForm::model2(Q::zero(), q(1, 3), q(1, 3), q(2, 5));
    ChannelForm {
        x: xy,
        y: xy,
        z: RateForm::model2(q(2, 3), q(1, 3), q(1, 3), q(58, 15)),
    }
}

/// Weight of one Pauli of a fault mechanism of Model 2.
fn mechanism_weight(m: Mechanism) -> RateForm {
    match m {
        Mechanism::Preparation => RateForm::model2(q(1, 3), Q::zero(), Q::zero(), Q::zero()),
        Mechanism::Storage => RateForm::model2(Q::zero(), q(1, 3), Q::zero(), Q::zero()),
        Mechanism::Measurement => RateForm::model2(Q::zero(), Q::zero(), q(1, 3), Q::zero()),
        Mechanism::Gate { .. } => RateForm::model2(Q::zero(), Q::zero(), Q::zero(), q(1, 15)),
        Mechanism::EdgeFlip => RateForm::default(),
    }
}

/// Every single Model 2 fault on a qubit and, for gate faults, its partner: the
/// mechanism, the Pauli on the qubit and the Pauli on the partner.
fn single_faults() -> Vec<(Mechanism, Pauli, Pauli)> {
    let mut out = Vec::new();
    for m in [Mechanism::Preparation, Mechanism::Storage, Mechanism::Measurement] {
        for p in &Pauli::ALL[1..] {
            out.push((m, *p, Pauli::I));
        }
    }
    for step in 1..=4u8 {
        for k in 1..16 {
            out.push((Mechanism::Gate { step }, Pauli::ALL[k >> 2], Pauli::ALL[k & 3]));
        }
    }
    out
}

const RING: u8 = 0b1111;

/// Minimum-weight completion of a chain on the 4-edge ring around a qubit, given as a
/// bit mask over the partners of steps 1..4. The two candidate corrections are the
/// chain and its complement; ties go to the one containing the step-1 partner. Returns
/// whether the residual is the full ring.
fn ring_residual_winds(chain: u8) -> bool {
    let (a, b) = (chain, chain ^ RING);
    let correction = match a.count_ones().cmp(&b.count_ones()) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if a & 1 != 0 {
                a
            } else {
                b
            }
        }
    };
    chain ^ correction == RING
}

/// Effect of one fault on a qubit `v` ringed by its four gate partners, where the full
/// ring of partner `Z` errors is equivalent to `X` on `v`. Returns whether `v` ends up
/// with an `X` and a `Z` component after the ring is corrected.
fn ring_fault_effect(m: Mechanism, on_v: Pauli, on_partner: Pauli) -> (bool, bool) {
    let t = m.time();
    let mut chain = 0u8;
    // An X on `v` after time t reaches as Z the partners of the remaining steps.
    if on_v.x_bit() {
        for s in (t + 1)..=4 {
            chain |= 1 << (s - 1);
        }
    }
    if let Mechanism::Gate { step } = m {
        if on_partner.z_bit() {
            chain ^= 1 << (step - 1);
        }
    }
    (on_v.x_bit() ^ ring_residual_winds(chain), on_v.z_bit())
}

/// First-order channel contributed by one unprotected edge qubit of the one-dimensional
/// section of a defect, by enumerating every single fault on it.
///
/// The qubit is measured in the `Z` basis, so its own `Z` components are absorbed and an
/// `X` component flips its outcome. Its four partners ring it; a full ring of partner `Z`
/// errors is equivalent to the flip, and each flip that survives correction acts as
/// `X` on the S-qubit.
pub fn enumerate_defect_line_channel() -> ChannelForm {
    let mut ch = ChannelForm::default();
    for (m, on_e, on_f) in single_faults() {
        let (flip, _) = ring_fault_effect(m, on_e, on_f);
        if flip {
            ch.add_pauli(Pauli::X, mechanism_weight(m));
        }
    }
    ch
}

/// Outcome of the enumeration of the central S-qubit channel under an interpreted tip
/// geometry, compared with the reference contribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CentralAttempt {
    pub enumerated: ChannelForm,
    pub reference: ChannelForm,
}

impl CentralAttempt {
    /// `enumerated - reference`.
    pub fn discrepancy(&self) -> ChannelForm {
        self.enumerated - self.reference
    }

    pub fn agrees(&self) -> bool {
        let d = self.discrepancy();
        d.x.is_zero() && d.y.is_zero() && d.z.is_zero()
    }
}

/// Enumerates the faults acting on the S-qubit itself with its four gate partners
/// forming a ring as for a defect-line qubit. Faults on the partners that propagate
/// onto the S-qubit and the short relative cycles at the defect tip are outside this
/// geometry, so the `Z` coefficient of the gate rate is expected to fall short.
pub fn enumerate_central_channel_attempt() -> CentralAttempt {
    let mut ch = ChannelForm::default();
    for (m, on_s, on_f) in single_faults() {
        let (x, z) = ring_fault_effect(m, on_s, on_f);
        let p = match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        };
        ch.add_pauli(p, mechanism_weight(m));
    }
    CentralAttempt {
        enumerated: ch,
        reference: central_channel_form(),
    }
}

/// Equivalent independent `Z` rate on S-qubits for a model.
pub fn equivalent_z_rate(model: ModelKind) -> RateForm {
    effective_s_channel_form(model).z_equivalent()
}

/// The [15,1,3] CSS code from the punctured Reed-Muller code R(1,4)*. Qubit `j` is bit
/// `j` of a `u16`; column `j` of `G_X` is the binary expansion of `j + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RmCode {
    pub n: usize,
    pub g_x: Vec<u16>,
    pub g_z: Vec<u16>,
    pub logical_x: u16,
    pub logical_z: u16,
    /// Qubit flipped for each nonzero syndrome.
    lookup: [u8; 16],
}

fn parity(x: u16) -> bool {
    x.count_ones() % 2 == 1
}

/// Basis of the GF(2) span of `rows` in reduced form.
fn row_basis(rows: &[u16]) -> Vec<u16> {
    let mut basis: Vec<u16> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis
}

/// Whether `v` lies in the span of a basis produced by `row_basis`.
fn in_span(basis: &[u16], v: u16) -> bool {
    basis.iter().fold(v, |v, &b| v.min(v ^ b)) == 0
}

impl RmCode {
    pub fn new() -> Self {
        let n = 15;
        let g_x: Vec<u16> = (0..4)
            .map(|r| (0..n).filter(|j| (j + 1) >> r & 1 == 1).fold(0u16, |m, j| m | 1 << j))
            .collect();
        let all = (1u16 << n) - 1;
        // G_Z: the even-weight words orthogonal to G_X, so that G_Z + all-ones = G_X^perp.
        let kernel: Vec<u16> = (0..=all).filter(|&v| g_x.iter().all(|&r| !parity(v & r))).collect();
        let even: Vec<u16> = kernel.iter().copied().filter(|&v| !parity(v)).collect();
        let g_z = row_basis(&even);
        let mut lookup = [u8::MAX; 16];
        for j in 0..n {
            lookup[Self::syndrome_of(&g_x, 1 << j) as usize] = j as u8;
        }
        RmCode { n, g_x, g_z, logical_x: all, logical_z: all, lookup }
    }

    fn syndrome_of(g_x: &[u16], e: u16) -> u8 {
        g_x.iter().enumerate().fold(0u8, |s, (r, &row)| s | (parity(e & row) as u8) << r)
    }

    /// `X`-stabilizer syndrome of a `Z` error.
    pub fn syndrome(&self, e: u16) -> u8 {
        Self::syndrome_of(&self.g_x, e)
    }

    /// The single-qubit `Z` correction for a syndrome.
    pub fn correction(&self, syndrome: u8) -> u16 {
        match syndrome {
            0 => 0,
            s => 1 << self.lookup[s as usize],
        }
    }

    /// Whether a `Z` error is a logical error after correction: the residual is a
    /// `Z`-type operator commuting with all stabilizers, logical iff it anticommutes
    /// with the all-ones `X` logical.
    pub fn logical_fault(&self, e: u16) -> bool {
        let r = e ^ self.correction(self.syndrome(e));
        parity(r & self.logical_x)
    }

    /// Every word of `G_X^perp`, the `Z` operators with trivial syndrome.
    pub fn syndrome_free(&self) -> Vec<u16> {
        let mut basis = self.g_z.clone();
        basis.push(self.logical_z);
        let mut words = vec![0u16];
        for b in basis {
            let more: Vec<u16> = words.iter().map(|w| w ^ b).collect();
            words.extend(more);
        }
        words
    }

    pub fn in_stabilizer_z(&self, v: u16) -> bool {
        in_span(&self.g_z, v)
    }
}

impl Default for RmCode {
    fn default() -> Self {
        Self::new()
    }
}

/// One term `coeff * q~^a * q^b * (1-q)^c` of a transfer polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: i64,
    pub q_tilde_pow: u32,
    pub q_pow: u32,
    pub one_minus_q_pow: u32,
}

impl Term {
    pub fn order(&self) -> u32 {
        self.q_tilde_pow + self.q_pow
    }

    pub fn eval(&self, q: f64, q_tilde: f64) -> f64 {
        self.coeff as f64
            * q_tilde.powi(self.q_tilde_pow as i32)
            * q.powi(self.q_pow as i32)
            * (1.0 - q).powi(self.one_minus_q_pow as i32)
    }
}

/// Level-to-level map of the coherent-Z parameters under one round of [15,1,3] decoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RmTransfer {
    pub q_next: Vec<Term>,
    pub q_tilde_next: Vec<Term>,
}

impl RmTransfer {
    /// Terms of total order at most `max_order` in `(q, q~)`.
    pub fn truncated(&self, max_order: u32) -> RmTransfer {
        let keep = |t: &[Term]| t.iter().copied().filter(|t| t.order() <= max_order).collect();
        RmTransfer {
            q_next: keep(&self.q_next),
            q_tilde_next: keep(&self.q_tilde_next),
        }
    }

    pub fn step(&self, q: f64, q_tilde: f64) -> (f64, f64) {
        let sum = |t: &[Term]| t.iter().map(|t| t.eval(q, q_tilde)).sum();
        (sum(&self.q_next), sum(&self.q_tilde_next))
    }

    pub fn coeff(&self, of_q_tilde: bool, q_tilde_pow: u32, q_pow: u32) -> i64 {
        let terms = if of_q_tilde { &self.q_tilde_next } else { &self.q_next };
        terms
            .iter()
            .find(|t| t.q_tilde_pow == q_tilde_pow && t.q_pow == q_pow)
            .map_or(0, |t| t.coeff)
    }
}

/// Derives the transfer map by exhaustive enumeration.
///
/// The product channel on 15 qubits is `sum_{e,f} chi(e,f) Z^e rho Z^f`. Syndrome
/// measurement keeps pairs with equal syndrome, i.e. `f = e + d` with `d` syndrome-free,
/// and correction maps each side to a logical `Z` power. Pairs with both sides logical
/// give `q'`; pairs with one side logical give `i q~'`. Each pair contributes
/// `(i q~)^|d| (-1)^|e & d| q^|e - d| (1-q)^(15 - |d| - |e - d|)`. Terms of order above
/// `max_order` are dropped.
pub fn rm_exhaustive_oracle(max_order: u32) -> RmTransfer {
    let code = RmCode::new();
    let words: Vec<u16> = code
        .syndrome_free()
        .into_iter()
        .filter(|d| d.count_ones() <= max_order)
        .collect();
    let n = code.n as u32;
    // [|d|][|e - d|] -> integer coefficient, separately for (1,1) and (0,1) pairs.
    type Table = Vec<[i64; 16]>;
    let zero = || (vec![[0i64; 16]; 16], vec![[0i64; 16]; 16]);
    let (both, mixed): (Table, Table) = (0u32..1 << n)
        .into_par_iter()
        .fold(zero, |(mut both, mut mixed), e| {
            let e = e as u16;
            let a = code.logical_fault(e);
            for &d in &words {
                let w = d.count_ones();
                let rest = (e & !d).count_ones();
                if w + rest > max_order {
                    continue;
                }
                let b = a ^ parity(d);
                let sign = if (e & d).count_ones() % 2 == 1 { -1 } else { 1 };
                // i^|d|: real part for even |d|, imaginary part for odd |d|.
                let i_pow = if (w / 2) % 2 == 1 { -1 } else { 1 };
                match (a, b) {
                    (true, true) => both[w as usize][rest as usize] += sign * i_pow,
                    (false, true) => mixed[w as usize][rest as usize] += sign * i_pow,
                    _ => {}
                }
            }
            (both, mixed)
        })
        .reduce(zero, |(mut a1, mut b1), (a2, b2)| {
            for i in 0..16 {
                for j in 0..16 {
                    a1[i][j] += a2[i][j];
                    b1[i][j] += b2[i][j];
                }
            }
            (a1, b1)
        });
    let terms = |t: &Table| -> Vec<Term> {
        let mut out = Vec::new();
        for (w, row) in t.iter().enumerate() {
            for (rest, &c) in row.iter().enumerate() {
                if c != 0 {
                    out.push(Term {
                        coeff: c,
                        q_tilde_pow: w as u32,
                        q_pow: rest as u32,
                        one_minus_q_pow: n - w as u32 - rest as u32,
                    });
                }
            }
        }
        out
    };
    RmTransfer {
        q_next: terms(&both),
        q_tilde_next: terms(&mixed),
    }
}

/// One level of the recursion to fourth order:
/// `q' = 105 q^2 (1-q)^13 + 35 q^3 (1-q)^12 + 1260 q^4 (1-q)^11 + 630 q~^4 (1-q)^11`,
/// `q~' = 70 q~^3 (1-q)^12 - 1680 q~^3 q (1-q)^11`.
pub fn rm_recursion_step(q: f64, q_tilde: f64) -> (f64, f64) {
    let r = 1.0 - q;
    let q_next = 105.0 * q.powi(2) * r.powi(13)
        + 35.0 * q.powi(3) * r.powi(12)
        + 1260.0 * q.powi(4) * r.powi(11)
        + 630.0 * q_tilde.powi(4) * r.powi(11);
    let q_tilde_next = 70.0 * q_tilde.powi(3) * r.powi(12) - 1680.0 * q_tilde.powi(3) * q * r.powi(11);
    (q_next, q_tilde_next)
}

/// Whether iterating `step` from `(q, 0)` drives the error to zero.
fn iterates_vanish(step: &impl Fn(f64, f64) -> (f64, f64), q0: f64) -> bool {
    let (mut q, mut qt) = (q0, 0.0);
    for _ in 0..10_000 {
        (q, qt) = step(q, qt);
        if q < 1e-30 {
            return true;
        }
        if !(q < 0.5) {
            return false;
        }
    }
    false
}

/// Largest initial `q` (with `q~ = 0`) whose iterates under `step` vanish, by bisection
/// on `[0, 1/2]` to absolute precision `tol`.
pub fn rm_threshold(step: impl Fn(f64, f64) -> (f64, f64), tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if iterates_vanish(&step, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Fixed point of the leading-order map `q' = c q^2`, with `c` the weight-2 count of
/// the enumeration.
pub fn rm_leading_order_threshold() -> Q {
    let c = rm_exhaustive_oracle(2).coeff(false, 0, 2);
    Q::new(1, c)
}

/// A one-parameter family of rates: Model 1, or Model 2 with
/// `pP = pS = pM = local * t` and `p2 = gate * t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Direction {
    Model1,
    Model2 { local: Q, gate: Q },
}

impl Direction {
    pub fn rates(&self, t: Q) -> ErrorRates<Q> {
        match *self {
            Direction::Model1 => ErrorRates::Model1 { p1: t },
            Direction::Model2 { local, gate } => ErrorRates::Model2 {
                p_p: local * t,
                p_s: local * t,
                p_m: local * t,
                p2: gate * t,
            },
        }
    }

    fn kind(&self) -> ModelKind {
        match self {
            Direction::Model1 => ModelKind::Model1,
            Direction::Model2 { .. } => ModelKind::Model2,
        }
    }

    /// Threshold of the topological correction in the bulk for the standard directions.
    pub fn reference_topological_threshold(&self) -> Option<f64> {
        let one = Q::one();
        let zero = Q::zero();
        match *self {
            Direction::Model1 => Some(4.4e-2),
            Direction::Model2 { local, gate } if local == one && gate == zero => Some(1.46e-2),
            Direction::Model2 { local, gate } if local == zero && gate == one => Some(0.96e-2),
            Direction::Model2 { local, gate } if local == one && gate == one => Some(0.58e-2),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limiting {
    Topological,
    ReedMuller,
}

/// Thresholds of the two correction mechanisms along a direction, in units of `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedThreshold {
    pub direction: Direction,
    pub topological: f64,
    /// Exact Reed-Muller threshold `t` at which the equivalent Z rate reaches `1/105`.
    pub reed_muller: Q,
    pub overall: f64,
    pub limiting: Limiting,
}

/// Reed-Muller threshold along a direction: the `t` at which the equivalent `Z` rate on
/// S-qubits equals the leading-order code threshold.
pub fn reed_muller_threshold(direction: Direction) -> Result<Q> {
    let slope = equivalent_z_rate(direction.kind()).eval(&direction.rates(Q::one()));
    if !slope.is_positive() {
        return Err(Error::InvalidArgument(format!("direction {direction:?} has no Z rate")));
    }
    Ok(rm_leading_order_threshold() / slope)
}

/// Compares the Reed-Muller threshold with a topological one and keeps the smaller.
pub fn combined_threshold(direction: Direction, topological: f64) -> Result<CombinedThreshold> {
    let rm = reed_muller_threshold(direction)?;
    let rm_f = Scalar::to_f64(&rm);
    let (overall, limiting) = if rm_f <= topological {
        (rm_f, Limiting::ReedMuller)
    } else {
        (topological, Limiting::Topological)
    };
    Ok(CombinedThreshold {
        direction,
        topological,
        reed_muller: rm,
        overall,
        limiting,
    })
}

/// Probability that an error cycle winds around a defect of circumference `u` and
/// length `l`: the lowest-order count and its Stirling approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingEstimate {
    /// `l * u! / ((u/2)!)^2 * q^(u/2)`.
    pub combinatorial: f64,
    /// `l * exp(u ln(4q) / 2) / sqrt(pi u / 2)`.
    pub asymptotic: f64,
}

pub fn winding_error_probability(u: u32, l: f64, q: f64) -> Result<WindingEstimate> {
    if u == 0 || u % 2 == 1 {
        return Err(Error::InvalidArgument(format!("circumference u = {u} must be even and positive")));
    }
    if !(0.0..=1.0).contains(&q) || l < 0.0 {
        return Err(Error::InvalidArgument(format!("need 0 <= q <= 1 and l >= 0, got q = {q}, l = {l}")));
    }
    let half = u / 2;
    // C(u, u/2) as a float product.
    let binom = (1..=half).fold(1.0f64, |acc, i| acc * (half + i) as f64 / i as f64);
    let uf = u as f64;
    Ok(WindingEstimate {
        combinatorial: l * binom * q.powi(half as i32),
        asymptotic: l * (uf * (4.0 * q).ln() / 2.0).exp() / (std::f64::consts::PI * uf / 2.0).sqrt(),
    })
}

/// `gamma = log2 15`, the exponent of the Reed-Muller overhead.
pub fn rm_overhead_exponent() -> f64 {
    15f64.log2()
}

/// Decay rate of winding errors per unit circumference at edge flip rate `q`.
pub fn kappa(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 0.25) {
        return Err(Error::InvalidArgument(format!("kappa needs 0 < q < 1/4, got {q}")));
    }
    Ok(-(4.0 * q).ln() / 2.0)
}

/// Edge flip rate of Model 1 at depolarizing rate `p1`.
pub fn model1_edge_rate(p1: f64) -> f64 {
    2.0 * p1 / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    /// Reed-Muller qubit overhead `(log N / log(p_c/p))^gamma`.
    pub o_rm: f64,
    pub gamma: f64,
    pub kappa: f64,
    /// Strand separation `2 ln N / kappa`.
    pub r: f64,
    /// Cluster size bound `9 r^3 (N O_RM)^2`.
    pub n_ft: f64,
    /// `N^2 (ln N)^(3 + 2 gamma)`.
    pub n_ft_scaling: f64,
}

/// Resource overhead for `n` non-Clifford rotations at S-qubit error rate `p` below the
/// Reed-Muller threshold `p_c`, with edge flip rate `q` setting the winding decay.
pub fn overhead(n: f64, p: f64, p_c: f64, q: f64) -> Result<Overhead> {
    if !(n >= 2.0) {
        return Err(Error::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("need p > 0, got {p}")));
    }
    if p >= p_c {
        return Err(Error::NoThreshold { p, p_c });
    }
    let gamma = rm_overhead_exponent();
    let kappa = kappa(q)?;
    let ln_n = n.ln();
    let o_rm = (ln_n / (p_c / p).ln()).powf(gamma);
    let r = 2.0 / kappa * ln_n;
    Ok(Overhead {
        o_rm,
        gamma,
        kappa,
        r,
        n_ft: 9.0 * r.powi(3) * (n * o_rm).powi(2),
        n_ft_scaling: n * n * ln_n.powf(3.0 + 2.0 * gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_decoding() {
        assert!(!ring_residual_winds(0));
        assert!(ring_residual_winds(RING));
        assert!(!ring_residual_winds(0b0001));
        assert!(ring_residual_winds(0b0111));
        assert!(!ring_residual_winds(0b0011));
        assert!(ring_residual_winds(0b1100));
    }

    #[test]
    fn span_helpers() {
        let b = row_basis(&[0b011, 0b110, 0b101]);
        assert_eq!(b.len(), 2);
        assert!(in_span(&b, 0b101));
        assert!(!in_span(&b, 0b001));
    }
}
