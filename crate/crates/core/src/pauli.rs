//! Pauli operators on cluster qubits in symplectic form.
//!
//! An operator is stored as `i^k X^x Z^z` with `x`, `z` bit vectors over the qubits
//! of a lattice (primal edges first, then primal faces). The exponent `k` is kept
//! modulo 4 so products of `Y = i X Z` factors carry their phase exactly.

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::lattice::{Chain, Lattice3D};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    pub x: BitVector,
    pub z: BitVector,
    /// Global phase `i^phase`.
    pub phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        PauliOperator {
            x: BitVector::zeros(n),
            z: BitVector::zeros(n),
            phase: 0,
        }
    }

    /// A single-qubit Pauli; `Y` is stored as `i X Z`.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut op = Self::identity(n);
        if p.x_bit() {
            op.x.set(qubit, true);
        }
        if p.z_bit() {
            op.z.set(qubit, true);
        }
        if p == Pauli::Y {
            op.phase = 1;
        }
        op
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn weight(&self) -> usize {
        let mut s = self.x.clone();
        for i in self.z.iter_ones() {
            s.set(i, true);
        }
        s.count_ones()
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x.get(qubit), self.z.get(qubit))
    }

    /// Operator product `self * other` with exact phase.
    pub fn mul(&self, other: &PauliOperator) -> PauliOperator {
        // X^a Z^b X^c Z^d = (-1)^{b.c} X^{a+c} Z^{b+d}
        let swap = self.z.dot(&other.x) as u8;
        PauliOperator {
            x: &self.x ^ &other.x,
            z: &self.z ^ &other.z,
            phase: (self.phase + other.phase + 2 * swap) % 4,
        }
    }

    /// Symplectic form: true when the operators anticommute.
    pub fn symplectic(&self, other: &PauliOperator) -> bool {
        self.x.dot(&other.z) ^ self.z.dot(&other.x)
    }

    pub fn commutes(&self, other: &PauliOperator) -> bool {
        !self.symplectic(other)
    }

    /// Hermitian operators have `phase` congruent to the number of `Y` factors mod 2.
    pub fn is_hermitian(&self) -> bool {
        let ys = self.x.dot(&self.z) as u8;
        (self.phase + ys).is_multiple_of(2)
    }

    /// Sign of a Hermitian operator written as a product of `X`, `Y`, `Z` factors.
    pub fn sign(&self) -> i8 {
        assert!(self.is_hermitian(), "sign requested for a non-Hermitian operator");
        let mut y = 0usize;
        for (a, b) in self.x.words().iter().zip(self.z.words()) {
            y += (a & b).count_ones() as usize;
        }
        // X^x Z^z = i^{-#Y} (product of X, Y, Z factors)
        let k = (self.phase as usize + 4 * y - y) % 4;
        if k == 0 {
            1
        } else {
            -1
        }
    }

    /// Masks both supports to `region`; the phase is kept.
    pub fn restrict(&self, region: &BitVector) -> PauliOperator {
        let mut x = self.x.clone();
        let mut z = self.z.clone();
        x.and_assign(region);
        z.and_assign(region);
        PauliOperator {
            x,
            z,
            phase: self.phase,
        }
    }

    pub fn same_support(&self, other: &PauliOperator) -> bool {
        self.x == other.x && self.z == other.z
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i^{}", self.phase)?;
        for q in 0..self.num_qubits() {
            match self.get(q) {
                Pauli::I => {}
                p => write!(f, " {p:?}{q}")?,
            }
        }
        Ok(())
    }
}

fn qubits_of_chain(lattice: &Lattice3D, chain: &Chain) -> Result<Vec<usize>> {
    chain
        .bits
        .iter_ones()
        .map(|i| {
            let p = lattice.point(chain.complex, chain.dim, i);
            lattice.qubit_index(p).ok_or_else(|| {
                Error::InvalidSite(format!(
                    "{}-chain element {p:?} of the {} complex is not a qubit",
                    chain.dim,
                    chain.complex.name()
                ))
            })
        })
        .collect()
}

/// `K_a = X_a` times `Z` on every cluster neighbour of `a`.
pub fn stabilizer_generator(lattice: &Lattice3D, qubit: usize) -> Result<PauliOperator> {
    let n = lattice.num_qubits();
    if qubit >= n {
        return Err(Error::InvalidSite(format!(
            "qubit {qubit} out of range ({n} qubits)"
        )));
    }
    let mut op = PauliOperator::identity(n);
    op.x.set(qubit, true);
    for b in lattice.qubit_neighbors(qubit) {
        op.z.set(b, true);
    }
    Ok(op)
}

/// `K(c2) = X(c2) Z(boundary c2)` for a primal or dual 2-chain.
pub fn correlation_operator(lattice: &Lattice3D, c2: &Chain) -> Result<PauliOperator> {
    if c2.dim != 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation operators are built from 2-chains, got dimension {}",
            c2.dim
        )));
    }
    let n = lattice.num_qubits();
    let mut op = PauliOperator::identity(n);
    for q in qubits_of_chain(lattice, c2)? {
        op.x.set(q, true);
    }
    let bd = lattice.boundary(c2)?;
    for q in qubits_of_chain(lattice, &bd)? {
        op.z.set(q, true);
    }
    Ok(op)
}

/// `E(c1) = Z(c1)` for a primal or dual 1-chain.
pub fn error_operator(lattice: &Lattice3D, c1: &Chain) -> Result<PauliOperator> {
    if c1.dim != 1 {
        return Err(Error::InvalidArgument(format!(
            "error operators are built from 1-chains, got dimension {}",
            c1.dim
        )));
    }
    let mut op = PauliOperator::identity(lattice.num_qubits());
    for q in qubits_of_chain(lattice, c1)? {
        op.z.set(q, true);
    }
    Ok(op)
}

/// `X` on the qubits of a chain of any dimension whose cells are qubits.
pub fn x_operator(lattice: &Lattice3D, c: &Chain) -> Result<PauliOperator> {
    let mut op = PauliOperator::identity(lattice.num_qubits());
    for q in qubits_of_chain(lattice, c)? {
        op.x.set(q, true);
    }
    Ok(op)
}

/// `Z` on the qubits of a chain of any dimension whose cells are qubits.
pub fn z_operator(lattice: &Lattice3D, c: &Chain) -> Result<PauliOperator> {
    let mut op = PauliOperator::identity(lattice.num_qubits());
    for q in qubits_of_chain(lattice, c)? {
        op.z.set(q, true);
    }
    Ok(op)
}

/// Qubit set of a chain, as a bit vector over qubits.
pub fn qubit_set(lattice: &Lattice3D, c: &Chain) -> Result<BitVector> {
    Ok(BitVector::from_indices(
        lattice.num_qubits(),
        qubits_of_chain(lattice, c)?,
    ))
}
