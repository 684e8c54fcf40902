//! Simulation and analysis of topological error correction in 3D cluster states.
//!
//! * [`lattice`]: the primal and dual cubic chain complexes with periodic, slab and
//!   defect-slab boundaries.
//! * [`pauli`]: symplectic Pauli algebra on cluster qubits, correlation and error operators.
//! * [`noise`]: the two error models, including Pauli-frame propagation through the
//!   four-step controlled-phase schedule.
//! * [`decoder`]: syndrome extraction, minimum-weight perfect matching and homology
//!   classification of the residual.
//! * [`analysis`]: trial batches, Wilson intervals, finite-size scaling fits, sweeps.
//! * [`analytic`]: effective channels, Reed-Muller recursion, thresholds and overhead.
//! * [`checks`]: verification suites against brute-force oracles.

pub mod analysis;
pub mod analytic;
pub mod checks;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod lattice;
pub mod noise;
pub mod pauli;

pub use error::{Error, Result};
pub use gf2::BitVector;
pub use lattice::{AxisBoundary, Boundary, Chain, Complex, EndKind, Lattice3D, LatticeSpec, Point};
