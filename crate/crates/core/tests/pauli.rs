use proptest::prelude::*;
use topoft::lattice::{Boundary, Chain, Complex, Lattice3D};
use topoft::pauli::*;

fn torus(l: usize) -> Lattice3D {
    Lattice3D::build([l, l, l], Boundary::Periodic).unwrap()
}

fn op_from(n: usize, word: &[u8]) -> PauliOperator {
    let mut op = PauliOperator::identity(n);
    for (q, &w) in word.iter().enumerate().take(n) {
        let p = Pauli::from_bits(w & 1 == 1, w & 2 == 2);
        op = op.mul(&PauliOperator::single(n, q, p));
    }
    op
}

#[test]
fn single_qubit_table() {
    let (x, y, z) = (PauliOperator::single(1, 0, Pauli::X), PauliOperator::single(1, 0, Pauli::Y), PauliOperator::single(1, 0, Pauli::Z));
    for a in [&x, &y, &z] {
        assert!(a.mul(a).is_identity());
        assert_eq!(a.mul(a).sign(), 1);
        for b in [&x, &y, &z] {
            assert_eq!(a.commutes(b), std::ptr::eq(a, b));
        }
    }
    assert_eq!(x.mul(&z).get(0), Pauli::Y);
    assert_eq!(Pauli::from_bits(true, true), Pauli::Y);
    assert!(Pauli::Y.x_bit() && Pauli::Y.z_bit());
}

#[test]
fn generators_commute_and_square_to_identity() {
    let lat = torus(3);
    let n = lat.num_qubits();
    let gens: Vec<_> = (0..n).map(|q| stabilizer_generator(&lat, q).unwrap()).collect();
    for (a, ga) in gens.iter().enumerate() {
        assert!(ga.is_hermitian());
        assert_eq!(ga.weight(), 5);
        assert!(ga.mul(ga).is_identity());
        for gb in &gens[a + 1..] {
            assert!(ga.commutes(gb));
        }
    }
}

#[test]
fn correlation_operator_is_product_of_generators() {
    let lat = torus(3);
    let n = lat.num_qubits();
    for complex in [Complex::Primal, Complex::Dual] {
        let c2 = Chain::from_indices(&lat, complex, 2, [0, 4, 17, 30]);
        let k = correlation_operator(&lat, &c2).unwrap();
        let mut prod = PauliOperator::identity(n);
        for q in qubit_set(&lat, &c2).unwrap().iter_ones() {
            prod = prod.mul(&stabilizer_generator(&lat, q).unwrap());
        }
        assert!(k.same_support(&prod), "{complex:?}");
    }
}

#[test]
fn closed_surface_detects_errors_by_intersection_parity() {
    let lat = torus(4);
    // The boundary of a cell is a closed primal surface; its correlation operator is pure X.
    let q = Chain::from_indices(&lat, Complex::Primal, 3, [9]);
    let surface = lat.boundary(&q).unwrap();
    let k = correlation_operator(&lat, &surface).unwrap();
    let dual_edges = lat.count(Complex::Dual, 1);
    for e in 0..dual_edges {
        let c1 = Chain::from_indices(&lat, Complex::Dual, 1, [e]);
        let err = error_operator(&lat, &c1).unwrap();
        let crossing = surface.bits.get(e);
        assert_eq!(!k.commutes(&err), crossing, "dual edge {e}");
    }
}

#[test]
fn operators_reject_wrong_dimensions() {
    let lat = torus(2);
    let c1 = Chain::from_indices(&lat, Complex::Primal, 1, [0]);
    let c0 = Chain::from_indices(&lat, Complex::Primal, 0, [0]);
    assert!(correlation_operator(&lat, &c1).is_err());
    assert!(error_operator(&lat, &lat.dual(&c1)).is_err());
    assert!(x_operator(&lat, &c0).is_err());
    assert_eq!(z_operator(&lat, &c1).unwrap().weight(), 1);
}

#[test]
fn restrict_keeps_region_only() {
    let lat = torus(2);
    let n = lat.num_qubits();
    let k = stabilizer_generator(&lat, 0).unwrap();
    let region = topoft::gf2::BitVector::from_indices(n, [0]);
    let r = k.restrict(&region);
    assert_eq!(r.weight(), 1);
    assert_eq!(r.get(0), Pauli::X);
}

proptest! {
    #[test]
    fn product_is_associative_and_symplectic_is_bilinear(a in prop::collection::vec(0u8..4, 6), b in prop::collection::vec(0u8..4, 6), c in prop::collection::vec(0u8..4, 6)) {
        let (a, b, c) = (op_from(6, &a), op_from(6, &b), op_from(6, &c));
        let l = a.mul(&b).mul(&c);
        let r = a.mul(&b.mul(&c));
        prop_assert!(l.same_support(&r));
        prop_assert_eq!(l.phase, r.phase);
        prop_assert_eq!(a.mul(&b).symplectic(&c), a.symplectic(&c) ^ b.symplectic(&c));
        prop_assert_eq!(a.symplectic(&b), b.symplectic(&a));
        // AB = BA exactly when they commute, otherwise AB = -BA.
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        let diff = (ab.phase as i32 - ba.phase as i32).rem_euclid(4);
        prop_assert_eq!(diff, if a.commutes(&b) { 0 } else { 2 });
    }

    #[test]
    fn weight_counts_non_identity(word in prop::collection::vec(0u8..4, 1..12)) {
        let op = op_from(word.len(), &word);
        prop_assert_eq!(op.weight(), word.iter().filter(|&&w| w != 0).count());
        prop_assert!(op.mul(&op).is_identity());
    }
}
