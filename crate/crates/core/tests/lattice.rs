use proptest::prelude::*;
use topoft::lattice::*;

fn open(low: EndKind, high: EndKind) -> AxisBoundary {
    AxisBoundary::Open { low, high }
}

fn any_axis() -> impl Strategy<Value = AxisBoundary> {
    prop_oneof![
        Just(AxisBoundary::Periodic),
        Just(open(EndKind::Rough, EndKind::Rough)),
        Just(open(EndKind::Smooth, EndKind::Smooth)),
        Just(open(EndKind::Rough, EndKind::Smooth)),
        Just(open(EndKind::Smooth, EndKind::Rough)),
    ]
}

fn any_lattice() -> impl Strategy<Value = Lattice3D> {
    let dims = [2usize..5, 2usize..5, 2usize..5];
    let slab = [any_axis(), any_axis(), any_axis()].prop_map(|axes| Boundary::Slab { axes });
    let bc = prop_oneof![Just(Boundary::Periodic), slab, (1usize..2).prop_map(|d| Boundary::DefectSlab { defect_depth: d })];
    (dims, bc).prop_filter_map("valid geometry", |(d, b)| Lattice3D::build(d, b).ok())
}

fn random_chain(lat: &Lattice3D, complex: Complex, dim: usize, bits: &[bool]) -> Chain {
    let n = lat.count(complex, dim);
    Chain::from_indices(lat, complex, dim, (0..n).filter(|&i| bits[i % bits.len()] ^ (i % 7 == 3 && bits[0])))
}

#[test]
fn periodic_counts_and_euler_characteristic() {
    for dims in [[2, 2, 2], [3, 4, 5], [6, 2, 3]] {
        let lat = Lattice3D::build(dims, Boundary::Periodic).unwrap();
        let n: usize = dims.iter().product();
        for c in [Complex::Primal, Complex::Dual] {
            let counts: Vec<usize> = (0..4).map(|k| lat.count(c, k)).collect();
            assert_eq!(counts, [n, 3 * n, 3 * n, n]);
        }
        assert_eq!(lat.num_qubits(), 6 * n);
    }
}

#[test]
fn slab_euler_characteristic_is_one() {
    // An all-smooth box is a solid cube of primal cells.
    let smooth = open(EndKind::Smooth, EndKind::Smooth);
    let lat = Lattice3D::build([3, 4, 2], Boundary::Slab { axes: [smooth; 3] }).unwrap();
    let chi: i64 = (0..4).map(|k| (-1i64).pow(k as u32) * lat.count(Complex::Primal, k) as i64).sum();
    assert_eq!(chi, 1);
}

#[test]
fn dual_identifies_cells() {
    let lat = Lattice3D::build([3, 3, 4], Boundary::Periodic).unwrap();
    for k in 0..4 {
        assert_eq!(lat.count(Complex::Primal, k), lat.count(Complex::Dual, 3 - k));
        let c = Chain::from_indices(&lat, Complex::Primal, k, [0, 5]);
        let d = lat.dual(&c);
        assert_eq!((d.complex, d.dim), (Complex::Dual, 3 - k));
        for i in d.support() {
            assert_eq!(lat.point(Complex::Dual, 3 - k, i), lat.point(Complex::Primal, k, i));
        }
        assert_eq!(lat.dual(&d), c);
    }
}

#[test]
fn index_round_trip_and_qubits() {
    let lat = Lattice3D::build([3, 4, 2], Boundary::Periodic).unwrap();
    for k in 0..4 {
        for (i, p) in lat.points(Complex::Primal, k).iter().enumerate() {
            assert_eq!(lat.index(Complex::Primal, k, *p), Some(i));
            assert_eq!(odd_count(p), k);
        }
    }
    for q in 0..lat.num_qubits() {
        let p = lat.qubit_point(q);
        assert_eq!(lat.qubit_index(p), Some(q));
        assert_eq!(lat.qubit_as_edge(q).is_some(), odd_count(&p) == 1);
        assert_eq!(lat.qubit_as_face(q).is_some(), odd_count(&p) == 2);
        for r in lat.qubit_neighbors(q) {
            assert!(lat.qubit_neighbors(r).contains(&q));
            assert_ne!(odd_count(&lat.qubit_point(r)), odd_count(&p));
        }
        assert_eq!(lat.qubit_neighbors(q).len(), 4);
    }
}

#[test]
fn dual_boundary_is_primal_coboundary() {
    let lat = Lattice3D::build([3, 3, 3], Boundary::Periodic).unwrap();
    for k in 0..3 {
        for i in 0..lat.count(Complex::Primal, k) {
            let d = lat.dual(&Chain::from_indices(&lat, Complex::Primal, k, [i]));
            let bd = lat.boundary(&d).unwrap();
            let mut got: Vec<usize> = bd.support();
            let mut want: Vec<usize> = lat.coboundary_of(Complex::Primal, k, i).iter().map(|&j| j as usize).collect();
            got.sort();
            want.sort();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn torus_has_noncontractible_cycles() {
    let lat = Lattice3D::build([3, 3, 3], Boundary::Periodic).unwrap();
    let line: Vec<usize> = (0..3).map(|x| lat.index(Complex::Primal, 1, [2 * x + 1, 0, 0]).unwrap()).collect();
    let c = Chain::from_indices(&lat, Complex::Primal, 1, line);
    assert!(lat.boundary(&c).unwrap().is_zero());
    let zero = Chain::zero(&lat, Complex::Primal, 1);
    assert!(!lat.homologous(&c, &zero, &[]).unwrap());
    // Translating the line along y gives a homologous cycle.
    let shifted: Vec<usize> = (0..3).map(|x| lat.index(Complex::Primal, 1, [2 * x + 1, 2, 0]).unwrap()).collect();
    let c2 = Chain::from_indices(&lat, Complex::Primal, 1, shifted);
    assert!(lat.homologous(&c, &c2, &[]).unwrap());
}

#[test]
fn relative_homology_absorbs_defect() {
    let lat = Lattice3D::build([3, 3, 4], Boundary::DefectSlab { defect_depth: 1 }).unwrap();
    let region = lat.defect_region(Complex::Primal, 1);
    assert!(!region.is_empty());
    let c = Chain::from_indices(&lat, Complex::Primal, 1, [region[0]]);
    let zero = Chain::zero(&lat, Complex::Primal, 1);
    assert!(lat.homologous(&c, &zero, &region).unwrap());
    assert!(!lat.homologous(&c, &zero, &[]).unwrap());
    assert!(lat.defect_region(Complex::Dual, 1).is_empty());
}

#[test]
fn invalid_geometry_rejected() {
    assert!(Lattice3D::build([4, 4, 4], Boundary::DefectSlab { defect_depth: 0 }).is_err());
    assert!(Lattice3D::build([4, 4, 4], Boundary::DefectSlab { defect_depth: 4 }).is_err());
    let lat = Lattice3D::build([2, 2, 2], Boundary::Periodic).unwrap();
    let a = Chain::zero(&lat, Complex::Primal, 1);
    let b = Chain::zero(&lat, Complex::Primal, 2);
    assert!(lat.homologous(&a, &b, &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boundary_of_boundary_vanishes(lat in any_lattice(), bits in prop::collection::vec(any::<bool>(), 1..40), dual in any::<bool>(), k in 2usize..4) {
        let complex = if dual { Complex::Dual } else { Complex::Primal };
        let c = random_chain(&lat, complex, k, &bits);
        let bb = lat.boundary(&lat.boundary(&c).unwrap()).unwrap();
        prop_assert!(bb.is_zero());
    }

    #[test]
    fn boundary_is_linear(lat in any_lattice(), a in prop::collection::vec(any::<bool>(), 1..30), b in prop::collection::vec(any::<bool>(), 1..30), k in 1usize..4) {
        let x = random_chain(&lat, Complex::Primal, k, &a);
        let y = random_chain(&lat, Complex::Primal, k, &b);
        let lhs = lat.boundary(&x.add(&y)).unwrap();
        let rhs = lat.boundary(&x).unwrap().add(&lat.boundary(&y).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn homology_is_an_equivalence(a in prop::collection::vec(any::<bool>(), 1..20), b in prop::collection::vec(any::<bool>(), 1..20), f in prop::collection::vec(any::<bool>(), 1..20)) {
        let lat = Lattice3D::build([3, 3, 4], Boundary::DefectSlab { defect_depth: 1 }).unwrap();
        let region = lat.defect_region(Complex::Primal, 1);
        let x = random_chain(&lat, Complex::Primal, 1, &a);
        let y = random_chain(&lat, Complex::Primal, 1, &b);
        prop_assert!(lat.homologous(&x, &x, &region).unwrap());
        prop_assert_eq!(lat.homologous(&x, &y, &region).unwrap(), lat.homologous(&y, &x, &region).unwrap());
        // Adding a boundary never changes the class.
        let z = x.add(&lat.boundary(&random_chain(&lat, Complex::Primal, 2, &f)).unwrap());
        prop_assert!(lat.homologous(&x, &z, &region).unwrap());
        prop_assert_eq!(lat.homologous(&z, &y, &region).unwrap(), lat.homologous(&x, &y, &region).unwrap());
    }
}
