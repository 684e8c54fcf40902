//! Simple-cubic chain complexes: the primal lattice, its dual, and their boundary maps.
//!
//! Every cell of either complex is addressed by a point of the doubled ("cluster")
//! coordinate grid. A point with `k` odd coordinates is a primal `k`-cell and, at the
//! same time, the dual `(3-k)`-cell it is identified with. Primal boundaries step by
//! one along the odd axes of a point, dual boundaries along the even axes.
//!
//! Qubits of the cluster state sit on points with one odd coordinate (primal edges,
//! the odd sublattice) and with two odd coordinates (primal faces, the even sublattice).
//!
//! Basis ids follow `orientation * (Lx*Ly*Lz) + z*Lx*Ly + y*Lx + x` where the site is
//! `floor(c/2)` per axis and the orientation is the odd axis of an edge or the normal
//! axis of a face. Truncated (slab) lattices rank the surviving cells in the same order.

use crate::error::{Error, Result};
use crate::gf2::{BitVector, SpanBasis};
use serde::{Deserialize, Serialize};

pub type Point = [i32; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complex {
    Primal,
    Dual,
}

impl Complex {
    pub fn other(self) -> Complex {
        match self {
            Complex::Primal => Complex::Dual,
            Complex::Dual => Complex::Primal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Complex::Primal => "primal",
            Complex::Dual => "dual",
        }
    }
}

/// Type of an open end, named from the primal lattice's point of view.
///
/// A rough end leaves dangling primal edges (a face there has three edges);
/// a smooth end terminates in a full plane of primal vertices. Rough for the
/// primal lattice is smooth for the dual one and vice versa.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    Rough,
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisBoundary {
    Periodic,
    Open { low: EndKind, high: EndKind },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Slab { axes: [AxisBoundary; 3] },
    /// Periodic in all directions; the top `defect_depth` cells along z form a primal
    /// defect region. The complement V is where errors occur and syndromes are read.
    DefectSlab { defect_depth: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dims: [usize; 3],
    pub boundary: Boundary,
}

/// Extent of one axis in cluster coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisExtent {
    pub cells: usize,
    pub periodic: bool,
    pub lo: i32,
    pub hi: i32,
}

impl AxisExtent {
    fn new(cells: usize, b: AxisBoundary) -> Self {
        let l = cells as i32;
        match b {
            AxisBoundary::Periodic => AxisExtent {
                cells,
                periodic: true,
                lo: 0,
                hi: 2 * l - 1,
            },
            AxisBoundary::Open { low, high } => AxisExtent {
                cells,
                periodic: false,
                lo: if low == EndKind::Smooth { 0 } else { 1 },
                hi: if high == EndKind::Smooth { 2 * l } else { 2 * l - 1 },
            },
        }
    }

    fn table_len(&self) -> usize {
        (self.hi + 1) as usize
    }

    #[inline]
    pub fn shift(&self, c: i32, d: i32) -> Option<i32> {
        let n = c + d;
        if self.periodic {
            Some(n.rem_euclid(2 * self.cells as i32))
        } else if n < self.lo || n > self.hi {
            None
        } else {
            Some(n)
        }
    }

    pub fn boundary_kind(&self, high: bool) -> Option<EndKind> {
        if self.periodic {
            return None;
        }
        let v = if high { self.hi } else { self.lo };
        Some(if v % 2 == 0 {
            EndKind::Smooth
        } else {
            EndKind::Rough
        })
    }
}

/// Which of the two complexes sees a given dimension of a point.
#[inline]
pub fn dim_of(complex: Complex, odd: usize) -> usize {
    match complex {
        Complex::Primal => odd,
        Complex::Dual => 3 - odd,
    }
}

#[inline]
fn odd_of(complex: Complex, dim: usize) -> usize {
    dim_of(complex, dim)
}

pub fn odd_count(p: &Point) -> usize {
    p.iter().filter(|&&c| c & 1 == 1).count()
}

/// Orientation of a point: the unique odd axis (one odd coordinate), the unique even
/// axis (two odd coordinates), or 0 otherwise.
pub fn orientation(p: &Point) -> usize {
    match odd_count(p) {
        1 => (0..3).find(|&a| p[a] & 1 == 1).unwrap(),
        2 => (0..3).find(|&a| p[a] & 1 == 0).unwrap(),
        _ => 0,
    }
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, Default)]
struct Csr {
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl Csr {
    fn get(&self, i: usize) -> &[u32] {
        &self.items[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

#[derive(Clone, Debug)]
pub struct Lattice3D {
    spec: LatticeSpec,
    axes: [AxisExtent; 3],
    table_dims: [usize; 3],
    /// Point -> index within its odd-count class.
    index_table: Vec<u32>,
    /// Points of each odd-count class in basis order.
    points: [Vec<Point>; 4],
    /// Neighbours with one fewer odd coordinate (primal boundary).
    down: [Csr; 4],
    /// Neighbours with one more odd coordinate (dual boundary).
    up: [Csr; 4],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chain {
    pub complex: Complex,
    pub dim: usize,
    pub bits: BitVector,
}

impl Chain {
    pub fn zero(lattice: &Lattice3D, complex: Complex, dim: usize) -> Chain {
        Chain {
            complex,
            dim,
            bits: BitVector::zeros(lattice.count(complex, dim)),
        }
    }

    pub fn from_indices(
        lattice: &Lattice3D,
        complex: Complex,
        dim: usize,
        indices: impl IntoIterator<Item = usize>,
    ) -> Chain {
        Chain {
            complex,
            dim,
            bits: BitVector::from_indices(lattice.count(complex, dim), indices),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bits.is_zero()
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn support(&self) -> Vec<usize> {
        self.bits.iter_ones().collect()
    }

    pub fn add(&self, other: &Chain) -> Chain {
        assert_eq!(
            (self.complex, self.dim),
            (other.complex, other.dim),
            "adding chains of different spaces"
        );
        Chain {
            complex: self.complex,
            dim: self.dim,
            bits: &self.bits ^ &other.bits,
        }
    }

    pub fn add_assign(&mut self, other: &Chain) {
        assert_eq!((self.complex, self.dim), (other.complex, other.dim));
        self.bits.xor_assign(&other.bits);
    }
}

impl Lattice3D {
    pub fn build(dims: [usize; 3], boundary: Boundary) -> Result<Lattice3D> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidGeometry(format!(
                "every dimension must be at least 2, got {dims:?}"
            )));
        }
        if dims.iter().any(|&d| d > 4096) {
            return Err(Error::InvalidGeometry(format!("dimension too large: {dims:?}")));
        }
        let axis_bc = match boundary {
            Boundary::Periodic => [AxisBoundary::Periodic; 3],
            Boundary::Slab { axes } => axes,
            Boundary::DefectSlab { defect_depth } => {
                if defect_depth == 0 || defect_depth >= dims[2] {
                    return Err(Error::InvalidGeometry(format!(
                        "defect depth {defect_depth} must lie in 1..{}",
                        dims[2]
                    )));
                }
                [AxisBoundary::Periodic; 3]
            }
        };
        let axes = [
            AxisExtent::new(dims[0], axis_bc[0]),
            AxisExtent::new(dims[1], axis_bc[1]),
            AxisExtent::new(dims[2], axis_bc[2]),
        ];
        let table_dims = [axes[0].table_len(), axes[1].table_len(), axes[2].table_len()];
        let mut lattice = Lattice3D {
            spec: LatticeSpec { dims, boundary },
            axes,
            table_dims,
            index_table: vec![NONE; table_dims.iter().product()],
            points: Default::default(),
            down: Default::default(),
            up: Default::default(),
        };

        // Collect points per odd-count class keyed by (orientation, z, y, x).
        let mut keyed: [Vec<(usize, Point)>; 4] = Default::default();
        for z in axes[2].lo..=axes[2].hi {
            for y in axes[1].lo..=axes[1].hi {
                for x in axes[0].lo..=axes[0].hi {
                    let p = [x, y, z];
                    keyed[odd_count(&p)].push((orientation(&p), p));
                }
            }
        }
        for (m, list) in keyed.iter_mut().enumerate() {
            // The scan above is already (z, y, x) ordered; a stable sort by orientation finishes it.
            list.sort_by_key(|(o, _)| *o);
            lattice.points[m] = list.iter().map(|(_, p)| *p).collect();
            for (i, p) in lattice.points[m].iter().enumerate() {
                let t = lattice.table_pos(p);
                lattice.index_table[t] = i as u32;
            }
        }
        for m in 0..4 {
            let mut down = Csr {
                offsets: vec![0],
                items: Vec::new(),
            };
            let mut up = Csr {
                offsets: vec![0],
                items: Vec::new(),
            };
            for p in &lattice.points[m] {
                for a in 0..3 {
                    let target = if p[a] & 1 == 1 { &mut down } else { &mut up };
                    for d in [-1, 1] {
                        if let Some(c) = axes[a].shift(p[a], d) {
                            let mut q = *p;
                            q[a] = c;
                            let idx = lattice.index_table[lattice.table_pos(&q)];
                            debug_assert_ne!(idx, NONE);
                            // Two cells on a periodic axis of length 1 would coincide; dims >= 2 rule it out.
                            target.items.push(idx);
                        }
                    }
                }
                down.offsets.push(down.items.len() as u32);
                up.offsets.push(up.items.len() as u32);
            }
            lattice.down[m] = down;
            lattice.up[m] = up;
        }
        Ok(lattice)
    }

    pub fn from_spec(spec: &LatticeSpec) -> Result<Lattice3D> {
        Self::build(spec.dims, spec.boundary)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dims(&self) -> [usize; 3] {
        self.spec.dims
    }

    pub fn boundary_condition(&self) -> Boundary {
        self.spec.boundary
    }

    pub fn axis(&self, a: usize) -> &AxisExtent {
        &self.axes[a]
    }

    pub fn sites(&self) -> usize {
        self.spec.dims.iter().product()
    }

    #[inline]
    fn table_pos(&self, p: &Point) -> usize {
        (p[2] as usize * self.table_dims[1] + p[1] as usize) * self.table_dims[0] + p[0] as usize
    }

    /// Wraps periodic coordinates and rejects points outside the truncated box.
    pub fn normalize(&self, p: Point) -> Option<Point> {
        let mut q = p;
        for a in 0..3 {
            let ax = &self.axes[a];
            if ax.periodic {
                q[a] = p[a].rem_euclid(2 * ax.cells as i32);
            } else if p[a] < ax.lo || p[a] > ax.hi {
                return None;
            }
        }
        Some(q)
    }

    pub fn count(&self, complex: Complex, dim: usize) -> usize {
        assert!(dim <= 3, "chain dimension out of range");
        self.points[odd_of(complex, dim)].len()
    }

    pub fn point(&self, complex: Complex, dim: usize, index: usize) -> Point {
        self.points[odd_of(complex, dim)][index]
    }

    pub fn points(&self, complex: Complex, dim: usize) -> &[Point] {
        &self.points[odd_of(complex, dim)]
    }

    /// Basis index of a point, which must be a `dim`-cell of `complex`.
    pub fn index(&self, complex: Complex, dim: usize, p: Point) -> Option<usize> {
        let q = self.normalize(p)?;
        if odd_count(&q) != odd_of(complex, dim) {
            return None;
        }
        let i = self.index_table[self.table_pos(&q)];
        (i != NONE).then_some(i as usize)
    }

    /// Basis elements in the boundary of element `index` of `complex`/`dim`.
    pub fn boundary_of(&self, complex: Complex, dim: usize, index: usize) -> &[u32] {
        assert!(dim >= 1);
        let m = odd_of(complex, dim);
        match complex {
            Complex::Primal => self.down[m].get(index),
            Complex::Dual => self.up[m].get(index),
        }
    }

    /// Basis elements of dimension `dim + 1` whose boundary contains element `index`.
    pub fn coboundary_of(&self, complex: Complex, dim: usize, index: usize) -> &[u32] {
        assert!(dim <= 2);
        let m = odd_of(complex, dim);
        match complex {
            Complex::Primal => self.up[m].get(index),
            Complex::Dual => self.down[m].get(index),
        }
    }

    pub fn boundary(&self, chain: &Chain) -> Result<Chain> {
        if chain.dim == 0 {
            return Err(Error::UndefinedOperation(
                "boundary of a 0-chain".to_string(),
            ));
        }
        let mut out = Chain::zero(self, chain.complex, chain.dim - 1);
        for i in chain.bits.iter_ones() {
            for &j in self.boundary_of(chain.complex, chain.dim, i) {
                out.bits.flip(j as usize);
            }
        }
        Ok(out)
    }

    /// Duality: a primal k-chain becomes the dual (3-k)-chain on the same points.
    pub fn dual(&self, chain: &Chain) -> Chain {
        Chain {
            complex: chain.complex.other(),
            dim: 3 - chain.dim,
            bits: chain.bits.clone(),
        }
    }

    /// Whether `p` lies inside the defect region of a defect-slab lattice.
    pub fn in_defect(&self, p: &Point) -> bool {
        match self.spec.boundary {
            Boundary::DefectSlab { defect_depth } => {
                let cut = 2 * (self.spec.dims[2] - defect_depth) as i32;
                p[2] == 0 || p[2] >= cut
            }
            _ => false,
        }
    }

    /// Whether `p` touches the defect surface: cluster layers adjacent to the defect.
    pub fn near_defect_surface(&self, p: &Point) -> bool {
        match self.spec.boundary {
            Boundary::DefectSlab { defect_depth } => {
                let cut = 2 * (self.spec.dims[2] - defect_depth) as i32;
                p[2] == 1 || p[2] == cut - 1
            }
            _ => false,
        }
    }

    /// Basis elements of `complex`/`dim` lying in the defect region. Only the primal
    /// complex has a defect; dual chains have no relative region.
    pub fn defect_region(&self, complex: Complex, dim: usize) -> Vec<usize> {
        if complex == Complex::Dual {
            return Vec::new();
        }
        self.points(complex, dim)
            .iter()
            .enumerate()
            .filter(|(_, p)| self.in_defect(p))
            .map(|(i, _)| i)
            .collect()
    }

    /// Decides whether `c + c_prime = boundary(b) + gamma` with `gamma` supported on `region`.
    pub fn homologous(&self, c: &Chain, c_prime: &Chain, region: &[usize]) -> Result<bool> {
        if (c.complex, c.dim) != (c_prime.complex, c_prime.dim) {
            return Err(Error::InvalidArgument(
                "homologous: chains live in different spaces".to_string(),
            ));
        }
        if self.sites() > 12 * 12 * 12 {
            return Err(Error::InvalidArgument(format!(
                "homologous is limited to 12^3 sites, lattice has {}",
                self.sites()
            )));
        }
        let n = self.count(c.complex, c.dim);
        let mut basis = SpanBasis::new(n);
        if c.dim < 3 {
            for i in 0..self.count(c.complex, c.dim + 1) {
                let col = BitVector::from_indices(
                    n,
                    self.boundary_of(c.complex, c.dim + 1, i)
                        .iter()
                        .map(|&j| j as usize),
                );
                basis.insert(col);
            }
        }
        for &r in region {
            if r >= n {
                return Err(Error::InvalidArgument(format!(
                    "region element {r} outside basis of size {n}"
                )));
            }
            basis.insert(BitVector::from_indices(n, [r]));
        }
        Ok(basis.contains(&(&c.bits ^ &c_prime.bits)))
    }

    /// Number of qubits: primal edges plus primal faces.
    pub fn num_qubits(&self) -> usize {
        self.points[1].len() + self.points[2].len()
    }

    /// Qubit id of an edge (odd sublattice) or face (even sublattice) point.
    pub fn qubit_index(&self, p: Point) -> Option<usize> {
        let q = self.normalize(p)?;
        let i = self.index_table[self.table_pos(&q)];
        if i == NONE {
            return None;
        }
        match odd_count(&q) {
            1 => Some(i as usize),
            2 => Some(self.points[1].len() + i as usize),
            _ => None,
        }
    }

    pub fn qubit_point(&self, q: usize) -> Point {
        let ne = self.points[1].len();
        if q < ne {
            self.points[1][q]
        } else {
            self.points[2][q - ne]
        }
    }

    /// Cluster neighbours of a qubit: the points one step away along any axis
    /// that are themselves qubits. An edge touches its faces, a face its edges.
    pub fn qubit_neighbors(&self, q: usize) -> Vec<usize> {
        let ne = self.points[1].len();
        if q < ne {
            self.up[1].get(q).iter().map(|&f| ne + f as usize).collect()
        } else {
            self.down[2]
                .get(q - ne)
                .iter()
                .map(|&e| e as usize)
                .collect()
        }
    }

    /// Primal edge id (same as dual face id) of a qubit on the odd sublattice.
    pub fn qubit_as_edge(&self, q: usize) -> Option<usize> {
        (q < self.points[1].len()).then_some(q)
    }

    /// Primal face id (same as dual edge id) of a qubit on the even sublattice.
    pub fn qubit_as_face(&self, q: usize) -> Option<usize> {
        let ne = self.points[1].len();
        (q >= ne).then(|| q - ne)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(l: usize) -> Lattice3D {
        Lattice3D::build([l, l, l], Boundary::Periodic).unwrap()
    }

    #[test]
    fn counts_on_small_torus() {
        let lat = periodic(2);
        assert_eq!(lat.count(Complex::Primal, 0), 8);
        assert_eq!(lat.count(Complex::Primal, 1), 24);
        assert_eq!(lat.count(Complex::Primal, 2), 24);
        assert_eq!(lat.count(Complex::Primal, 3), 8);
    }

    #[test]
    fn frozen_index_formula() {
        let lat = Lattice3D::build([3, 4, 5], Boundary::Periodic).unwrap();
        let n = 3 * 4 * 5;
        for k in 0..4 {
            for (i, p) in lat.points(Complex::Primal, k).iter().enumerate() {
                let s = [p[0] / 2, p[1] / 2, p[2] / 2];
                let id = orientation(p) * n + (s[2] * 12 + s[1] * 3 + s[0]) as usize;
                assert_eq!(i, id, "k={k} p={p:?}");
            }
        }
    }

    #[test]
    fn cell_has_six_faces() {
        let lat = periodic(3);
        for i in 0..lat.count(Complex::Primal, 3) {
            assert_eq!(lat.boundary_of(Complex::Primal, 3, i).len(), 6);
        }
    }

    #[test]
    fn rough_face_has_three_edges() {
        let open = AxisBoundary::Open {
            low: EndKind::Rough,
            high: EndKind::Rough,
        };
        let lat = Lattice3D::build(
            [3, 3, 3],
            Boundary::Slab {
                axes: [open, AxisBoundary::Periodic, AxisBoundary::Periodic],
            },
        )
        .unwrap();
        // A face normal to z at the rough x end: x = 1 is odd, y odd, z even.
        let f = lat.index(Complex::Primal, 2, [1, 1, 0]).unwrap();
        assert_eq!(lat.boundary_of(Complex::Primal, 2, f).len(), 3);
        let g = lat.index(Complex::Primal, 2, [3, 1, 0]).unwrap();
        assert_eq!(lat.boundary_of(Complex::Primal, 2, g).len(), 4);
    }

    #[test]
    fn too_small_rejected() {
        assert!(Lattice3D::build([1, 4, 4], Boundary::Periodic).is_err());
    }
}
