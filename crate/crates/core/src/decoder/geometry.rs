//! The vertex grid a complex is decoded on: positions, distances, boundary distances,
//! and explicit edge paths in both the uniform and the weighted metric.

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Complex, Lattice3D, Point};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub(crate) const NONE: u32 = u32::MAX;
pub(crate) const INF: u64 = u64::MAX / 4;

/// Reusable Dijkstra state; only entries touched by the previous run are cleared.
#[derive(Default)]
pub(crate) struct Search {
    pub dist: Vec<u64>,
    pub pred: Vec<Link>,
    done: Vec<bool>,
    touched: Vec<u32>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

impl Search {
    fn reset(&mut self, nv: usize) {
        if self.dist.len() != nv {
            self.dist = vec![INF; nv];
            self.pred = vec![Link { to: NONE, edge: NONE, cost: 0 }; nv];
            self.done = vec![false; nv];
        } else {
            for &v in &self.touched {
                self.dist[v as usize] = INF;
                self.done[v as usize] = false;
            }
        }
        self.touched.clear();
        self.heap.clear();
    }

    fn set(&mut self, v: usize, d: u64, l: Link) {
        if self.dist[v] == INF {
            self.touched.push(v as u32);
        }
        self.dist[v] = d;
        self.pred[v] = l;
    }
}

/// One axis of the decoding grid. Vertex position `p` sits at cluster coordinate
/// `c0 + 2p` (wrapped on periodic axes).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisGeom {
    pub n: usize,
    pub periodic: bool,
    pub c0: i32,
    /// Period in cluster coordinates (periodic axes only).
    pub wrap: i32,
    pub absorb_low: bool,
    pub absorb_high: bool,
}

impl AxisGeom {
    pub fn coord(&self, p: usize) -> i32 {
        let c = self.c0 + 2 * p as i32;
        if self.periodic {
            c.rem_euclid(self.wrap)
        } else {
            c
        }
    }

    /// Position of cluster coordinate `c`, if it is a vertex of this axis.
    pub fn position(&self, c: i32) -> Option<usize> {
        let d = if self.periodic {
            (c - self.c0).rem_euclid(self.wrap)
        } else {
            c - self.c0
        };
        (d >= 0 && d % 2 == 0 && ((d / 2) as usize) < self.n).then_some((d / 2) as usize)
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        if self.periodic {
            d.min(self.n - d)
        } else {
            d
        }
    }

    /// Distance to the nearest absorbing end, if any.
    pub fn boundary_distance(&self, p: usize) -> Option<usize> {
        let lo = self.absorb_low.then_some(p + 1);
        let hi = self.absorb_high.then_some(self.n - p);
        match (lo, hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn has_absorbing_end(&self) -> bool {
        self.absorb_low || self.absorb_high
    }
}

/// Per-edge integer costs on the edges of a complex. `Uniform` means cost 1 everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeWeights {
    Uniform,
    PerEdge(Vec<u32>),
}

impl EdgeWeights {
    /// Log-likelihood costs `ln((1-q)/q)` scaled to integers, from a per-edge flip rate.
    pub fn log_likelihood(rates: impl IntoIterator<Item = f64>, scale: f64) -> EdgeWeights {
        EdgeWeights::PerEdge(
            rates
                .into_iter()
                .map(|q| {
                    let q = q.clamp(1e-12, 0.5);
                    (((1.0 - q) / q).ln() * scale).round().max(0.0) as u32
                })
                .collect(),
        )
    }

    fn get(&self, e: usize) -> u64 {
        match self {
            EdgeWeights::Uniform => 1,
            EdgeWeights::PerEdge(w) => w[e] as u64,
        }
    }
}

/// Endpoint of a neighbour link: another grid vertex or the absorbing boundary.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Link {
    to: u32,
    edge: u32,
    cost: u32,
}

#[derive(Clone, Debug)]
pub struct DecodingGraph {
    pub complex: Complex,
    pub axes: [AxisGeom; 3],
    /// Lattice vertex id of every grid vertex, in (z, y, x) position order.
    lattice_ids: Vec<u32>,
    /// Lattice vertex id -> grid vertex.
    local: Vec<u32>,
    weights: EdgeWeights,
    /// Adjacency in the weighted metric (empty in uniform mode). `to == NONE` is the boundary.
    adjacency: Vec<Vec<Link>>,
    /// Boundary distance per grid vertex.
    bd: Vec<u64>,
    /// First link of a shortest path to the boundary (weighted mode).
    bd_next: Vec<Link>,
}

/// Builds the per-axis grid of `complex`: which vertices are decoded and which ends absorb.
pub fn axis_geometry(lattice: &Lattice3D, complex: Complex) -> [AxisGeom; 3] {
    let par = match complex {
        Complex::Primal => 0,
        Complex::Dual => 1,
    };
    let mut out = [AxisGeom {
        n: 0,
        periodic: true,
        c0: 0,
        wrap: 0,
        absorb_low: false,
        absorb_high: false,
    }; 3];
    for (a, g) in out.iter_mut().enumerate() {
        let ext = lattice.axis(a);
        let mut range = (!ext.periodic).then_some((ext.lo, ext.hi));
        if let Boundary::DefectSlab { defect_depth } = lattice.boundary_condition() {
            if a == 2 {
                // The region V between the two defect faces.
                let cut = 2 * (lattice.dims()[2] - defect_depth) as i32;
                range = Some((1, cut - 1));
            }
        }
        *g = match range {
            None => AxisGeom {
                n: ext.cells,
                periodic: true,
                c0: par,
                wrap: 2 * ext.cells as i32,
                absorb_low: false,
                absorb_high: false,
            },
            Some((lo, hi)) => {
                let c0 = if lo.rem_euclid(2) == par { lo } else { lo + 1 };
                let last = if hi.rem_euclid(2) == par { hi } else { hi - 1 };
                let n = if last >= c0 { ((last - c0) / 2 + 1) as usize } else { 0 };
                AxisGeom {
                    n,
                    periodic: false,
                    c0,
                    wrap: 0,
                    absorb_low: c0 > lo,
                    absorb_high: last < hi,
                }
            }
        };
    }
    out
}

impl DecodingGraph {
    pub fn new(lattice: &Lattice3D, complex: Complex, weights: EdgeWeights) -> Result<Self> {
        let axes = axis_geometry(lattice, complex);
        if axes.iter().any(|a| a.n == 0) {
            return Err(Error::InvalidGeometry(format!(
                "the {} complex has no vertices to decode on",
                complex.name()
            )));
        }
        if let EdgeWeights::PerEdge(w) = &weights {
            if w.len() != lattice.count(complex, 1) {
                return Err(Error::InvalidArgument(format!(
                    "{} edge weights for {} edges",
                    w.len(),
                    lattice.count(complex, 1)
                )));
            }
        }
        let nv = axes[0].n * axes[1].n * axes[2].n;
        let mut lattice_ids = Vec::with_capacity(nv);
        let mut local = vec![NONE; lattice.count(complex, 0)];
        for pz in 0..axes[2].n {
            for py in 0..axes[1].n {
                for px in 0..axes[0].n {
                    let pt = [axes[0].coord(px), axes[1].coord(py), axes[2].coord(pz)];
                    let id = lattice.index(complex, 0, pt).ok_or_else(|| {
                        Error::InvalidGeometry(format!("grid point {pt:?} is not a vertex"))
                    })?;
                    local[id] = lattice_ids.len() as u32;
                    lattice_ids.push(id as u32);
                }
            }
        }
        let mut g = DecodingGraph {
            complex,
            axes,
            lattice_ids,
            local,
            weights,
            adjacency: Vec::new(),
            bd: Vec::new(),
            bd_next: Vec::new(),
        };
        g.bd = (0..nv)
            .map(|v| {
                let p = g.position(v);
                (0..3)
                    .filter_map(|a| g.axes[a].boundary_distance(p[a]))
                    .min()
                    .map_or(INF, |d| d as u64)
            })
            .collect();
        if matches!(g.weights, EdgeWeights::PerEdge(_)) {
            g.build_weighted(lattice)?;
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.lattice_ids.len()
    }

    pub fn weights(&self) -> &EdgeWeights {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.weights, EdgeWeights::Uniform)
    }

    pub fn has_boundary(&self) -> bool {
        self.bd.iter().any(|&d| d < INF)
    }

    pub fn local_of(&self, lattice_vertex: usize) -> Option<usize> {
        match self.local.get(lattice_vertex) {
            Some(&v) if v != NONE => Some(v as usize),
            _ => None,
        }
    }

    pub fn lattice_id(&self, v: usize) -> usize {
        self.lattice_ids[v] as usize
    }

    pub fn position(&self, v: usize) -> [usize; 3] {
        let nx = self.axes[0].n;
        let ny = self.axes[1].n;
        [v % nx, (v / nx) % ny, v / (nx * ny)]
    }

    fn vertex_at(&self, p: [usize; 3]) -> usize {
        (p[2] * self.axes[1].n + p[1]) * self.axes[0].n + p[0]
    }

    fn point(&self, p: [usize; 3]) -> Point {
        [self.axes[0].coord(p[0]), self.axes[1].coord(p[1]), self.axes[2].coord(p[2])]
    }

    /// Lattice edge from grid position `p` one step along `axis` in direction `dir`
    /// (which may be a dangling edge into an absorbing end).
    fn edge_from(&self, lattice: &Lattice3D, p: [usize; 3], axis: usize, dir: i32) -> usize {
        let mut pt = self.point(p);
        pt[axis] += dir;
        lattice
            .index(self.complex, 1, pt)
            .expect("decoding grid step leaves the lattice")
    }

    /// Neighbour position one step along `axis`, wrapping on periodic axes.
    fn step(&self, p: [usize; 3], axis: usize, dir: i32) -> Option<[usize; 3]> {
        let g = &self.axes[axis];
        let mut q = p;
        let c = p[axis] as i64 + dir as i64;
        if g.periodic {
            q[axis] = c.rem_euclid(g.n as i64) as usize;
        } else if c < 0 || c >= g.n as i64 {
            return None;
        } else {
            q[axis] = c as usize;
        }
        Some(q)
    }

    fn build_weighted(&mut self, lattice: &Lattice3D) -> Result<()> {
        let nv = self.num_vertices();
        let mut adjacency = vec![Vec::with_capacity(6); nv];
        for (v, adj) in adjacency.iter_mut().enumerate() {
            let p = self.position(v);
            for a in 0..3 {
                for dir in [-1, 1] {
                    let g = &self.axes[a];
                    let to = match self.step(p, a, dir) {
                        Some(q) => self.vertex_at(q) as u32,
                        None => {
                            let absorbing = if dir < 0 { g.absorb_low } else { g.absorb_high };
                            if !absorbing {
                                continue;
                            }
                            NONE
                        }
                    };
                    let edge = self.edge_from(lattice, p, a, dir);
                    adj.push(Link {
                        to,
                        edge: edge as u32,
                        cost: self.weights.get(edge) as u32,
                    });
                }
            }
        }
        self.adjacency = adjacency;

        // Multi-source search from the boundary.
        let mut dist = vec![INF; nv];
        let mut next = vec![
            Link {
                to: NONE,
                edge: NONE,
                cost: 0
            };
            nv
        ];
        let mut heap = BinaryHeap::new();
        for v in 0..nv {
            for l in &self.adjacency[v] {
                if l.to == NONE && (l.cost as u64) < dist[v] {
                    dist[v] = l.cost as u64;
                    next[v] = *l;
                }
            }
            if dist[v] < INF {
                heap.push(Reverse((dist[v], v as u32)));
            }
        }
        while let Some(Reverse((d, v))) = heap.pop() {
            let v = v as usize;
            if d > dist[v] {
                continue;
            }
            for l in &self.adjacency[v] {
                if l.to == NONE {
                    continue;
                }
                let u = l.to as usize;
                let nd = d + l.cost as u64;
                if nd < dist[u] {
                    dist[u] = nd;
                    next[u] = Link {
                        to: v as u32,
                        edge: l.edge,
                        cost: l.cost,
                    };
                    heap.push(Reverse((nd, u as u32)));
                }
            }
        }
        self.bd = dist;
        self.bd_next = next;
        Ok(())
    }

    /// Uniform-metric distance between two grid vertices.
    pub fn manhattan(&self, u: usize, v: usize) -> u64 {
        let (a, b) = (self.position(u), self.position(v));
        (0..3).map(|k| self.axes[k].distance(a[k], b[k]) as u64).sum()
    }

    pub fn boundary_distance(&self, v: usize) -> u64 {
        self.bd[v]
    }

    /// Single-source search in the weighted metric. `stop` is called for every settled
    /// vertex and ends the search when it returns true. Returns distances and
    /// predecessor links for settled vertices.
    /// Dijkstra from `src` until `stop(v, d)` holds for a settled vertex `v` at distance
    /// `d`. Afterwards `search.dist` holds exact distances of settled vertices and upper
    /// bounds elsewhere.
    pub(crate) fn dijkstra(&self, search: &mut Search, src: usize, mut stop: impl FnMut(usize, u64) -> bool) {
        search.reset(self.num_vertices());
        search.set(src, 0, Link { to: NONE, edge: NONE, cost: 0 });
        search.heap.push(Reverse((0u64, src as u32)));
        while let Some(Reverse((d, v))) = search.heap.pop() {
            let v = v as usize;
            if search.done[v] {
                continue;
            }
            search.done[v] = true;
            if stop(v, d) {
                break;
            }
            for l in &self.adjacency[v] {
                if l.to == NONE {
                    continue;
                }
                let u = l.to as usize;
                let nd = d + l.cost as u64;
                if nd < search.dist[u] {
                    search.set(u, nd, Link { to: v as u32, edge: l.edge, cost: l.cost });
                    search.heap.push(Reverse((nd, u as u32)));
                }
            }
        }
    }

    /// Edges of a shortest path between two grid vertices.
    pub fn path(&self, lattice: &Lattice3D, u: usize, v: usize) -> Vec<usize> {
        self.path_with(lattice, u, v, &mut Search::default())
    }

    pub(crate) fn path_with(&self, lattice: &Lattice3D, u: usize, v: usize, search: &mut Search) -> Vec<usize> {
        if self.is_uniform() {
            return self.canonical_path(lattice, u, v);
        }
        self.dijkstra(search, u, |w, _| w == v);
        let mut out = Vec::new();
        let mut w = v;
        while w != u {
            let l = search.pred[w];
            out.push(l.edge as usize);
            w = l.to as usize;
        }
        out
    }

    /// Edges of a shortest path from a grid vertex into the boundary.
    pub fn boundary_path(&self, lattice: &Lattice3D, v: usize) -> Vec<usize> {
        assert!(self.bd[v] < INF, "no boundary reachable");
        if !self.is_uniform() {
            let mut out = Vec::new();
            let mut w = v;
            loop {
                let l = self.bd_next[w];
                out.push(l.edge as usize);
                if l.to == NONE {
                    return out;
                }
                w = l.to as usize;
            }
        }
        // Along the axis with the nearest absorbing end; the low end wins ties.
        let p = self.position(v);
        let mut best: Option<(usize, usize, i32)> = None;
        for a in 0..3 {
            let g = &self.axes[a];
            if g.absorb_low && best.is_none_or(|b| p[a] + 1 < b.0) {
                best = Some((p[a] + 1, a, -1));
            }
            if g.absorb_high && best.is_none_or(|b| g.n - p[a] < b.0) {
                best = Some((g.n - p[a], a, 1));
            }
        }
        let (len, a, dir) = best.unwrap();
        let mut out = Vec::with_capacity(len);
        let mut q = p;
        for _ in 0..len {
            out.push(self.edge_from(lattice, q, a, dir));
            if let Some(r) = self.step(q, a, dir) {
                q = r;
            }
        }
        out
    }

    /// Straight x, then y, then z walk; the shorter way round on periodic axes,
    /// the positive direction on ties.
    fn canonical_path(&self, lattice: &Lattice3D, u: usize, v: usize) -> Vec<usize> {
        let mut p = self.position(u);
        let t = self.position(v);
        let mut out = Vec::new();
        for a in 0..3 {
            let g = &self.axes[a];
            let (steps, dir) = if g.periodic {
                let fwd = (t[a] + g.n - p[a]) % g.n;
                let back = g.n - fwd;
                if fwd == 0 {
                    (0, 1)
                } else if fwd <= back {
                    (fwd, 1)
                } else {
                    (back, -1)
                }
            } else if t[a] >= p[a] {
                (t[a] - p[a], 1)
            } else {
                (p[a] - t[a], -1)
            };
            for _ in 0..steps {
                out.push(self.edge_from(lattice, p, a, dir));
                p = self.step(p, a, dir).unwrap();
            }
        }
        out
    }
}
