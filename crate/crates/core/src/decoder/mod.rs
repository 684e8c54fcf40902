//! Syndrome extraction, minimum-weight perfect matching, and homology classification.
//!
//! A complex is decoded on the grid of its vertices (primal vertices or primal cells).
//! Lit vertices are matched in pairs or into an absorbing boundary with an exact
//! blossom matching; the correction is the union of shortest paths. The residual
//! `errors + correction` is then classified by its crossing parities with fixed
//! layers of edges, one per non-contractible direction.

mod geometry;
pub mod matching;

pub use geometry::{axis_geometry, AxisGeom, DecodingGraph, EdgeWeights};

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::lattice::{orientation, Chain, Complex, Lattice3D};
use crate::noise::ErrorConfiguration;
use geometry::{Search, INF, NONE};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syndrome {
    pub complex: Complex,
    /// Lit vertex ids of `complex`, ascending.
    pub lit: Vec<usize>,
    /// Whether some end of the decoding grid absorbs defects.
    pub boundary_node: bool,
}

impl Syndrome {
    pub fn len(&self) -> usize {
        self.lit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lit.is_empty()
    }
}

/// Boundary of an edge set, restricted to the decoded region of the complex.
pub fn syndrome_of_edges(lattice: &Lattice3D, complex: Complex, edges: &BitVector) -> Syndrome {
    let axes = axis_geometry(lattice, complex);
    let mut lit = BitVector::zeros(lattice.count(complex, 0));
    for e in edges.iter_ones() {
        for &v in lattice.boundary_of(complex, 1, e) {
            lit.flip(v as usize);
        }
    }
    let lit = lit
        .iter_ones()
        .filter(|&v| in_region(&axes, lattice.point(complex, 0, v)))
        .collect();
    Syndrome {
        complex,
        lit,
        boundary_node: axes.iter().any(|a| a.has_absorbing_end()),
    }
}

fn in_region(axes: &[AxisGeom; 3], p: crate::lattice::Point) -> bool {
    (0..3).all(|a| axes[a].position(p[a]).is_some())
}

/// Lit vertices of one complex. Syndrome inside a defect region is discarded.
pub fn extract_syndrome(lattice: &Lattice3D, errors: &ErrorConfiguration, complex: Complex) -> Syndrome {
    syndrome_of_edges(lattice, complex, errors.edges(complex))
}

/// How the matching graph over lit vertices is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    /// Every pair of defects.
    Complete,
    /// Each defect's `k` nearest defects. Defects that may prefer the boundary get a
    /// private boundary twin on a zero-weight chain, so any subset can leave through the
    /// boundary. Falls back to `Complete` when no perfect matching exists.
    Sparse { k: usize },
}

impl Default for GraphMode {
    fn default() -> Self {
        GraphMode::Sparse { k: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correction {
    pub chain: Chain,
    /// Matched lattice vertex ids; `None` is the boundary.
    pub pairs: Vec<(usize, Option<usize>)>,
    /// Sum of edge costs over the matched paths.
    pub weight: u64,
    /// Whether the sparse graph had to be replaced by the complete one.
    pub fell_back: bool,
}

/// Minimum-weight perfect matching decoder for one complex of a lattice.
#[derive(Clone, Debug)]
pub struct MatchingDecoder {
    graph: DecodingGraph,
    mode: GraphMode,
}

struct Candidate {
    i: usize,
    j: usize,
    w: u64,
    via_boundary: bool,
}

impl MatchingDecoder {
    pub fn new(
        lattice: &Lattice3D,
        complex: Complex,
        weights: EdgeWeights,
        mode: GraphMode,
    ) -> Result<Self> {
        if let GraphMode::Sparse { k: 0 } = mode {
            return Err(Error::InvalidArgument("sparse matching needs k >= 1".into()));
        }
        Ok(MatchingDecoder {
            graph: DecodingGraph::new(lattice, complex, weights)?,
            mode,
        })
    }

    pub fn uniform(lattice: &Lattice3D, complex: Complex) -> Result<Self> {
        Self::new(lattice, complex, EdgeWeights::Uniform, GraphMode::default())
    }

    pub fn complex(&self) -> Complex {
        self.graph.complex
    }

    pub fn graph(&self) -> &DecodingGraph {
        &self.graph
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn decode(&self, lattice: &Lattice3D, syndrome: &Syndrome) -> Result<Correction> {
        let g = &self.graph;
        if syndrome.complex != g.complex {
            return Err(Error::InvalidArgument(format!(
                "{} syndrome given to a {} decoder",
                syndrome.complex.name(),
                g.complex.name()
            )));
        }
        let mut chain = Chain::zero(lattice, g.complex, 1);
        let m = syndrome.lit.len();
        if m == 0 {
            return Ok(Correction {
                chain,
                pairs: Vec::new(),
                weight: 0,
                fell_back: false,
            });
        }
        if m % 2 == 1 && !g.has_boundary() {
            return Err(Error::Parity(m));
        }
        let nodes: Vec<usize> = syndrome
            .lit
            .iter()
            .map(|&v| {
                g.local_of(v).ok_or_else(|| {
                    Error::InvalidSite(format!("lit vertex {v} is outside the decoded region"))
                })
            })
            .collect::<Result<_>>()?;

        let mut search = Search::default();
        let (cands, mate, fell_back) = match self.mode {
            GraphMode::Complete => {
                let c = self.complete_candidates(&nodes, &mut search);
                let mate = solve(m + m % 2, &c)
                    .ok_or_else(|| Error::Matching("no perfect matching exists".into()))?;
                (c, mate, false)
            }
            GraphMode::Sparse { k } => {
                let (c, n) = self.sparse_candidates(&nodes, k, &mut search);
                match solve(n, &c) {
                    Some(mate) => (c, mate, false),
                    None => {
                        let c = self.complete_candidates(&nodes, &mut search);
                        let mate = solve(m + m % 2, &c).ok_or_else(|| {
                            Error::Matching("no perfect matching exists".into())
                        })?;
                        (c, mate, true)
                    }
                }
            }
        };

        let lookup = |i: usize, j: usize| -> &Candidate {
            let key = (i.min(j), i.max(j));
            let pos = cands
                .binary_search_by(|c| (c.i, c.j).cmp(&key))
                .expect("matched pair is a graph edge");
            &cands[pos]
        };
        let mut pairs = Vec::new();
        let mut weight = 0;
        for i in 0..m {
            let j = mate[i];
            if j < i {
                continue;
            }
            let c = lookup(i, j);
            weight += c.w;
            if j >= m {
                pairs.push((syndrome.lit[i], None));
                for e in g.boundary_path(lattice, nodes[i]) {
                    chain.bits.flip(e);
                }
            } else if c.via_boundary {
                pairs.push((syndrome.lit[i], None));
                pairs.push((syndrome.lit[j], None));
                for v in [nodes[i], nodes[j]] {
                    for e in g.boundary_path(lattice, v) {
                        chain.bits.flip(e);
                    }
                }
            } else {
                pairs.push((syndrome.lit[i], Some(syndrome.lit[j])));
                for e in g.path_with(lattice, nodes[i], nodes[j], &mut search) {
                    chain.bits.flip(e);
                }
            }
        }
        Ok(Correction {
            chain,
            pairs,
            weight,
            fell_back,
        })
    }

    fn pair(&self, i: usize, j: usize, d: u64, nodes: &[usize]) -> Option<Candidate> {
        let g = &self.graph;
        let b = g.boundary_distance(nodes[i]).saturating_add(g.boundary_distance(nodes[j]));
        let w = d.min(b);
        (w < INF).then(|| Candidate {
            i: i.min(j),
            j: i.max(j),
            w,
            via_boundary: b < d,
        })
    }

    fn boundary_edge(&self, i: usize, m: usize, nodes: &[usize]) -> Option<Candidate> {
        let b = self.graph.boundary_distance(nodes[i]);
        (b < INF).then_some(Candidate {
            i,
            j: m,
            w: b,
            via_boundary: true,
        })
    }

    fn complete_candidates(&self, nodes: &[usize], search: &mut Search) -> Vec<Candidate> {
        let g = &self.graph;
        let m = nodes.len();
        let mut out = Vec::new();
        for i in 0..m {
            if !g.is_uniform() {
                g.dijkstra(search, nodes[i], |_, _| false);
            }
            for j in i + 1..m {
                let d = if g.is_uniform() {
                    g.manhattan(nodes[i], nodes[j])
                } else {
                    search.dist[nodes[j]]
                };
                out.extend(self.pair(i, j, d, nodes));
            }
            if m % 2 == 1 {
                out.extend(self.boundary_edge(i, m, nodes));
            }
        }
        out
    }

    fn sparse_candidates(&self, nodes: &[usize], k: usize, search: &mut Search) -> (Vec<Candidate>, usize) {
        let g = &self.graph;
        let m = nodes.len();
        let mut occupancy = vec![NONE; g.num_vertices()];
        for (i, &v) in nodes.iter().enumerate() {
            occupancy[v] = i as u32;
        }
        let mut out = Vec::new();
        let mut near_boundary = Vec::new();
        for i in 0..m {
            let (found, radius) = if g.is_uniform() {
                self.nearest_uniform(&occupancy, nodes[i], k)
            } else {
                self.nearest_weighted(&occupancy, nodes[i], k, search)
            };
            for (j, d) in found {
                out.extend(self.pair(i, j, d, nodes));
            }
            let bd = g.boundary_distance(nodes[i]);
            if bd < INF && bd <= radius {
                near_boundary.push(i);
            }
        }
        // Boundary access: near-boundary defect `a` of the list owns twins `m + 2a` and
        // `m + 2a + 1`, each joined to it at its boundary distance. The twins form a
        // zero-weight chain, so any subset of these defects sent to the boundary leaves
        // the unused twins perfectly matchable; an odd `m` adds a terminal twin.
        let twin = |a: usize| m + 2 * a;
        for (a, &i) in near_boundary.iter().enumerate() {
            let bd = g.boundary_distance(nodes[i]);
            for t in [twin(a), twin(a) + 1] {
                out.push(Candidate { i, j: t, w: bd, via_boundary: true });
            }
            out.push(Candidate { i: twin(a), j: twin(a) + 1, w: 0, via_boundary: true });
            if a + 1 < near_boundary.len() {
                out.push(Candidate { i: twin(a) + 1, j: twin(a + 1), w: 0, via_boundary: true });
            }
        }
        let n = if m % 2 == 1 && !near_boundary.is_empty() {
            let end = twin(near_boundary.len());
            out.push(Candidate { i: end - 1, j: end, w: 0, via_boundary: true });
            end + 1
        } else {
            m + 2 * near_boundary.len()
        };
        out.sort_by_key(|c| (c.i, c.j));
        out.dedup_by_key(|c| (c.i, c.j));
        (out, n)
    }

    /// Defects within the smallest Manhattan radius that holds at least `k` of them.
    fn nearest_uniform(&self, occupancy: &[u32], src: usize, k: usize) -> (Vec<(usize, u64)>, u64) {
        let g = &self.graph;
        let p = g.position(src);
        let ranges: Vec<(i64, i64)> = (0..3)
            .map(|a| {
                let ax = &g.axes[a];
                let n = ax.n as i64;
                if ax.periodic {
                    (-((n - 1) / 2), n / 2)
                } else {
                    (-(p[a] as i64), n - 1 - p[a] as i64)
                }
            })
            .collect();
        let max_r: i64 = ranges.iter().map(|(lo, hi)| (-lo).max(*hi)).sum();
        let mut found = Vec::new();
        let at = |d: [i64; 3]| -> usize {
            let mut q = [0usize; 3];
            for a in 0..3 {
                q[a] = (p[a] as i64 + d[a]).rem_euclid(g.axes[a].n as i64) as usize;
            }
            (q[2] * g.axes[1].n + q[1]) * g.axes[0].n + q[0]
        };
        for r in 1..=max_r {
            let (xl, xh) = ranges[0];
            for dx in xl.max(-r)..=xh.min(r) {
                let rx = r - dx.abs();
                let (yl, yh) = ranges[1];
                for dy in yl.max(-rx)..=yh.min(rx) {
                    let rz = rx - dy.abs();
                    let (zl, zh) = ranges[2];
                    let dzs = if rz == 0 { &[0, 0][..1] } else { &[-rz, rz][..] };
                    for &dz in dzs {
                        if dz < zl || dz > zh {
                            continue;
                        }
                        let v = at([dx, dy, dz]);
                        if occupancy[v] != NONE {
                            found.push((occupancy[v] as usize, r as u64));
                        }
                    }
                }
            }
            if found.len() >= k {
                return (found, r as u64);
            }
        }
        (found, INF)
    }

    fn nearest_weighted(
        &self,
        occupancy: &[u32],
        src: usize,
        k: usize,
        search: &mut Search,
    ) -> (Vec<(usize, u64)>, u64) {
        let mut found = Vec::new();
        let mut radius = INF;
        self.graph.dijkstra(search, src, |v, d| {
            if d > radius {
                return true;
            }
            if v != src && occupancy[v] != NONE {
                found.push((occupancy[v] as usize, d));
                if found.len() >= k {
                    radius = d;
                }
            }
            false
        });
        (found, radius)
    }
}

fn solve(n: usize, cands: &[Candidate]) -> Option<Vec<usize>> {
    let edges: Vec<(usize, usize, i64)> = cands
        .iter()
        .filter(|c| c.w < INF)
        .map(|c| (c.i, c.j, c.w as i64))
        .collect();
    matching::min_weight_perfect_matching(n, &edges)
}

/// Exact minimum-weight decoding over the complete graph.
pub fn mwpm_decode(lattice: &Lattice3D, syndrome: &Syndrome, weights: &EdgeWeights) -> Result<Correction> {
    MatchingDecoder::new(lattice, syndrome.complex, weights.clone(), GraphMode::Complete)?
        .decode(lattice, syndrome)
}

/// Winding parities of a residual cycle along the directions that carry a logical class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomologyClass {
    pub tracked: [bool; 3],
    pub parity: [bool; 3],
}

impl HomologyClass {
    pub fn is_trivial(&self) -> bool {
        (0..3).all(|a| !(self.tracked[a] && self.parity[a]))
    }

    /// Sector index in `0..8` (bit `a` set for odd winding along axis `a`).
    pub fn sector(&self) -> usize {
        (0..3)
            .filter(|&a| self.tracked[a] && self.parity[a])
            .map(|a| 1 << a)
            .sum()
    }
}

impl fmt::Display for HomologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return f.write_str("trivial");
        }
        let names = ["x", "y", "z"];
        let s: Vec<&str> = (0..3)
            .filter(|&a| self.tracked[a] && self.parity[a])
            .map(|a| names[a])
            .collect();
        f.write_str(&s.join("+"))
    }
}

/// Directions along which a relative cycle of `complex` can be non-trivial.
///
/// A periodic axis counts unless some axis has an absorbing end (a winding loop can
/// then be swept into that end). An open axis counts when both of its ends absorb and
/// no other axis has an absorbing end.
pub fn tracked_axes(lattice: &Lattice3D, complex: Complex) -> [bool; 3] {
    let axes = axis_geometry(lattice, complex);
    let mut out = [false; 3];
    for a in 0..3 {
        let others = (0..3).filter(|&b| b != a).any(|b| axes[b].has_absorbing_end());
        out[a] = !others
            && (axes[a].periodic || (axes[a].absorb_low && axes[a].absorb_high));
    }
    out
}

/// Classifies `errors + correction` by its crossing parity with one reference layer
/// per tracked direction. Fails if the residual has a boundary inside the decoded region.
pub fn classify_residual(
    lattice: &Lattice3D,
    complex: Complex,
    errors: &BitVector,
    correction: &Chain,
) -> Result<(HomologyClass, bool)> {
    if correction.complex != complex || correction.dim != 1 {
        return Err(Error::InvalidArgument(
            "correction must be a 1-chain of the decoded complex".into(),
        ));
    }
    let residual = errors ^ &correction.bits;
    let syn = syndrome_of_edges(lattice, complex, &residual);
    if !syn.is_empty() {
        return Err(Error::OpenResidual(format!(
            "{} residual ends at {} vertices",
            complex.name(),
            syn.len()
        )));
    }
    let axes = axis_geometry(lattice, complex);
    let tracked = tracked_axes(lattice, complex);
    let layer: [i32; 3] = std::array::from_fn(|a| {
        let g = &axes[a];
        if g.periodic {
            (g.c0 + 1).rem_euclid(g.wrap)
        } else {
            g.c0 - 1
        }
    });
    let mut parity = [false; 3];
    for e in residual.iter_ones() {
        let p = lattice.point(complex, 1, e);
        let a = orientation(&p);
        if tracked[a] && p[a] == layer[a] {
            parity[a] ^= true;
        }
    }
    let class = HomologyClass { tracked, parity };
    Ok((class, class.is_trivial()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub complex: Complex,
    pub syndrome: Syndrome,
    pub correction: Chain,
    pub matched_pairs: Vec<(usize, Option<usize>)>,
    pub weight: u64,
    pub residual_class: HomologyClass,
    pub success: bool,
}

impl MatchingDecoder {
    /// Extracts, decodes and classifies one complex of a sampled configuration.
    pub fn run(&self, lattice: &Lattice3D, errors: &ErrorConfiguration) -> Result<DecodeResult> {
        let complex = self.complex();
        let syndrome = extract_syndrome(lattice, errors, complex);
        let corr = self.decode(lattice, &syndrome)?;
        let (residual_class, success) =
            classify_residual(lattice, complex, errors.edges(complex), &corr.chain)?;
        Ok(DecodeResult {
            complex,
            syndrome,
            correction: corr.chain,
            matched_pairs: corr.pairs,
            weight: corr.weight,
            residual_class,
            success,
        })
    }
}

/// One decoded trial, as written to a JSON-lines dump.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    pub complex: Complex,
    pub errors: Vec<usize>,
    pub syndrome: Vec<usize>,
    pub correction: Vec<usize>,
    pub class: String,
    pub success: bool,
}

impl TrialRecord {
    pub fn new(seed: u64, trial: u64, errors: &ErrorConfiguration, r: &DecodeResult) -> Self {
        TrialRecord {
            seed,
            trial,
            complex: r.complex,
            errors: errors.edges(r.complex).iter_ones().collect(),
            syndrome: r.syndrome.lit.clone(),
            correction: r.correction.support(),
            class: r.residual_class.to_string(),
            success: r.success,
        }
    }
}
