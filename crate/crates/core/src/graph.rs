//! Directed acyclic graphs over at most eight labeled vertices.
//!
//! A [`Dag`] packs its adjacency matrix into a single `u64` (bit `u * d + v`
//! marks the edge `u -> v`), which makes graphs `Copy`, cheap to hash and
//! gives a natural total order used by [`enumerate_dags`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest vertex count a [`Dag`] can hold.
pub const MAX_NODES: usize = 8;

/// Largest vertex count accepted by [`enumerate_dags`].
pub const MAX_ENUMERATION_NODES: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edges contain a directed cycle")]
    Cycle,
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for a graph on {d} vertices")]
    VertexOutOfRange { vertex: usize, d: usize },
    #[error("graph dimension {d} outside supported range 1..={max}")]
    DimensionTooLarge { d: usize, max: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Directed acyclic graph on `d` vertices labeled `0..d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dag {
    d: u8,
    adj: u64,
}

/// Position of a DAG inside [`enumerate_dags`] for a fixed vertex count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DagId(pub usize);

impl Dag {
    /// Validates an edge list and builds the graph.
    pub fn new(d: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        check_dimension(d, MAX_NODES)?;
        let mut dag = Dag::empty_unchecked(d);
        for &(u, v) in edges {
            for vertex in [u, v] {
                if vertex >= d {
                    return Err(GraphError::VertexOutOfRange { vertex, d });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if dag.has_edge(u, v) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            dag.adj |= dag.bit(u, v);
        }
        if !dag.is_acyclic() {
            return Err(GraphError::Cycle);
        }
        Ok(dag)
    }

    pub fn empty(d: usize) -> Result<Self, GraphError> {
        check_dimension(d, MAX_NODES)?;
        Ok(Dag::empty_unchecked(d))
    }

    fn empty_unchecked(d: usize) -> Self {
        Dag { d: d as u8, adj: 0 }
    }

    #[inline]
    fn bit(&self, u: usize, v: usize) -> u64 {
        1u64 << (u * self.d as usize + v)
    }

    pub fn d(&self) -> usize {
        self.d as usize
    }

    /// Raw adjacency bitmask; bit `u * d + v` is the edge `u -> v`.
    pub fn adjacency_bits(&self) -> u64 {
        self.adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.d() && v < self.d() && self.adj & self.bit(u, v) != 0
    }

    pub fn edge_count(&self) -> usize {
        self.adj.count_ones() as usize
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.d();
        (0..d).flat_map(|u| (0..d).map(move |v| (u, v))).filter(|&(u, v)| self.has_edge(u, v)).collect()
    }

    /// Parents of `v` as a vertex bitmask (bit `u` set iff `u -> v`).
    pub fn parent_mask(&self, v: usize) -> u64 {
        (0..self.d()).filter(|&u| self.has_edge(u, v)).fold(0, |m, u| m | (1 << u))
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        (0..self.d()).filter(|&u| self.has_edge(u, v)).collect()
    }

    fn child_mask(&self, u: usize) -> u64 {
        let d = self.d();
        (self.adj >> (u * d)) & ((1u64 << d) - 1)
    }

    /// True if `to` can be reached from `from` along directed edges.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = 1u64 << from;
        let mut frontier = seen;
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let next = self.child_mask(u) & !seen;
            if next & (1 << to) != 0 {
                return true;
            }
            seen |= next;
            frontier |= next;
        }
        false
    }

    /// Vertices in a topological order (ties broken by smallest label), or
    /// `None` if the edge set has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let d = self.d();
        let mut indegree: Vec<usize> = (0..d).map(|v| self.parent_mask(v).count_ones() as usize).collect();
        let mut order = Vec::with_capacity(d);
        let mut placed = 0u64;
        while order.len() < d {
            let next = (0..d).find(|&v| placed & (1 << v) == 0 && indegree[v] == 0)?;
            placed |= 1 << next;
            order.push(next);
            for v in 0..d {
                if self.has_edge(next, v) {
                    indegree[v] -= 1;
                }
            }
        }
        Some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Adds `u -> v` if the result is still a DAG.
    pub fn with_edge(&self, u: usize, v: usize) -> Option<Dag> {
        if u == v || u >= self.d() || v >= self.d() || self.has_edge(u, v) || self.has_edge(v, u) {
            return None;
        }
        if self.reaches(v, u) {
            return None;
        }
        Some(Dag { d: self.d, adj: self.adj | self.bit(u, v) })
    }

    pub fn without_edge(&self, u: usize, v: usize) -> Option<Dag> {
        self.has_edge(u, v).then(|| Dag { d: self.d, adj: self.adj & !self.bit(u, v) })
    }

    /// Turns `u -> v` into `v -> u` if the result is still a DAG.
    pub fn with_reversed(&self, u: usize, v: usize) -> Option<Dag> {
        self.without_edge(u, v)?.with_edge(v, u)
    }

    /// Edge list rendered with 1-indexed vertices, e.g. `X1->X2, X2->X3`.
    pub fn display_one_based(&self) -> String {
        let edges = self.edges();
        if edges.is_empty() {
            return "(no edges)".to_string();
        }
        edges.iter().map(|(u, v)| format!("X{}->X{}", u + 1, v + 1)).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(d={}, {:?})", self.d, self.edges())
    }
}

#[derive(Serialize, Deserialize)]
struct DagRepr {
    d: usize,
    edges: Vec<[usize; 2]>,
}

impl Serialize for Dag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DagRepr { d: self.d(), edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Dag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = DagRepr::deserialize(deserializer)?;
        let edges: Vec<(usize, usize)> = repr.edges.iter().map(|e| (e[0], e[1])).collect();
        Dag::new(repr.d, &edges).map_err(serde::de::Error::custom)
    }
}

fn check_dimension(d: usize, max: usize) -> Result<(), GraphError> {
    if d == 0 || d > max {
        return Err(GraphError::DimensionTooLarge { d, max });
    }
    Ok(())
}

/// All labeled DAGs on `d` vertices, in increasing order of their
/// adjacency bitmask.
pub fn enumerate_dags(d: usize) -> Result<Vec<Dag>, GraphError> {
    check_dimension(d, MAX_ENUMERATION_NODES)?;
    // Off-diagonal bit positions, most significant first: assigning 0 before
    // 1 from the top bit down visits masks in increasing numeric order.
    let positions: Vec<(usize, usize)> = (0..d * d).rev().map(|b| (b / d, b % d)).filter(|(u, v)| u != v).collect();
    let mut out = Vec::new();
    extend_dags(Dag::empty_unchecked(d), &positions, &mut out);
    Ok(out)
}

fn extend_dags(partial: Dag, positions: &[(usize, usize)], out: &mut Vec<Dag>) {
    let Some((&(u, v), rest)) = positions.split_first() else {
        out.push(partial);
        return;
    };
    extend_dags(partial, rest, out);
    if !partial.has_edge(v, u) && !partial.reaches(v, u) {
        let grown = Dag { d: partial.d, adj: partial.adj | partial.bit(u, v) };
        extend_dags(grown, rest, out);
    }
}

/// Index of `dag` within `enumeration`, which must come from
/// [`enumerate_dags`] for the same vertex count.
pub fn dag_id(enumeration: &[Dag], dag: &Dag) -> Option<DagId> {
    enumeration.binary_search_by_key(&dag.adj, |g| g.adj).ok().map(DagId)
}

/// Structural Hamming distance: per unordered vertex pair, a matching edge
/// costs 0, a reversed edge 1, and an edge present in only one graph 1.
pub fn shd(a: &Dag, b: &Dag) -> Result<usize, GraphError> {
    if a.d != b.d {
        return Err(GraphError::DimensionMismatch(a.d(), b.d()));
    }
    let d = a.d();
    let mut distance = 0;
    for u in 0..d {
        for v in u + 1..d {
            let ea = (a.has_edge(u, v), a.has_edge(v, u));
            let eb = (b.has_edge(u, v), b.has_edge(v, u));
            if ea != eb {
                distance += 1;
            }
        }
    }
    Ok(distance)
}
