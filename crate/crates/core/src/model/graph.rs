//! Undirected simple graphs stored as packed adjacency rows, plus the
//! planted bi-section sampler and the JSON exchange format.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::labels::{check_size, vertex_bit, LabelVector};
use super::likelihood::EdgeModel;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Undirected graph without self-loops. Row `i` has the bit of vertex `j`
/// set (same packing as [`LabelVector`]) iff `{i, j}` is an edge.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Graph {
    n: usize,
    rows: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self {
            n,
            rows: vec![0; n],
        })
    }

    /// Builds a graph from unordered pairs. Self-loops, out-of-range
    /// endpoints and repeated pairs are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            if g.has_edge(i, j) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            g.insert(i, j);
        }
        Ok(g)
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.rows[i] |= vertex_bit(self.n, j);
        self.rows[j] |= vertex_bit(self.n, i);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.rows[i] & vertex_bit(self.n, j) != 0
    }

    /// Packed neighbour set of vertex `i`.
    pub(crate) fn row(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.rows[i].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Applies a vertex permutation: vertex `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        check_permutation(self.n, perm)?;
        let edges: Vec<_> = self.edges().iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        Graph::from_edges(self.n, &edges)
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            n: self.n,
            edges: self.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        };
        serde_json::to_string(&file).expect("graph serialization cannot fail")
    }

    /// Parses `{"n": int, "edges": [[i, j], ...]}`; each pair must have
    /// `i < j < n`.
    pub fn from_json(text: &str) -> Result<Graph> {
        let file: GraphFile = serde_json::from_str(text)?;
        let mut edges = Vec::with_capacity(file.edges.len());
        for [i, j] in file.edges {
            if i >= j {
                return Err(Error::InvalidGraph(format!(
                    "edge [{i}, {j}] must satisfy i < j"
                )));
            }
            edges.push((i, j));
        }
        Graph::from_edges(file.n, &edges)
    }
}

pub(crate) fn check_permutation(n: usize, perm: &[usize]) -> Result<()> {
    let mut seen = 0u64;
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: perm.len(),
        });
    }
    for &p in perm {
        if p >= n || seen & (1u64 << p) != 0 {
            return Err(Error::InvalidConfig(format!("{perm:?} is not a permutation")));
        }
        seen |= 1u64 << p;
    }
    Ok(())
}

/// Draws `X ~ P_θ`: each pair `{i, j}` (visited in lexicographic order) is
/// an edge with probability `p` when `θ_i = θ_j` and `q` otherwise, using
/// one uniform draw per pair from the stream seeded by `seed`.
pub fn sample_graph(theta: &LabelVector, model: &EdgeModel, seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    sample_graph_with(theta, model, &mut rng)
}

pub fn sample_graph_with<R: Rng + ?Sized>(theta: &LabelVector, model: &EdgeModel, rng: &mut R) -> Graph {
    let n = theta.n();
    let mut g = Graph {
        n,
        rows: vec![0; n],
    };
    for i in 0..n {
        let ti = theta.get(i);
        for j in (i + 1)..n {
            let prob = if ti == theta.get(j) { model.p() } else { model.q() };
            if rng.gen::<f64>() < prob {
                g.insert(i, j);
            }
        }
    }
    g
}
