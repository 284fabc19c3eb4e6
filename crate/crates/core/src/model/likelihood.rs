//! Edge probabilities, the graph likelihood and the likelihood ratio
//! between two labelings.
//!
//! The log-likelihood of a labeling depends on the graph only through the
//! total edge count `E` and the number of edges `E_w` joining vertices with
//! equal labels:
//!
//! ```text
//! log p_θ(X) = E log q + (N - E) log(1 - q)
//!            + E_w (log p - log q) + (W - E_w) (log(1 - p) - log(1 - q))
//! ```
//!
//! with `N = n(n-1)/2` pairs and `W = C(m,2) + C(n-m,2)` within-class pairs.
//! When `p = q` both correction terms vanish exactly, so every labeling gets
//! the bit-identical value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::labels::{full_mask, same_n, vertex_bit, LabelVector};
use crate::error::{check_probability, Error, Result};

/// Within-class and between-class edge probabilities, both strictly
/// inside `(0, 1)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(try_from = "EdgeModelRepr", into = "EdgeModelRepr")]
pub struct EdgeModel {
    p: f64,
    q: f64,
    ln_q: f64,
    ln_1mq: f64,
    within_shift: f64,
    non_edge_shift: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeModelRepr {
    p: f64,
    q: f64,
}

impl TryFrom<EdgeModelRepr> for EdgeModel {
    type Error = Error;
    fn try_from(r: EdgeModelRepr) -> Result<Self> {
        EdgeModel::new(r.p, r.q)
    }
}

impl From<EdgeModel> for EdgeModelRepr {
    fn from(m: EdgeModel) -> Self {
        EdgeModelRepr { p: m.p, q: m.q }
    }
}

impl PartialEq for EdgeModel {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.q == other.q
    }
}

impl EdgeModel {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let p = check_probability("p", p)?;
        let q = check_probability("q", q)?;
        let ln_q = q.ln();
        let ln_1mq = (-q).ln_1p();
        Ok(Self {
            p,
            q,
            ln_q,
            ln_1mq,
            within_shift: p.ln() - ln_q,
            non_edge_shift: (-p).ln_1p() - ln_1mq,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `λ = log((1-p)/p) + log(q/(1-q))`.
    pub fn lambda(&self) -> f64 {
        (-self.p).ln_1p() - self.p.ln() + self.ln_q - self.ln_1mq
    }

    /// Log-likelihood from sufficient statistics.
    pub fn log_likelihood_from_counts(&self, counts: &EdgeCounts) -> f64 {
        let pairs = pair_count(counts.n) as f64;
        let within_pairs = within_pair_count(counts.n, counts.ones) as f64;
        let e = counts.edges as f64;
        let ew = counts.within_edges as f64;
        e * self.ln_q
            + (pairs - e) * self.ln_1mq
            + ew * self.within_shift
            + (within_pairs - ew) * self.non_edge_shift
    }
}

/// Sparsity regime for vanishing edge probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `p = a log n / n`, `q = b log n / n`.
    ChernoffHellinger,
    /// `p = c / n`, `q = d / n`.
    KestenStigum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityParams {
    pub regime: Regime,
    pub first: f64,
    pub second: f64,
    pub n: usize,
}

impl SparsityParams {
    pub fn chernoff_hellinger(a: f64, b: f64, n: usize) -> Self {
        Self {
            regime: Regime::ChernoffHellinger,
            first: a,
            second: b,
            n,
        }
    }

    pub fn kesten_stigum(c: f64, d: f64, n: usize) -> Self {
        Self {
            regime: Regime::KestenStigum,
            first: c,
            second: d,
            n,
        }
    }
}

/// Converts sparsity parameters into edge probabilities; fails naming the
/// offending probability when it leaves `(0, 1)`.
pub fn edge_probs_from_sparsity(sp: &SparsityParams) -> Result<EdgeModel> {
    if sp.n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: sp.n as f64,
            reason: "sparsity parametrizations need n >= 2",
        });
    }
    let n = sp.n as f64;
    let scale = match sp.regime {
        Regime::ChernoffHellinger => n.ln() / n,
        Regime::KestenStigum => 1.0 / n,
    };
    EdgeModel::new(sp.first * scale, sp.second * scale)
}

/// Sufficient statistics of a graph for one (raw) labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeCounts {
    pub n: usize,
    /// Size of the class labeled 1.
    pub ones: usize,
    pub edges: usize,
    pub within_edges: usize,
}

#[inline]
pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[inline]
pub(crate) fn within_pair_count(n: usize, ones: usize) -> usize {
    pair_count(ones) + pair_count(n - ones)
}

/// Number of edges joining equally labeled vertices under a raw packed word.
pub(crate) fn within_edges_word(x: &Graph, word: u64) -> usize {
    let n = x.n();
    let zeros = !word & full_mask(n);
    let twice: usize = (0..n)
        .map(|i| {
            let same = if word & vertex_bit(n, i) != 0 { word } else { zeros };
            (x.row(i) & same).count_ones() as usize
        })
        .sum();
    twice / 2
}

pub(crate) fn counts_for_word(x: &Graph, word: u64) -> EdgeCounts {
    EdgeCounts {
        n: x.n(),
        ones: word.count_ones() as usize,
        edges: x.edge_count(),
        within_edges: within_edges_word(x, word),
    }
}

pub fn edge_counts(theta: &LabelVector, x: &Graph) -> Result<EdgeCounts> {
    same_n(theta.n(), x.n())?;
    Ok(counts_for_word(x, theta.word()))
}

/// `Σ_{i<j} X_ij log Q_ij(θ) + (1 - X_ij) log(1 - Q_ij(θ))`.
pub fn log_likelihood(theta: &LabelVector, x: &Graph, model: &EdgeModel) -> Result<f64> {
    Ok(model.log_likelihood_from_counts(&edge_counts(theta, x)?))
}

/// Log-likelihood of an arbitrary (possibly non-canonical) packed word.
pub fn log_likelihood_raw(n: usize, word: u64, x: &Graph, model: &EdgeModel) -> Result<f64> {
    same_n(n, x.n())?;
    Ok(model.log_likelihood_from_counts(&counts_for_word(x, word & full_mask(n))))
}

/// Sizes of the four cells `V_ab = {i : θ_i = a, η_i = b}`, indexed `[a][b]`.
fn cell_sizes(n: usize, theta: u64, eta: u64) -> [[usize; 2]; 2] {
    let full = full_mask(n);
    let t0 = !theta & full;
    let e0 = !eta & full;
    let c = |a: u64, b: u64| (a & b).count_ones() as usize;
    [[c(t0, e0), c(t0, eta)], [c(theta, e0), c(theta, eta)]]
}

pub(crate) fn discrepancy_words(n: usize, theta: u64, eta: u64) -> (usize, usize) {
    let v = cell_sizes(n, theta, eta);
    let d1 = v[0][0] * v[0][1] + v[1][1] * v[1][0];
    let d2 = v[0][0] * v[1][0] + v[0][1] * v[1][1];
    (d1, d2)
}

/// `(|D_1(θ,η)|, |D_2(θ,η)|)`: pairs that are within-class under `θ` but
/// split by `η`, and pairs split by `θ` but joined by `η`.
pub fn discrepancy_sets(theta: &LabelVector, eta: &LabelVector) -> Result<(usize, usize)> {
    same_n(theta.n(), eta.n())?;
    Ok(discrepancy_words(theta.n(), theta.word(), eta.word()))
}

/// Statistics behind the likelihood ratio `p_η / p_θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LikelihoodRatioStats {
    /// Edges present in `D_1`.
    pub s: usize,
    /// Edges present in `D_2`.
    pub t: usize,
    pub d1: usize,
    pub d2: usize,
    pub lambda: f64,
}

/// `log(p_η / p_θ)(X) = (S - T) λ + (|D_1| - |D_2|) log((1-q)/(1-p))`.
pub fn log_likelihood_ratio(
    theta: &LabelVector,
    eta: &LabelVector,
    x: &Graph,
    model: &EdgeModel,
) -> Result<(f64, LikelihoodRatioStats)> {
    same_n(theta.n(), eta.n())?;
    same_n(theta.n(), x.n())?;
    let n = x.n();
    let full = full_mask(n);
    let (tw, ew) = (theta.word(), eta.word());
    let (mut s2, mut t2) = (0usize, 0usize);
    for i in 0..n {
        let bit = vertex_bit(n, i);
        let theta_same = if tw & bit != 0 { tw } else { !tw & full };
        let eta_same = if ew & bit != 0 { ew } else { !ew & full };
        let row = x.row(i);
        s2 += (row & theta_same & !eta_same).count_ones() as usize;
        t2 += (row & !theta_same & eta_same & full).count_ones() as usize;
    }
    let (d1, d2) = discrepancy_words(n, tw, ew);
    let stats = LikelihoodRatioStats {
        s: s2 / 2,
        t: t2 / 2,
        d1,
        d2,
        lambda: model.lambda(),
    };
    let offset = (-model.q()).ln_1p() - (-model.p()).ln_1p();
    let ratio = (stats.s as f64 - stats.t as f64) * stats.lambda
        + (d1 as f64 - d2 as f64) * offset;
    Ok((ratio, stats))
}

/// Within-class edge counts for every orbit `{w, complement(w)}` of raw
/// labelings, indexed by the representative with vertex 0 labeled 0.
///
/// Filled by a Gray-code walk: flipping vertex `v` changes `E_w` by
/// (neighbours across) - (neighbours alongside). The index space is split
/// into contiguous shards by its high bits; each shard seeds its walk with a
/// direct count and is processed independently.
pub struct WithinEdgeTable {
    n: usize,
    counts: Vec<u32>,
}

const GRAY_SHARD_BITS: usize = 6;

impl WithinEdgeTable {
    pub fn build(x: &Graph) -> Self {
        let n = x.n();
        let free = n - 1;
        let shard_bits = free.min(GRAY_SHARD_BITS);
        let low = free - shard_bits;
        let mut counts = vec![0u32; 1usize << free];
        let degrees: Vec<usize> = (0..n).map(|i| x.degree(i)).collect();
        let full = full_mask(n);
        counts
            .par_chunks_mut(1usize << low)
            .enumerate()
            .for_each(|(shard, chunk)| {
                let mut word = (shard as u64) << low;
                let mut within = within_edges_word(x, word);
                chunk[0] = within as u32;
                for g in 1u64..(1u64 << low) {
                    let b = g.trailing_zeros() as usize;
                    let bit = 1u64 << b;
                    let v = n - 1 - b;
                    let same_mask = if word & bit != 0 { word } else { !word & full };
                    let same = (x.row(v) & same_mask).count_ones() as usize;
                    let across = degrees[v] - same;
                    within = within + across - same;
                    word ^= bit;
                    chunk[(word & ((1u64 << low) - 1)) as usize] = within as u32;
                }
            });
        Self { n, counts }
    }

    /// `E_w` for any raw word of the table's vertex count.
    pub fn within_edges(&self, word: u64) -> usize {
        let word = if word & vertex_bit(self.n, 0) != 0 {
            !word & full_mask(self.n)
        } else {
            word
        };
        self.counts[word as usize] as usize
    }
}
