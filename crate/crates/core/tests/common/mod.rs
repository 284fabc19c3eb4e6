#![allow(dead_code)]

use bisect_bayes::{EdgeModel, Graph, LabelVector};

/// `C(n, k)` by the multiplicative formula.
pub fn choose(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Log-likelihood as a product over pairs, without sufficient statistics.
pub fn direct_loglik(theta: &[bool], x: &Graph, p: f64, q: f64) -> f64 {
    let n = theta.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if theta[i] == theta[j] { p } else { q };
            total += if x.has_edge(i, j) { prob.ln() } else { (1.0 - prob).ln() };
        }
    }
    total
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// Every simple graph on `n` vertices.
pub fn all_graphs(n: usize) -> impl Iterator<Item = Graph> {
    let pairs = pairs(n);
    (0u64..(1u64 << pairs.len())).map(move |mask| {
        let edges: Vec<_> = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, e)| *e)
            .collect();
        Graph::from_edges(n, &edges).unwrap()
    })
}

/// `(|D_1|, |D_2|)` by pair enumeration.
pub fn discrepancy_oracle(theta: &[bool], eta: &[bool]) -> (usize, usize) {
    let mut d1 = 0;
    let mut d2 = 0;
    for (i, j) in pairs(theta.len()) {
        let ts = theta[i] == theta[j];
        let es = eta[i] == eta[j];
        if ts && !es {
            d1 += 1;
        }
        if !ts && es {
            d2 += 1;
        }
    }
    (d1, d2)
}

pub fn model(p: f64, q: f64) -> EdgeModel {
    EdgeModel::new(p, q).unwrap()
}

pub fn label(s: &str) -> LabelVector {
    s.parse().unwrap()
}
