//! Exact posterior over `Θ_n` by enumeration, plus the set algebra used to
//! query it.

pub mod mcmc;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::model::labels::{enumerate_labelings_with_cap, same_n, DEFAULT_ENUMERATION_CAP};
use crate::model::likelihood::{pair_count, EdgeCounts, WithinEdgeTable};
use crate::model::{EdgeModel, Graph, LabelVector};
use crate::priors::PriorSpec;

pub use mcmc::{mcmc_posterior, McmcChain, McmcConfig, McmcOutput};

/// Chunk length for the normalizing sum. Partial sums are merged in chunk
/// order, so the result does not depend on the number of worker threads.
const REDUCE_CHUNK: usize = 4096;

/// A subset of `Θ_n` described by a membership rule.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelSet {
    All,
    Point(LabelVector),
    /// `Θ_{n,m}`.
    ClassSize(usize),
    /// `{η : min(k, n-k) < radius}` with `k` the Hamming distance to `center`.
    Ball { center: LabelVector, radius: usize },
    Members(BTreeSet<LabelVector>),
    Complement(Box<LabelSet>),
}

impl LabelSet {
    pub fn complement(self) -> Self {
        LabelSet::Complement(Box::new(self))
    }

    pub fn contains(&self, theta: &LabelVector) -> bool {
        match self {
            LabelSet::All => true,
            LabelSet::Point(p) => p == theta,
            LabelSet::ClassSize(m) => theta.class_size() == *m,
            LabelSet::Ball { center, radius } => center
                .sym_distance(theta)
                .map(|d| d < *radius)
                .unwrap_or(false),
            LabelSet::Members(set) => set.contains(theta),
            LabelSet::Complement(inner) => !inner.contains(theta),
        }
    }
}

/// Normalized posterior mass for every canonical labeling, stored in
/// lexicographic order of the labelings.
#[derive(Clone, Debug)]
pub struct PosteriorTable {
    n: usize,
    labels: Vec<LabelVector>,
    log_unnormalized: Vec<f64>,
    probabilities: Vec<f64>,
    log_normalizer: f64,
}

/// Log-sum-exp with a fixed chunked merge order.
pub(crate) fn stable_log_normalizer(values: &[f64]) -> f64 {
    let max = values
        .par_iter()
        .copied()
        .reduce(|| f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let partials: Vec<f64> = values
        .par_chunks(REDUCE_CHUNK)
        .map(|c| c.iter().map(|&v| (v - max).exp()).sum::<f64>())
        .collect();
    max + partials.iter().sum::<f64>().ln()
}

impl PosteriorTable {
    /// Builds a table from unnormalized log weights; `labels` must be all of
    /// `Θ_n` in lexicographic order.
    pub fn from_log_weights(n: usize, labels: Vec<LabelVector>, log_unnormalized: Vec<f64>) -> Result<Self> {
        if labels.len() != log_unnormalized.len() {
            return Err(Error::DimensionMismatch {
                left: labels.len(),
                right: log_unnormalized.len(),
            });
        }
        if labels.len() as u64 != 1u64 << (n - 1) {
            return Err(Error::InvalidSet(format!(
                "table has {} labelings, expected 2^(n-1) = {}",
                labels.len(),
                1u64 << (n - 1)
            )));
        }
        if labels.iter().any(|l| l.n() != n) || !labels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSet(
                "labelings must be distinct, share n and be sorted".into(),
            ));
        }
        if log_unnormalized.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidSet("log weights must be finite or -inf".into()));
        }
        let log_normalizer = stable_log_normalizer(&log_unnormalized);
        if !log_normalizer.is_finite() {
            return Err(Error::InvalidSet("all weights are zero".into()));
        }
        let probabilities = log_unnormalized
            .par_iter()
            .map(|&v| (v - log_normalizer).exp())
            .collect();
        Ok(Self {
            n,
            labels,
            log_unnormalized,
            probabilities,
            log_normalizer,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[LabelVector] {
        &self.labels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_unnormalized(&self) -> &[f64] {
        &self.log_unnormalized
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn iter(&self) -> impl Iterator<Item = (LabelVector, f64)> + '_ {
        self.labels.iter().copied().zip(self.probabilities.iter().copied())
    }

    /// Posterior probability of a single labeling.
    pub fn probability(&self, theta: &LabelVector) -> Option<f64> {
        self.labels
            .binary_search(theta)
            .ok()
            .map(|i| self.probabilities[i])
    }

    /// `Π(S | X)`, summed in lexicographic order.
    pub fn mass(&self, set: &LabelSet) -> f64 {
        self.mass_where(|t| set.contains(t))
    }

    pub fn mass_where(&self, pred: impl Fn(&LabelVector) -> bool) -> f64 {
        self.iter()
            .filter(|(t, _)| pred(t))
            .map(|(_, p)| p)
            .sum::<f64>()
            .min(1.0)
    }

    /// `log Π(S | X)` via log-sum-exp of the unnormalized weights.
    pub fn log_mass(&self, set: &LabelSet) -> f64 {
        let selected: Vec<f64> = self
            .labels
            .iter()
            .zip(&self.log_unnormalized)
            .filter(|(t, _)| set.contains(t))
            .map(|(_, &v)| v)
            .collect();
        log_sum_exp(&selected) - self.log_normalizer
    }

    /// Highest-mass labeling; ties go to the lexicographically smallest.
    pub fn mode(&self) -> LabelVector {
        let mut best = 0;
        for (i, &v) in self.log_unnormalized.iter().enumerate().skip(1) {
            if v > self.log_unnormalized[best] {
                best = i;
            }
        }
        self.labels[best]
    }

    /// `P(θ_i = 1 | X)` for each vertex.
    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (t, p) in self.iter() {
            for (i, slot) in out.iter_mut().enumerate() {
                if t.get(i) {
                    *slot += p;
                }
            }
        }
        out
    }

    /// Posterior law of the smaller-class size, indexed `0..=floor(n/2)`.
    pub fn class_size_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n / 2 + 1];
        for (t, p) in self.iter() {
            out[t.class_size()] += p;
        }
        out
    }

    /// Indices sorted by probability descending, ties lexicographic.
    pub fn order_by_mass(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.labels.len()).collect();
        idx.sort_by(|&a, &b| {
            self.log_unnormalized[b]
                .total_cmp(&self.log_unnormalized[a])
                .then(a.cmp(&b))
        });
        idx
    }

    /// CSV with header `labeling,log_unnormalized,probability`, rows sorted
    /// by probability descending, then lexicographically.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("labeling,log_unnormalized,probability\n");
        for i in self.order_by_mass() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.labels[i], self.log_unnormalized[i], self.probabilities[i]
            );
        }
        out
    }

    /// Reads the CSV written by [`to_csv`](Self::to_csv). Every labeling of
    /// `Θ_n` must appear exactly once and the probability column must agree
    /// with the renormalized weights to 1e-9.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "labeling,log_unnormalized,probability" => {}
            other => {
                return Err(Error::InvalidSet(format!("unexpected posterior CSV header {other:?}")))
            }
        }
        let mut rows: Vec<(LabelVector, f64, f64)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::InvalidSet(format!("row {}: expected 3 fields", lineno + 2)));
            }
            let label: LabelVector = fields[0].parse()?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidSet(format!("row {}: bad number {s:?}", lineno + 2)))
            };
            rows.push((label, num(fields[1])?, num(fields[2])?));
        }
        let n = rows
            .first()
            .map(|r| r.0.n())
            .ok_or_else(|| Error::InvalidSet("posterior CSV has no rows".into()))?;
        rows.sort_by_key(|r| r.0);
        let mut seen = HashSet::new();
        for r in &rows {
            same_n(n, r.0.n())?;
            if !seen.insert(r.0) {
                return Err(Error::InvalidSet(format!("labeling {} listed twice", r.0)));
            }
        }
        let labels = rows.iter().map(|r| r.0).collect();
        let weights = rows.iter().map(|r| r.1).collect();
        let table = Self::from_log_weights(n, labels, weights)?;
        for (r, p) in rows.iter().zip(&table.probabilities) {
            if (r.2 - p).abs() > 1e-9 {
                return Err(Error::InvalidSet(format!(
                    "probability of {} is {} but weights give {}",
                    r.0, r.2, p
                )));
            }
        }
        Ok(table)
    }

    /// CSV `vertex,inclusion_probability`.
    pub fn marginals_csv(&self) -> String {
        marginals_to_csv(&self.marginals())
    }
}

pub fn marginals_to_csv(marginals: &[f64]) -> String {
    let mut out = String::from("vertex,inclusion_probability\n");
    for (i, p) in marginals.iter().enumerate() {
        let _ = writeln!(out, "{i},{p}");
    }
    out
}

/// `Π(θ | X) ∝ π_n(θ) p_θ(X)` over all of `Θ_n`.
pub fn exact_posterior(x: &Graph, prior: &PriorSpec, model: &EdgeModel) -> Result<PosteriorTable> {
    exact_posterior_with_cap(x, prior, model, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_posterior_with_cap(
    x: &Graph,
    prior: &PriorSpec,
    model: &EdgeModel,
    cap: usize,
) -> Result<PosteriorTable> {
    let n = x.n();
    let labels: Vec<LabelVector> = enumerate_labelings_with_cap(n, cap)?.collect();
    let table = WithinEdgeTable::build(x);
    let prior_logs = prior.log_mass_table(n);
    let edges = x.edge_count();
    debug_assert!(edges <= pair_count(n));
    let log_unnormalized: Vec<f64> = labels
        .par_iter()
        .map(|t| {
            let counts = EdgeCounts {
                n,
                ones: t.class_size(),
                edges,
                within_edges: table.within_edges(t.word()),
            };
            prior_logs[t.class_size()] + model.log_likelihood_from_counts(&counts)
        })
        .collect();
    PosteriorTable::from_log_weights(n, labels, log_unnormalized)
}

/// `Π(S | X)`.
pub fn posterior_mass(table: &PosteriorTable, set: &LabelSet) -> f64 {
    table.mass(set)
}

pub fn posterior_mode(table: &PosteriorTable) -> LabelVector {
    table.mode()
}

/// Most frequent labeling in a sample stream, ties lexicographic.
pub fn sample_mode(samples: &[LabelVector]) -> Option<LabelVector> {
    let mut counts: BTreeMap<LabelVector, usize> = BTreeMap::new();
    for s in samples {
        *counts.entry(*s).or_default() += 1;
    }
    let mut best: Option<(LabelVector, usize)> = None;
    for (label, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((label, c));
        }
    }
    best.map(|b| b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_labelings, sample_graph};
    use crate::priors::log_prior_mass;

    #[test]
    fn equal_probabilities_return_the_prior() {
        let model = EdgeModel::new(0.3, 0.3).unwrap();
        let x = sample_graph(&LabelVector::planted(8, 3).unwrap(), &model, 1);
        for prior in [PriorSpec::uniform(), PriorSpec::UniformClassSize, PriorSpec::beta(2.0, 1.0).unwrap()] {
            let table = exact_posterior(&x, &prior, &model).unwrap();
            for (t, p) in table.iter() {
                assert!((p - log_prior_mass(&t, &prior).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_vertex_posterior() {
        let model = EdgeModel::new(0.3, 0.6).unwrap();
        let x = Graph::empty(1).unwrap();
        let table = exact_posterior(&x, &PriorSpec::uniform(), &model).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table.probabilities()[0], 1.0);
    }

    #[test]
    fn rejects_n_above_cap() {
        let model = EdgeModel::new(0.3, 0.6).unwrap();
        let x = Graph::empty(23).unwrap();
        assert!(matches!(
            exact_posterior(&x, &PriorSpec::uniform(), &model),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn masses_of_standard_sets() {
        let model = EdgeModel::new(0.8, 0.2).unwrap();
        let theta = LabelVector::planted(7, 2).unwrap();
        let x = sample_graph(&theta, &model, 2);
        let table = exact_posterior(&x, &PriorSpec::uniform(), &model).unwrap();
        assert!((table.mass(&LabelSet::All) - 1.0).abs() < 1e-12);
        let ball = LabelSet::Ball { center: theta, radius: 7 };
        assert!((table.mass(&ball) - 1.0).abs() < 1e-12);
        let by_size: f64 = (0..=3).map(|m| table.mass(&LabelSet::ClassSize(m))).sum();
        assert!((by_size - 1.0).abs() < 1e-12);
        let point = table.mass(&LabelSet::Point(theta));
        let rest = table.mass(&LabelSet::Point(theta).complement());
        assert!((point + rest - 1.0).abs() < 1e-12);
        assert!((table.log_mass(&LabelSet::Point(theta)).exp() - point).abs() < 1e-12);
    }

    #[test]
    fn mode_tie_break_is_lexicographic() {
        let model = EdgeModel::new(0.45, 0.45).unwrap();
        let x = sample_graph(&LabelVector::planted(9, 4).unwrap(), &model, 4);
        let table = exact_posterior(&x, &PriorSpec::uniform(), &model).unwrap();
        assert_eq!(table.mode(), LabelVector::zeros(9).unwrap());
    }

    #[test]
    fn point_mass_mode() {
        let labels: Vec<_> = enumerate_labelings(4).unwrap().collect();
        let target = labels[5];
        let w: Vec<f64> = labels
            .iter()
            .map(|l| if *l == target { 0.0 } else { f64::NEG_INFINITY })
            .collect();
        let table = PosteriorTable::from_log_weights(4, labels, w).unwrap();
        assert_eq!(table.mode(), target);
        assert_eq!(table.probability(&target), Some(1.0));
    }

    #[test]
    fn csv_round_trip() {
        let model = EdgeModel::new(0.9, 0.1).unwrap();
        let x = sample_graph(&LabelVector::planted(6, 2).unwrap(), &model, 3);
        let table = exact_posterior(&x, &PriorSpec::UniformClassSize, &model).unwrap();
        let csv = table.to_csv();
        assert!(csv.starts_with("labeling,log_unnormalized,probability\n"));
        let back = PosteriorTable::from_csv(&csv).unwrap();
        assert_eq!(back.labels(), table.labels());
        for (a, b) in back.probabilities().iter().zip(table.probabilities()) {
            assert!((a - b).abs() < 1e-15);
        }
        // sorted by probability descending
        let probs: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(probs.windows(2).all(|w| w[0] >= w[1]));
        // missing row is rejected
        let truncated: String = csv.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(PosteriorTable::from_csv(&truncated).is_err());
    }

    #[test]
    fn sample_mode_counts() {
        let a: LabelVector = "0001".parse().unwrap();
        let b: LabelVector = "0010".parse().unwrap();
        assert_eq!(sample_mode(&[b, a, b, a]), Some(a));
        assert_eq!(sample_mode(&[b, a, b]), Some(b));
        assert_eq!(sample_mode(&[]), None);
    }
}
