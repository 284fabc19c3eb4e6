//! Monte Carlo harnesses comparing empirical posterior behaviour with the
//! closed-form bounds, and sparsity sweeps.
//!
//! A run is a list of cells (one edge model each) times `replications`
//! independent draws. Replication `r` of cell `c` uses the stream seeded by
//! `derive_seed(master_seed, c, r)`; replications run in parallel and are
//! reduced in index order, so the CSV bytes do not depend on the number of
//! worker threads.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    ball_radius, default_beta, default_c, prop21_bound, thm41_ch_sufficient, thm41_dense_bound,
    thm41_uniform_bound, thm42_bound, thm42_ks_bound, uniform_alpha,
};
use crate::error::{Error, Result};
use crate::inference::{confidence_lower_bound_clipped, enlarge, hpd_credible_set};
use crate::model::{
    edge_probs_from_sparsity, enumerate_labelings, sample_graph_with, EdgeModel, LabelVector,
    Regime, SparsityParams, DEFAULT_ENUMERATION_CAP, MAX_ENUMERATION_CAP, MAX_VERTICES,
};
use crate::posterior::{
    exact_posterior_with_cap, mcmc_posterior, sample_mode, LabelSet, McmcConfig, PosteriorTable,
};
use crate::priors::{g_constant, PriorSpec};
use crate::rng::{derive_seed, rng_from_seed, StreamRng};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Recovery,
    Coverage,
    TestError,
    PhaseDiagram,
    BoundCheck,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosteriorMode {
    /// Exact when `n` is within the enumeration cap, MCMC otherwise.
    #[default]
    Auto,
    Exact,
    Mcmc,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsityCell {
    pub regime: Regime,
    pub first: f64,
    pub second: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSettings {
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
}

fn default_prior() -> PriorSpec {
    PriorSpec::uniform()
}

fn default_gamma() -> f64 {
    0.05
}

fn default_thresholds() -> Vec<f64> {
    vec![1.0]
}

fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub n: usize,
    #[serde(default = "default_prior")]
    pub prior: PriorSpec,
    #[serde(default)]
    pub models: Vec<EdgeModel>,
    #[serde(default)]
    pub sparsity_grid: Vec<SparsityCell>,
    /// Class size of the planted labeling; a uniformly random labeling is
    /// drawn per replication when absent.
    #[serde(default)]
    pub planted_m: Option<usize>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Ball / enlargement radius `k`; defaults to `⌈alpha n⌉`.
    #[serde(default)]
    pub radius: Option<usize>,
    /// Defaults to 0.25.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub m0: usize,
    /// Alternative class size; the complement of `Θ_{n,m0}` when absent.
    #[serde(default)]
    pub m1: Option<usize>,
    #[serde(default)]
    pub posterior: PosteriorMode,
    #[serde(default)]
    pub mcmc: Option<McmcSettings>,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Clone, Debug)]
struct Cell {
    model: EdgeModel,
    sparsity: Option<SparsityCell>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.25)
    }

    pub fn radius(&self) -> usize {
        self.radius.unwrap_or_else(|| ball_radius(self.n, self.alpha()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.n == 0 || self.n > MAX_VERTICES {
            return Err(Error::UnsupportedSize {
                n: self.n,
                max: MAX_VERTICES,
            });
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.models.is_empty() && self.sparsity_grid.is_empty() {
            return bad("models or sparsity_grid must be nonempty".into());
        }
        if self.kind == ExperimentKind::PhaseDiagram && self.sparsity_grid.is_empty() {
            return bad("phase-diagram needs a sparsity_grid".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma = {} must lie in (0, 1)", self.gamma));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("thresholds must be a nonempty list of positive numbers".into());
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha = {a} must lie in (0, 1)"));
            }
        }
        let half = self.n / 2;
        if self.planted_m.is_some_and(|m| m > half) {
            return bad(format!("planted_m must be at most floor(n/2) = {half}"));
        }
        if self.kind == ExperimentKind::TestError {
            if self.m0 > half || self.m1.is_some_and(|m| m > half) {
                return bad(format!("m0 and m1 must be at most floor(n/2) = {half}"));
            }
            if self.m1 == Some(self.m0) {
                return bad("m0 and m1 must differ".into());
            }
            if self.m1.is_none() && half == 0 {
                return bad("the complement alternative is empty for n = 1".into());
            }
        }
        if self.enumeration_cap > MAX_ENUMERATION_CAP {
            return bad(format!("enumeration_cap above {MAX_ENUMERATION_CAP}"));
        }
        if let Some(m) = &self.mcmc {
            McmcConfig::new(m.burn_in, m.samples, m.thin, 0)?;
        }
        let exact_only = !matches!(self.kind, ExperimentKind::Recovery | ExperimentKind::PhaseDiagram);
        if self.n > self.enumeration_cap && (exact_only || self.posterior == PosteriorMode::Exact) {
            return Err(Error::EnumerationCap {
                n: self.n,
                cap: self.enumeration_cap,
            });
        }
        if self.posterior == PosteriorMode::Mcmc && exact_only {
            return bad("this experiment kind needs the exact posterior".into());
        }
        if self.posterior == PosteriorMode::Mcmc && self.n < 2 {
            return bad("MCMC needs n >= 2".into());
        }
        self.cells()?;
        Ok(())
    }

    fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells: Vec<Cell> = self
            .models
            .iter()
            .map(|m| Cell {
                model: *m,
                sparsity: None,
            })
            .collect();
        for s in &self.sparsity_grid {
            let params = SparsityParams {
                regime: s.regime,
                first: s.first,
                second: s.second,
                n: self.n,
            };
            cells.push(Cell {
                model: edge_probs_from_sparsity(&params)?,
                sparsity: Some(*s),
            });
        }
        Ok(cells)
    }

    /// Whether sampled (approximate) posteriors are used.
    pub fn uses_mcmc(&self) -> bool {
        match self.posterior {
            PosteriorMode::Mcmc => true,
            PosteriorMode::Exact => false,
            PosteriorMode::Auto => self.n > self.enumeration_cap,
        }
    }

    fn mcmc_config(&self, seed: u64) -> McmcConfig {
        match self.mcmc {
            Some(m) => McmcConfig {
                burn_in: m.burn_in,
                samples: m.samples,
                thin: m.thin,
                seed,
            },
            None => McmcConfig::default_for(self.n, seed),
        }
    }
}

/// Exact table or sample-based approximation.
enum Posterior {
    Exact(PosteriorTable),
    Sampled(Vec<LabelVector>),
}

impl Posterior {
    fn mass(&self, set: &LabelSet) -> f64 {
        match self {
            Posterior::Exact(t) => t.mass(set),
            Posterior::Sampled(s) => s.iter().filter(|t| set.contains(t)).count() as f64 / s.len() as f64,
        }
    }

    fn mode(&self) -> LabelVector {
        match self {
            Posterior::Exact(t) => t.mode(),
            Posterior::Sampled(s) => sample_mode(s).expect("at least one sample"),
        }
    }

    fn table(&self) -> &PosteriorTable {
        match self {
            Posterior::Exact(t) => t,
            Posterior::Sampled(_) => unreachable!("validated to use the exact posterior"),
        }
    }
}

struct Draw {
    theta: LabelVector,
    posterior: Posterior,
}

fn draw_theta(cfg: &ExperimentConfig, m: Option<usize>, rng: &mut StreamRng) -> LabelVector {
    match m {
        Some(m) => LabelVector::planted(cfg.n, m).expect("validated class size"),
        None => LabelVector::from_raw_word(cfg.n, rng.gen()).expect("validated n"),
    }
}

fn draw(cfg: &ExperimentConfig, model: &EdgeModel, m: Option<usize>, rng: &mut StreamRng) -> Result<Draw> {
    let theta = draw_theta(cfg, m, rng);
    let x = sample_graph_with(&theta, model, rng);
    let posterior = if cfg.uses_mcmc() {
        let out = mcmc_posterior(&x, &cfg.prior, model, &cfg.mcmc_config(rng.gen()))?;
        Posterior::Sampled(out.samples)
    } else {
        Posterior::Exact(exact_posterior_with_cap(&x, &cfg.prior, model, cfg.enumeration_cap)?)
    };
    Ok(Draw { theta, posterior })
}

/// Runs `f` for every replication of a cell in parallel, returning results
/// in replication order.
fn replicate<T, F>(cfg: &ExperimentConfig, cell: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut StreamRng) -> Result<T> + Sync + Send,
{
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(cfg.master_seed, cell as u64, r as u64));
            f(&mut rng)
        })
        .collect()
}

/// Estimate and standard error of a frequency.
pub fn frequency(hits: usize, reps: usize) -> (f64, f64) {
    let p = hits as f64 / reps as f64;
    (p, (p * (1.0 - p) / reps as f64).sqrt())
}

/// Sample mean and its standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(u64),
    Real(f64),
    Text(String),
    Empty,
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Real(v) => v.to_string(),
            Value::Text(s) => s.clone(),
            Value::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Empty, Value::Real)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row(Vec<(String, Value)>);

impl Row {
    fn push(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    fn stat(&mut self, key: &str, (est, se): (f64, f64), bound: Option<f64>) -> &mut Self {
        self.push(&format!("{key}_est"), est)
            .push(&format!("{key}_se"), se)
            .push(&format!("{key}_bound"), bound)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub approximate: bool,
    pub rows: Vec<Row>,
}

impl ExperimentResult {
    pub fn header(&self) -> Vec<&str> {
        self.rows
            .first()
            .map(|r| r.0.iter().map(|(k, _)| k.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.0.iter().map(|(_, v)| v.render()).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

fn cell_row(cfg: &ExperimentConfig, index: usize, cell: &Cell) -> Row {
    let mut row = Row::default();
    row.push("cell", index)
        .push("n", cfg.n)
        .push("p", cell.model.p())
        .push("q", cell.model.q())
        .push("prior", cfg.prior.to_string())
        .push("replications", cfg.replications);
    match cell.sparsity {
        Some(s) => row
            .push(
                "regime",
                match s.regime {
                    Regime::ChernoffHellinger => "chernoff-hellinger".to_string(),
                    Regime::KestenStigum => "kesten-stigum".to_string(),
                },
            )
            .push("first", s.first)
            .push("second", s.second),
        None => row
            .push("regime", Value::Empty)
            .push("first", Value::Empty)
            .push("second", Value::Empty),
    };
    row
}

/// Bound inputs shared by several harnesses.
struct BoundInputs {
    c: f64,
    g: f64,
    alpha_uniform: f64,
    beta: f64,
    radius: usize,
    ball_alpha: Option<f64>,
}

impl BoundInputs {
    fn new(cfg: &ExperimentConfig, model: &EdgeModel) -> Self {
        let radius = cfg.radius();
        // largest admissible α with k ≥ α n
        let ratio = radius as f64 / cfg.n as f64;
        let ball_alpha = (ratio > 0.0 && ratio < 1.0).then_some(ratio);
        Self {
            c: default_c(model),
            g: g_constant(&cfg.prior).value(),
            alpha_uniform: uniform_alpha(model, cfg.n.max(2)),
            beta: default_beta(model, cfg.n),
            radius,
            ball_alpha,
        }
    }

    fn dense(&self, n: usize) -> Option<f64> {
        thm41_dense_bound(n, self.c, self.g).ok().map(|r| r.value)
    }

    fn uniform(&self, cfg: &ExperimentConfig) -> Option<f64> {
        (cfg.prior == PriorSpec::uniform())
            .then(|| thm41_uniform_bound(cfg.n, self.alpha_uniform).ok().map(|r| r.value))
            .flatten()
    }

    fn ball(&self, n: usize) -> Option<f64> {
        self.ball_alpha
            .and_then(|a| thm42_bound(n, a, self.beta, self.g).ok())
            .map(|r| r.value)
    }

    fn echo(&self, row: &mut Row) {
        row.push("c", self.c)
            .push("g", self.g)
            .push("alpha_uniform", self.alpha_uniform)
            .push("beta", self.beta)
            .push("radius", self.radius)
            .push("ball_alpha", self.ball_alpha);
    }
}

fn ball(theta: LabelVector, radius: usize) -> LabelSet {
    LabelSet::Ball {
        center: theta,
        radius,
    }
}

fn run_recovery(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let b = BoundInputs::new(cfg, &cell.model);
        let reps = replicate(cfg, i, |rng| {
            let d = draw(cfg, &cell.model, cfg.planted_m, rng)?;
            let point = d.posterior.mass(&LabelSet::Point(d.theta));
            let in_ball = d.posterior.mass(&ball(d.theta, b.radius));
            Ok((d.posterior.mode() == d.theta, point, in_ball))
        })?;
        let hits = reps.iter().filter(|r| r.0).count();
        let point: Vec<f64> = reps.iter().map(|r| r.1).collect();
        let tail: Vec<f64> = point.iter().map(|v| 1.0 - v).collect();
        let outside: Vec<f64> = reps.iter().map(|r| 1.0 - r.2).collect();
        let dense = b.dense(cfg.n);
        let mut row = cell_row(cfg, i, cell);
        row.stat("recovery", frequency(hits, cfg.replications), None)
            .stat("theta0_mass", mean_se(&point), dense.map(|a| (1.0 - a).max(0.0)))
            .stat("tail_mass", mean_se(&tail), dense)
            .push("tail_mass_bound_uniform", b.uniform(cfg))
            .stat("outside_ball", mean_se(&outside), b.ball(cfg.n));
        b.echo(&mut row);
        rows.push(row);
    }
    Ok(rows)
}

fn run_coverage(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let b = BoundInputs::new(cfg, &cell.model);
        let reps = replicate(cfg, i, |rng| {
            let d = draw(cfg, &cell.model, cfg.planted_m, rng)?;
            let table = d.posterior.table();
            let hpd = hpd_credible_set(table, cfg.gamma)?;
            let enlarged = enlarge(&hpd, b.radius)?;
            let nested = hpd.members.iter().all(|t| enlarged.contains(t));
            Ok((
                hpd.contains(&d.theta),
                enlarged.contains(&d.theta),
                nested,
                1.0 - table.mass(&LabelSet::Point(d.theta)),
                1.0 - table.mass(&ball(d.theta, b.radius)),
                hpd.len(),
                enlarged.len(),
            ))
        })?;
        let hpd_hits = reps.iter().filter(|r| r.0).count();
        let enl_hits = reps.iter().filter(|r| r.1).count();
        let not_nested = reps.iter().filter(|r| !r.2 || (r.0 && !r.1)).count();
        let tail: Vec<f64> = reps.iter().map(|r| r.3).collect();
        let outside: Vec<f64> = reps.iter().map(|r| r.4).collect();
        let (x_hat, _) = mean_se(&tail);
        let (x_ball, _) = mean_se(&outside);
        let sizes: Vec<f64> = reps.iter().map(|r| r.5 as f64).collect();
        let enl_sizes: Vec<f64> = reps.iter().map(|r| r.6 as f64).collect();
        let theory = |a: Option<f64>| a.map(|a| confidence_lower_bound_clipped(a, cfg.gamma));
        let mut row = cell_row(cfg, i, cell);
        row.push("gamma", cfg.gamma)
            .stat("coverage_hpd", frequency(hpd_hits, cfg.replications), Some(confidence_lower_bound_clipped(x_hat, cfg.gamma)))
            .push("coverage_hpd_theory_bound", theory(b.dense(cfg.n)))
            .stat("coverage_enlarged", frequency(enl_hits, cfg.replications), Some(confidence_lower_bound_clipped(x_ball, cfg.gamma)))
            .push("coverage_enlarged_theory_bound", theory(b.ball(cfg.n)))
            .stat("tail_mass", mean_se(&tail), None)
            .stat("outside_ball", mean_se(&outside), None)
            .push("hpd_size_mean", mean_se(&sizes).0)
            .push("enlarged_size_mean", mean_se(&enl_sizes).0)
            .push("inclusion_violations", not_nested);
        b.echo(&mut row);
        rows.push(row);
    }
    Ok(rows)
}

fn run_test_error(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<Row>> {
    let null = LabelSet::ClassSize(cfg.m0);
    let alt = match cfg.m1 {
        Some(m1) => LabelSet::ClassSize(m1),
        None => null.clone().complement(),
    };
    // size planted under the alternative
    let alt_m = cfg.m1.unwrap_or(if cfg.m0 == cfg.n / 2 { 0 } else { cfg.n / 2 });
    let mut rows = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let reps = replicate(cfg, i, |rng| {
            let under_null = draw(cfg, &cell.model, Some(cfg.m0), rng)?;
            let under_alt = draw(cfg, &cell.model, Some(alt_m), rng)?;
            let stats = |d: &Draw| {
                let t = d.posterior.table();
                let (a, b) = (t.mass(&null), t.mass(&alt));
                (t.log_mass(&alt) - t.log_mass(&null), a, b)
            };
            Ok((stats(&under_null), stats(&under_alt)))
        })?;
        let a_hat = 1.0 - mean_se(&reps.iter().map(|r| r.0 .1).collect::<Vec<_>>()).0;
        let b_hat = mean_se(&reps.iter().map(|r| r.0 .2).collect::<Vec<_>>()).0;
        // roles reversed for the alternative
        let a_rev = 1.0 - mean_se(&reps.iter().map(|r| r.1 .2).collect::<Vec<_>>()).0;
        let b_rev = mean_se(&reps.iter().map(|r| r.1 .1).collect::<Vec<_>>()).0;
        for &t in &cfg.thresholds {
            let log_t = t.ln();
            let type1 = reps.iter().filter(|r| r.0 .0 > log_t).count();
            let type2 = reps.iter().filter(|r| r.1 .0 <= log_t).count();
            let mut row = cell_row(cfg, i, cell);
            row.push("m0", cfg.m0)
                .push("m1", cfg.m1.map_or(Value::Text("complement".into()), Value::from))
                .push("alt_planted_m", alt_m)
                .push("threshold", t)
                .stat("type1", frequency(type1, cfg.replications), Some(2.0 * a_hat * (1.0 + 1.0 / t)))
                .push("type1_bound_two_term", 2.0 * a_hat + 2.0 * b_hat / t)
                .stat("type2", frequency(type2, cfg.replications), Some(2.0 * a_rev * (1.0 + t)))
                .push("type2_bound_two_term", 2.0 * a_rev + 2.0 * b_rev * t)
                .push("a_hat", a_hat)
                .push("b_hat", b_hat)
                .push("a_hat_alt", a_rev)
                .push("b_hat_alt", b_rev);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn run_phase_diagram(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<Row>> {
    let radius = cfg.radius();
    let mut rows = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let reps = replicate(cfg, i, |rng| {
            let d = draw(cfg, &cell.model, cfg.planted_m, rng)?;
            Ok((d.posterior.mode() == d.theta, d.posterior.mass(&ball(d.theta, radius))))
        })?;
        let hits = reps.iter().filter(|r| r.0).count();
        let in_ball: Vec<f64> = reps.iter().map(|r| r.1).collect();
        let s = cell.sparsity.expect("phase diagram cells come from the grid");
        let (ch, ks_gap, ks_bound) = match s.regime {
            Regime::ChernoffHellinger => (thm41_ch_sufficient(s.first, s.second, cfg.n).ok(), None, None),
            Regime::KestenStigum => {
                let gap = (s.first.sqrt() - s.second.sqrt()).powi(2);
                let g = g_constant(&cfg.prior).value();
                let bound = thm42_ks_bound(cfg.n, cfg.alpha(), s.first, s.second, g).ok().map(|r| r.value);
                (None, Some(gap), bound)
            }
        };
        let mut row = cell_row(cfg, i, cell);
        row.push("radius", radius)
            .stat("recovery", frequency(hits, cfg.replications), None)
            .stat("ball_mass", mean_se(&in_ball), ks_bound.map(|b| (1.0 - b).max(0.0)))
            .push("ch_sufficient", ch)
            .push("ks_gap", ks_gap);
        rows.push(row);
    }
    Ok(rows)
}

fn run_bound_check(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<Row>> {
    let all: Vec<LabelVector> = enumerate_labelings(cfg.n)?.collect();
    let mut rows = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let b = BoundInputs::new(cfg, &cell.model);
        let reps = replicate(cfg, i, |rng| {
            let d = draw(cfg, &cell.model, cfg.planted_m, rng)?;
            let t = d.posterior.table();
            let others: Vec<LabelVector> = all.iter().copied().filter(|e| *e != d.theta).collect();
            let prop = if others.is_empty() {
                0.0
            } else {
                prop21_bound(&d.theta, &others, &cfg.prior, &cell.model)?
            };
            Ok((
                1.0 - t.mass(&LabelSet::Point(d.theta)),
                1.0 - t.mass(&ball(d.theta, b.radius)),
                prop,
            ))
        })?;
        let tail: Vec<f64> = reps.iter().map(|r| r.0).collect();
        let outside: Vec<f64> = reps.iter().map(|r| r.1).collect();
        let prop: Vec<f64> = reps.iter().map(|r| r.2).collect();
        let (tail_mean, tail_se) = mean_se(&tail);
        let prop_mean = mean_se(&prop).0;
        let mut row = cell_row(cfg, i, cell);
        row.stat("tail_mass", (tail_mean, tail_se), Some(prop_mean))
            .push("tail_mass_bound_dense", b.dense(cfg.n))
            .push("tail_mass_bound_uniform", b.uniform(cfg))
            .stat("outside_ball", mean_se(&outside), b.ball(cfg.n))
            .push("prop21_within_3se", (tail_mean <= prop_mean + 3.0 * tail_se) as usize);
        b.echo(&mut row);
        rows.push(row);
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let cells = cfg.cells()?;
    let rows = match cfg.kind {
        ExperimentKind::Recovery => run_recovery(cfg, &cells)?,
        ExperimentKind::Coverage => run_coverage(cfg, &cells)?,
        ExperimentKind::TestError => run_test_error(cfg, &cells)?,
        ExperimentKind::PhaseDiagram => run_phase_diagram(cfg, &cells)?,
        ExperimentKind::BoundCheck => run_bound_check(cfg, &cells)?,
    };
    Ok(ExperimentResult {
        kind: cfg.kind,
        approximate: cfg.uses_mcmc(),
        rows,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub crate_version: &'static str,
    pub master_seed: u64,
    pub approximate: bool,
    pub csv_sha256: String,
    /// Wall-clock time; not part of the hashed artifact.
    pub created_unix_seconds: u64,
    pub config: ExperimentConfig,
}

/// Writes the CSV and a `<stem>.meta.json` sidecar next to it; returns the
/// sidecar path.
pub fn write_outputs(cfg: &ExperimentConfig, result: &ExperimentResult, csv_path: &Path) -> Result<std::path::PathBuf> {
    let csv = result.to_csv();
    std::fs::write(csv_path, &csv)?;
    let meta = Metadata {
        schema_version: SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.master_seed,
        approximate: result.approximate,
        csv_sha256: sha256_hex(csv.as_bytes()),
        created_unix_seconds: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config: cfg.clone(),
    };
    let meta_path = csv_path.with_extension("meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(meta_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"schema_version": 1, "kind": "{kind}", "n": 6, "replications": 40,
                "master_seed": 9, "models": [{{"p": 0.9, "q": 0.1}}] {extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let base = r#""schema_version": 1, "kind": "recovery", "n": 6, "master_seed": 1"#;
        let parse = |rest: &str| ExperimentConfig::from_json(&format!("{{{base}, {rest}}}"));
        assert!(parse(r#""replications": 0, "models": [{"p": 0.5, "q": 0.2}]"#).is_err());
        assert!(parse(r#""replications": 3, "models": []"#).is_err());
        assert!(parse(r#""replications": 3, "models": [{"p": 1.0, "q": 0.2}]"#).is_err());
        assert!(parse(r#""replications": 3, "models": [{"p": 0.5, "q": 0.2}], "bogus": 1"#).is_err());
        assert!(parse(r#""replications": 3, "models": [{"p": 0.5, "q": 0.2}], "planted_m": 4"#).is_err());
        assert!(parse(r#""replications": 3, "models": [{"p": 0.5, "q": 0.2}]"#).is_ok());
        let wrong_version = r#"{"schema_version": 2, "kind": "recovery", "n": 6, "master_seed": 1, "replications": 1, "models": [{"p": 0.5, "q": 0.2}]}"#;
        assert!(ExperimentConfig::from_json(wrong_version).is_err());
    }

    #[test]
    fn frequency_se_is_binomial() {
        let (p, se) = frequency(30, 120);
        assert_eq!(p, 0.25);
        assert!((se - (0.25f64 * 0.75 / 120.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[2.0]), (2.0, 0.0));
    }

    #[test]
    fn every_kind_runs() {
        for kind in ["recovery", "coverage", "test-error", "bound-check"] {
            let res = run_experiment(&config(kind, "")).unwrap();
            assert!(!res.rows.is_empty());
            let csv = res.to_csv();
            let width = res.header().len();
            assert!(csv.lines().all(|l| l.split(',').count() == width), "{kind}");
        }
        let grid = r#", "sparsity_grid": [{"regime": "kesten-stigum", "first": 5.0, "second": 1.0},
                                          {"regime": "chernoff-hellinger", "first": 2.0, "second": 0.5}]"#;
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"schema_version": 1, "kind": "phase-diagram", "n": 6, "replications": 10,
                "master_seed": 9 {grid}}}"#
        ))
        .unwrap();
        assert_eq!(run_experiment(&cfg).unwrap().rows.len(), 2);
    }

    #[test]
    fn estimates_are_frequencies() {
        let res = run_experiment(&config("coverage", "")).unwrap();
        for row in &res.rows {
            for key in ["coverage_hpd_est", "coverage_enlarged_est"] {
                let v = row.real(key).unwrap();
                assert!((0.0..=1.0).contains(&v));
            }
            assert_eq!(row.real("inclusion_violations"), Some(0.0));
            assert!(row.real("coverage_enlarged_est") >= row.real("coverage_hpd_est"));
        }
    }

    #[test]
    fn deterministic_csv() {
        let cfg = config("recovery", r#", "planted_m": 2"#);
        let a = run_experiment(&cfg).unwrap().to_csv();
        let b = run_experiment(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn mcmc_mode_is_flagged() {
        let cfg = config(
            "recovery",
            r#", "posterior": "mcmc", "mcmc": {"burn_in": 50, "samples": 100, "thin": 2}"#,
        );
        let res = run_experiment(&cfg).unwrap();
        assert!(res.approximate);
        assert!(ExperimentConfig::from_json(
            r#"{"schema_version": 1, "kind": "coverage", "n": 6, "replications": 2, "master_seed": 1,
                "models": [{"p": 0.9, "q": 0.1}], "posterior": "mcmc"}"#
        )
        .is_err());
    }
}
