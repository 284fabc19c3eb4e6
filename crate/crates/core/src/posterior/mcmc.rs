//! Single-site Metropolis sampler on the raw cube `{0,1}^n`.
//!
//! The chain targets `π_n(canon(w)) p_w(X)`. Both factors are invariant
//! under complement, so each canonical labeling receives exactly twice the
//! mass of its class, and projecting the emitted states gives the posterior
//! on `Θ_n`. Proposals flip one uniformly chosen vertex, which is symmetric
//! on the cube.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::labels::{full_mask, vertex_bit};
use crate::model::likelihood::{counts_for_word, EdgeCounts};
use crate::model::{EdgeModel, Graph, LabelVector};
use crate::priors::PriorSpec;
use crate::rng::{rng_from_seed, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub seed: u64,
}

impl McmcConfig {
    pub fn new(burn_in: usize, samples: usize, thin: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            burn_in,
            samples,
            thin,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `burn_in = 10 n²`, `samples = 10⁴`, `thin = n`.
    pub fn default_for(n: usize, seed: u64) -> Self {
        Self {
            burn_in: 10 * n * n,
            samples: 10_000,
            thin: n.max(1),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("burn_in", self.burn_in),
            ("samples", self.samples),
            ("thin", self.thin),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Chain state with incrementally maintained sufficient statistics.
pub struct McmcChain<'a> {
    x: &'a Graph,
    model: EdgeModel,
    prior_logs: Vec<f64>,
    degrees: Vec<usize>,
    word: u64,
    counts: EdgeCounts,
    log_target: f64,
}

impl<'a> McmcChain<'a> {
    pub fn new(x: &'a Graph, prior: &PriorSpec, model: &EdgeModel, start: u64) -> Result<Self> {
        let n = x.n();
        if n < 2 {
            return Err(Error::InvalidConfig("MCMC needs n >= 2".into()));
        }
        let word = start & full_mask(n);
        let mut chain = Self {
            x,
            model: *model,
            prior_logs: prior.log_mass_table(n),
            degrees: (0..n).map(|i| x.degree(i)).collect(),
            word,
            counts: counts_for_word(x, word),
            log_target: 0.0,
        };
        chain.log_target = chain.target(&chain.counts);
        Ok(chain)
    }

    fn target(&self, counts: &EdgeCounts) -> f64 {
        let m = counts.ones.min(counts.n - counts.ones);
        self.prior_logs[m] + self.model.log_likelihood_from_counts(counts)
    }

    /// Current raw state.
    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn log_target(&self) -> f64 {
        self.log_target
    }

    pub fn state(&self) -> LabelVector {
        LabelVector::from_raw_word(self.counts.n, self.word).expect("word fits n")
    }

    /// One Metropolis step; returns whether the proposal was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let n = self.counts.n;
        let v = rng.gen_range(0..n);
        let u: f64 = rng.gen();
        let bit = vertex_bit(n, v);
        let same_mask = if self.word & bit != 0 {
            self.word
        } else {
            !self.word & full_mask(n)
        };
        let same = (self.x.row(v) & same_mask).count_ones() as usize;
        let across = self.degrees[v] - same;
        let mut proposal = self.counts;
        proposal.within_edges = proposal.within_edges + across - same;
        if self.word & bit != 0 {
            proposal.ones -= 1;
        } else {
            proposal.ones += 1;
        }
        let proposed = self.target(&proposal);
        let delta = proposed - self.log_target;
        if delta >= 0.0 || u < delta.exp() {
            self.word ^= bit;
            self.counts = proposal;
            self.log_target = proposed;
            true
        } else {
            false
        }
    }
}

#[derive(Clone, Debug)]
pub struct McmcOutput {
    pub samples: Vec<LabelVector>,
    /// Fraction of samples with `θ_i = 1`.
    pub inclusion: Vec<f64>,
    /// Empirical law of the class size, indexed `0..=floor(n/2)`.
    pub class_size: Vec<f64>,
    pub acceptance_rate: f64,
}

/// Runs one chain from a uniformly random raw start drawn from the seeded
/// stream. `burn_in` steps are discarded, then one sample is kept every
/// `thin` steps.
pub fn mcmc_posterior(x: &Graph, prior: &PriorSpec, model: &EdgeModel, cfg: &McmcConfig) -> Result<McmcOutput> {
    cfg.validate()?;
    let n = x.n();
    let mut rng: StreamRng = rng_from_seed(cfg.seed);
    let start: u64 = rng.gen();
    let mut chain = McmcChain::new(x, prior, model, start)?;
    let mut accepted = 0usize;
    let mut steps = 0usize;
    for _ in 0..cfg.burn_in {
        accepted += chain.step(&mut rng) as usize;
        steps += 1;
    }
    let mut samples = Vec::with_capacity(cfg.samples);
    let mut inclusion = vec![0.0; n];
    let mut class_size = vec![0.0; n / 2 + 1];
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            accepted += chain.step(&mut rng) as usize;
            steps += 1;
        }
        let s = chain.state();
        for (i, slot) in inclusion.iter_mut().enumerate() {
            if s.get(i) {
                *slot += 1.0;
            }
        }
        class_size[s.class_size()] += 1.0;
        samples.push(s);
    }
    let total = cfg.samples as f64;
    inclusion.iter_mut().for_each(|v| *v /= total);
    class_size.iter_mut().for_each(|v| *v /= total);
    Ok(McmcOutput {
        samples,
        inclusion,
        class_size,
        acceptance_rate: accepted as f64 / steps as f64,
    })
}
