//! Hierarchical priors on `Θ_n`: a law on the smaller-class size `m`,
//! then uniform on `Θ_{n,m}`. All masses are computed in log space.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ln_beta, ln_class_count, log_add_exp};
use crate::model::LabelVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PriorSpec {
    /// i.i.d. Bernoulli(r) labels, folded onto `Θ_n`.
    FixedBernoulli { r: f64 },
    /// Bernoulli labels with `r ~ Beta(alpha, beta)`, folded onto `Θ_n`.
    BetaBernoulli { alpha: f64, beta: f64 },
    /// `m` uniform on `{0, ..., floor(n/2)}`.
    UniformClassSize,
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be positive and finite",
        })
    }
}

impl PriorSpec {
    pub fn bernoulli(r: f64) -> Result<Self> {
        let r = crate::error::check_probability("r", r)?;
        Ok(Self::FixedBernoulli { r })
    }

    /// The uniform prior on `Θ_n` (Bernoulli with `r = 1/2`).
    pub fn uniform() -> Self {
        Self::FixedBernoulli { r: 0.5 }
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self::BetaBernoulli {
            alpha: positive("alpha", alpha)?,
            beta: positive("beta", beta)?,
        })
    }

    pub fn uniform_class_size() -> Self {
        Self::UniformClassSize
    }

    /// Log prior mass of a single labeling in `Θ_{n,m}`.
    pub fn log_mass_for_class(&self, n: usize, m: usize) -> f64 {
        debug_assert!(2 * m <= n);
        let (nf, mf) = (n as f64, m as f64);
        match *self {
            Self::FixedBernoulli { r } => {
                let (lr, l1r) = (r.ln(), (-r).ln_1p());
                // r^m (1-r)^(n-m) + r^(n-m) (1-r)^m, written so that r = 1/2
                // yields exactly the same value for every m
                let a = nf * l1r + mf * (lr - l1r);
                let b = nf * lr + mf * (l1r - lr);
                log_add_exp(a, b)
            }
            Self::BetaBernoulli { alpha, beta } => {
                let a = ln_beta(mf + alpha, nf - mf + beta);
                let b = ln_beta(nf - mf + alpha, mf + beta);
                log_add_exp(a, b) - ln_beta(alpha, beta)
            }
            Self::UniformClassSize => -((1 + n / 2) as f64).ln() - ln_class_count(n, m),
        }
    }

    /// `log π_n(m)`: total mass of the slice `Θ_{n,m}`.
    pub fn log_class_marginal(&self, n: usize, m: usize) -> f64 {
        ln_class_count(n, m) + self.log_mass_for_class(n, m)
    }

    /// Per-labeling log mass indexed by class size `0..=floor(n/2)`.
    pub fn log_mass_table(&self, n: usize) -> Vec<f64> {
        (0..=n / 2).map(|m| self.log_mass_for_class(n, m)).collect()
    }
}

pub fn log_prior_mass(theta: &LabelVector, prior: &PriorSpec) -> f64 {
    prior.log_mass_for_class(theta.n(), theta.class_size())
}

/// Prior-dependent constant entering the posterior concentration bounds.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct GConstant(pub f64);

impl GConstant {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Smallest admissible `g` for each prior family.
pub fn g_constant(prior: &PriorSpec) -> GConstant {
    match *prior {
        PriorSpec::FixedBernoulli { r } => GConstant((r.ln() - (-r).ln_1p()).abs()),
        PriorSpec::BetaBernoulli { .. } => GConstant(2.0 + 2.0 * std::f64::consts::LN_2),
        PriorSpec::UniformClassSize => GConstant(1.0 + std::f64::consts::LN_2),
    }
}

/// Log of an upper bound on `max_{θ,η} π_n(η) / π_n(θ)`:
/// `2 R^floor(n/2)` with `R = r/(1-r) ∨ (1-r)/r` for fixed Bernoulli
/// (exactly 1 when `r = 1/2`), `(2e)^n` for Beta-Bernoulli and
/// `(2e)^(n/2)` for the uniform class-size prior.
pub fn log_prior_mass_ratio_bound(prior: &PriorSpec, n: usize) -> f64 {
    let two_e_ln = 1.0 + std::f64::consts::LN_2;
    match *prior {
        PriorSpec::FixedBernoulli { .. } => {
            let g = g_constant(prior).0;
            if g == 0.0 {
                0.0
            } else {
                std::f64::consts::LN_2 + (n / 2) as f64 * g
            }
        }
        PriorSpec::BetaBernoulli { .. } => n as f64 * two_e_ln,
        PriorSpec::UniformClassSize => n as f64 / 2.0 * two_e_ln,
    }
}

pub fn prior_mass_ratio_bound(prior: &PriorSpec, n: usize) -> f64 {
    log_prior_mass_ratio_bound(prior, n).exp()
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FixedBernoulli { r } => write!(f, "bernoulli:r={r}"),
            Self::BetaBernoulli { alpha, beta } => write!(f, "beta:alpha={alpha},beta={beta}"),
            Self::UniformClassSize => f.write_str("uniform-m"),
        }
    }
}

fn parse_kv(body: &str, spec: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidPrior(format!("expected key=value in {spec:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidPrior(format!("bad number {v:?} in {spec:?}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Parses `bernoulli:r=0.5`, `beta:alpha=1,beta=1` or `uniform-m`.
impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform-m" {
            return Ok(Self::UniformClassSize);
        }
        let (family, body) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidPrior(format!("unknown prior {s:?}")))?;
        let kv = parse_kv(body, s)?;
        let get = |key: &str| {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::InvalidPrior(format!("missing {key} in {s:?}")))
        };
        let known: &[&str] = match family {
            "bernoulli" => &["r"],
            "beta" => &["alpha", "beta"],
            _ => return Err(Error::InvalidPrior(format!("unknown prior family {family:?}"))),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::InvalidPrior(format!("unknown key {k:?} in {s:?}")));
        }
        match family {
            "bernoulli" => Self::bernoulli(get("r")?),
            _ => Self::beta(get("alpha")?, get("beta")?),
        }
    }
}

impl TryFrom<String> for PriorSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PriorSpec> for String {
    fn from(p: PriorSpec) -> String {
        p.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::log_sum_exp;
    use crate::model::enumerate_labelings;

    fn all_priors() -> Vec<PriorSpec> {
        vec![
            PriorSpec::uniform(),
            PriorSpec::bernoulli(0.2).unwrap(),
            PriorSpec::bernoulli(0.85).unwrap(),
            PriorSpec::beta(1.0, 1.0).unwrap(),
            PriorSpec::beta(2.0, 3.0).unwrap(),
            PriorSpec::beta(0.5, 4.0).unwrap(),
            PriorSpec::UniformClassSize,
        ]
    }

    #[test]
    fn normalizes_over_canonical_space() {
        for prior in all_priors() {
            for n in 1..=12 {
                let logs: Vec<f64> = enumerate_labelings(n)
                    .unwrap()
                    .map(|t| log_prior_mass(&t, &prior))
                    .collect();
                let total = log_sum_exp(&logs).exp();
                assert!((total - 1.0).abs() < 1e-10, "{prior} n={n}: {total}");
            }
        }
    }

    #[test]
    fn uniform_bernoulli_is_flat() {
        let theta = LabelVector::planted(5, 2).unwrap();
        let lm = log_prior_mass(&theta, &PriorSpec::uniform());
        assert!((lm - (1.0f64 / 16.0).ln()).abs() < 1e-14);
        let table = PriorSpec::uniform().log_mass_table(10);
        assert!(table.iter().all(|&v| v == table[0]));
    }

    #[test]
    fn beta_one_one_class_marginals() {
        let p = PriorSpec::beta(1.0, 1.0).unwrap();
        let marg: Vec<f64> = (0..=2).map(|m| p.log_class_marginal(4, m).exp()).collect();
        for (got, want) in marg.iter().zip([0.4, 0.4, 0.2]) {
            assert!((got - want).abs() < 1e-12, "{marg:?}");
        }
    }

    #[test]
    fn uniform_class_size_marginals() {
        let p = PriorSpec::UniformClassSize;
        for m in 0..=2 {
            assert!((p.log_class_marginal(4, m).exp() - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn g_constants() {
        assert_eq!(g_constant(&PriorSpec::uniform()).value(), 0.0);
        let g = g_constant(&PriorSpec::beta(2.0, 3.0).unwrap()).value();
        assert!((g - (2.0 + 2.0 * 2f64.ln())).abs() < 1e-15);
        let g = g_constant(&PriorSpec::UniformClassSize).value();
        assert!((g - (1.0 + 2f64.ln())).abs() < 1e-15);
        // symmetric in r <-> 1-r
        let a = g_constant(&PriorSpec::bernoulli(0.3).unwrap()).value();
        let b = g_constant(&PriorSpec::bernoulli(0.7).unwrap()).value();
        assert!((a - b).abs() < 1e-15);
        assert!((a - (0.7f64 / 0.3).ln()).abs() < 1e-14);
    }

    #[test]
    fn ratio_bound_dominates_exhaustive_maximum() {
        assert_eq!(prior_mass_ratio_bound(&PriorSpec::uniform(), 9), 1.0);
        let two_e = 2.0 * std::f64::consts::E;
        assert!((prior_mass_ratio_bound(&PriorSpec::beta(1.0, 1.0).unwrap(), 6) - two_e.powi(6)).abs() < 1e-6);
        assert!((prior_mass_ratio_bound(&PriorSpec::UniformClassSize, 6) - two_e.powi(3)).abs() < 1e-9);
        for prior in all_priors() {
            for n in 1..=12 {
                let logs: Vec<f64> = enumerate_labelings(n)
                    .unwrap()
                    .map(|t| log_prior_mass(&t, &prior))
                    .collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = logs.iter().copied().fold(f64::INFINITY, f64::min);
                assert!(max - min <= log_prior_mass_ratio_bound(&prior, n) + 1e-12, "{prior} n={n}");
            }
        }
    }

    #[test]
    fn parse_and_display() {
        for s in ["bernoulli:r=0.5", "beta:alpha=1,beta=1", "uniform-m", "beta:alpha=0.5,beta=2"] {
            let p: PriorSpec = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        for bad in ["bernoulli:r=1", "bernoulli:r=0", "beta:alpha=0,beta=1", "gauss:mu=0", "bernoulli", "bernoulli:p=0.5", "beta:alpha=1"] {
            assert!(bad.parse::<PriorSpec>().is_err(), "{bad}");
        }
        let json = serde_json::to_string(&PriorSpec::beta(2.0, 3.0).unwrap()).unwrap();
        assert_eq!(json, "\"beta:alpha=2,beta=3\"");
        let back: PriorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, PriorSpec::beta(2.0, 3.0).unwrap());
    }
}
