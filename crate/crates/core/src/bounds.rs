//! Closed-form affinities and posterior-contraction bounds, plus numerical
//! grid checks of the auxiliary inequalities they rest on.
//!
//! Every bound is evaluated as a logarithm and exponentiated once at the
//! end. Reported values are not clipped; `value_clipped` is `min(value, 1)`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::math::{binomial, ln_beta, log_add_exp, log_sum_exp};
use crate::model::labels::same_n;
use crate::model::likelihood::discrepancy_words;
use crate::model::{EdgeModel, LabelVector};
use crate::priors::{log_prior_mass, PriorSpec};

/// Version of the fixed grids used by [`aux_lemma_suite`].
pub const GRID_VERSION: u32 = 1;

const LN_2_SQRT_2: f64 = 1.5 * LN_2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub value_clipped: f64,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    fn from_log(name: &str, log_value: f64, inputs: &[(&str, f64)]) -> Self {
        Self::new(name, log_value.exp(), inputs)
    }

    pub fn new(name: &str, value: f64, inputs: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            value,
            value_clipped: value.min(1.0),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn check_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be nonnegative and finite",
        })
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "must be at least 2",
        });
    }
    Ok(())
}

/// `ρ(p, q) = √(pq) + √((1-p)(1-q))`.
pub fn hellinger_affinity(p: f64, q: f64) -> Result<f64> {
    let p = check_probability("p", p)?;
    let q = check_probability("q", q)?;
    if p == q {
        return Ok(1.0);
    }
    Ok(((p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt()).min(1.0))
}

/// `1 - (√p - √q)²/2 + pq/4`, an upper bound for `ρ(p, q)`.
pub fn rho_upper_bound(p: f64, q: f64) -> Result<f64> {
    let p = check_probability("p", p)?;
    let q = check_probability("q", q)?;
    let gap = p.sqrt() - q.sqrt();
    Ok(1.0 - 0.5 * gap * gap + p * q / 4.0)
}

/// `-log ρ(p, q)`, the default `c` for the dense exact-recovery bound.
pub fn default_c(model: &EdgeModel) -> f64 {
    -hellinger_affinity(model.p(), model.q()).expect("model is valid").ln()
}

/// Largest `α` with `-log ρ ≥ α log n / n`.
pub fn uniform_alpha(model: &EdgeModel, n: usize) -> f64 {
    n as f64 * default_c(model) / (n as f64).ln()
}

/// Largest `β` with `-log ρ ≥ β / n`.
pub fn default_beta(model: &EdgeModel, n: usize) -> f64 {
    n as f64 * default_c(model)
}

/// Ball radius `k_n = ⌈α n⌉`.
pub fn ball_radius(n: usize, alpha: f64) -> usize {
    (alpha * n as f64).ceil() as usize
}

/// `E_θ √(p_η / p_θ)(X) = ρ^{|D_1| + |D_2|}`.
pub fn hellinger_transform(theta: &LabelVector, eta: &LabelVector, model: &EdgeModel) -> Result<f64> {
    same_n(theta.n(), eta.n())?;
    let (d1, d2) = discrepancy_words(theta.n(), theta.word(), eta.word());
    let rho = hellinger_affinity(model.p(), model.q())?;
    Ok(rho.powi((d1 + d2) as i32))
}

/// `B = min_{η ∈ S} k (n - k)` with `k` the Hamming distance to `θ`.
pub fn min_split_product(theta: &LabelVector, set: &[LabelVector]) -> Result<usize> {
    let n = theta.n();
    let mut best = usize::MAX;
    for eta in set {
        let k = theta.hamming(eta)?;
        best = best.min(k * (n - k));
    }
    Ok(best)
}

/// `ρ^B Σ_{η ∈ S} √(π(η) / π(θ))`, bounding `E_θ Π(S | X)`.
pub fn prop21_bound(theta: &LabelVector, set: &[LabelVector], prior: &PriorSpec, model: &EdgeModel) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidSet("set must be nonempty".into()));
    }
    if set.contains(theta) {
        return Err(Error::InvalidSet(format!("{theta} must not belong to the set")));
    }
    let b = min_split_product(theta, set)?;
    let rho = hellinger_affinity(model.p(), model.q())?;
    let log_theta = log_prior_mass(theta, prior);
    let halves: Vec<f64> = set
        .iter()
        .map(|eta| 0.5 * (log_prior_mass(eta, prior) - log_theta))
        .collect();
    Ok((b as f64 * rho.ln() + log_sum_exp(&halves)).exp())
}

/// `2 n^{1-α/2} exp(n^{1-α/2})`.
pub fn thm41_uniform_bound(n: usize, alpha: f64) -> Result<BoundReport> {
    check_n(n)?;
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must be finite",
        });
    }
    let ln_n = (n as f64).ln();
    let ln_t = (1.0 - alpha / 2.0) * ln_n;
    Ok(BoundReport::from_log(
        "thm41_uniform",
        LN_2 + ln_t + ln_t.exp(),
        &[("n", n as f64), ("alpha", alpha)],
    ))
}

/// `2√2 n exp(-(2c - g) n / 4) exp(n e^{-cn/2})`.
pub fn thm41_dense_bound(n: usize, c: f64, g: f64) -> Result<BoundReport> {
    check_n(n)?;
    let c = check_nonnegative("c", c)?;
    let g = check_nonnegative("g", g)?;
    let nf = n as f64;
    let log_value = LN_2_SQRT_2 + nf.ln() - (2.0 * c - g) * nf / 4.0 + nf * (-c * nf / 2.0).exp();
    Ok(BoundReport::from_log(
        "thm41_dense",
        log_value,
        &[("n", nf), ("c", c), ("g", g)],
    ))
}

/// `((√a - √b)² - 4 - ab log n / (2n)) log n`.
pub fn thm41_ch_sufficient(a: f64, b: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    let a = check_positive("a", a)?;
    let b = check_positive("b", b)?;
    let ln_n = (n as f64).ln();
    let gap = a.sqrt() - b.sqrt();
    Ok((gap * gap - 4.0 - a * b * ln_n / (2.0 * n as f64)) * ln_n)
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must lie in (0, 1)",
        })
    }
}

/// `2√2 exp(-α n (log α + β/2 - 1 - g/α) / 4)`, bounding the posterior
/// mass outside `B_{⌈αn⌉}`.
pub fn thm42_bound(n: usize, alpha: f64, beta: f64, g: f64) -> Result<BoundReport> {
    check_n(n)?;
    let alpha = check_alpha(alpha)?;
    let beta = check_nonnegative("beta", beta)?;
    let g = check_nonnegative("g", g)?;
    let nf = n as f64;
    let log_value = LN_2_SQRT_2 - alpha * nf * (alpha.ln() + beta / 2.0 - 1.0 - g / alpha) / 4.0;
    Ok(BoundReport::from_log(
        "thm42",
        log_value,
        &[
            ("n", nf),
            ("alpha", alpha),
            ("beta", beta),
            ("g", g),
            ("k", ball_radius(n, alpha) as f64),
        ],
    ))
}

/// Sparse variant with `p = c/n`, `q = d/n`:
/// `2√2 exp(-α n (log α + (√c - √d)²/4 - cd/(8n) - 1 - g/α) / 4)`.
pub fn thm42_ks_bound(n: usize, alpha: f64, c: f64, d: f64, g: f64) -> Result<BoundReport> {
    check_n(n)?;
    let alpha = check_alpha(alpha)?;
    let c = check_positive("c", c)?;
    let d = check_positive("d", d)?;
    let g = check_nonnegative("g", g)?;
    let nf = n as f64;
    let gap = c.sqrt() - d.sqrt();
    let inner = alpha.ln() + gap * gap / 4.0 - c * d / (8.0 * nf) - 1.0 - g / alpha;
    Ok(BoundReport::from_log(
        "thm42_ks",
        LN_2_SQRT_2 - alpha * nf * inner / 4.0,
        &[
            ("n", nf),
            ("alpha", alpha),
            ("c", c),
            ("d", d),
            ("g", g),
            ("k", ball_radius(n, alpha) as f64),
        ],
    ))
}

/// `((√c - √d)², (c - d)²/(c + d), 2(√c - √d)²)`.
pub fn ks_equivalence_sandwich(c: f64, d: f64) -> Result<(f64, f64, f64)> {
    let c = check_positive("c", c)?;
    let d = check_positive("d", d)?;
    let gap = c.sqrt() - d.sqrt();
    let lower = gap * gap;
    let mid = (c - d) * (c - d) / (c + d);
    let upper = 2.0 * lower;
    debug_assert!(lower <= mid * (1.0 + 1e-12) + 1e-300 && mid <= upper * (1.0 + 1e-12) + 1e-300);
    Ok((lower, mid, upper))
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub points: usize,
    pub violations: usize,
    /// First few violating points, for diagnostics.
    pub examples: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub grid_version: u32,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn check(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const MAX_EXAMPLES: usize = 5;
const REL_TOL: f64 = 1e-12;

fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REL_TOL * rhs.abs().max(lhs.abs()).max(1.0)
}

/// Evaluates `check` on each shard in parallel and merges in shard order.
fn run_grid<T, F>(name: &str, shards: Vec<T>, check: F) -> LemmaCheck
where
    T: Send + Sync,
    F: Fn(&T) -> (usize, Vec<String>) + Sync + Send,
{
    let results: Vec<(usize, Vec<String>)> = shards.par_iter().map(check).collect();
    let mut out = LemmaCheck {
        name: name.to_string(),
        points: 0,
        violations: 0,
        examples: Vec::new(),
    };
    for (points, bad) in results {
        out.points += points;
        out.violations += bad.len();
        for b in bad {
            if out.examples.len() < MAX_EXAMPLES {
                out.examples.push(b);
            }
        }
    }
    out
}

fn steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lo + i as f64 * step).collect()
}

/// `e^{-Cx} / (1 - e^{-x}) ≤ e^{-Cx/4}` for `C ∈ [2, 100]`, `x ∈ [√(2/C), 10]`.
pub fn check_lemma_d1() -> LemmaCheck {
    run_grid("D.1", steps(2.0, 100.0, 0.5), |&c| {
        let x0 = (2.0 / c).sqrt();
        let mut bad = Vec::new();
        let xs: Vec<f64> = std::iter::once(x0).chain(steps(0.01, 10.0, 0.01).into_iter().filter(|&x| x > x0)).collect();
        for &x in &xs {
            let lhs = -c * x - (-(-x).exp_m1()).ln();
            if !leq(lhs, -c * x / 4.0) {
                bad.push(format!("C={c}, x={x}"));
            }
        }
        (xs.len(), bad)
    })
}

/// `√(1 - x) ≤ 1 - x/2` on `[0, 1]`.
pub fn check_lemma_d2() -> LemmaCheck {
    run_grid("D.2", vec![steps(0.0, 1.0, 0.01)], |xs| {
        let bad = xs
            .iter()
            .filter(|&&x| !leq((1.0 - x).sqrt(), 1.0 - x / 2.0))
            .map(|x| format!("x={x}"))
            .collect();
        (xs.len(), bad)
    })
}

/// `(1 + x/r)^r ≤ e^x` for `r ∈ {1..50}`, `x ∈ (-r, 50]`, compared as logs.
pub fn check_lemma_d3() -> LemmaCheck {
    run_grid("D.3", (1..=50u32).collect(), |&r| {
        let rf = r as f64;
        let xs: Vec<f64> = steps(-rf, 50.0, 0.01).into_iter().filter(|&x| x > -rf).collect();
        let bad = xs
            .iter()
            .filter(|&&x| !leq(rf * (x / rf).ln_1p(), x))
            .map(|x| format!("r={r}, x={x}"))
            .collect();
        (xs.len(), bad)
    })
}

/// `Σ_{k=1}^{n-1} C(n,k) x^{k(n-k)}`.
pub fn binomial_power_sum(n: usize, x: f64) -> f64 {
    (1..n)
        .map(|k| {
            let e = (k * (n - k)) as i32;
            binomial(n as u64, k as u64) as f64 * x.powi(e)
        })
        .sum()
}

/// Both inequalities of the binomial-sum lemma for `n ∈ {2..40}`, `x ∈ [0, 1]`.
pub fn check_lemma_d4() -> LemmaCheck {
    run_grid("D.4", (2..=40usize).collect(), |&n| {
        let xs = steps(0.0, 1.0, 0.01);
        let nf = n as f64;
        let mut bad = Vec::new();
        for &x in &xs {
            let sum = binomial_power_sum(n, x);
            let h = x.powf(nf / 2.0);
            let middle = 2.0 * ((nf * h.ln_1p()).exp_m1());
            let right = 2.0 * nf * h * (nf * h).exp();
            if !leq(sum, middle) || !leq(middle, right) {
                bad.push(format!("n={n}, x={x}: {sum} / {middle} / {right}"));
            }
        }
        (xs.len(), bad)
    })
}

/// Sandwich `lower ≤ mid ≤ upper` on `c, d ∈ {0.1, 0.2, ..., 50}`.
pub fn check_ks_sandwich() -> LemmaCheck {
    let grid: Vec<f64> = (1..=500).map(|i| i as f64 / 10.0).collect();
    run_grid("ks-sandwich", grid.clone(), |&c| {
        let mut bad = Vec::new();
        for &d in &grid {
            let (lo, mid, hi) = ks_equivalence_sandwich(c, d).expect("positive grid");
            if !leq(lo, mid) || !leq(mid, hi) {
                bad.push(format!("c={c}, d={d}"));
            }
        }
        (grid.len(), bad)
    })
}

fn ln_folded_bernoulli(n: usize, m: usize, r: f64) -> f64 {
    let (lr, l1r) = (r.ln(), (-r).ln_1p());
    let (nf, mf) = (n as f64, m as f64);
    log_add_exp(mf * lr + (nf - mf) * l1r, (nf - mf) * lr + mf * l1r)
}

/// Folded Bernoulli mass ratio lies in `[R^{m2-m1}/2, 2 R^{m2-m1}]` with
/// `R = r/(1-r) ∨ (1-r)/r`, for `r ∈ {0.05, ..., 0.95}` and `n ≤ 30`.
pub fn check_lemma_d5() -> LemmaCheck {
    let rs: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    run_grid("D.5", rs, |&r| {
        let ln_big_r = (r.ln() - (-r).ln_1p()).abs();
        let mut points = 0;
        let mut bad = Vec::new();
        for n in 1..=30usize {
            for m1 in 0..=n / 2 {
                for m2 in 0..=n / 2 {
                    points += 1;
                    let ratio = ln_folded_bernoulli(n, m1, r) - ln_folded_bernoulli(n, m2, r);
                    let centre = (m2 as f64 - m1 as f64) * ln_big_r;
                    if !leq(centre - LN_2, ratio) || !leq(ratio, centre + LN_2) {
                        bad.push(format!("r={r}, n={n}, m1={m1}, m2={m2}"));
                    }
                }
            }
        }
        (points, bad)
    })
}

/// Beta-function ratio `≤ (2e)^n` for `α, β ∈ {0.5, 1, 1.5, 2, 3, 5, 10}`,
/// `n ≤ 30` with `n ≥ α + β - 2`.
pub fn check_lemma_d6() -> LemmaCheck {
    const VALUES: [f64; 7] = [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0];
    let pairs: Vec<(f64, f64)> = VALUES
        .iter()
        .flat_map(|&a| VALUES.iter().map(move |&b| (a, b)))
        .collect();
    run_grid("D.6", pairs, |&(a, b)| {
        let mut points = 0;
        let mut bad = Vec::new();
        let ln_mass = |n: usize, m: usize| {
            let (nf, mf) = (n as f64, m as f64);
            log_add_exp(ln_beta(mf + a, nf - mf + b), ln_beta(nf - mf + a, mf + b))
        };
        for n in 1..=30usize {
            if (n as f64) < a + b - 2.0 {
                continue;
            }
            let bound = n as f64 * (1.0 + LN_2);
            for m1 in 0..=n / 2 {
                for m2 in 0..=n / 2 {
                    points += 1;
                    if !leq(ln_mass(n, m1) - ln_mass(n, m2), bound) {
                        bad.push(format!("alpha={a}, beta={b}, n={n}, m1={m1}, m2={m2}"));
                    }
                }
            }
        }
        (points, bad)
    })
}

/// All auxiliary grid checks.
pub fn aux_lemma_suite() -> LemmaReport {
    LemmaReport {
        grid_version: GRID_VERSION,
        checks: vec![
            check_lemma_d1(),
            check_lemma_d2(),
            check_lemma_d3(),
            check_lemma_d4(),
            check_ks_sandwich(),
            check_lemma_d5(),
            check_lemma_d6(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;
    use crate::model::enumerate_labelings;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn affinity_examples() {
        assert_eq!(hellinger_affinity(0.5, 0.5).unwrap(), 1.0);
        assert!(close(hellinger_affinity(0.9, 0.1).unwrap(), 0.6, 1e-15));
        assert!(hellinger_affinity(0.0, 0.5).is_err());
        assert!(hellinger_affinity(0.5, 1.0).is_err());
        for i in 1..100 {
            for j in 1..100 {
                let (p, q) = (i as f64 / 100.0, j as f64 / 100.0);
                let rho = hellinger_affinity(p, q).unwrap();
                assert_eq!(rho, hellinger_affinity(q, p).unwrap());
                assert!(rho > 0.0 && rho <= 1.0);
                if i != j {
                    assert!(rho < 1.0);
                }
                assert!(rho_upper_bound(p, q).unwrap() >= rho);
            }
        }
    }

    #[test]
    fn rho_upper_example() {
        let v = rho_upper_bound(0.9, 0.1).unwrap();
        let oracle = 1.0 - 0.5 * (0.9f64.sqrt() - 0.1f64.sqrt()).powi(2) + 0.09 / 4.0;
        assert!(close(v, oracle, 1e-15));
        assert!((v - 0.8225).abs() < 1e-12);
        assert!(close(rho_upper_bound(0.3, 0.3).unwrap(), 1.0 + 0.09 / 4.0, 1e-15));
    }

    #[test]
    fn prop21_single_neighbour() {
        let model = EdgeModel::new(0.8, 0.3).unwrap();
        let theta: LabelVector = "000011".parse().unwrap();
        let eta: LabelVector = "000111".parse().unwrap();
        let v = prop21_bound(&theta, &[eta], &PriorSpec::uniform(), &model).unwrap();
        let rho = hellinger_affinity(0.8, 0.3).unwrap();
        assert!(close(v, rho.powi(5), 1e-12));
        assert!(prop21_bound(&theta, &[], &PriorSpec::uniform(), &model).is_err());
        assert!(prop21_bound(&theta, &[theta], &PriorSpec::uniform(), &model).is_err());
    }

    #[test]
    fn split_product_matches_pair_count() {
        let all: Vec<_> = enumerate_labelings(7).unwrap().collect();
        let theta = all[9];
        for eta in &all {
            if eta == &theta {
                continue;
            }
            let (d1, d2) = crate::model::discrepancy_sets(&theta, eta).unwrap();
            assert_eq!(min_split_product(&theta, &[*eta]).unwrap(), d1 + d2);
        }
    }

    #[test]
    fn thm41_examples() {
        let r = thm41_uniform_bound(10, 4.0).unwrap();
        assert!(close(r.value, 2.0 * 0.1 * 0.1f64.exp(), 1e-12));
        assert!((r.value - 0.2210).abs() < 1e-4);
        for n in [2, 10, 1000] {
            let r = thm41_uniform_bound(n, 2.0).unwrap();
            assert!(close(r.value, 2.0 * std::f64::consts::E, 1e-12));
            assert_eq!(r.value_clipped, 1.0);
        }
        let mut last = f64::INFINITY;
        for i in 1..60 {
            let v = thm41_dense_bound(20, i as f64 * 0.1, 0.0).unwrap().value;
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn ch_sufficient_examples() {
        let v = thm41_ch_sufficient(16.0, 1.0, 100).unwrap();
        let ln100 = 100f64.ln();
        assert!(close(v, (5.0 - 16.0 * ln100 / 200.0) * ln100, 1e-12));
        assert!((v - 21.3).abs() < 0.1);
        assert!(thm41_ch_sufficient(3.0, 3.0, 50).unwrap() < 0.0);
        let mut last = f64::NEG_INFINITY;
        for a in 2..40 {
            let v = thm41_ch_sufficient(a as f64, 1.0, 100).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn thm42_examples() {
        let r = thm42_bound(50, 0.5, 20.0, 0.0).unwrap();
        let exponent: f64 = -0.5 * 50.0 * (0.5f64.ln() + 10.0 - 1.0) / 4.0;
        assert!(close(r.value.ln(), 1.5 * LN_2 + exponent, 1e-12));
        assert!((exponent + 51.92).abs() < 0.01);
        assert_eq!(r.inputs["k"], 25.0);
        let mut last = f64::INFINITY;
        for b in 0..30 {
            let v = thm42_bound(40, 0.3, b as f64, 0.0).unwrap().value;
            assert!(v < last);
            last = v;
        }
        assert!(thm42_bound(10, 1.0, 1.0, 0.0).is_err());
        assert!(thm42_bound(10, 0.0, 1.0, 0.0).is_err());
        assert!(thm42_ks_bound(10, 0.3, 9.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn log_space_matches_naive() {
        for n in [2usize, 5, 10, 30] {
            let nf = n as f64;
            for alpha in [0.5, 2.0, 3.0, 6.0] {
                let naive = 2.0 * nf.powf(1.0 - alpha / 2.0) * nf.powf(1.0 - alpha / 2.0).exp();
                assert!(close(thm41_uniform_bound(n, alpha).unwrap().value, naive, 1e-9));
            }
            for (c, g) in [(0.2, 0.0), (0.5, 1.0), (2.0, 3.3)] {
                let naive = 2.0 * SQRT_2 * nf * (-(2.0 * c - g) * nf / 4.0).exp() * (nf * (-c * nf / 2.0).exp()).exp();
                assert!(close(thm41_dense_bound(n, c, g).unwrap().value, naive, 1e-9));
            }
            for (alpha, beta, g) in [(0.2, 3.0, 0.0), (0.7, 10.0, 1.0)] {
                let naive = 2.0 * SQRT_2 * (-alpha * nf * (f64::ln(alpha) + beta / 2.0 - 1.0 - g / alpha) / 4.0).exp();
                assert!(close(thm42_bound(n, alpha, beta, g).unwrap().value, naive, 1e-9));
                let (c, d) = (beta, 1.0);
                let inner = f64::ln(alpha) + (f64::sqrt(c) - 1.0).powi(2) / 4.0 - c * d / (8.0 * nf) - 1.0 - g / alpha;
                let naive = 2.0 * SQRT_2 * (-alpha * nf * inner / 4.0).exp();
                assert!(close(thm42_ks_bound(n, alpha, c, d, g).unwrap().value, naive, 1e-9));
            }
        }
    }

    #[test]
    fn sandwich_examples() {
        assert_eq!(ks_equivalence_sandwich(3.0, 3.0).unwrap(), (0.0, 0.0, 0.0));
        let (lo, mid, hi) = ks_equivalence_sandwich(4.0, 1.0).unwrap();
        assert!(close(lo, 1.0, 1e-15) && close(mid, 1.8, 1e-15) && close(hi, 2.0, 1e-15));
        assert!(ks_equivalence_sandwich(0.0, 1.0).is_err());
    }

    #[test]
    fn lemma_spot_values() {
        assert_eq!((1.0f64 - 1.0).sqrt(), 0.0);
        // four k = 1, 3 terms of 0.5^3 and six k = 2 terms of 0.5^4
        let oracle = 4.0 * 0.125 + 6.0 * 0.0625 + 4.0 * 0.125;
        assert!(close(binomial_power_sum(4, 0.5), oracle, 1e-15));
        assert!(close(2.0 * (1.25f64.powi(4) - 1.0), 2.8828125, 1e-15));
        assert!(binomial_power_sum(4, 0.5) <= 2.8828125);
    }

    #[test]
    fn small_grids_pass() {
        for check in [check_lemma_d2(), check_lemma_d4(), check_lemma_d5(), check_lemma_d6()] {
            assert_eq!(check.violations, 0, "{check:?}");
            assert!(check.points > 0);
        }
    }
}
