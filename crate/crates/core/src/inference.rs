//! Credible sets, their enlargements, confidence statements and
//! posterior-odds tests.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::bounds::{default_c, thm41_dense_bound};
use crate::error::{Error, Result};
use crate::model::{enumerate_labelings, EdgeModel, Graph, LabelVector};
use crate::posterior::{exact_posterior, LabelSet, PosteriorTable};
use crate::priors::{g_constant, PriorSpec};

fn check_open_unit(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in (0, 1)",
        })
    }
}

/// Highest-posterior-density set `D_n(X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CredibleSet {
    pub n: usize,
    /// Members in the order they were added (decreasing mass).
    pub order: Vec<LabelVector>,
    pub members: BTreeSet<LabelVector>,
    pub gamma: f64,
    pub achieved_mass: f64,
}

impl CredibleSet {
    pub fn contains(&self, theta: &LabelVector) -> bool {
        self.members.contains(theta)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Adds labelings in decreasing posterior mass (ties lexicographic) until
/// the cumulative mass reaches `1 - γ`.
pub fn hpd_credible_set(table: &PosteriorTable, gamma: f64) -> Result<CredibleSet> {
    let gamma = check_open_unit("gamma", gamma)?;
    let target = 1.0 - gamma;
    let mut order = Vec::new();
    let mut mass = 0.0;
    for i in table.order_by_mass() {
        order.push(table.labels()[i]);
        mass += table.probabilities()[i];
        if mass >= target {
            break;
        }
    }
    // rounding can leave the full sum a hair below 1
    if order.len() == table.len() {
        mass = mass.max(target).min(1.0);
    }
    Ok(CredibleSet {
        n: table.n(),
        members: order.iter().copied().collect(),
        order,
        gamma,
        achieved_mass: mass.min(1.0),
    })
}

/// `C_n(X)`: the base set together with every labeling at symmetric
/// distance below `radius` from one of its members.
#[derive(Clone, Debug, PartialEq)]
pub struct EnlargedSet {
    pub base: CredibleSet,
    pub radius: usize,
    pub members: BTreeSet<LabelVector>,
}

impl EnlargedSet {
    pub fn contains(&self, theta: &LabelVector) -> bool {
        self.members.contains(theta)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn enlarge(set: &CredibleSet, radius: usize) -> Result<EnlargedSet> {
    let mut members = set.members.clone();
    if radius > 0 {
        for eta in enumerate_labelings(set.n)? {
            if members.contains(&eta) {
                continue;
            }
            let near = set
                .members
                .iter()
                .any(|b| b.sym_distance(&eta).map(|d| d < radius).unwrap_or(false));
            if near {
                members.insert(eta);
            }
        }
    }
    Ok(EnlargedSet {
        base: set.clone(),
        radius,
        members,
    })
}

/// `1 - x / (1 - γ)`; may be negative.
pub fn confidence_lower_bound(x: f64, gamma: f64) -> f64 {
    1.0 - x / (1.0 - gamma)
}

pub fn confidence_lower_bound_clipped(x: f64, gamma: f64) -> f64 {
    confidence_lower_bound(x, gamma).clamp(0.0, 1.0)
}

/// `log Π(B | X) - log Π(A | X)`.
pub fn posterior_odds(table: &PosteriorTable, a: &LabelSet, b: &LabelSet) -> Result<f64> {
    if let Some(t) = table.labels().iter().find(|t| a.contains(t) && b.contains(t)) {
        return Err(Error::InvalidSet(format!("sets overlap at {t}")));
    }
    let log_a = table.log_mass(a);
    if log_a == f64::NEG_INFINITY {
        return Err(Error::InvalidSet("null set has zero posterior mass".into()));
    }
    Ok(table.log_mass(b) - log_a)
}

/// `(2a(1 + 1/t), 2a + 2b/t)`, the second only when `b` is given.
pub fn odds_error_bounds(a: f64, t: f64, b: Option<f64>) -> Result<(f64, Option<f64>)> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "threshold",
            value: t,
            reason: "must be positive",
        });
    }
    let a = check_open_unit("a_n", a)?;
    let b = b.map(|b| check_open_unit("b_n", b)).transpose()?;
    Ok((2.0 * a * (1.0 + 1.0 / t), b.map(|b| 2.0 * a + 2.0 * b / t)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OddsTestResult {
    pub log_f: f64,
    pub threshold: f64,
    pub reject_null: bool,
    pub a_n: f64,
    pub b_n: Option<f64>,
    /// `None` when `a_n` falls outside `(0, 1)`.
    pub error_bound_one_sided: Option<f64>,
    pub error_bound_two_term: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alternative {
    ClassSize(usize),
    /// `Θ_n ∖ Θ_{n,m0}`.
    Complement,
}

/// Overrides for the constants entering the error bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OddsBoundInputs {
    pub a_n: Option<f64>,
    pub b_n: Option<f64>,
}

/// Default `a_n`: the dense exact-recovery bound at `c = -log ρ` and the
/// prior's `g`.
pub fn default_a_n(n: usize, prior: &PriorSpec, model: &EdgeModel) -> Result<f64> {
    Ok(thm41_dense_bound(n, default_c(model), g_constant(prior).value())?.value)
}

/// Tests `H0: θ ∈ Θ_{n,m0}` against the given alternative by posterior odds,
/// rejecting when `F_n > t`.
pub fn class_size_test(
    x: &Graph,
    prior: &PriorSpec,
    model: &EdgeModel,
    m0: usize,
    alternative: Alternative,
    threshold: f64,
    inputs: OddsBoundInputs,
) -> Result<OddsTestResult> {
    let table = exact_posterior(x, prior, model)?;
    class_size_test_on(&table, prior, model, m0, alternative, threshold, inputs)
}

pub fn class_size_test_on(
    table: &PosteriorTable,
    prior: &PriorSpec,
    model: &EdgeModel,
    m0: usize,
    alternative: Alternative,
    threshold: f64,
    inputs: OddsBoundInputs,
) -> Result<OddsTestResult> {
    let n = table.n();
    let half = n / 2;
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "threshold",
            value: threshold,
            reason: "must be positive and finite",
        });
    }
    if m0 > half {
        return Err(Error::InvalidParameter {
            name: "m0",
            value: m0 as f64,
            reason: "must be at most floor(n/2)",
        });
    }
    let null = LabelSet::ClassSize(m0);
    let alt = match alternative {
        Alternative::ClassSize(m1) if m1 == m0 => {
            return Err(Error::InvalidConfig("m0 and m1 must differ".into()))
        }
        Alternative::ClassSize(m1) if m1 > half => {
            return Err(Error::InvalidParameter {
                name: "m1",
                value: m1 as f64,
                reason: "must be at most floor(n/2)",
            })
        }
        Alternative::ClassSize(m1) => LabelSet::ClassSize(m1),
        Alternative::Complement => null.clone().complement(),
    };
    let log_f = posterior_odds(table, &null, &alt)?;
    let a_n = match inputs.a_n {
        Some(a) => a,
        None => default_a_n(n.max(2), prior, model)?,
    };
    let (one, two) = match odds_error_bounds(a_n, threshold, inputs.b_n) {
        Ok((one, two)) => (Some(one), two),
        Err(_) if inputs.a_n.is_none() => (None, None),
        Err(e) => return Err(e),
    };
    Ok(OddsTestResult {
        log_f,
        threshold,
        reject_null: log_f > threshold.ln(),
        a_n,
        b_n: inputs.b_n,
        error_bound_one_sided: one,
        error_bound_two_term: two,
    })
}
