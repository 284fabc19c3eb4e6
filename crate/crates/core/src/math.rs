//! Small log-domain helpers shared by the prior, posterior and bound code.

use statrs::function::gamma::ln_gamma;

/// `log(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Two-pass log-sum-exp: find the maximum, then sum the shifted exponentials
/// in slice order. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `log C(n, k)`, zero-safe; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Exact `C(n, k)` for the sizes used in enumeration (n well below 64).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[inline]
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `log |Θ_{n,m}|`: `C(n, m)` for `m < n/2`, half of it at the even tie.
pub fn ln_class_count(n: usize, m: usize) -> f64 {
    let base = ln_binomial(n as u64, m as u64);
    if 2 * m == n {
        base - std::f64::consts::LN_2
    } else {
        base
    }
}

/// `|Θ_{n,m}|` as an exact integer.
pub fn class_count(n: usize, m: usize) -> u128 {
    if 2 * m > n {
        return 0;
    }
    let c = binomial(n as u64, m as u64);
    if 2 * m == n {
        c / 2
    } else {
        c
    }
}
