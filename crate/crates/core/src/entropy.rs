//! Topological entropy of the random noble means hull.
//!
//! The growth rate of exact substitution words determines the entropy, and
//! it has the closed series form
//!
//! ```text
//! H_m = (lambda_m - 1) / (1 - lambda'_m) * sum_{i >= 2} ln(m(i-1) + 1) / lambda_m^i
//! ```
//!
//! which is strictly positive for every `m >= 1` (in contrast to the
//! deterministic members, whose hulls are Sturmian and carry zero entropy).
//! All logarithms here are natural.

use crate::algebra::{lambda_conj_value, lambda_value};
use crate::words::{exact_words, word_length};
use crate::Result;

/// Entropy of the family member `m`, by series evaluation and by counting.
#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub m: u32,
    /// Value of the closed series, in nats.
    pub series_value: f64,
    /// Index at which the series was truncated.
    pub truncation_order: u32,
    /// Pairs `(k, ln |G_{m,k}| / ell_{m,k})`.
    pub empirical: Vec<(u32, f64)>,
}

/// Evaluates the entropy series, truncated once the analytic tail bound
/// drops below `tol`.
///
/// The terms are dominated by `ln(m*i) / lambda^i`, so the tail past `N` is
/// at most `(ln(m*N) + 2) / (lambda^N (1 - 1/lambda))`; truncation stops as
/// soon as the prefactor times this bound is below `tol`.
pub fn entropy_series(m: u32, tol: f64) -> f64 {
    entropy_series_with_order(m, tol).0
}

pub(crate) fn entropy_series_with_order(m: u32, tol: f64) -> (f64, u32) {
    assert!(m >= 1 && tol > 0.0);
    let lambda = lambda_value(m);
    let prefactor = (lambda - 1.0) / (1.0 - lambda_conj_value(m));
    let mut sum = 0.0;
    let mut pow = lambda * lambda;
    let mut i = 2u32;
    loop {
        sum += ((m as f64) * (i as f64 - 1.0) + 1.0).ln() / pow;
        let tail = ((m as f64 * i as f64).ln() + 2.0) / (pow * (1.0 - 1.0 / lambda));
        if prefactor * tail <= tol || i >= 100_000 {
            break;
        }
        pow *= lambda;
        i += 1;
    }
    (prefactor * sum, i)
}

/// Finite-level counting estimate `ln |G_{m,k}| / ell_{m,k}`.
pub fn entropy_empirical(m: u32, k: u32, cap: usize) -> Result<f64> {
    let count = exact_words(m, k, cap)?.len();
    Ok((count as f64).ln() / word_length(m, k) as f64)
}

/// Series value together with the counting estimates for `k = 3..=k_max`.
pub fn entropy_report(m: u32, tol: f64, k_max: u32, cap: usize) -> Result<EntropyReport> {
    let (series_value, truncation_order) = entropy_series_with_order(m, tol);
    let mut empirical = Vec::new();
    for k in 3..=k_max {
        empirical.push((k, entropy_empirical(m, k, cap)?));
    }
    Ok(EntropyReport {
        m,
        series_value,
        truncation_order,
        empirical,
    })
}
