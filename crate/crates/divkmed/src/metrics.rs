//! Quality and fairness metrics for comparing solver outputs.
//!
//! All three are pure functions, assembled by the bench command: price of
//! diversity (relative cost increase over the unconstrained baseline), L1
//! representation distance between group-count vectors, and the fraction of
//! bound violations a center set leaves unmet.

use thiserror::Error;

use crate::instance::Instance;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    /// Denominator is zero; report the metric as "n/a".
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("usage: {0}")]
    Usage(String),
}

/// Price of diversity: `(cost_alg - cost_base) / cost_base`.
pub fn pod(cost_alg: f64, cost_base: f64) -> Result<f64, MetricsError> {
    if cost_base <= 0.0 {
        return Err(MetricsError::Undefined(
            "baseline cost must be positive".into(),
        ));
    }
    Ok((cost_alg - cost_base) / cost_base)
}

/// L1 distance between two group-count vectors, normalized by `k * t`.
pub fn l1_representation(
    counts_alg: &[usize],
    counts_base: &[usize],
    k: usize,
    t: usize,
) -> Result<f64, MetricsError> {
    if counts_alg.len() != t || counts_base.len() != t {
        return Err(MetricsError::Usage(format!(
            "expected two count vectors of length {}, got {} and {}",
            t,
            counts_alg.len(),
            counts_base.len()
        )));
    }
    if k == 0 || t == 0 {
        return Err(MetricsError::Undefined("k and t must be positive".into()));
    }
    let diff: usize = counts_alg
        .iter()
        .zip(counts_base)
        .map(|(&a, &b)| a.abs_diff(b))
        .sum();
    Ok(diff as f64 / (k * t) as f64)
}

/// Fraction of the total bound mass a center set leaves unmet:
/// `Σ max(r_i - |S ∩ F_i|, 0) / Σ r_i`. Zero exactly when every bound holds.
pub fn violation_fraction(inst: &Instance, centers: &[usize]) -> Result<f64, MetricsError> {
    let total: usize = inst.lower_bounds().iter().sum();
    if total == 0 {
        return Err(MetricsError::Undefined(
            "no positive bounds to violate".into(),
        ));
    }
    let counts = inst.group_counts(centers);
    let unmet: usize = counts
        .iter()
        .zip(inst.lower_bounds())
        .map(|(&c, &r)| r.saturating_sub(c))
        .sum();
    Ok(unmet as f64 / total as f64)
}
