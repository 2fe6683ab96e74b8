//! Relaxed objectives that trade hard group bounds for penalties.
//!
//! Two penalties on the deficit vector: a hinge (`Σ max(r_i - c_i, 0)`) that
//! scores only the shortfall, and a fractional one (`Σ r_i / (c_i + 1)`) with
//! group-level diminishing returns, which rewards balanced coverage and is
//! supermodular as a set function of the centers. [`relaxed_ls`] descends on
//! the fractional objective with plain swaps and no feasibility filter.

use thiserror::Error;

use crate::instance::Instance;
use crate::localsearch::{
    descend, frac_penalty, random_subset, EngineSpec, LsConfig, SolveError, SolveReport,
};
use crate::metricspace::kmedian_cost;

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("usage: {0}")]
    Usage(String),
}

/// Default penalty-weight sweep for benchmarks: 2^1 .. 2^7.
pub fn lambda_grid() -> Vec<f64> {
    (1..=7).map(|e| f64::from(1u32 << e)).collect()
}

/// k-median cost plus `lambda * Σ max(r_i - |S ∩ F_i|, 0)`.
pub fn cost_hinge(inst: &Instance, centers: &[usize], lambda: f64) -> f64 {
    let counts = inst.group_counts(centers);
    let hinge: usize = counts
        .iter()
        .zip(inst.lower_bounds())
        .map(|(&c, &r)| r.saturating_sub(c))
        .sum();
    kmedian_cost(inst, centers).expect("hinge objective needs a valid center set")
        + lambda * hinge as f64
}

/// `Σ r_i / (|S ∩ F_i| + 1)`. Defined for any center set, the empty one
/// included.
pub fn penalty_frac(inst: &Instance, centers: &[usize]) -> f64 {
    frac_penalty(&inst.group_counts(centers), inst.lower_bounds())
}

/// [`penalty_frac`] as an exact rational `(numerator, denominator)`, for
/// comparisons that must not depend on float rounding.
pub fn penalty_frac_exact(inst: &Instance, centers: &[usize]) -> (i128, i128) {
    let counts = inst.group_counts(centers);
    let mut num: i128 = 0;
    let mut den: i128 = 1;
    for (&c, &r) in counts.iter().zip(inst.lower_bounds()) {
        let d = c as i128 + 1;
        num = num * d + r as i128 * den;
        den *= d;
    }
    (num, den)
}

/// k-median cost plus `lambda * penalty_frac`.
pub fn cost_frac(inst: &Instance, centers: &[usize], lambda: f64) -> f64 {
    kmedian_cost(inst, centers).expect("fractional objective needs a valid center set")
        + lambda * penalty_frac(inst, centers)
}

/// Single-swap best-improvement descent on [`cost_frac`] from uniform random
/// starts. No feasibility filter: constraint pressure comes only from the
/// penalty weight. The report's `violation_fraction` scores the result.
pub fn relaxed_ls(inst: &Instance, lambda: f64, cfg: &LsConfig) -> Result<SolveReport, SolveError> {
    relaxed_ls_from(inst, lambda, cfg, None)
}

/// [`relaxed_ls`] with an explicit start; runs a single descent.
pub fn relaxed_ls_from(
    inst: &Instance,
    lambda: f64,
    cfg: &LsConfig,
    init: Option<&[usize]>,
) -> Result<SolveReport, SolveError> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(SolveError::Precondition(format!(
            "penalty weight must be finite and non-negative, got {}",
            lambda
        )));
    }
    crate::localsearch::check_k(inst, inst.k())?;
    let start = std::time::Instant::now();
    let spec = EngineSpec {
        inst,
        k: inst.k(),
        lambda,
        maintain_feasible: false,
    };
    let run = match init {
        Some(centers) => {
            let mut s = centers.to_vec();
            s.sort_unstable();
            s.dedup();
            if s.len() != inst.k() || s.iter().any(|&f| f >= inst.n_facilities()) {
                return Err(SolveError::Precondition(
                    "start must be k distinct facilities".into(),
                ));
            }
            descend(&spec, cfg, s)?
        }
        None => crate::localsearch::best_of_restarts(&spec, cfg, |rng, _| {
            Ok(random_subset(rng, inst.n_facilities(), inst.k()))
        })?,
    };
    Ok(SolveReport::assemble(
        inst,
        run,
        cfg.seed,
        start.elapsed().as_secs_f64(),
    ))
}

fn set_of(xs: &[usize]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.contains(x)).collect()
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    set_of(&[a, b].concat())
}

/// Checks `f(A∩B) + f(A∪B) ≥ f(A) + f(B)` for the one-group penalty
/// `f(X) = r / (|X| + 1)` with `A, B ⊆ F_i`, by exact integer
/// cross-multiplication. Always true; exposed as a test surface.
pub fn check_supermodular_triple(
    group: &[usize],
    r: usize,
    a: &[usize],
    b: &[usize],
) -> Result<bool, RelaxError> {
    let group = set_of(group);
    let a = set_of(a);
    let b = set_of(b);
    for (name, s) in [("A", &a), ("B", &b)] {
        if s.iter().any(|x| group.binary_search(x).is_err()) {
            return Err(RelaxError::Usage(format!("{} is not a subset of the group", name)));
        }
    }
    if r == 0 {
        return Ok(true);
    }
    let i = intersect(&a, &b).len() as i128 + 1;
    let u = union(&a, &b).len() as i128 + 1;
    let ca = a.len() as i128 + 1;
    let cb = b.len() as i128 + 1;
    // r/i + r/u ≥ r/ca + r/cb, cleared of denominators (all positive).
    Ok((u + i) * ca * cb >= (cb + ca) * i * u)
}

/// Evaluates `|A∩B| · |A∪B| ≤ |A| · |B|`, the counting step behind the
/// supermodularity proof. Always true; exposed as a test surface.
pub fn check_cardinality_inequality(a: &[usize], b: &[usize]) -> bool {
    let a = set_of(a);
    let b = set_of(b);
    let i = intersect(&a, &b).len();
    let u = union(&a, &b).len();
    i * u <= a.len() * b.len()
}
