//! Constraint completion for disjoint groups when the bounds leave slack
//! (`Σ r_i < k`).
//!
//! Equality-constrained solvers need the bounds to use the whole budget, so
//! the slack is distributed exhaustively: enumerate every augmented profile
//! `r′ ≥ r` with `Σ r′_i = k` and `r′_i ≤ |F_i|`, solve each, and keep the
//! cheapest result. With ample group sizes there are
//! `C(k - Σr + t - 1, t - 1)` profiles; for two groups the count is linear
//! in `k`.

use crate::instance::Instance;
use crate::localsearch::{SolveError, SolveReport};

/// An augmented bound vector: componentwise at least the instance bounds,
/// summing to exactly `k`, and capped by the group sizes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConstraintProfile {
    pub bounds: Vec<usize>,
}

/// Stars-and-bars count of profiles with `extra` slack over `t` groups,
/// before any group-size cap: `C(extra + t - 1, t - 1)`.
pub fn profile_count_unbounded(extra: usize, t: usize) -> u128 {
    debug_assert!(t >= 1);
    let n = (extra + t - 1) as u128;
    let r = (t - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All profiles `r′` with `r′ ≥ lower`, `Σ r′ = k`, `r′_i ≤ sizes[i]`, in
/// lexicographic order. May be empty when the caps bite everywhere.
pub fn enumerate_profiles(
    lower: &[usize],
    sizes: &[usize],
    k: usize,
) -> Result<Vec<ConstraintProfile>, SolveError> {
    if lower.len() != sizes.len() || lower.is_empty() {
        return Err(SolveError::Precondition(
            "bounds and group sizes must align and be non-empty".into(),
        ));
    }
    let total: usize = lower.iter().sum();
    if total > k {
        return Err(SolveError::Infeasible(format!(
            "bounds sum to {} > k = {}",
            total, k
        )));
    }
    // Suffix sums of the lower bounds let each prefix know how much budget
    // the remaining groups will claim at minimum.
    let t = lower.len();
    let mut suffix_min = vec![0usize; t + 1];
    for i in (0..t).rev() {
        suffix_min[i] = suffix_min[i + 1] + lower[i];
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; t];
    fn rec(
        lower: &[usize],
        sizes: &[usize],
        suffix_min: &[usize],
        remaining: usize,
        i: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<ConstraintProfile>,
    ) {
        if i == lower.len() {
            if remaining == 0 {
                out.push(ConstraintProfile {
                    bounds: current.clone(),
                });
            }
            return;
        }
        let tail = suffix_min[i + 1];
        if remaining < lower[i] + tail {
            return;
        }
        let hi = sizes[i].min(remaining - tail);
        for v in lower[i]..=hi {
            current[i] = v;
            rec(lower, sizes, suffix_min, remaining - v, i + 1, current, out);
        }
        current[i] = 0;
    }
    rec(lower, sizes, &suffix_min, k, 0, &mut current, &mut out);
    Ok(out)
}

/// Solves one instance per augmented profile and returns the cheapest
/// report, annotated with the winning profile. Cost ties break toward the
/// lexicographically smallest profile; profiles whose solve comes back
/// infeasible or inconclusive are skipped, and if none survives the
/// strongest skip reason is returned.
///
/// The solver sees the instance with its bounds replaced by the profile
/// (`Σ bounds = k`), so equality-style solvers apply. Facilities outside
/// every group are never selected this way.
pub fn solve_with_completion<F>(
    inst: &Instance,
    parallel: bool,
    solver: F,
) -> Result<SolveReport, SolveError>
where
    F: Fn(&Instance) -> Result<SolveReport, SolveError> + Sync,
{
    if !inst.disjoint() {
        return Err(SolveError::Precondition(
            "constraint completion needs disjoint groups".into(),
        ));
    }
    let sizes: Vec<usize> = inst.groups().iter().map(|g| g.len()).collect();
    let profiles = enumerate_profiles(inst.lower_bounds(), &sizes, inst.k())?;
    if profiles.is_empty() {
        return Err(SolveError::Infeasible(
            "no bound augmentation fits the group sizes".into(),
        ));
    }

    let solve_one = |profile: &ConstraintProfile| -> Result<SolveReport, SolveError> {
        let sub = inst
            .with_lower_bounds(profile.bounds.clone())
            .map_err(|e| SolveError::Precondition(e.to_string()))?;
        let mut report = solver(&sub)?;
        report.profile = Some(profile.bounds.clone());
        Ok(report)
    };

    let results: Vec<(usize, Result<SolveReport, SolveError>)> = if parallel {
        use rayon::prelude::*;
        profiles
            .par_iter()
            .enumerate()
            .map(|(i, p)| (i, solve_one(p)))
            .collect()
    } else {
        profiles
            .iter()
            .enumerate()
            .map(|(i, p)| (i, solve_one(p)))
            .collect()
    };

    let mut best: Option<(f64, usize, SolveReport)> = None;
    let mut any_inconclusive = false;
    for (i, res) in results {
        match res {
            Ok(report) => {
                let cost = report.solution.cost;
                // Profiles are enumerated in lexicographic order, so strict
                // < keeps the lexicographically smallest tied profile.
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, i, report));
                }
            }
            Err(SolveError::Infeasible(_)) => {}
            Err(SolveError::Inconclusive(_)) => any_inconclusive = true,
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((_, _, report)) => Ok(report),
        None if any_inconclusive => Err(SolveError::Inconclusive(
            "every profile solve exhausted its search budget".into(),
        )),
        None => Err(SolveError::Infeasible(
            "no augmented profile admits a solution".into(),
        )),
    }
}
