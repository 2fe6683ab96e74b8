//! Feasibility machinery: constraint checking, an exact branch-and-bound
//! search for feasible center sets, a coverage-greedy initializer, and the
//! partition-matroid view used when groups are disjoint.
//!
//! With overlapping groups, deciding feasibility is as hard as dominating
//! set, so the exact search carries a node budget and reports "inconclusive"
//! as a first-class outcome instead of guessing.

use thiserror::Error;

use crate::instance::{Instance, Solution};
use crate::metricspace::kmedian_cost;

/// Default node budget for [`find_feasible_exact`].
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error("operation requires disjoint groups")]
    OverlappingGroups,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

/// Outcome of the budgeted exact feasibility search.
#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Feasible(Solution),
    Infeasible,
    /// The node budget ran out before the search space was exhausted.
    Inconclusive { nodes_expanded: u64 },
}

/// True iff `centers` is a set of exactly `k` distinct valid facilities
/// meeting every group lower bound.
pub fn check(inst: &Instance, centers: &[usize]) -> bool {
    let mut sorted = centers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != inst.k() || sorted.len() != centers.len() {
        return false;
    }
    if sorted.last().is_some_and(|&f| f >= inst.n_facilities()) {
        return false;
    }
    inst.group_counts(&sorted)
        .iter()
        .zip(inst.lower_bounds())
        .all(|(c, r)| c >= r)
}

/// Feasibility test for disjoint groups: group sizes cover the bounds, the
/// bounds fit in `k`, and `k` facilities exist.
pub fn disjoint_feasible(inst: &Instance) -> Result<bool, FeasibilityError> {
    if !inst.disjoint() {
        return Err(FeasibilityError::OverlappingGroups);
    }
    let sizes_ok = inst
        .groups()
        .iter()
        .zip(inst.lower_bounds())
        .all(|(g, &r)| g.len() >= r);
    let sum_r: usize = inst.lower_bounds().iter().sum();
    Ok(sizes_ok && sum_r <= inst.k() && inst.k() <= inst.n_facilities())
}

struct Search<'a> {
    inst: &'a Instance,
    counts: Vec<usize>,
    chosen: Vec<usize>,
    in_chosen: Vec<bool>,
    banned: Vec<bool>,
    nodes: u64,
    budget: u64,
}

enum Bail {
    BudgetExceeded,
}

impl Search<'_> {
    fn deficit(&self, g: usize) -> usize {
        self.inst.lower_bounds()[g].saturating_sub(self.counts[g])
    }

    fn dfs(&mut self) -> Result<Option<Vec<usize>>, Bail> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Bail::BudgetExceeded);
        }
        let t = self.inst.t();
        let max_deficit = (0..t).map(|g| self.deficit(g)).max().unwrap_or(0);
        if max_deficit == 0 {
            // Lower bounds met; fill up to k with the smallest unused ids.
            let mut filled = self.chosen.clone();
            for f in 0..self.inst.n_facilities() {
                if filled.len() == self.inst.k() {
                    break;
                }
                if !self.in_chosen[f] {
                    filled.push(f);
                }
            }
            filled.sort_unstable();
            return Ok(Some(filled));
        }
        let slots = self.inst.k() - self.chosen.len();
        let mut needed = max_deficit;
        if self.inst.disjoint() {
            needed = needed.max((0..t).map(|g| self.deficit(g)).sum());
        }
        if slots < needed {
            return Ok(None);
        }
        let branch_group = (0..t).max_by_key(|&g| self.deficit(g)).unwrap();
        let mut candidates: Vec<(usize, usize)> = self.inst.group(branch_group)
            .iter()
            .filter(|&&f| !self.in_chosen[f] && !self.banned[f])
            .map(|&f| {
                let covered = self
                    .inst
                    .groups_of(f)
                    .iter()
                    .filter(|&&g| self.deficit(g) > 0)
                    .count();
                (f, covered)
            })
            .collect();
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut newly_banned = Vec::new();
        let mut found = None;
        for (f, _) in candidates {
            self.chosen.push(f);
            self.in_chosen[f] = true;
            for &g in self.inst.groups_of(f) {
                self.counts[g] += 1;
            }
            let result = self.dfs();
            self.chosen.pop();
            self.in_chosen[f] = false;
            for &g in self.inst.groups_of(f) {
                self.counts[g] -= 1;
            }
            match result {
                Ok(Some(sol)) => {
                    found = Some(sol);
                    break;
                }
                Ok(None) => {
                    // Later branches exclude f, partitioning the space.
                    self.banned[f] = true;
                    newly_banned.push(f);
                }
                Err(bail) => {
                    for f in newly_banned {
                        self.banned[f] = false;
                    }
                    return Err(bail);
                }
            }
        }
        for f in newly_banned {
            self.banned[f] = false;
        }
        Ok(found)
    }
}

/// Exhaustive feasibility search with branch-and-bound pruning.
///
/// Branches on the group with the largest deficit, trying candidates that
/// cover many deficient groups first; prunes when the remaining slots cannot
/// cover the deficits. Stops after `node_budget` expanded nodes and reports
/// [`SearchOutcome::Inconclusive`].
pub fn find_feasible_exact(inst: &Instance, node_budget: u64) -> SearchOutcome {
    if inst.k() > inst.n_facilities() || inst.k() == 0 {
        return SearchOutcome::Infeasible;
    }
    if inst
        .groups()
        .iter()
        .zip(inst.lower_bounds())
        .any(|(g, &r)| g.len() < r)
    {
        return SearchOutcome::Infeasible;
    }
    let mut search = Search {
        inst,
        counts: vec![0; inst.t()],
        chosen: Vec::with_capacity(inst.k()),
        in_chosen: vec![false; inst.n_facilities()],
        banned: vec![false; inst.n_facilities()],
        nodes: 0,
        budget: node_budget,
    };
    match search.dfs() {
        Ok(Some(centers)) => {
            debug_assert!(check(inst, &centers));
            SearchOutcome::Feasible(
                Solution::new(inst, centers).expect("search result is a valid center set"),
            )
        }
        Ok(None) => SearchOutcome::Infeasible,
        Err(Bail::BudgetExceeded) => SearchOutcome::Inconclusive {
            nodes_expanded: search.nodes,
        },
    }
}

/// Coverage-greedy feasible start: repeatedly takes the facility covering the
/// most still-deficient groups (ties toward the lowest id), then pads with
/// the smallest unused ids. Returns a solution only if it passes [`check`];
/// overlap patterns can defeat the greedy even when a feasible set exists.
pub fn greedy_feasible(inst: &Instance) -> Option<Solution> {
    if inst.k() > inst.n_facilities() || inst.k() == 0 {
        return None;
    }
    let m = inst.n_facilities();
    let mut chosen: Vec<usize> = Vec::with_capacity(inst.k());
    let mut in_chosen = vec![false; m];
    let mut counts = vec![0usize; inst.t()];
    while chosen.len() < inst.k() {
        let deficient =
            |g: usize| -> bool { counts[g] < inst.lower_bounds()[g] };
        let any_deficient = (0..inst.t()).any(deficient);
        let pick = if any_deficient {
            (0..m)
                .filter(|&f| !in_chosen[f])
                .map(|f| {
                    let covered = inst
                        .groups_of(f)
                        .iter()
                        .filter(|&&g| deficient(g))
                        .count();
                    (f, covered)
                })
                .filter(|&(_, covered)| covered > 0)
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(f, _)| f)
        } else {
            (0..m).find(|&f| !in_chosen[f])
        };
        let f = pick?;
        chosen.push(f);
        in_chosen[f] = true;
        for &g in inst.groups_of(f) {
            counts[g] += 1;
        }
    }
    chosen.sort_unstable();
    if check(inst, &chosen) {
        Some(Solution::new(inst, chosen).expect("checked center set is valid"))
    } else {
        None
    }
}

/// Independence in the partition matroid induced by disjoint groups:
/// `|A ∩ F_i| ≤ r_i` for every group.
pub fn partition_matroid_independent(
    inst: &Instance,
    set: &[usize],
) -> Result<bool, FeasibilityError> {
    if !inst.disjoint() {
        return Err(FeasibilityError::OverlappingGroups);
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != set.len() {
        return Err(FeasibilityError::Precondition("duplicate facility id".into()));
    }
    if sorted.last().is_some_and(|&f| f >= inst.n_facilities()) {
        return Err(FeasibilityError::Precondition("facility id out of range".into()));
    }
    Ok(inst
        .group_counts(&sorted)
        .iter()
        .zip(inst.lower_bounds())
        .all(|(c, r)| c <= r))
}

/// Completes an independent partial set to a basis of the partition matroid
/// (disjoint groups, `Σ r_i = k`), greedily adding from each deficient group
/// the facility whose addition lowers the k-median cost the most (ties toward
/// the lowest id).
pub fn complete_solution(inst: &Instance, partial: &[usize]) -> Result<Solution, FeasibilityError> {
    if !inst.disjoint() {
        return Err(FeasibilityError::OverlappingGroups);
    }
    let sum_r: usize = inst.lower_bounds().iter().sum();
    if sum_r != inst.k() {
        return Err(FeasibilityError::Precondition(format!(
            "lower bounds sum to {} but k = {}",
            sum_r,
            inst.k()
        )));
    }
    if !partition_matroid_independent(inst, partial)? {
        return Err(FeasibilityError::Precondition(
            "partial set exceeds a group bound".into(),
        ));
    }
    if partial.iter().any(|&f| inst.groups_of(f).is_empty()) {
        return Err(FeasibilityError::Precondition(
            "partial set contains a facility outside every group".into(),
        ));
    }
    let mut chosen = partial.to_vec();
    let mut in_chosen = vec![false; inst.n_facilities()];
    for &f in &chosen {
        in_chosen[f] = true;
    }
    let mut counts = inst.group_counts(&chosen);
    for (g, &need) in inst.lower_bounds().iter().enumerate() {
        while counts[g] < need {
            let mut best: Option<(f64, usize)> = None;
            for &f in inst.group(g) {
                if in_chosen[f] {
                    continue;
                }
                let mut trial = chosen.clone();
                trial.push(f);
                let cost = kmedian_cost(inst, &trial).expect("trial set is non-empty");
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, f));
                }
            }
            let (_, f) = best.ok_or_else(|| {
                FeasibilityError::Infeasible(format!(
                    "group {} has too few facilities to reach its bound",
                    g
                ))
            })?;
            chosen.push(f);
            in_chosen[f] = true;
            counts[g] += 1;
        }
    }
    if chosen.len() != inst.k() {
        return Err(FeasibilityError::Precondition(format!(
            "completed set has {} centers for k = {}",
            chosen.len(),
            inst.k()
        )));
    }
    debug_assert!(check(inst, &chosen));
    Solution::new(inst, chosen)
        .map_err(|e| FeasibilityError::Precondition(e.to_string()))
}
