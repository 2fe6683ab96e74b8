//! Swap-based local-search solvers.
//!
//! All solvers share the same skeleton: seeded restarts, best-improvement
//! scans with a relative improvement threshold `delta`, deterministic
//! lexicographic tie-breaking, and an iteration cap. They differ in the
//! neighborhood:
//!
//! * [`ls0`]: single swaps, group constraints ignored (the unconstrained
//!   baseline),
//! * [`ls1`]: single swaps filtered to preserve feasibility,
//! * [`ls2`]: per-group tuple swaps that move one facility inside each group
//!   slot plus the free pool (disjoint groups),
//! * [`rb_swap`]: the two-group pair-swap neighborhood, including its
//!   degenerate single-color swaps (disjoint, `r_1 + r_2 = k`).

mod multiswap;

pub use multiswap::{ls2, rb_swap};


use rand::seq::index::sample as index_sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::{
    check, find_feasible_exact, greedy_feasible, SearchOutcome, DEFAULT_NODE_BUDGET,
};
use crate::instance::{Instance, Solution};
use crate::metricspace::{CostCache, MetricError};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Shared local-search configuration.
#[derive(Debug, Clone)]
pub struct LsConfig {
    /// Relative improvement threshold: a swap is accepted only if it improves
    /// the objective by more than `delta` times the current objective.
    pub delta: f64,
    /// Scan-round cap; `None` derives `10 * m * k` from the instance.
    pub max_iters: Option<usize>,
    /// Independent seeded restarts; the best final objective wins.
    pub restarts: usize,
    pub seed: u64,
    /// Exact tuple-scan limit for [`ls2`]/[`rb_swap`]; larger neighborhoods
    /// fall back to sampling.
    pub tuple_scan_budget: usize,
    /// Tuples drawn per scan in sampling mode.
    pub tuple_samples: usize,
    /// Record every accepted center set in the report.
    pub trace_states: bool,
}

impl Default for LsConfig {
    fn default() -> Self {
        LsConfig {
            delta: 1e-9,
            max_iters: None,
            restarts: 10,
            seed: 0,
            tuple_scan_budget: 200_000,
            tuple_samples: 20_000,
            trace_states: false,
        }
    }
}

impl LsConfig {
    pub(crate) fn iter_cap(&self, inst: &Instance, k: usize) -> usize {
        self.max_iters
            .unwrap_or_else(|| 10usize.saturating_mul(inst.n_facilities()).saturating_mul(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No neighbor improved on the objective by more than the margin.
    LocalOptimum,
    IterationCap,
    /// Constraints were met (distance-shrinking rounds).
    Converged,
}

/// Solver output: the solution plus descent diagnostics.
///
/// For swap solvers `initial_cost`, `final_cost`, and `cost_trace` track the
/// descent objective of the winning restart (the k-median cost, plus the
/// penalty term for relaxed runs); `solution.cost` is always the plain
/// k-median cost. Distance-shrinking reports instead trace per-round costs
/// on the original distances, which need not decrease.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Solution,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub cost_trace: Vec<f64>,
    /// Scan rounds executed, including the final unproductive one.
    pub iterations: usize,
    pub swaps_accepted: usize,
    pub seed: u64,
    pub seconds: f64,
    pub termination: Termination,
    pub feasible: bool,
    /// `Σ max(r_i - |S ∩ F_i|, 0) / Σ r_i`, when `Σ r_i > 0`.
    pub violation_fraction: Option<f64>,
    /// Constraint profile the solution was solved under, when profile
    /// enumeration was involved.
    pub profile: Option<Vec<usize>>,
    /// Accepted center sets of the winning restart, when tracing was on.
    pub states: Option<Vec<Vec<usize>>>,
}

impl SolveReport {
    pub(crate) fn assemble(
        inst: &Instance,
        run: RunResult,
        seed: u64,
        seconds: f64,
    ) -> Self {
        let solution =
            Solution::new(inst, run.centers).expect("solver produced a valid center set");
        let feasible = check(inst, &solution.centers);
        let violation_fraction =
            crate::metrics::violation_fraction(inst, &solution.centers).ok();
        SolveReport {
            solution,
            initial_cost: run.initial_objective,
            final_cost: run.objective,
            cost_trace: run.trace,
            iterations: run.iterations,
            swaps_accepted: run.swaps,
            seed,
            seconds,
            termination: run.termination,
            feasible,
            violation_fraction,
            profile: None,
            states: run.states,
        }
    }
}

/// One descent run, before report assembly.
pub(crate) struct RunResult {
    pub centers: Vec<usize>,
    pub objective: f64,
    pub initial_objective: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub swaps: usize,
    pub termination: Termination,
    pub states: Option<Vec<Vec<usize>>>,
}

pub(crate) struct EngineSpec<'a> {
    pub inst: &'a Instance,
    pub k: usize,
    /// Penalty weight on `Σ r_i / (|S ∩ F_i| + 1)`; 0 is the plain k-median
    /// objective.
    pub lambda: f64,
    /// Restrict scans to swaps that keep every group bound satisfied.
    pub maintain_feasible: bool,
}

pub(crate) fn frac_penalty(counts: &[usize], bounds: &[usize]) -> f64 {
    counts
        .iter()
        .zip(bounds)
        .map(|(&c, &r)| r as f64 / (c as f64 + 1.0))
        .sum()
}

/// Best-improvement single-swap descent from `init`.
///
/// Scans every (out, in) pair, keeps the best objective delta with ties
/// broken toward the lexicographically smallest pair, and accepts it only if
/// it beats the relative margin. Runs until a local optimum or the scan cap.
pub(crate) fn descend(
    spec: &EngineSpec,
    cfg: &LsConfig,
    init: Vec<usize>,
) -> Result<RunResult, SolveError> {
    let inst = spec.inst;
    let m = inst.n_facilities();
    let k = spec.k;
    debug_assert_eq!(init.len(), k);
    let mut centers = init;
    centers.sort_unstable();

    let member: Vec<Vec<bool>> = if spec.maintain_feasible || spec.lambda > 0.0 {
        inst.groups()
            .iter()
            .map(|g| {
                let mut row = vec![false; m];
                for &f in g {
                    row[f] = true;
                }
                row
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut counts = inst.group_counts(&centers);
    let mut in_set = vec![false; m];
    for &f in &centers {
        in_set[f] = true;
    }
    let mut cache = if k >= 2 {
        Some(CostCache::build(inst, &centers)?)
    } else {
        None
    };
    let single_cost = |f: usize| -> f64 { (0..inst.n_clients()).map(|c| inst.distance(c, f)).sum() };
    let kmedian = |cache: &Option<CostCache>, centers: &[usize]| -> f64 {
        match cache {
            Some(c) => c.total(),
            None => single_cost(centers[0]),
        }
    };

    let mut objective = kmedian(&cache, &centers)
        + spec.lambda * frac_penalty(&counts, inst.lower_bounds());
    let initial_objective = objective;
    let mut trace = vec![objective];
    let mut states = cfg
        .trace_states
        .then(|| vec![centers.clone()]);

    let cap = cfg.iter_cap(inst, k);
    let mut iterations = 0usize;
    let mut swaps = 0usize;
    let termination;
    loop {
        if iterations == cap {
            termination = Termination::IterationCap;
            break;
        }
        iterations += 1;

        let mut best: Option<(f64, usize, usize)> = None;
        for &out in &centers {
            for inc in 0..m {
                if in_set[inc] {
                    continue;
                }
                if spec.maintain_feasible {
                    let breaks_a_bound = inst.groups_of(out).iter().any(|&g| {
                        counts[g] == inst.lower_bounds()[g] && !member[g][inc]
                    });
                    if breaks_a_bound {
                        continue;
                    }
                }
                let delta_kmed = match &cache {
                    Some(c) => c.swap_delta(inst, out, inc)?,
                    None => single_cost(inc) - objective + spec.lambda * frac_penalty(&counts, inst.lower_bounds()),
                };
                let mut delta = delta_kmed;
                if spec.lambda > 0.0 {
                    let bounds = inst.lower_bounds();
                    let pen = |g: usize, c: f64| bounds[g] as f64 / (c + 1.0);
                    for &g in inst.groups_of(out) {
                        if !member[g][inc] {
                            let c = counts[g] as f64;
                            delta += spec.lambda * (pen(g, c - 1.0) - pen(g, c));
                        }
                    }
                    for &g in inst.groups_of(inc) {
                        if !member[g][out] {
                            let c = counts[g] as f64;
                            delta += spec.lambda * (pen(g, c + 1.0) - pen(g, c));
                        }
                    }
                }
                // Scan order is (out asc, in asc); strict < keeps the
                // lexicographically smallest best pair.
                if best.is_none_or(|b| delta < b.0) {
                    best = Some((delta, out, inc));
                }
            }
        }

        match best {
            Some((delta, out, inc)) if delta < -cfg.delta * objective => {
                if let Some(c) = &mut cache {
                    c.apply_swap(inst, out, inc)?;
                }
                let pos = centers.binary_search(&out).unwrap();
                centers.remove(pos);
                let ins = centers.binary_search(&inc).unwrap_err();
                centers.insert(ins, inc);
                in_set[out] = false;
                in_set[inc] = true;
                for &g in inst.groups_of(out) {
                    counts[g] -= 1;
                }
                for &g in inst.groups_of(inc) {
                    counts[g] += 1;
                }
                objective = kmedian(&cache, &centers)
                    + spec.lambda * frac_penalty(&counts, inst.lower_bounds());
                swaps += 1;
                trace.push(objective);
                if let Some(s) = &mut states {
                    s.push(centers.clone());
                }
                if spec.maintain_feasible {
                    debug_assert!(check(inst, &centers));
                }
            }
            _ => {
                termination = Termination::LocalOptimum;
                break;
            }
        }
    }

    Ok(RunResult {
        centers,
        objective,
        initial_objective,
        trace,
        iterations,
        swaps,
        termination,
        states,
    })
}

/// Runs `cfg.restarts` descents with per-restart seeds and keeps the best
/// final objective (ties toward the earliest restart).
pub(crate) fn best_of_restarts(
    spec: &EngineSpec,
    cfg: &LsConfig,
    mut init_for: impl FnMut(&mut ChaCha8Rng, usize) -> Result<Vec<usize>, SolveError>,
) -> Result<RunResult, SolveError> {
    let restarts = cfg.restarts.max(1);
    let mut best: Option<RunResult> = None;
    for r in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, r as u64));
        let init = init_for(&mut rng, r)?;
        let run = descend(spec, cfg, init)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart runs"))
}

pub(crate) fn check_k(inst: &Instance, k: usize) -> Result<(), SolveError> {
    if k == 0 || k > inst.n_facilities() {
        return Err(SolveError::Precondition(format!(
            "k = {} out of range 1..={}",
            k,
            inst.n_facilities()
        )));
    }
    Ok(())
}

/// Draws a uniform k-subset of the facilities.
pub(crate) fn random_subset(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<usize> {
    let mut s = index_sample(rng, m, k).into_vec();
    s.sort_unstable();
    s
}

/// Unconstrained k-median local search: uniform random starts, single swaps,
/// group bounds ignored. The baseline all other solvers are measured against.
pub fn ls0(inst: &Instance, k: usize, cfg: &LsConfig) -> Result<SolveReport, SolveError> {
    check_k(inst, k)?;
    let start = std::time::Instant::now();
    let spec = EngineSpec {
        inst,
        k,
        lambda: 0.0,
        maintain_feasible: false,
    };
    let run = best_of_restarts(&spec, cfg, |rng, _| {
        Ok(random_subset(rng, inst.n_facilities(), k))
    })?;
    Ok(SolveReport::assemble(
        inst,
        run,
        cfg.seed,
        start.elapsed().as_secs_f64(),
    ))
}

/// Draws a random feasible start for a disjoint instance: `r_i` members per
/// group, padded with uniform leftovers.
fn random_disjoint_feasible(inst: &Instance, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(inst.k());
    for (g, &r) in inst.groups().iter().zip(inst.lower_bounds()) {
        for idx in index_sample(rng, g.len(), r) {
            chosen.push(g[idx]);
        }
    }
    let mut in_set = vec![false; inst.n_facilities()];
    for &f in &chosen {
        in_set[f] = true;
    }
    let rest: Vec<usize> = (0..inst.n_facilities()).filter(|&f| !in_set[f]).collect();
    for idx in index_sample(rng, rest.len(), inst.k() - chosen.len()) {
        chosen.push(rest[idx]);
    }
    chosen.sort_unstable();
    chosen
}

const REJECTION_TRIES: usize = 50;

/// Feasibility-preserving single-swap local search.
///
/// Start resolution: a caller-provided start (must pass [`check`]; runs a
/// single descent) or, per restart, a random feasible start. Disjoint
/// instances sample one directly; overlapping instances try rejection
/// sampling, then the coverage greedy, then the exact search. Every accepted
/// state satisfies all group bounds.
pub fn ls1(
    inst: &Instance,
    cfg: &LsConfig,
    init: Option<&[usize]>,
) -> Result<SolveReport, SolveError> {
    check_k(inst, inst.k())?;
    let start = std::time::Instant::now();
    let spec = EngineSpec {
        inst,
        k: inst.k(),
        lambda: 0.0,
        maintain_feasible: true,
    };

    if let Some(centers) = init {
        if !check(inst, centers) {
            return Err(SolveError::Precondition(
                "provided start violates the constraints".into(),
            ));
        }
        let run = descend(&spec, cfg, centers.to_vec())?;
        let mut report =
            SolveReport::assemble(inst, run, cfg.seed, start.elapsed().as_secs_f64());
        debug_assert!(report.feasible);
        report.feasible = true;
        return Ok(report);
    }

    let disjoint_ok = inst.disjoint()
        && crate::feasibility::disjoint_feasible(inst).unwrap_or(false);
    if inst.disjoint() && !disjoint_ok {
        return Err(SolveError::Infeasible(
            "group sizes cannot cover the lower bounds".into(),
        ));
    }

    // Fallback start for overlapping instances, computed at most once.
    let mut fallback: Option<Vec<usize>> = None;
    let mut fallback_for = |inst: &Instance| -> Result<Vec<usize>, SolveError> {
        if let Some(s) = &fallback {
            return Ok(s.clone());
        }
        let found = match greedy_feasible(inst) {
            Some(sol) => sol.centers,
            None => match find_feasible_exact(inst, DEFAULT_NODE_BUDGET) {
                SearchOutcome::Feasible(sol) => sol.centers,
                SearchOutcome::Infeasible => {
                    return Err(SolveError::Infeasible(
                        "no center set satisfies the constraints".into(),
                    ))
                }
                SearchOutcome::Inconclusive { nodes_expanded } => {
                    return Err(SolveError::Inconclusive(format!(
                        "feasibility search exhausted its budget after {} nodes",
                        nodes_expanded
                    )))
                }
            },
        };
        fallback = Some(found.clone());
        Ok(found)
    };

    let run = best_of_restarts(&spec, cfg, |rng, _| {
        if disjoint_ok {
            return Ok(random_disjoint_feasible(inst, rng));
        }
        for _ in 0..REJECTION_TRIES {
            let s = random_subset(rng, inst.n_facilities(), inst.k());
            if check(inst, &s) {
                return Ok(s);
            }
        }
        fallback_for(inst)
    })?;
    let report = SolveReport::assemble(inst, run, cfg.seed, start.elapsed().as_secs_f64());
    debug_assert!(report.feasible);
    Ok(report)
}

/// Exhaustive single-swap certificate: true iff no feasibility-preserving
/// swap improves the k-median cost beyond the relative margin. Independent of
/// the solver's own bookkeeping.
pub fn no_improving_feasible_swap(inst: &Instance, centers: &[usize], delta: f64) -> bool {
    let cost = crate::metricspace::kmedian_cost(inst, centers)
        .expect("certificate needs a valid center set");
    let in_set: Vec<bool> = {
        let mut v = vec![false; inst.n_facilities()];
        for &f in centers {
            v[f] = true;
        }
        v
    };
    for &out in centers {
        for (inc, &taken) in in_set.iter().enumerate() {
            if taken {
                continue;
            }
            let swapped: Vec<usize> = centers
                .iter()
                .map(|&f| if f == out { inc } else { f })
                .collect();
            if !check(inst, &swapped) {
                continue;
            }
            let new_cost = crate::metricspace::kmedian_cost(inst, &swapped)
                .expect("swapped set is valid");
            if new_cost - cost < -delta * cost {
                return false;
            }
        }
    }
    true
}
