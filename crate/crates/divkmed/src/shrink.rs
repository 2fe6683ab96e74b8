//! Iterative distance shrinking: satisfy group bounds by making deficient
//! groups' facilities look cheaper, not by constraining the search.
//!
//! Each round solves unconstrained k-median on working distances `d′`. If
//! the result meets every bound it is returned (costed on the original
//! distances); otherwise every facility that belongs to deficient groups has
//! its `d′` column discounted, and the loop repeats. Facilities in
//! perpetually deficient groups head to distance zero geometrically, so they
//! are eventually picked up; rounds are capped, and hitting the cap returns
//! no solution (non-convergence, not a proof of infeasibility).

use serde::{Deserialize, Serialize};

use crate::feasibility::check;
use crate::instance::{DistanceSource, Instance, Solution};
use crate::localsearch::{ls0, LsConfig, SolveError, SolveReport, Termination};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountPolicy {
    /// One deficient group is as bad as many: factor `1 - ε`.
    Uniform,
    /// Compound per deficient group: factor `(1 - ε)^(number of groups)`.
    Power,
}

#[derive(Debug, Clone)]
pub struct ShrinkConfig {
    /// Discount strength, in (0, 1).
    pub epsilon: f64,
    /// Round cap.
    pub max_iter: usize,
    pub policy: DiscountPolicy,
    /// Inner unconstrained solver configuration; its seed is re-derived per
    /// round.
    pub inner: LsConfig,
}

impl Default for ShrinkConfig {
    fn default() -> Self {
        ShrinkConfig {
            epsilon: 0.1,
            max_iter: 50,
            policy: DiscountPolicy::Power,
            inner: LsConfig::default(),
        }
    }
}

/// Discount factor for one facility, given the positive deficits of the
/// deficient groups it belongs to. Neither policy uses the deficit values,
/// only their presence (uniform) or count (power).
pub fn discount(deficits: &[usize], policy: DiscountPolicy, epsilon: f64) -> f64 {
    debug_assert!(epsilon > 0.0 && epsilon < 1.0);
    debug_assert!(deficits.iter().all(|&d| d > 0));
    if deficits.is_empty() {
        return 1.0;
    }
    match policy {
        DiscountPolicy::Uniform => 1.0 - epsilon,
        DiscountPolicy::Power => (1.0 - epsilon).powi(deficits.len() as i32),
    }
}

/// One round of the trace: what was solved, how short it fell, and the
/// per-facility factors applied afterwards (all 1 on the converged round).
#[derive(Debug, Clone)]
pub struct ShrinkRound {
    pub centers: Vec<usize>,
    /// k-median cost of `centers` on the original distances.
    pub cost_original: f64,
    /// Per-group shortfall against the instance bounds.
    pub deficits: Vec<usize>,
    /// Per-facility column factor applied to the working distances.
    pub factors: Vec<f64>,
    /// Working distances after this round's discount, one row per client.
    pub dprime_after: Vec<Vec<f64>>,
}

fn validate(cfg: &ShrinkConfig) -> Result<(), SolveError> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(SolveError::Precondition(format!(
            "discount parameter must lie in (0, 1), got {}",
            cfg.epsilon
        )));
    }
    if cfg.max_iter == 0 {
        return Err(SolveError::Precondition("round cap must be at least 1".into()));
    }
    Ok(())
}

/// [`iterative_shrinking`] plus the full per-round trace. The trace is
/// returned even when the rounds are exhausted without converging.
pub fn iterative_shrinking_traced(
    inst: &Instance,
    cfg: &ShrinkConfig,
) -> Result<(Option<SolveReport>, Vec<ShrinkRound>), SolveError> {
    validate(cfg)?;
    crate::localsearch::check_k(inst, inst.k())?;
    let start = std::time::Instant::now();
    let n = inst.n_clients();
    let m = inst.n_facilities();

    let mut dprime: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..m).map(|f| inst.distance(c, f)).collect())
        .collect();
    let mut rounds: Vec<ShrinkRound> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut states: Option<Vec<Vec<usize>>> = cfg.inner.trace_states.then(Vec::new);
    let mut swaps_total = 0usize;

    for round in 0..cfg.max_iter {
        let round_inst = Instance::new(
            n,
            m,
            inst.k(),
            inst.groups().to_vec(),
            inst.lower_bounds().to_vec(),
            DistanceSource::Matrix(dprime.clone()),
        )
        .map_err(|e| SolveError::Precondition(e.to_string()))?;
        let inner_cfg = LsConfig {
            seed: derive_seed(cfg.inner.seed, round as u64),
            ..cfg.inner.clone()
        };
        let inner = ls0(&round_inst, inst.k(), &inner_cfg)?;
        let centers = inner.solution.centers;
        swaps_total += inner.swaps_accepted;

        let solution = Solution::new(inst, centers.clone())
            .map_err(|e| SolveError::Precondition(e.to_string()))?;
        trace.push(solution.cost);
        if let Some(s) = &mut states {
            s.push(centers.clone());
        }

        let counts = inst.group_counts(&centers);
        let deficits: Vec<usize> = counts
            .iter()
            .zip(inst.lower_bounds())
            .map(|(&c, &r)| r.saturating_sub(c))
            .collect();
        let feasible = deficits.iter().all(|&d| d == 0);

        let factors: Vec<f64> = if feasible {
            vec![1.0; m]
        } else {
            (0..m)
                .map(|f| {
                    let positive: Vec<usize> = inst
                        .groups_of(f)
                        .iter()
                        .map(|&g| deficits[g])
                        .filter(|&d| d > 0)
                        .collect();
                    discount(&positive, cfg.policy, cfg.epsilon)
                })
                .collect()
        };
        if !feasible {
            for row in &mut dprime {
                for (f, v) in row.iter_mut().enumerate() {
                    *v *= factors[f];
                }
            }
        }
        rounds.push(ShrinkRound {
            centers: centers.clone(),
            cost_original: solution.cost,
            deficits,
            factors,
            dprime_after: dprime.clone(),
        });

        if feasible {
            debug_assert!(check(inst, &centers));
            let report = SolveReport {
                initial_cost: trace[0],
                final_cost: solution.cost,
                cost_trace: trace,
                iterations: round + 1,
                swaps_accepted: swaps_total,
                seed: cfg.inner.seed,
                seconds: start.elapsed().as_secs_f64(),
                termination: Termination::Converged,
                feasible: true,
                violation_fraction: crate::metrics::violation_fraction(inst, &solution.centers)
                    .ok(),
                profile: None,
                states,
                solution,
            };
            return Ok((Some(report), rounds));
        }
    }
    Ok((None, rounds))
}

/// Runs the shrinking loop and returns the first feasible round's solution,
/// costed on the original distances; `None` when the round cap runs out.
/// The report's trace holds each round's original-distance cost, which need
/// not decrease.
pub fn iterative_shrinking(
    inst: &Instance,
    cfg: &ShrinkConfig,
) -> Result<Option<SolveReport>, SolveError> {
    iterative_shrinking_traced(inst, cfg).map(|(report, _)| report)
}
