//! Multi-facility swap neighborhoods for disjoint groups.
//!
//! [`ls2`] partitions the center set into one slot per group (holding exactly
//! the lower bound) plus a free pool, and scans tuples that swap at most one
//! facility per slot. [`rb_swap`] is the two-group special case where the
//! bounds use the whole budget: single swaps inside either color plus
//! simultaneous red-blue pairs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_k, LsConfig, RunResult, SolveError, SolveReport, Termination};
use crate::feasibility::{check, disjoint_feasible};
use crate::instance::Instance;
use crate::metricspace::closer;
use crate::rng::{derive_seed, rng_from_seed};

/// Cost evaluator for swaps that replace several centers at once.
///
/// Keeps each client's distances to the current centers sorted ascending, so
/// pricing a candidate costs one pass over the removed prefix plus the added
/// facilities, per client.
pub(crate) struct MultiSwapEval {
    /// Per client: `(distance, facility)` ascending under the total order.
    sorted: Vec<Vec<(f64, usize)>>,
    total: f64,
}

impl MultiSwapEval {
    pub fn build(inst: &Instance, centers: &[usize]) -> Self {
        let mut total = 0.0;
        let sorted: Vec<Vec<(f64, usize)>> = (0..inst.n_clients())
            .map(|c| {
                let mut row: Vec<(f64, usize)> = centers
                    .iter()
                    .map(|&f| (inst.distance(c, f), f))
                    .collect();
                row.sort_by(|a, b| {
                    if closer(*a, *b) {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    }
                });
                total += row[0].0;
                row
            })
            .collect();
        MultiSwapEval { sorted, total }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Cost of `(S \ removed) ∪ added`. `removed ⊆ S`, `added ∩ S = ∅`, and
    /// the result must be nonempty.
    pub fn cost_after(&self, inst: &Instance, removed: &[usize], added: &[usize]) -> f64 {
        let mut total = 0.0;
        for (c, row) in self.sorted.iter().enumerate() {
            let mut best: Option<(f64, usize)> = None;
            for &(d, f) in row {
                if !removed.contains(&f) {
                    best = Some((d, f));
                    break;
                }
            }
            for &f in added {
                let cand = (inst.distance(c, f), f);
                best = Some(match best {
                    Some(b) if closer(b, cand) => b,
                    _ => cand,
                });
            }
            total += best.expect("swap leaves at least one center").0;
        }
        total
    }
}

/// One slot move: keep the slot, or swap member index `out_idx` for candidate
/// index `in_idx` of that slot's pool.
#[derive(Clone, Copy)]
enum Move {
    Stay,
    Swap { out: usize, inc: usize },
}

struct Slots {
    /// `slots[i] ⊆ F_i` with `|slots[i]| = r_i` for `i < t`; the last entry
    /// is the free pool.
    slots: Vec<Vec<usize>>,
    /// Swap-in pool per slot: group members outside S for group slots, all
    /// facilities outside S for the free pool. Rebuilt after every move.
    pools: Vec<Vec<usize>>,
}

impl Slots {
    fn centers(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.slots.iter().flatten().copied().collect();
        s.sort_unstable();
        s
    }

    fn rebuild_pools(&mut self, inst: &Instance) {
        let centers = self.centers();
        let outside = |f: &usize| centers.binary_search(f).is_err();
        self.pools = inst
            .groups()
            .iter()
            .map(|g| g.iter().copied().filter(outside).collect())
            .chain(std::iter::once(
                (0..inst.n_facilities()).filter(|f| outside(f)).collect(),
            ))
            .collect();
    }

    /// Number of moves per slot, the stay move included.
    fn options(&self) -> Vec<usize> {
        self.slots
            .iter()
            .zip(&self.pools)
            .map(|(s, p)| 1 + s.len() * p.len())
            .collect()
    }

    fn decode(&self, slot: usize, code: usize) -> Move {
        if code == 0 {
            Move::Stay
        } else {
            let pool = self.pools[slot].len();
            Move::Swap {
                out: (code - 1) / pool,
                inc: (code - 1) % pool,
            }
        }
    }

    fn apply(&mut self, inst: &Instance, tuple: &[Move]) {
        for (slot, mv) in tuple.iter().enumerate() {
            if let Move::Swap { out, inc } = *mv {
                let f = self.pools[slot][inc];
                self.slots[slot][out] = f;
                self.slots[slot].sort_unstable();
            }
        }
        self.rebuild_pools(inst);
    }
}

/// Collects the (removed, added) pair of a tuple; `None` when the tuple is
/// all-stay or two slots swap in the same facility.
fn tuple_edits(slots: &Slots, tuple: &[Move]) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut removed = Vec::new();
    let mut added = Vec::new();
    for (slot, mv) in tuple.iter().enumerate() {
        if let Move::Swap { out, inc } = *mv {
            removed.push(slots.slots[slot][out]);
            let f = slots.pools[slot][inc];
            if added.contains(&f) {
                return None;
            }
            added.push(f);
        }
    }
    if removed.is_empty() {
        None
    } else {
        Some((removed, added))
    }
}

fn descend_tuples(
    inst: &Instance,
    cfg: &LsConfig,
    mut slots: Slots,
    rng: &mut ChaCha8Rng,
) -> Result<RunResult, SolveError> {
    slots.rebuild_pools(inst);
    let mut centers = slots.centers();
    let mut eval = MultiSwapEval::build(inst, &centers);
    let mut objective = eval.total();
    let initial_objective = objective;
    let mut trace = vec![objective];
    let mut states = cfg.trace_states.then(|| vec![centers.clone()]);

    let cap = cfg.iter_cap(inst, inst.k());
    let mut iterations = 0usize;
    let mut swaps = 0usize;
    let termination;
    loop {
        if iterations == cap {
            termination = Termination::IterationCap;
            break;
        }
        iterations += 1;

        let options = slots.options();
        let neighborhood: usize = options
            .iter()
            .try_fold(1usize, |acc, &o| acc.checked_mul(o))
            .unwrap_or(usize::MAX);
        let mut best: Option<(f64, Vec<Move>)> = None;
        let consider = |slots: &Slots, tuple: &[Move], best: &mut Option<(f64, Vec<Move>)>| {
            if let Some((removed, added)) = tuple_edits(slots, tuple) {
                let cost = eval.cost_after(inst, &removed, &added);
                // Enumeration order is lexicographic in the slot codes;
                // strict < keeps the first-found best.
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    *best = Some((cost, tuple.to_vec()));
                }
            }
        };

        if neighborhood.saturating_sub(1) <= cfg.tuple_scan_budget {
            // Odometer over slot move codes.
            let mut codes = vec![0usize; options.len()];
            loop {
                let tuple: Vec<Move> = codes
                    .iter()
                    .enumerate()
                    .map(|(s, &c)| slots.decode(s, c))
                    .collect();
                consider(&slots, &tuple, &mut best);
                let mut pos = options.len();
                while pos > 0 {
                    pos -= 1;
                    codes[pos] += 1;
                    if codes[pos] < options[pos] {
                        break;
                    }
                    codes[pos] = 0;
                    if pos == 0 {
                        pos = usize::MAX;
                        break;
                    }
                }
                if pos == usize::MAX {
                    break;
                }
            }
        } else {
            for _ in 0..cfg.tuple_samples {
                let tuple: Vec<Move> = options
                    .iter()
                    .enumerate()
                    .map(|(s, &o)| slots.decode(s, rng.gen_range(0..o)))
                    .collect();
                consider(&slots, &tuple, &mut best);
            }
        }

        match best {
            Some((cost, tuple)) if cost - objective < -cfg.delta * objective => {
                slots.apply(inst, &tuple);
                centers = slots.centers();
                eval = MultiSwapEval::build(inst, &centers);
                objective = eval.total();
                swaps += 1;
                trace.push(objective);
                if let Some(s) = &mut states {
                    s.push(centers.clone());
                }
                debug_assert!(check(inst, &centers));
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

fn require_disjoint_feasible(inst: &Instance) -> Result<(), SolveError> {
    let feasible = disjoint_feasible(inst)
        .map_err(|e| SolveError::Precondition(e.to_string()))?;
    if !feasible {
        return Err(SolveError::Infeasible(
            "bounds exceed the group sizes or the budget".into(),
        ));
    }
    Ok(())
}

fn sample_slots(inst: &Instance, rng: &mut ChaCha8Rng) -> Slots {
    let mut slots: Vec<Vec<usize>> = inst
        .groups()
        .iter()
        .zip(inst.lower_bounds())
        .map(|(g, &r)| {
            let mut s: Vec<usize> = rand::seq::index::sample(rng, g.len(), r)
                .into_iter()
                .map(|i| g[i])
                .collect();
            s.sort_unstable();
            s
        })
        .collect();
    let taken: Vec<usize> = {
        let mut t: Vec<usize> = slots.iter().flatten().copied().collect();
        t.sort_unstable();
        t
    };
    let rest: Vec<usize> = (0..inst.n_facilities())
        .filter(|f| taken.binary_search(f).is_err())
        .collect();
    let free = inst.k() - taken.len();
    let mut pool: Vec<usize> = rand::seq::index::sample(rng, rest.len(), free)
        .into_iter()
        .map(|i| rest[i])
        .collect();
    pool.sort_unstable();
    slots.push(pool);
    Slots {
        slots,
        pools: Vec::new(),
    }
}

/// Tuple-swap local search for disjoint groups: each scan may move one
/// facility inside every group slot and the free pool simultaneously.
///
/// Exact scans run while the neighborhood fits `tuple_scan_budget`; larger
/// neighborhoods draw `tuple_samples` random tuples per scan instead.
pub fn ls2(inst: &Instance, cfg: &LsConfig) -> Result<SolveReport, SolveError> {
    check_k(inst, inst.k())?;
    if !inst.disjoint() {
        return Err(SolveError::Precondition(
            "tuple swaps need disjoint groups".into(),
        ));
    }
    require_disjoint_feasible(inst)?;
    let start = std::time::Instant::now();

    let restarts = cfg.restarts.max(1);
    let mut best: Option<RunResult> = None;
    for r in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, r as u64));
        let slots = sample_slots(inst, &mut rng);
        let run = descend_tuples(inst, cfg, slots, &mut rng)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let report = SolveReport::assemble(
        inst,
        best.expect("at least one restart runs"),
        cfg.seed,
        start.elapsed().as_secs_f64(),
    );
    debug_assert!(report.feasible);
    Ok(report)
}

/// Two-group pair-swap local search for disjoint bounds that use the whole
/// budget (`r_1 + r_2 = k`): scans single swaps inside either group and
/// simultaneous pairs, so group counts stay pinned at the bounds.
pub fn rb_swap(inst: &Instance, cfg: &LsConfig) -> Result<SolveReport, SolveError> {
    check_k(inst, inst.k())?;
    if !inst.disjoint() || inst.t() != 2 {
        return Err(SolveError::Precondition(
            "pair swaps need exactly two disjoint groups".into(),
        ));
    }
    let budget: usize = inst.lower_bounds().iter().sum();
    if budget != inst.k() {
        return Err(SolveError::Precondition(format!(
            "bounds must use the whole budget: {} + {} != {}",
            inst.lower_bounds()[0],
            inst.lower_bounds()[1],
            inst.k()
        )));
    }
    require_disjoint_feasible(inst)?;
    let start = std::time::Instant::now();

    let restarts = cfg.restarts.max(1);
    let mut best: Option<RunResult> = None;
    for r in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, r as u64));
        let run = descend_pairs(inst, cfg, &mut rng)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let report = SolveReport::assemble(
        inst,
        best.expect("at least one restart runs"),
        cfg.seed,
        start.elapsed().as_secs_f64(),
    );
    debug_assert!(report.feasible);
    debug_assert_eq!(report.solution.per_group_counts, inst.lower_bounds());
    Ok(report)
}

fn descend_pairs(
    inst: &Instance,
    cfg: &LsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RunResult, SolveError> {
    // Per-color selections, kept sorted.
    let mut sel: Vec<Vec<usize>> = inst
        .groups()
        .iter()
        .zip(inst.lower_bounds())
        .map(|(g, &r)| {
            let mut s: Vec<usize> = rand::seq::index::sample(rng, g.len(), r)
                .into_iter()
                .map(|i| g[i])
                .collect();
            s.sort_unstable();
            s
        })
        .collect();

    let centers_of = |sel: &[Vec<usize>]| {
        let mut c: Vec<usize> = sel.iter().flatten().copied().collect();
        c.sort_unstable();
        c
    };
    let mut centers = centers_of(&sel);
    let mut eval = MultiSwapEval::build(inst, &centers);
    let mut objective = eval.total();
    let initial_objective = objective;
    let mut trace = vec![objective];
    let mut states = cfg.trace_states.then(|| vec![centers.clone()]);

    let cap = cfg.iter_cap(inst, inst.k());
    let mut iterations = 0usize;
    let mut swaps = 0usize;
    let termination;
    loop {
        if iterations == cap {
            termination = Termination::IterationCap;
            break;
        }
        iterations += 1;

        // Swap-in pools: group members currently outside S. Disjointness
        // makes the other color irrelevant.
        let pools: Vec<Vec<usize>> = inst
            .groups()
            .iter()
            .map(|g| {
                g.iter()
                    .copied()
                    .filter(|f| centers.binary_search(f).is_err())
                    .collect()
            })
            .collect();

        // (cost, removed, added), scanned in lexicographic candidate order.
        let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
        let consider =
            |removed: Vec<usize>, added: Vec<usize>, best: &mut Option<(f64, Vec<usize>, Vec<usize>)>| {
                let cost = eval.cost_after(inst, &removed, &added);
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    *best = Some((cost, removed, added));
                }
            };

        for color in 0..2 {
            for &out in &sel[color] {
                for &inc in &pools[color] {
                    consider(vec![out], vec![inc], &mut best);
                }
            }
        }
        let pair_count = sel[0].len() * pools[0].len() * sel[1].len() * pools[1].len();
        if pair_count <= cfg.tuple_scan_budget {
            for &or in &sel[0] {
                for &ir in &pools[0] {
                    for &ob in &sel[1] {
                        for &ib in &pools[1] {
                            consider(vec![or, ob], vec![ir, ib], &mut best);
                        }
                    }
                }
            }
        } else {
            for _ in 0..cfg.tuple_samples {
                let or = sel[0][rng.gen_range(0..sel[0].len())];
                let ir = pools[0][rng.gen_range(0..pools[0].len())];
                let ob = sel[1][rng.gen_range(0..sel[1].len())];
                let ib = pools[1][rng.gen_range(0..pools[1].len())];
                consider(vec![or, ob], vec![ir, ib], &mut best);
            }
        }

        match best {
            Some((cost, removed, added)) if cost - objective < -cfg.delta * objective => {
                for (&out, &inc) in removed.iter().zip(&added) {
                    let color = if inst.groups_of(out).contains(&0) { 0 } else { 1 };
                    let pos = sel[color].iter().position(|&f| f == out).unwrap();
                    sel[color][pos] = inc;
                    sel[color].sort_unstable();
                }
                centers = centers_of(&sel);
                eval = MultiSwapEval::build(inst, &centers);
                objective = eval.total();
                swaps += 1;
                trace.push(objective);
                if let Some(s) = &mut states {
                    s.push(centers.clone());
                }
                debug_assert!(check(inst, &centers));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{fig2_counterexample, random_metric, DistanceSource, RandomMetricParams};
    use crate::metricspace::kmedian_cost;
    use crate::oracle::{exact_solve, OracleLimits};

    fn two_group_line() -> Instance {
        // Clients at 10 and 20; red facilities {0, 1} at 0 and 10, blue
        // facilities {2, 3} at 20 and 100. The pair {1, 2} sits on both
        // clients, so it is the unique optimum at cost 0.
        let clients: [f64; 2] = [10.0, 20.0];
        let facilities: [f64; 4] = [0.0, 10.0, 20.0, 100.0];
        let matrix = clients
            .iter()
            .map(|&c| facilities.iter().map(|&f| (c - f).abs()).collect())
            .collect();
        Instance::new(
            2,
            4,
            2,
            vec![vec![0, 1], vec![2, 3]],
            vec![1, 1],
            DistanceSource::Matrix(matrix),
        )
        .unwrap()
    }

    #[test]
    fn multiswap_eval_matches_direct_recomputation() {
        let inst = random_metric(&RandomMetricParams::new(24, 3, 5, 9)).unwrap();
        let centers = vec![0, 3, 7, 11, 19];
        let eval = MultiSwapEval::build(&inst, &centers);
        assert!((eval.total() - kmedian_cost(&inst, &centers).unwrap()).abs() <= 1e-12);
        let after = eval.cost_after(&inst, &[3, 19], &[1, 2]);
        let direct = kmedian_cost(&inst, &[0, 1, 2, 7, 11]).unwrap();
        assert!((after - direct).abs() <= 1e-9);
    }

    #[test]
    fn multiswap_eval_handles_removing_every_listed_center() {
        let inst = two_group_line();
        let eval = MultiSwapEval::build(&inst, &[0, 2]);
        let after = eval.cost_after(&inst, &[0, 2], &[1, 3]);
        assert!((after - kmedian_cost(&inst, &[1, 3]).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn ls2_rejects_overlapping_groups() {
        let inst = fig2_counterexample(10.0).unwrap();
        assert!(matches!(
            ls2(&inst, &LsConfig::default()),
            Err(SolveError::Precondition(_))
        ));
    }

    #[test]
    fn ls2_matches_the_oracle_on_a_small_disjoint_instance() {
        let inst = random_metric(&RandomMetricParams {
            lower_bounds: vec![1, 1],
            ..RandomMetricParams::new(14, 2, 3, 23)
        })
        .unwrap();
        let report = ls2(&inst, &LsConfig::default()).unwrap();
        assert!(report.feasible);
        let exact = exact_solve(&inst, None, &OracleLimits::default()).unwrap().unwrap();
        assert!(report.solution.cost >= exact.cost - 1e-9);
        assert!(report.solution.cost <= 5.0 * exact.cost + 1e-9);
    }

    #[test]
    fn ls2_sampling_mode_still_descends() {
        let inst = random_metric(&RandomMetricParams {
            lower_bounds: vec![2, 2, 1],
            ..RandomMetricParams::new(40, 3, 8, 31)
        })
        .unwrap();
        let cfg = LsConfig {
            tuple_scan_budget: 10,
            tuple_samples: 500,
            restarts: 3,
            ..LsConfig::default()
        };
        let report = ls2(&inst, &cfg).unwrap();
        assert!(report.feasible);
        assert!(report.final_cost <= report.initial_cost);
        for w in report.cost_trace.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn rb_swap_needs_two_disjoint_groups_using_the_budget() {
        let fig2 = fig2_counterexample(10.0).unwrap();
        assert!(matches!(
            rb_swap(&fig2, &LsConfig::default()),
            Err(SolveError::Precondition(_))
        ));

        let slack = random_metric(&RandomMetricParams {
            lower_bounds: vec![1, 1],
            ..RandomMetricParams::new(12, 2, 3, 7)
        })
        .unwrap();
        assert!(matches!(
            rb_swap(&slack, &LsConfig::default()),
            Err(SolveError::Precondition(_))
        ));
    }

    #[test]
    fn rb_swap_pins_both_counts_and_finds_the_line_optimum() {
        let inst = two_group_line();
        let report = rb_swap(&inst, &LsConfig::default()).unwrap();
        assert_eq!(report.solution.per_group_counts, vec![1, 1]);
        // Exhaustive over the four red-blue pairs: {1, 2} covers both clients.
        let exact = exact_solve(&inst, None, &OracleLimits::default()).unwrap().unwrap();
        assert_eq!(report.solution.cost, exact.cost);
        assert_eq!(report.solution.centers, vec![1, 2]);
    }

    #[test]
    fn rb_swap_stays_near_the_oracle_on_random_instances() {
        for seed in [3, 17, 29] {
            let inst = random_metric(&RandomMetricParams {
                lower_bounds: vec![2, 2],
                ..RandomMetricParams::new(18, 2, 4, seed)
            })
            .unwrap();
            let report = rb_swap(&inst, &LsConfig::default()).unwrap();
            let exact = exact_solve(&inst, None, &OracleLimits::default()).unwrap().unwrap();
            assert!(report.solution.cost >= exact.cost - 1e-9);
            assert!(
                report.solution.cost <= (3.0 + 0.5) * exact.cost + 1e-9,
                "seed {}: {} vs {}",
                seed,
                report.solution.cost,
                exact.cost
            );
        }
    }
}
