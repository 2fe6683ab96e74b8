//! Exact brute-force solvers used as ground truth in tests and benchmarks.
//!
//! All of them enumerate lexicographically and refuse, rather than hang, when
//! the search space exceeds an explicit cap: subset enumeration scales as
//! `C(m, k)` and the graph oracles as `2^n`, so desk-scale limits are part of
//! the contract.

use thiserror::Error;


use crate::instance::{Graph, Instance, Solution};
use crate::metricspace::kmedian_cost;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("refusing to enumerate {count} center sets (cap {cap})")]
    TooManySubsets { count: u128, cap: u128 },
    #[error("graph has {n} vertices, above the oracle cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone)]
pub struct OracleLimits {
    /// Maximum number of k-subsets [`exact_solve`] will enumerate.
    pub max_subsets: u128,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_subsets: 10_000_000,
        }
    }
}

const GRAPH_ORACLE_CAP: usize = 16;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .saturating_mul((n - i) as u128)
            .checked_div((i + 1) as u128)
            .unwrap_or(u128::MAX);
    }
    acc
}

/// Walks all k-subsets of `0..m` in lexicographic order, keeping the best
/// accepted one under (cost, then lexicographic centers).
fn enumerate_best(
    inst: &Instance,
    accept: impl Fn(&[usize]) -> bool,
) -> Option<Solution> {
    let m = inst.n_facilities();
    let k = inst.k();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if accept(&idx) {
            let cost = kmedian_cost(inst, &idx).expect("enumerated set is valid");
            // Lexicographic enumeration order: strict < keeps the earliest,
            // hence lexicographically smallest, tied set.
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, idx.clone()));
            }
        }
        // Advance the combination odometer.
        let mut i = k;
        loop {
            if i == 0 {
                return best
                    .map(|(_, centers)| Solution::new(inst, centers).expect("valid center set"));
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn guard_enumeration(inst: &Instance, limits: &OracleLimits) -> Result<(), OracleError> {
    if inst.k() == 0 || inst.k() > inst.n_facilities() {
        return Err(OracleError::Precondition(format!(
            "k = {} out of range 1..={}",
            inst.k(),
            inst.n_facilities()
        )));
    }
    let count = binomial(inst.n_facilities(), inst.k());
    if count > limits.max_subsets {
        return Err(OracleError::TooManySubsets {
            count,
            cap: limits.max_subsets,
        });
    }
    Ok(())
}

/// Exhaustive optimum under the instance constraints (counts at least the
/// bounds). `bounds_override` swaps in different lower bounds without
/// rebuilding the instance. Returns the minimum-cost feasible set, ties
/// toward the lexicographically smallest; `None` when nothing is feasible.
pub fn exact_solve(
    inst: &Instance,
    bounds_override: Option<&[usize]>,
    limits: &OracleLimits,
) -> Result<Option<Solution>, OracleError> {
    guard_enumeration(inst, limits)?;
    let bounds = match bounds_override {
        Some(b) => {
            if b.len() != inst.t() {
                return Err(OracleError::Precondition(format!(
                    "{} bounds for {} groups",
                    b.len(),
                    inst.t()
                )));
            }
            b.to_vec()
        }
        None => inst.lower_bounds().to_vec(),
    };
    Ok(enumerate_best(inst, |centers| {
        inst.group_counts(centers)
            .iter()
            .zip(&bounds)
            .all(|(&c, &r)| c >= r)
    }))
}

/// Exhaustive optimum with equality constraints: group counts must match
/// `profile` exactly. Ground truth for the completion route.
pub fn exact_solve_eq(
    inst: &Instance,
    profile: &[usize],
    limits: &OracleLimits,
) -> Result<Option<Solution>, OracleError> {
    guard_enumeration(inst, limits)?;
    if profile.len() != inst.t() {
        return Err(OracleError::Precondition(format!(
            "{} profile entries for {} groups",
            profile.len(),
            inst.t()
        )));
    }
    Ok(enumerate_best(inst, |centers| {
        inst.group_counts(centers) == profile
    }))
}

fn guard_graph(g: &Graph) -> Result<(), OracleError> {
    if g.n() > GRAPH_ORACLE_CAP {
        return Err(OracleError::TooLarge {
            n: g.n(),
            cap: GRAPH_ORACLE_CAP,
        });
    }
    Ok(())
}

/// Lex-first subset of `0..n` among the smallest size `<= k` whose masks
/// OR to `full`.
fn smallest_covering_set(masks: &[u64], full: u64, k: usize) -> Option<Vec<usize>> {
    let n = masks.len();
    for size in 0..=k.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let cover = idx.iter().fold(0u64, |acc, &v| acc | masks[v]);
            if cover == full {
                return Some(idx);
            }
            let mut i = size;
            let exhausted = loop {
                if i == 0 {
                    break true;
                }
                i -= 1;
                if idx[i] != i + n - size {
                    break false;
                }
            };
            if exhausted {
                break;
            }
            idx[i] += 1;
            for j in i + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    None
}

/// Smallest (then lex-first) dominating set of size at most `k`, where a set
/// dominates a vertex that is in it or adjacent to it.
pub fn exact_domset(g: &Graph, k: usize) -> Result<Option<Vec<usize>>, OracleError> {
    guard_graph(g)?;
    let n = g.n();
    if n == 0 {
        return Ok(Some(Vec::new()));
    }
    let masks: Vec<u64> = (0..n)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .fold(1u64 << u, |acc, &v| acc | (1 << v))
        })
        .collect();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    Ok(smallest_covering_set(&masks, full, k))
}

/// Smallest (then lex-first) vertex cover of size at most `k`: every edge
/// must have an endpoint in the set.
pub fn exact_vertexcover(g: &Graph, k: usize) -> Result<Option<Vec<usize>>, OracleError> {
    guard_graph(g)?;
    let edges = g.edges();
    if edges.is_empty() {
        return Ok(Some(Vec::new()));
    }
    // Mask over edge indices: vertex u covers the edges incident to it.
    let masks: Vec<u64> = (0..g.n())
        .map(|u| {
            edges
                .iter()
                .enumerate()
                .filter(|(_, &(a, b))| a == u || b == u)
                .fold(0u64, |acc, (i, _)| acc | (1 << i))
        })
        .collect();
    let full = if edges.len() == 64 {
        u64::MAX
    } else {
        (1u64 << edges.len()) - 1
    };
    Ok(smallest_covering_set(&masks, full, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::check;
    use crate::instance::{fig2_counterexample, from_domset, from_vertexcover, DistanceSource};
    use rand::Rng;

    #[test]
    fn fig2_optimum_is_the_cheap_feasible_pair() {
        let inst = fig2_counterexample(10.0).unwrap();
        let sol = exact_solve(&inst, None, &OracleLimits::default())
            .unwrap()
            .unwrap();
        assert_eq!(sol.centers, vec![2, 3]);
        assert_eq!(sol.cost, 2.0);
        assert!(check(&inst, &sol.centers));
    }

    #[test]
    fn unconstrained_line_optimum() {
        let coords = [0.0f64, 1.0, 2.0, 5.0];
        let matrix = coords
            .iter()
            .map(|&c| coords.iter().map(|&f| (c - f).abs()).collect())
            .collect();
        let inst = Instance::new(4, 4, 2, vec![], vec![], DistanceSource::Matrix(matrix)).unwrap();
        let sol = exact_solve(&inst, None, &OracleLimits::default())
            .unwrap()
            .unwrap();
        assert_eq!(sol.centers, vec![1, 3]);
        assert_eq!(sol.cost, 2.0);
    }

    #[test]
    fn infeasible_reduction_returns_none() {
        // A 4-cycle has no vertex cover of size 1.
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let inst = from_vertexcover(&g, 1).unwrap();
        assert!(exact_solve(&inst, None, &OracleLimits::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn bounds_override_relaxes_or_tightens() {
        let inst = fig2_counterexample(10.0).unwrap();
        let relaxed = exact_solve(&inst, Some(&[0, 0, 0, 0]), &OracleLimits::default())
            .unwrap()
            .unwrap();
        // Unconstrained ties at cost 2 resolve to the lexicographically
        // smallest pair containing a cheap facility.
        assert_eq!(relaxed.cost, 2.0);
        assert_eq!(relaxed.centers, vec![0, 2]);
    }

    #[test]
    fn equality_oracle_pins_counts() {
        let inst = Instance::new(
            3,
            4,
            2,
            vec![vec![0, 1], vec![2, 3]],
            vec![0, 0],
            DistanceSource::Matrix(vec![
                vec![0.0, 5.0, 9.0, 9.0],
                vec![5.0, 0.0, 9.0, 9.0],
                vec![9.0, 9.0, 0.0, 1.0],
            ]),
        )
        .unwrap();
        let sol = exact_solve_eq(&inst, &[2, 0], &OracleLimits::default())
            .unwrap()
            .unwrap();
        assert_eq!(sol.centers, vec![0, 1]);
        assert_eq!(inst.group_counts(&sol.centers), vec![2, 0]);
        assert!(exact_solve_eq(&inst, &[2, 2], &OracleLimits::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn enumeration_cap_refuses_with_the_count() {
        let inst = fig2_counterexample(2.0).unwrap();
        let limits = OracleLimits { max_subsets: 5 };
        match exact_solve(&inst, None, &limits) {
            Err(OracleError::TooManySubsets { count, cap }) => {
                assert_eq!(count, 6);
                assert_eq!(cap, 5);
            }
            other => panic!("expected a refusal, got {:?}", other.map(|s| s.map(|x| x.centers))),
        }
    }

    #[test]
    fn domset_examples() {
        let path = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(exact_domset(&path, 1).unwrap(), Some(vec![1]));

        let complete = Graph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(exact_domset(&complete, 1).unwrap(), Some(vec![0]));

        let cycle6 = Graph::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        assert_eq!(exact_domset(&cycle6, 1).unwrap(), None);
        assert_eq!(exact_domset(&cycle6, 2).unwrap(), Some(vec![0, 3]));
    }

    #[test]
    fn vertexcover_examples() {
        let edge = Graph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(exact_vertexcover(&edge, 1).unwrap(), Some(vec![0]));

        let triangle = Graph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(exact_vertexcover(&triangle, 1).unwrap(), None);

        let star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(exact_vertexcover(&star, 1).unwrap(), Some(vec![0]));
    }

    #[test]
    fn graph_oracles_refuse_large_graphs() {
        let g = Graph::new(17, &[(0, 1)]).unwrap();
        assert!(matches!(
            exact_domset(&g, 1),
            Err(OracleError::TooLarge { n: 17, cap: 16 })
        ));
        assert!(matches!(
            exact_vertexcover(&g, 1),
            Err(OracleError::TooLarge { .. })
        ));
    }

    fn random_graph(rng: &mut impl Rng, n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.4) {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    #[test]
    fn reductions_preserve_feasibility_both_ways() {
        let mut rng = crate::rng::rng_from_seed(1234);
        let limits = OracleLimits::default();
        for _ in 0..30 {
            let n = rng.gen_range(2..=7usize);
            // Exactly k centers needs k <= n; the reductions only line up
            // inside that range.
            let k = rng.gen_range(1..=3usize.min(n));
            let g = random_graph(&mut rng, n);

            let dom_inst = from_domset(&g, k).unwrap();
            let dom_oracle = exact_domset(&g, k).unwrap().is_some();
            let dom_solve = exact_solve(&dom_inst, None, &limits).unwrap().is_some();
            assert_eq!(dom_oracle, dom_solve, "domset mismatch on {:?}", g.edges());

            if g.n_edges() > 0 {
                let vc_inst = from_vertexcover(&g, k).unwrap();
                let vc_oracle = exact_vertexcover(&g, k).unwrap().is_some();
                let vc_solve = exact_solve(&vc_inst, None, &limits).unwrap().is_some();
                assert_eq!(vc_oracle, vc_solve, "cover mismatch on {:?}", g.edges());
            }
        }
    }
}
