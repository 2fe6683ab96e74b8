//! Acceptance gate: one test per shipping criterion, each printing a
//! `acceptance NN PASS|FAIL <name>` line (visible under `--nocapture`).
//! Tolerances are pinned here, next to the assertions they govern.

use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use divkmed::completion::{enumerate_profiles, profile_count_unbounded};
use divkmed::feasibility::check;
use divkmed::instance::{
    fig2_counterexample, from_domset, from_vertexcover, random_metric, DistanceSource, Graph,
    Instance, RandomMetricParams,
};
use divkmed::localsearch::{ls0, ls1, no_improving_feasible_swap, rb_swap, LsConfig};
use divkmed::metrics::{pod, violation_fraction};
use divkmed::metricspace::{kmedian_cost, CostCache};
use divkmed::oracle::{
    exact_domset, exact_solve, exact_solve_eq, exact_vertexcover, OracleLimits,
};
use divkmed::relaxed::{
    check_cardinality_inequality, check_supermodular_triple, lambda_grid, relaxed_ls,
};
use divkmed::shrink::{iterative_shrinking_traced, ShrinkConfig};

fn criterion<F: FnOnce() + std::panic::UnwindSafe>(n: usize, name: &str, body: F) {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(body));
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(()) => println!("acceptance {:02} PASS {} ({:.2}s)", n, name, secs),
        Err(e) => {
            println!("acceptance {:02} FAIL {} ({:.2}s)", n, name, secs);
            resume_unwind(e);
        }
    }
}

fn limits() -> OracleLimits {
    OracleLimits::default()
}

/// Criterion 1: The swap trap: one local search start pays cost 2c while the optimum
/// pays 2, so the single-swap ratio is exactly c, for any c.
#[test]
fn criterion_01_unbounded_single_swap_gap() {
    criterion(1, "unbounded single-swap gap", || {
        let start = Instant::now();
        for c in [2.0, 10.0, 100.0] {
            let inst = fig2_counterexample(c).unwrap();
            let trapped = ls1(&inst, &LsConfig::default(), Some(&[0, 1])).unwrap();
            assert_eq!(trapped.solution.cost, 2.0 * c);
            let exact = exact_solve(&inst, None, &limits()).unwrap().unwrap();
            assert_eq!(exact.cost, 2.0);
            // Exact in f64: both costs are small integers.
            assert_eq!(trapped.solution.cost / exact.cost, c);
        }
        assert!(start.elapsed().as_secs_f64() < 1.0, "budget: under 1 s");
    });
}

/// Random grouped facility universe: `m` facilities, `t` groups, every group
/// non-empty, bounds small.
fn random_universe(rng: &mut ChaCha8Rng) -> (usize, Vec<Vec<usize>>, Vec<usize>) {
    let m = rng.gen_range(2..=20usize);
    let t = rng.gen_range(1..=4usize);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); t];
    for (g, group) in groups.iter_mut().enumerate() {
        for f in 0..m {
            if rng.gen_bool(0.5) {
                group.push(f);
            }
        }
        if group.is_empty() {
            group.push(g % m);
        }
    }
    let bounds: Vec<usize> = groups.iter().map(|_| rng.gen_range(0..=3usize)).collect();
    (m, groups, bounds)
}

/// Exact rational sum of `r_g / (|S ∩ F_g| + 1)` as (num, den), den > 0.
fn penalty_rational(groups: &[Vec<usize>], bounds: &[usize], s: &[usize]) -> (i128, i128) {
    let (mut num, mut den) = (0i128, 1i128);
    for (group, &r) in groups.iter().zip(bounds) {
        let c = group.iter().filter(|f| s.contains(f)).count() as i128 + 1;
        num = num * c + r as i128 * den;
        den *= c;
    }
    (num, den)
}

/// Criterion 2: The fractional representation penalty is supermodular: per-group triple
/// checks, whole-objective checks, and the counting inequality they rest on,
/// all in exact integer arithmetic.
#[test]
fn criterion_02_penalty_supermodularity() {
    criterion(2, "fractional penalty supermodularity", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x02);
        for _ in 0..10_000 {
            let (m, groups, bounds) = random_universe(&mut rng);
            let ka = rng.gen_range(0..=m);
            let kb = rng.gen_range(0..=m);
            let a = index::sample(&mut rng, m, ka).into_vec();
            let b = index::sample(&mut rng, m, kb).into_vec();

            // Per-group inequality on subsets of one group.
            let g = rng.gen_range(0..groups.len());
            let sub = |s: &[usize]| -> Vec<usize> {
                s.iter().copied().filter(|f| groups[g].contains(f)).collect()
            };
            assert!(
                check_supermodular_triple(&groups[g], bounds[g], &sub(&a), &sub(&b)).unwrap(),
                "single-group supermodularity failed"
            );

            // Whole objective: p(A∩B) + p(A∪B) ≥ p(A) + p(B), cross-multiplied.
            let inter: Vec<usize> = a.iter().copied().filter(|f| b.contains(f)).collect();
            let mut uni = a.clone();
            uni.extend(b.iter().copied().filter(|f| !a.contains(f)));
            let (ni, di) = penalty_rational(&groups, &bounds, &inter);
            let (nu, du) = penalty_rational(&groups, &bounds, &uni);
            let (na, da) = penalty_rational(&groups, &bounds, &a);
            let (nb, db) = penalty_rational(&groups, &bounds, &b);
            assert!(
                (ni * du + nu * di) * (da * db) >= (na * db + nb * da) * (di * du),
                "whole-objective supermodularity failed"
            );

            assert!(check_cardinality_inequality(&a, &b));
        }
        assert!(start.elapsed().as_secs_f64() < 5.0, "budget: under 5 s");
    });
}

fn all_connected_graphs(n: usize) -> Vec<Graph> {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            pairs.push((u, v));
        }
    }
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let g = Graph::new(n, &edges).unwrap();
        if g.is_connected() {
            out.push(g);
        }
    }
    out
}

fn assert_reductions_agree(g: &Graph, k: usize) {
    let dom = exact_domset(g, k).unwrap().is_some();
    let dom_inst = from_domset(g, k).unwrap();
    let dom_kmed = exact_solve(&dom_inst, None, &limits()).unwrap().is_some();
    assert_eq!(dom, dom_kmed, "domset mismatch: k={} edges={:?}", k, g.edges());
    if g.n_edges() > 0 {
        let vc = exact_vertexcover(g, k).unwrap().is_some();
        let vc_inst = from_vertexcover(g, k).unwrap();
        let vc_kmed = exact_solve(&vc_inst, None, &limits()).unwrap().is_some();
        assert_eq!(vc, vc_kmed, "cover mismatch: k={} edges={:?}", k, g.edges());
    }
}

/// Criterion 3: Hardness reductions are exact: a dominating set (vertex cover) of size
/// k exists iff the reduced instance has a feasible center set, across every
/// connected graph on up to 6 vertices and 200 random graphs on up to 8.
#[test]
fn criterion_03_reduction_oracle_equivalence() {
    criterion(3, "reduction oracle equivalence", || {
        let start = Instant::now();
        for n in 1..=6 {
            for g in all_connected_graphs(n) {
                for k in 1..=3usize.min(n) {
                    assert_reductions_agree(&g, k);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x03);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            for k in 1..=3usize.min(n) {
                assert_reductions_agree(&g, k);
            }
        }
        assert!(start.elapsed().as_secs_f64() < 60.0, "budget: under 60 s");
    });
}

/// Criterion 4: Pair-swap on two tight disjoint groups stays within the proven factor:
/// 3.001 x exact, with delta = 1e-9 standing in for the epsilon slack.
#[test]
fn criterion_04_red_blue_guarantee() {
    criterion(4, "red-blue pair-swap guarantee", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x04);
        let mut done = 0usize;
        while done < 200 {
            let m = rng.gen_range(4..=10usize);
            let k = rng.gen_range(2..=4usize.min(m - 1));
            let r1 = rng.gen_range(1..k);
            let seed = rng.gen::<u64>();
            let params = RandomMetricParams {
                lower_bounds: vec![r1, k - r1],
                ..RandomMetricParams::new(m, 2, k, seed)
            };
            let inst = match random_metric(&params) {
                Ok(i) => i,
                Err(_) => continue, // group draw could not cover the bounds
            };
            let report = rb_swap(&inst, &LsConfig::default()).unwrap();
            let exact = exact_solve(&inst, None, &limits()).unwrap().unwrap();
            assert!(
                report.solution.cost <= 3.001 * exact.cost,
                "ratio {} on seed {}",
                report.solution.cost / exact.cost,
                seed
            );
            done += 1;
        }
        assert!(start.elapsed().as_secs_f64() < 120.0, "budget: under 120 s");
    });
}

/// Criterion 5: Profile completion is lossless: minimizing over equality-constrained
/// profiles equals the inequality-constrained optimum, and the profile count
/// is the stars-and-bars number when no group-size cap binds.
#[test]
fn criterion_05_completion_correctness() {
    criterion(5, "constraint-profile completion", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x05);
        let mut done = 0usize;
        while done < 100 {
            let t = rng.gen_range(2..=3usize);
            let m = rng.gen_range(8..=10usize);
            // Every group must reach size k for the uncapped profile count
            // to apply, so keep t * k within m.
            let k = rng.gen_range(2..=(m / t).min(4));
            let sum_r = rng.gen_range(0..k);
            let mut bounds = vec![0usize; t];
            for _ in 0..sum_r {
                bounds[rng.gen_range(0..t)] += 1;
            }
            let seed = rng.gen::<u64>();
            let params = RandomMetricParams {
                lower_bounds: bounds.clone(),
                ..RandomMetricParams::new(m, t, k, seed)
            };
            let inst = match random_metric(&params) {
                Ok(i) => i,
                Err(_) => continue,
            };
            let sizes: Vec<usize> = inst.groups().iter().map(|g| g.len()).collect();
            if sizes.iter().any(|&s| s < k) {
                continue; // keep size caps slack so the unbounded count applies
            }

            let profiles = enumerate_profiles(&bounds, &sizes, k).unwrap();
            let extra = k - sum_r;
            assert_eq!(
                profiles.len() as u128,
                profile_count_unbounded(extra, t),
                "profile count off on seed {}",
                seed
            );
            if t == 2 {
                assert_eq!(profiles.len(), extra + 1);
            }

            let ineq = exact_solve(&inst, None, &limits()).unwrap().unwrap();
            let best_eq = profiles
                .iter()
                .filter_map(|p| exact_solve_eq(&inst, &p.bounds, &limits()).unwrap())
                .map(|s| s.cost)
                .fold(f64::INFINITY, f64::min);
            assert!(
                (best_eq - ineq.cost).abs() <= 1e-12,
                "completion gap {} on seed {}",
                best_eq - ineq.cost,
                seed
            );
            done += 1;
        }
    });
}

/// Criterion 6: Every state the feasible swap search accepts is feasible, and its
/// terminal state is certified locally optimal by an independent exhaustive
/// swap scan.
#[test]
fn criterion_06_feasible_swap_certificates() {
    criterion(6, "feasible swap-path certificates", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x06);
        let cfg = LsConfig {
            restarts: 2,
            trace_states: true,
            ..LsConfig::default()
        };
        let mut done = 0usize;
        while done < 100 {
            let overlapping = done % 2 == 1;
            let m = rng.gen_range(8..=14usize);
            let t = rng.gen_range(2..=3usize);
            let k = rng.gen_range(t..=4usize);
            let mut bounds = vec![1usize; t];
            bounds[0] = (k - t + 1).min(2);
            let seed = rng.gen::<u64>();
            let params = RandomMetricParams {
                lower_bounds: bounds,
                overlap: if overlapping { 0.3 } else { 0.0 },
                ..RandomMetricParams::new(m, t, k, seed)
            };
            let inst = match random_metric(&params) {
                Ok(i) => i,
                Err(_) => continue,
            };
            let report = match ls1(&inst, &cfg, None) {
                Ok(r) => r,
                Err(_) => continue, // no feasible start found for this draw
            };
            let states = report.states.as_ref().expect("tracing was enabled");
            for s in states {
                assert!(check(&inst, s), "accepted infeasible state {:?}", s);
            }
            assert!(
                no_improving_feasible_swap(&inst, &report.solution.centers, cfg.delta),
                "terminal state not locally optimal on seed {}",
                seed
            );
            done += 1;
        }
    });
}

fn count_inversions(seq: &[f64], increasing: bool) -> usize {
    seq.windows(2)
        .filter(|w| {
            if increasing {
                w[1] < w[0] - 1e-12
            } else {
                w[1] > w[0] + 1e-12
            }
        })
        .count()
}

/// Criterion 7: Sweeping the penalty weight trades representation for cost: violations
/// fall and the price of diversity rises with lambda, allowing one inversion
/// per instance for solver noise.
#[test]
fn criterion_07_relaxed_sweep_trend() {
    criterion(7, "penalty-weight sweep trend", || {
        let start = Instant::now();
        let cfg = LsConfig {
            restarts: 3,
            ..LsConfig::default()
        };
        for seed in 0..5u64 {
            let inst = random_metric(&RandomMetricParams {
                lower_bounds: vec![3, 3, 3, 3],
                overlap: 0.3,
                ..RandomMetricParams::new(200, 4, 10, seed)
            })
            .unwrap();
            let base = ls0(&inst, inst.k(), &cfg).unwrap();
            let mut l_star = Vec::new();
            let mut pods = Vec::new();
            for lambda in lambda_grid() {
                let report = relaxed_ls(&inst, lambda, &cfg).unwrap();
                l_star.push(violation_fraction(&inst, &report.solution.centers).unwrap());
                pods.push(pod(report.solution.cost, base.solution.cost).unwrap());
            }
            assert!(
                count_inversions(&l_star, false) <= 1,
                "violation trend broke on seed {}: {:?}",
                seed,
                l_star
            );
            assert!(
                count_inversions(&pods, true) <= 1,
                "cost trend broke on seed {}: {:?}",
                seed,
                pods
            );
        }
        assert!(start.elapsed().as_secs_f64() < 600.0, "budget: under 10 min");
    });
}

/// Criterion 8: Distance shrinking only ever discounts: the working matrix is pointwise
/// non-increasing, untouched facilities keep their exact distances, and any
/// returned solution is feasible with its cost re-derived from the original
/// metric.
#[test]
fn criterion_08_shrinking_invariants() {
    criterion(8, "distance-shrinking invariants", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x08);
        let mut done = 0usize;
        while done < 50 {
            let m = rng.gen_range(10..=16usize);
            let t = rng.gen_range(2..=3usize);
            let k = rng.gen_range(3..=4usize);
            let mut bounds = vec![1usize; t];
            bounds[t - 1] = 2.min(k - t + 1).max(1);
            let seed = rng.gen::<u64>();
            let params = RandomMetricParams {
                lower_bounds: bounds,
                ..RandomMetricParams::new(m, t, k, seed)
            };
            let inst = match random_metric(&params) {
                Ok(i) => i,
                Err(_) => continue,
            };
            let cfg = ShrinkConfig {
                epsilon: 0.15,
                max_iter: 30,
                inner: LsConfig {
                    restarts: 3,
                    seed,
                    ..LsConfig::default()
                },
                ..ShrinkConfig::default()
            };
            let (report, rounds) = iterative_shrinking_traced(&inst, &cfg).unwrap();
            let original: Vec<Vec<f64>> = (0..inst.n_clients())
                .map(|c| (0..inst.n_facilities()).map(|f| inst.distance(c, f)).collect())
                .collect();
            let mut prev = &original;
            for round in &rounds {
                for (c, (prow, arow)) in prev.iter().zip(&round.dprime_after).enumerate() {
                    for (f, (&before, &after)) in prow.iter().zip(arow).enumerate() {
                        assert!(after <= before, "distance grew at ({}, {})", c, f);
                        if round.factors[f] == 1.0 {
                            assert_eq!(after, before, "untouched facility {} moved", f);
                        }
                    }
                }
                prev = &round.dprime_after;
            }
            if let Some(report) = report {
                assert!(check(&inst, &report.solution.centers));
                let recomputed = kmedian_cost(&inst, &report.solution.centers).unwrap();
                assert!((report.solution.cost - recomputed).abs() <= 1e-12);
            }
            done += 1;
        }
    });
}

/// Criterion 9: The incremental swap delta agrees with recomputing the objective from
/// scratch on 1000 random (instance, set, swap) draws.
#[test]
fn criterion_09_swap_delta_oracle() {
    criterion(9, "incremental swap delta", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x09);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=20usize);
            let m = rng.gen_range(3..=20usize);
            let matrix: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0.0..10.0)).collect())
                .collect();
            let inst = Instance::new(
                n,
                m,
                2.min(m),
                vec![(0..m).collect()],
                vec![0],
                DistanceSource::Matrix(matrix),
            )
            .unwrap();
            // Keep at least one facility outside the set so a swap exists.
            let k = rng.gen_range(2..=6usize.min(m - 1));
            let centers = {
                let mut s = index::sample(&mut rng, m, k).into_vec();
                s.sort_unstable();
                s
            };
            let out = centers[rng.gen_range(0..k)];
            let inc = loop {
                let f = rng.gen_range(0..m);
                if !centers.contains(&f) {
                    break f;
                }
            };
            let cache = CostCache::build(&inst, &centers).unwrap();
            let delta = cache.swap_delta(&inst, out, inc).unwrap();
            let mut swapped: Vec<usize> = centers
                .iter()
                .copied()
                .filter(|&f| f != out)
                .chain(std::iter::once(inc))
                .collect();
            swapped.sort_unstable();
            let full = kmedian_cost(&inst, &swapped).unwrap()
                - kmedian_cost(&inst, &centers).unwrap();
            assert!(
                (delta - full).abs() <= 1e-9,
                "delta {} vs full {}",
                delta,
                full
            );
        }
    });
}

/// Criterion 10: Same instance, seed, and flags give byte-identical solution JSON for
/// every solver once timing is zeroed.
#[test]
fn criterion_10_byte_identical_reruns() {
    criterion(10, "byte-identical reruns", || {
        let bin = env!("CARGO_BIN_EXE_divkmed");
        let dir = tempfile::tempdir().unwrap();
        let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

        let gen = |args: &[&str]| {
            let out = std::process::Command::new(bin).args(args).output().unwrap();
            assert!(out.status.success(), "{:?}", out);
        };
        let tight = path("tight.json");
        gen(&[
            "gen", "random", "--n", "20", "--t", "2", "--k", "4", "--seed", "1", "--bounds",
            "2,2", "--out", &tight,
        ]);
        let fig2 = path("fig2.json");
        gen(&["gen", "fig2", "--c", "10", "--out", &fig2]);

        let solve = |args: &[&str]| -> Vec<u8> {
            let out = std::process::Command::new(bin).args(args).output().unwrap();
            assert!(out.status.success(), "{:?}", out);
            out.stdout
        };
        let (tight, fig2) = (tight.as_str(), fig2.as_str());
        let cases: Vec<Vec<&str>> = vec![
            vec!["solve", tight, "--algo", "ls0", "--seed", "11", "--no-timing"],
            vec!["solve", tight, "--algo", "ls1", "--seed", "11", "--no-timing"],
            vec!["solve", tight, "--algo", "ls2", "--seed", "11", "--no-timing"],
            vec!["solve", tight, "--algo", "rb", "--seed", "11", "--no-timing"],
            vec![
                "solve", tight, "--algo", "relaxed", "--lambda", "4", "--seed", "11",
                "--no-timing",
            ],
            vec![
                "solve", tight, "--algo", "shrink", "--epsilon", "0.1", "--seed", "11",
                "--no-timing",
            ],
            vec!["solve", fig2, "--algo", "oracle", "--no-timing"],
        ];
        for args in &cases {
            let first = solve(args);
            let second = solve(args);
            assert_eq!(first, second, "{:?} differed between runs", args);
            assert!(!first.is_empty());
        }
    });
}
