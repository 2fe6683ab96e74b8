//! Command-line surface: generate instances, solve them, sweep benchmarks,
//! and ingest CSV data. All outputs are machine-readable (JSON or CSV).
//!
//! Exit codes: 0 success, 2 usage or precondition failure, 3 no solution
//! (infeasible, inconclusive, or non-convergent), 4 oracle refusal (search
//! space above its cap).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::completion::solve_with_completion;
use crate::feasibility::check;
use crate::instance::{
    fig2_counterexample, from_domset, from_vertexcover, load_csv, random_metric, CsvSchema,
    Graph, GroupMode, Instance, InstanceError, RandomMetricParams,
};
use crate::localsearch::{ls0, ls1, ls2, rb_swap, LsConfig, SolveError, SolveReport};
use crate::metrics::{l1_representation, pod, violation_fraction};
use crate::oracle::{exact_solve, OracleError, OracleLimits};
use crate::relaxed::{lambda_grid, relaxed_ls_from};
use crate::rng::derive_seed;
use crate::shrink::{iterative_shrinking, DiscountPolicy, ShrinkConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;
pub const EXIT_ORACLE_REFUSAL: i32 = 4;

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
    fn no_solution(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NO_SOLUTION,
            message: message.into(),
        }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Infeasible(_) | SolveError::Inconclusive(_) => {
                Failure::no_solution(e.to_string())
            }
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooManySubsets { .. } | OracleError::TooLarge { .. } => Failure {
                code: EXIT_ORACLE_REFUSAL,
                message: e.to_string(),
            },
            OracleError::Precondition(_) => Failure::usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "divkmed",
    about = "Diversity-aware k-median: generators, solvers, and benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance as JSON.
    #[command(subcommand)]
    Gen(GenKind),
    /// Solve an instance and emit a solution JSON.
    Solve(SolveArgs),
    /// Sweep constraint levels and emit a CSV of quality metrics.
    Bench(BenchArgs),
    /// Build an instance from a CSV of records with protected attributes.
    Ingest(IngestArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// Two clients, four facilities, one expensive and one cheap feasible
    /// pair; the swap-trap regression instance.
    Fig2 {
        /// Distance of the expensive facilities (> 1).
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded random points in the unit cube with grouped facilities.
    Random {
        /// Number of clients (and facilities, unless --m is given).
        #[arg(long)]
        n: usize,
        /// Number of facilities.
        #[arg(long)]
        m: Option<usize>,
        /// Number of groups.
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability a facility joins each non-base group.
        #[arg(long, default_value_t = 0.0)]
        overlap: f64,
        /// Point dimension.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Comma-separated lower bounds, one per group (default all 1).
        #[arg(long, value_delimiter = ',')]
        bounds: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dominating-set reduction: unit distances, one group per vertex
    /// (closed neighborhood), all bounds 1.
    Domset {
        /// Graph JSON: {"n": 3, "edges": [[0,1],[1,2]]}.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vertex-cover reduction: unit distances, one group per edge.
    Vertexcover {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Ls0,
    Ls1,
    Ls2,
    Rb,
    Relaxed,
    Shrink,
    Oracle,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Ls0 => "ls0",
            Algo::Ls1 => "ls1",
            Algo::Ls2 => "ls2",
            Algo::Rb => "rb",
            Algo::Relaxed => "relaxed",
            Algo::Shrink => "shrink",
            Algo::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileMode {
    /// Solve the instance as-is.
    None,
    /// Enumerate augmented bound profiles summing to k and keep the best
    /// solve (disjoint groups with slack only).
    Complete,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON path.
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Penalty weight (required for --algo relaxed).
    #[arg(long)]
    lambda: Option<f64>,
    /// Discount strength for --algo shrink.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Scan cap for swap solvers; round cap for shrink (default 50).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Worker threads for profile completion (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated starting centers (ls1 and relaxed only).
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = ProfileMode::None)]
    profile_mode: ProfileMode,
    /// Zero the timing field for byte-identical output.
    #[arg(long)]
    no_timing: bool,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance JSON path.
    instance: PathBuf,
    /// Solvers to sweep.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Ls1])]
    algos: Vec<Algo>,
    /// Minority-fraction grid: each value f rewrites the smallest group's
    /// bound to ceil(f * k).
    #[arg(long, value_delimiter = ',')]
    minority_fractions: Vec<f64>,
    /// Penalty-weight grid for the relaxed solver (default 2,4,...,128).
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restarts per sweep point; each emits a row, plus a min-cost
    /// aggregate row.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupModeArg {
    Disjoint,
    Intersect,
}

#[derive(Args)]
struct IngestArgs {
    /// CSV path with a header row.
    csv: PathBuf,
    /// Protected attribute columns (one for disjoint mode).
    #[arg(long, value_delimiter = ',', required = true)]
    protected: Vec<String>,
    #[arg(long, value_enum, default_value_t = GroupModeArg::Disjoint)]
    group_mode: GroupModeArg,
    /// Numeric feature columns (default: every non-protected column).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    #[arg(long)]
    k: usize,
    /// Comma-separated lower bounds, one per group (default all 0).
    #[arg(long, value_delimiter = ',')]
    bounds: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Solution JSON payload.
#[derive(Serialize)]
struct SolutionOut {
    centers: Vec<usize>,
    cost: f64,
    feasible: bool,
    per_group_counts: Vec<usize>,
    iterations: usize,
    seed: u64,
    algo: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Vec<usize>>,
    seconds: f64,
}

/// Parses arguments and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Gen(kind) => cmd_gen(kind),
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Ingest(args) => cmd_ingest(args),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_gen(kind: GenKind) -> Result<(), Failure> {
    let (inst, out) = match kind {
        GenKind::Fig2 { c, out } => (fig2_counterexample(c)?, out),
        GenKind::Random {
            n,
            m,
            t,
            k,
            seed,
            overlap,
            dim,
            bounds,
            out,
        } => {
            let mut params = RandomMetricParams::new(n, t, k, seed);
            params.n_facilities = m.unwrap_or(n);
            params.overlap = overlap;
            params.dim = dim;
            if let Some(b) = bounds {
                params.lower_bounds = b;
            }
            (random_metric(&params)?, out)
        }
        GenKind::Domset { graph, k, out } => {
            let g = Graph::from_json_file(&graph)?;
            (from_domset(&g, k)?, out)
        }
        GenKind::Vertexcover { graph, k, out } => {
            let g = Graph::from_json_file(&graph)?;
            (from_vertexcover(&g, k)?, out)
        }
    };
    emit(&(inst.to_json_string() + "\n"), out.as_deref())
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // Best effort: the global pool can only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn solution_json(out: &SolutionOut) -> String {
    serde_json::to_string_pretty(out).expect("solution serializes") + "\n"
}

fn report_out(report: &SolveReport, algo: Algo, no_timing: bool) -> SolutionOut {
    SolutionOut {
        centers: report.solution.centers.clone(),
        cost: report.solution.cost,
        feasible: report.feasible,
        per_group_counts: report.solution.per_group_counts.clone(),
        iterations: report.iterations,
        seed: report.seed,
        algo: algo.name().to_string(),
        profile: report.profile.clone(),
        seconds: if no_timing { 0.0 } else { report.seconds },
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    configure_threads(args.threads);
    let inst = Instance::from_json_file(&args.instance)?;
    let cfg = LsConfig {
        seed: args.seed,
        restarts: args.restarts,
        max_iters: if args.algo == Algo::Shrink {
            None
        } else {
            args.max_iter
        },
        ..LsConfig::default()
    };
    let init = args.init.as_deref();
    if init.is_some() && !matches!(args.algo, Algo::Ls1 | Algo::Relaxed) {
        return Err(Failure::usage(
            "--init applies to --algo ls1 and relaxed only",
        ));
    }

    let solver = |sub: &Instance| -> Result<SolveReport, SolveError> {
        match args.algo {
            Algo::Ls0 => ls0(sub, sub.k(), &cfg),
            Algo::Ls1 => ls1(sub, &cfg, init),
            Algo::Ls2 => ls2(sub, &cfg),
            Algo::Rb => rb_swap(sub, &cfg),
            Algo::Relaxed => unreachable!("handled separately"),
            Algo::Shrink => unreachable!("handled separately"),
            Algo::Oracle => unreachable!("handled separately"),
        }
    };

    let payload = match args.algo {
        Algo::Oracle => {
            if args.profile_mode == ProfileMode::Complete {
                return Err(Failure::usage(
                    "--profile-mode complete applies to swap solvers, not the oracle",
                ));
            }
            let sol = exact_solve(&inst, None, &OracleLimits::default())?
                .ok_or_else(|| Failure::no_solution("no feasible center set exists"))?;
            SolutionOut {
                feasible: check(&inst, &sol.centers),
                per_group_counts: sol.per_group_counts.clone(),
                centers: sol.centers,
                cost: sol.cost,
                iterations: 0,
                seed: args.seed,
                algo: args.algo.name().to_string(),
                profile: None,
                seconds: 0.0,
            }
        }
        Algo::Shrink => {
            let scfg = ShrinkConfig {
                epsilon: args.epsilon,
                max_iter: args.max_iter.unwrap_or(50),
                policy: DiscountPolicy::Power,
                inner: LsConfig {
                    max_iters: None,
                    ..cfg.clone()
                },
            };
            let report = iterative_shrinking(&inst, &scfg)?.ok_or_else(|| {
                Failure::no_solution(format!(
                    "distance shrinking did not converge within {} rounds",
                    scfg.max_iter
                ))
            })?;
            report_out(&report, args.algo, args.no_timing)
        }
        Algo::Relaxed => {
            let lambda = args.lambda.ok_or_else(|| {
                Failure::usage("--algo relaxed needs an explicit --lambda weight")
            })?;
            let report = relaxed_ls_from(&inst, lambda, &cfg, init)?;
            report_out(&report, args.algo, args.no_timing)
        }
        _ => {
            let report = match args.profile_mode {
                ProfileMode::None => solver(&inst)?,
                ProfileMode::Complete => {
                    if args.algo == Algo::Ls0 {
                        return Err(Failure::usage(
                            "--profile-mode complete needs a constraint-aware solver",
                        ));
                    }
                    let parallel = args.threads.is_none_or(|n| n > 1);
                    solve_with_completion(&inst, parallel, solver)?
                }
            };
            report_out(&report, args.algo, args.no_timing)
        }
    };
    emit(&solution_json(&payload), args.out.as_deref())
}

/// Index of the smallest group (ties toward the lowest index): the group a
/// minority-fraction sweep constrains.
fn minority_group(inst: &Instance) -> usize {
    inst.groups()
        .iter()
        .enumerate()
        .min_by_key(|(i, g)| (g.len(), *i))
        .map(|(i, _)| i)
        .expect("instances have at least one group")
}

struct BenchRow {
    level: f64,
    algo: &'static str,
    seed: u64,
    cost: Option<f64>,
    pod: Option<f64>,
    l1: Option<f64>,
    l_star: Option<f64>,
    feasible: Option<bool>,
    seconds: f64,
    status: &'static str,
}

fn write_rows(rows: &[BenchRow], out: Option<&Path>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "level", "algo", "seed", "cost", "pod", "l1", "l_star", "feasible", "seconds", "status",
    ])
    .expect("csv header");
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.algo.to_string(),
            r.seed.to_string(),
            fmt(r.cost),
            fmt(r.pod),
            fmt(r.l1),
            fmt(r.l_star),
            r.feasible.map(|b| b.to_string()).unwrap_or_default(),
            r.seconds.to_string(),
            r.status.to_string(),
        ])
        .expect("csv row");
    }
    let bytes = w.into_inner().expect("csv buffer");
    emit(std::str::from_utf8(&bytes).expect("csv is utf-8"), out)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    configure_threads(args.threads);
    let inst = Instance::from_json_file(&args.instance)?;
    let restarts = args.restarts.max(1);

    // Sweep points: (algo, level, instance-with-level-bounds).
    let mut points: Vec<(Algo, f64, Instance)> = Vec::new();
    for &algo in &args.algos {
        if algo == Algo::Relaxed {
            let grid = if args.lambdas.is_empty() {
                lambda_grid()
            } else {
                args.lambdas.clone()
            };
            for lambda in grid {
                points.push((algo, lambda, inst.clone()));
            }
        } else {
            if algo == Algo::Oracle || algo == Algo::Ls0 {
                return Err(Failure::usage(
                    "bench sweeps constraint-aware solvers; the unconstrained baseline runs automatically",
                ));
            }
            for &frac in &args.minority_fractions {
                if !(0.0..=1.0).contains(&frac) {
                    return Err(Failure::usage(format!(
                        "minority fraction {} outside [0, 1]",
                        frac
                    )));
                }
                let mut bounds = inst.lower_bounds().to_vec();
                bounds[minority_group(&inst)] = (frac * inst.k() as f64).ceil() as usize;
                let leveled = inst.with_lower_bounds(bounds)?;
                points.push((algo, frac, leveled));
            }
        }
    }

    let mut rows: Vec<BenchRow> = Vec::new();
    if points.is_empty() {
        return write_rows(&rows, args.out.as_deref());
    }

    // Unconstrained baseline: best of the configured restarts.
    let base_cfg = LsConfig {
        seed: args.seed,
        restarts,
        ..LsConfig::default()
    };
    let baseline = ls0(&inst, inst.k(), &base_cfg).map_err(Failure::from)?;
    let base_cost = baseline.solution.cost;
    let base_counts = baseline.solution.per_group_counts.clone();
    rows.push(BenchRow {
        level: 0.0,
        algo: "ls0",
        seed: args.seed,
        cost: Some(base_cost),
        pod: Some(0.0),
        l1: Some(0.0),
        l_star: violation_fraction(&inst, &baseline.solution.centers).ok(),
        feasible: Some(baseline.feasible),
        seconds: if args.no_timing { 0.0 } else { baseline.seconds },
        status: "baseline",
    });

    let mut stream: u64 = 1;
    for (algo, level, leveled) in &points {
        let mut block: Vec<&BenchRow> = Vec::new();
        let block_start = rows.len();
        for _ in 0..restarts {
            let seed = derive_seed(args.seed, stream);
            stream += 1;
            let cfg = LsConfig {
                seed,
                restarts: 1,
                ..LsConfig::default()
            };
            let solved: Result<SolveReport, SolveError> = match algo {
                Algo::Ls1 => ls1(leveled, &cfg, None),
                Algo::Ls2 => ls2(leveled, &cfg),
                Algo::Rb => rb_swap(leveled, &cfg),
                Algo::Relaxed => relaxed_ls_from(leveled, *level, &cfg, None),
                Algo::Shrink => {
                    let scfg = ShrinkConfig {
                        epsilon: args.epsilon,
                        inner: cfg.clone(),
                        ..ShrinkConfig::default()
                    };
                    iterative_shrinking(leveled, &scfg).and_then(|opt| {
                        opt.ok_or_else(|| {
                            SolveError::Inconclusive("shrinking did not converge".into())
                        })
                    })
                }
                Algo::Ls0 | Algo::Oracle => unreachable!("rejected above"),
            };
            let row = match solved {
                Ok(report) => BenchRow {
                    level: *level,
                    algo: algo.name(),
                    seed,
                    cost: Some(report.solution.cost),
                    pod: pod(report.solution.cost, base_cost).ok(),
                    l1: l1_representation(
                        &report.solution.per_group_counts,
                        &base_counts,
                        inst.k(),
                        inst.t(),
                    )
                    .ok(),
                    l_star: violation_fraction(leveled, &report.solution.centers).ok(),
                    feasible: Some(report.feasible),
                    seconds: if args.no_timing { 0.0 } else { report.seconds },
                    status: "ok",
                },
                Err(e) => BenchRow {
                    level: *level,
                    algo: algo.name(),
                    seed,
                    cost: None,
                    pod: None,
                    l1: None,
                    l_star: None,
                    feasible: None,
                    seconds: 0.0,
                    status: match e {
                        SolveError::Infeasible(_) => "infeasible",
                        SolveError::Inconclusive(_) => "inconclusive",
                        _ => "error",
                    },
                },
            };
            rows.push(row);
        }
        for row in &rows[block_start..] {
            block.push(row);
        }
        // Aggregate: the cheapest successful restart of this sweep point.
        let best = block
            .iter()
            .filter(|r| r.status == "ok")
            .min_by(|a, b| a.cost.partial_cmp(&b.cost).expect("finite costs"));
        let agg = match best {
            Some(b) => BenchRow {
                level: *level,
                algo: algo.name(),
                seed: args.seed,
                cost: b.cost,
                pod: b.pod,
                l1: b.l1,
                l_star: b.l_star,
                feasible: b.feasible,
                seconds: b.seconds,
                status: "aggregate",
            },
            None => BenchRow {
                level: *level,
                algo: algo.name(),
                seed: args.seed,
                cost: None,
                pod: None,
                l1: None,
                l_star: None,
                feasible: None,
                seconds: 0.0,
                status: block
                    .iter()
                    .map(|r| r.status)
                    .find(|&s| s != "ok")
                    .unwrap_or("error"),
            },
        };
        rows.push(agg);
    }
    write_rows(&rows, args.out.as_deref())
}

fn cmd_ingest(args: IngestArgs) -> Result<(), Failure> {
    let schema = CsvSchema {
        protected: args.protected.clone(),
        features: args.features.clone(),
        group_mode: match args.group_mode {
            GroupModeArg::Disjoint => GroupMode::Disjoint,
            GroupModeArg::Intersect => GroupMode::Intersect,
        },
    };
    let loaded = load_csv(&args.csv, &schema, args.k, args.bounds.clone())?;
    for w in &loaded.warnings {
        eprintln!("warning: {}", w);
    }
    // Group-size summary, stderr so stdout stays pure JSON.
    let sizes: Vec<usize> = loaded.instance.groups().iter().map(|g| g.len()).collect();
    eprintln!("group sizes ({} groups):", sizes.len());
    for (label, size) in loaded.group_labels.iter().zip(&sizes) {
        eprintln!("  {:<30} {}", label, size);
    }
    if let (Some(&min), Some(&max)) = (sizes.iter().min(), sizes.iter().max()) {
        eprintln!("  min {}  max {}", min, max);
    }
    emit(
        &(loaded.instance.to_json_string() + "\n"),
        args.out.as_deref(),
    )
}
