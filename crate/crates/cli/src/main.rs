//! Command-line front end: simulate runs, analyze schedules, construct the
//! adversarial schedules, reproduce the convergence experiment, and play or
//! solve scheduler-luck games.
//!
//! Exit codes: 0 = success, 1 = error, 2 = ran but did not stabilize (or
//! the luck player did not win).

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pavlov::dynamics::Configuration;
use pavlov::gf2;
use pavlov::graph::{classify_for_1fair_adversary, perfect_matching, Family, Graph};
use pavlov::schedulers::{
    construct_1fair_nonnilpotent, construct_2fair_enumeration, star_3fair_schedule, Decision,
    SchedulerSpec,
};
use pavlov::strategies::{play_game, solve_luck_game, LuckStrategy};
use pavlov::verify::{
    convergence_experiment, default_max_steps, estimate_stabilization, exhaustive_1fair_check,
    fairness_profile, reference_mean_rounds, ExperimentMode, InitialCondition, PermFamily,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "pavlov",
    version,
    about = "Pavlov dynamics under adversarial scheduling"
)]
struct Cli {
    /// Master seed (falls back to $PAVLOV_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Thread count for parallel trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the machine-readable report (JSON, or CSV for `experiment`)
    /// to this file.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Print the machine-readable report to stdout instead of text.
    #[arg(long, global = true, value_parser = ["text", "json", "csv"], default_value = "text")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Graph family: line|cycle|star|complete|k4|k3-merge.
    #[arg(long, conflicts_with = "file")]
    family: Option<String>,
    /// Family size parameter (vertices, or leaves for star).
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Load the graph from a text file (`n m` header, one `u v` per line).
    #[arg(long)]
    file: Option<String>,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph> {
        match (&self.family, &self.file) {
            (Some(f), None) => {
                let family: Family = f.parse()?;
                Ok(family.generate(self.n)?)
            }
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading graph file {path}"))?;
                Ok(Graph::from_text(&text)?)
            }
            _ => bail!("specify exactly one graph source: --family or --file"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the dynamics under a scheduler and report stabilization.
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        /// Scheduler: `random-edge` | `periodic-edge:P` | `periodic-node:P`
        /// | `shuffled-node` | `constant-edge:IDX` | `constant-node:V` |
        /// `each-edge-twice` | `star-3fair` | `k3-adaptive` | `2fair` |
        /// `1fair-adversarial`, where P = `id`, `p3`, `13`, or a comma
        /// list.
        #[arg(long, default_value = "random-edge")]
        scheduler: String,
        /// Replay a schedule file (`E u v` / `N u` lines) instead.
        #[arg(long)]
        schedule_file: Option<String>,
        /// Initial configuration: random | ones | a 0/1 string.
        #[arg(long, default_value = "random")]
        x0: String,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Step budget per trial (default: 10^4 · n · ln(n+1)).
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Classify a graph and test schedule nilpotency.
    Analyze {
        #[command(flatten)]
        graph: GraphArgs,
        /// Edge labeling to analyze, as a comma list of edge indices in
        /// label order.
        #[arg(long)]
        permutation: Option<String>,
        /// Construct a stabilization-precluding 1-fair labeling.
        #[arg(long)]
        construct: bool,
        /// Sweep every edge permutation (m <= 8).
        #[arg(long)]
        exhaustive: bool,
        /// Also dump the schedule matrix (GF(2) rows) and its integer
        /// counterpart.
        #[arg(long)]
        show_matrix: bool,
    },
    /// Construct an adversarial schedule and print it, one decision per
    /// line.
    Construct {
        #[command(flatten)]
        graph: GraphArgs,
        /// What to construct: 2fair | 1fair | each-edge-twice | star3fair.
        #[arg(long)]
        what: String,
        /// Periods to print (the schedules repeat).
        #[arg(long, default_value_t = 1)]
        periods: usize,
    },
    /// Reproduce the mean-rounds experiment on cycles.
    Experiment {
        /// Permutation families, comma-separated: id,p3,pattern13,rd.
        #[arg(long, default_value = "id,p3")]
        families: String,
        /// Cycle sizes, comma-separated powers of two in [4, 1024].
        #[arg(long = "n", default_value = "4,8,16,32,64,128")]
        n_list: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Permutations range over nodes or edges.
        #[arg(long, value_parser = ["node", "edge"], default_value = "node")]
        mode: String,
        /// Also print the reference values and relative deviation.
        #[arg(long)]
        compare_paper: bool,
    },
    /// Play or solve a scheduler-luck game.
    Game {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "periodic-node:id")]
        scheduler: String,
        /// Strategy: star | matching | line | tree | auto.
        #[arg(long, default_value = "auto")]
        strategy: String,
        /// Initial configuration: random | ones | all | a 0/1 string.
        #[arg(long, default_value = "ones")]
        x0: String,
        #[arg(long, default_value_t = 64)]
        max_rounds: usize,
        /// Decide the game exactly instead of playing the strategy.
        #[arg(long)]
        solve: bool,
        /// Dump the winning strategy tree as JSON.
        #[arg(long)]
        witness: Option<String>,
        /// `all` to exhaust every start, or a count of random starts.
        #[arg(long, default_value = "1")]
        trials: String,
    },
    /// Exhaustively verify all 1-fair edge daemons of a graph.
    Verify {
        #[command(flatten)]
        graph: GraphArgs,
        /// Profile a scheduler's empirical fairness instead.
        #[arg(long)]
        profile: Option<String>,
        /// Steps for --profile runs.
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn resolve_seed(cli_seed: Option<u64>) -> u64 {
    cli_seed
        .or_else(|| {
            std::env::var("PAVLOV_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0)
}

fn header(seed: u64) -> String {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    format!("pavlov {VERSION} | seed {seed} | {}", argv.join(" "))
}

fn emit<T: Serialize>(
    cli_out: &Option<String>,
    format: &str,
    text: &str,
    report: &T,
) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    if format == "json" {
        println!("{json}");
    } else {
        println!("{text}");
    }
    if let Some(path) = cli_out {
        fs::write(path, json).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }
    let seed = resolve_seed(cli.seed);
    match cli.command {
        Command::Simulate {
            ref graph,
            ref scheduler,
            ref schedule_file,
            ref x0,
            trials,
            max_steps,
        } => cmd_simulate(
            &cli,
            seed,
            graph,
            scheduler,
            schedule_file,
            x0,
            trials,
            max_steps,
        ),
        Command::Analyze {
            ref graph,
            ref permutation,
            construct,
            exhaustive,
            show_matrix,
        } => cmd_analyze(
            &cli,
            seed,
            graph,
            permutation,
            construct,
            exhaustive,
            show_matrix,
        ),
        Command::Construct {
            ref graph,
            ref what,
            periods,
        } => cmd_construct(seed, graph, what, periods),
        Command::Experiment {
            ref families,
            ref n_list,
            samples,
            ref mode,
            compare_paper,
        } => cmd_experiment(&cli, seed, families, n_list, samples, mode, compare_paper),
        Command::Game {
            ref graph,
            ref scheduler,
            ref strategy,
            ref x0,
            max_rounds,
            solve,
            ref witness,
            ref trials,
        } => cmd_game(
            &cli, seed, graph, scheduler, strategy, x0, max_rounds, solve, witness, trials,
        ),
        Command::Verify {
            ref graph,
            ref profile,
            steps,
        } => cmd_verify(&cli, seed, graph, profile, steps),
    }
}

fn parse_perm(spec: &str, len: usize) -> Result<Vec<usize>> {
    match spec {
        "id" => Ok((0..len).collect()),
        "p3" => {
            if len.is_multiple_of(3) {
                bail!("p3 requires gcd(3, {len}) = 1");
            }
            Ok((0..len).map(|i| 3 * i % len).collect())
        }
        "13" | "(13)" | "pattern13" => Ok((0..len)
            .map(|i| match i % 4 {
                1 => i + 1,
                2 => i - 1,
                _ => i,
            })
            .map(|i| i.min(len - 1))
            .collect()),
        list => list
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("{e}")))
            .collect(),
    }
}

fn parse_scheduler(spec: &str, g: &Graph) -> Result<SchedulerSpec> {
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    Ok(match head {
        "random-edge" => SchedulerSpec::RandomEdge,
        "periodic-edge" => SchedulerSpec::PeriodicEdge {
            perm: parse_perm(arg.unwrap_or("id"), g.m())?,
        },
        "periodic-node" => SchedulerSpec::PeriodicNode {
            perm: parse_perm(arg.unwrap_or("id"), g.n())?,
        },
        "shuffled-node" => SchedulerSpec::ShuffledNode,
        "constant-edge" => SchedulerSpec::ConstantEdge {
            edge: arg.unwrap_or("0").parse()?,
        },
        "constant-node" => SchedulerSpec::ConstantNode {
            node: arg.unwrap_or("0").parse()?,
        },
        "each-edge-twice" => SchedulerSpec::EachEdgeTwice,
        "star-3fair" => SchedulerSpec::StarThreeFair,
        "k3-adaptive" => SchedulerSpec::K3Adaptive,
        "2fair" => SchedulerSpec::Replay {
            decisions: construct_2fair_enumeration(g)?
                .into_iter()
                .map(|(u, v)| Decision::Edge(u, v))
                .collect(),
        },
        "1fair-adversarial" => {
            let order = construct_1fair_nonnilpotent(g)?;
            SchedulerSpec::PeriodicEdge { perm: order }
        }
        other => bail!("unknown scheduler {other:?}"),
    })
}

fn parse_x0(spec: &str, n: usize) -> Result<InitialCondition> {
    Ok(match spec {
        "random" => InitialCondition::RandomNonzero,
        "ones" => InitialCondition::Fixed(Configuration::ones(n)),
        bits => {
            let x = Configuration::parse(bits)?;
            if x.n() != n {
                bail!("x0 has {} bits, graph has {n} vertices", x.n());
            }
            InitialCondition::Fixed(x)
        }
    })
}

#[derive(Serialize)]
struct SimulateReport {
    version: String,
    seed: u64,
    config: String,
    graph: String,
    trials: usize,
    successes: usize,
    p_hat: f64,
    stderr: f64,
    final_config: Option<String>,
    steps_taken: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cli: &Cli,
    seed: u64,
    graph: &GraphArgs,
    scheduler: &str,
    schedule_file: &Option<String>,
    x0: &str,
    trials: usize,
    max_steps: Option<usize>,
) -> Result<ExitCode> {
    let g = graph.load()?;
    let spec = match schedule_file {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let decisions = parse_schedule_file(&text)?;
            SchedulerSpec::Replay { decisions }
        }
        None => parse_scheduler(scheduler, &g)?,
    };
    let init = parse_x0(x0, g.n())?;
    let max_steps = max_steps.unwrap_or_else(|| default_max_steps(g.n()));

    let mut text = header(seed);
    let (report, ok);
    if trials == 1 {
        let mut sched = spec.build(&g, seed, 0)?;
        let start = match &init {
            InitialCondition::Fixed(x) => x.clone(),
            InitialCondition::RandomNonzero => {
                // One trial: draw via the estimation path for consistency.
                return cmd_simulate_estimate(cli, seed, &g, &spec, &init, 1, max_steps, text);
            }
        };
        let out = pavlov::schedulers::drive(&g, &mut sched, &start, max_steps, true, false)?;
        ok = out.reached_zero;
        writeln!(text)?;
        writeln!(text, "graph: n={} m={}", g.n(), g.m())?;
        writeln!(text, "x0:    {start}")?;
        writeln!(text, "final: {}", out.final_config)?;
        writeln!(text, "steps: {}", out.steps_taken)?;
        write!(
            text,
            "verdict: {}",
            if ok {
                "stabilized"
            } else {
                "did not stabilize within budget"
            }
        )?;
        report = SimulateReport {
            version: VERSION.into(),
            seed,
            config: header(seed),
            graph: g.to_text(),
            trials: 1,
            successes: ok as usize,
            p_hat: ok as usize as f64,
            stderr: 0.0,
            final_config: Some(out.final_config.to_string()),
            steps_taken: Some(out.steps_taken),
        };
        emit(&cli.out, &cli.format, &text, &report)?;
        return Ok(ExitCode::from(if ok { 0 } else { 2 }));
    }
    let est = estimate_stabilization(&g, &spec, &init, trials, max_steps, seed)?;
    ok = est.p_hat == 1.0;
    writeln!(text)?;
    writeln!(text, "graph: n={} m={}", g.n(), g.m())?;
    writeln!(
        text,
        "trials: {}  stabilized: {}  p_hat: {:.4}  stderr: {:.4}",
        est.trials, est.successes, est.p_hat, est.stderr
    )?;
    write!(text, "max_steps per trial: {max_steps}")?;
    report = SimulateReport {
        version: VERSION.into(),
        seed,
        config: header(seed),
        graph: g.to_text(),
        trials: est.trials,
        successes: est.successes,
        p_hat: est.p_hat,
        stderr: est.stderr,
        final_config: None,
        steps_taken: None,
    };
    emit(&cli.out, &cli.format, &text, &report)?;
    Ok(ExitCode::from(if ok { 0 } else { 2 }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate_estimate(
    cli: &Cli,
    seed: u64,
    g: &Graph,
    spec: &SchedulerSpec,
    init: &InitialCondition,
    trials: usize,
    max_steps: usize,
    mut text: String,
) -> Result<ExitCode> {
    let est = estimate_stabilization(g, spec, init, trials, max_steps, seed)?;
    writeln!(text)?;
    writeln!(text, "graph: n={} m={}", g.n(), g.m())?;
    writeln!(
        text,
        "trials: {}  stabilized: {}  p_hat: {:.4}  stderr: {:.4}",
        est.trials, est.successes, est.p_hat, est.stderr
    )?;
    write!(text, "max_steps per trial: {max_steps}")?;
    let report = SimulateReport {
        version: VERSION.into(),
        seed,
        config: header(seed),
        graph: g.to_text(),
        trials: est.trials,
        successes: est.successes,
        p_hat: est.p_hat,
        stderr: est.stderr,
        final_config: None,
        steps_taken: None,
    };
    emit(&cli.out, &cli.format, &text, &report)?;
    Ok(ExitCode::from(if est.p_hat == 1.0 { 0 } else { 2 }))
}

fn parse_schedule_file(text: &str) -> Result<Vec<Decision>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(Decision::parse_line(line, lineno + 1)?);
    }
    if out.is_empty() {
        bail!("schedule file contains no decisions");
    }
    Ok(out)
}

#[derive(Serialize)]
struct AnalyzeReport {
    version: String,
    seed: u64,
    config: String,
    graph: String,
    class: String,
    labeling: Option<Vec<usize>>,
    nilpotent: Option<bool>,
    s1_parity: Option<u8>,
    s2_parity: Option<u8>,
    constructed: Option<Vec<usize>>,
    constructed_nilpotent: Option<bool>,
    exhaustive: Option<pavlov::verify::ExhaustiveReport>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    cli: &Cli,
    seed: u64,
    graph: &GraphArgs,
    permutation: &Option<String>,
    construct: bool,
    exhaustive: bool,
    show_matrix: bool,
) -> Result<ExitCode> {
    let g = graph.load()?;
    let class = classify_for_1fair_adversary(&g)?;
    let mut text = header(seed);
    writeln!(text)?;
    writeln!(text, "graph: n={} m={}", g.n(), g.m())?;
    writeln!(text, "class: {class}")?;

    let mut report = AnalyzeReport {
        version: VERSION.into(),
        seed,
        config: header(seed),
        graph: g.to_text(),
        class: class.to_string(),
        labeling: None,
        nilpotent: None,
        s1_parity: None,
        s2_parity: None,
        constructed: None,
        constructed_nilpotent: None,
        exhaustive: None,
    };

    let order: Option<Vec<usize>> = match permutation {
        Some(spec) => Some(parse_perm(spec, g.m())?),
        None => (g.m() <= 12).then(|| (0..g.m()).collect()),
    };
    if let Some(order) = order {
        let m = pavlov::schedulers::matrix_for(&g, &order)?;
        let pi = gf2::integer_schedule_matrix(&g, &order)?;
        let nil = m.is_nilpotent();
        let s1 = pi.principal_minor_parity(1)?;
        let s2 = if g.n() >= 2 {
            Some(pi.principal_minor_parity(2)?)
        } else {
            None
        };
        writeln!(text, "labeling: {order:?}")?;
        writeln!(text, "nilpotent: {nil}")?;
        writeln!(text, "s1 parity: {s1}")?;
        if let Some(s2) = s2 {
            writeln!(text, "s2 parity: {s2}")?;
        }
        if show_matrix {
            writeln!(text, "schedule matrix (GF(2)):\n{m}")?;
            writeln!(text, "integer product:\n{pi}")?;
        }
        report.labeling = Some(order);
        report.nilpotent = Some(nil);
        report.s1_parity = Some(s1);
        report.s2_parity = s2;
    }

    if construct {
        match construct_1fair_nonnilpotent(&g) {
            Ok(order) => {
                let nil = pavlov::schedulers::matrix_for(&g, &order)?.is_nilpotent();
                writeln!(text, "constructed labeling: {order:?}")?;
                writeln!(text, "constructed nilpotent: {nil}")?;
                report.constructed = Some(order);
                report.constructed_nilpotent = Some(nil);
            }
            Err(e) => {
                writeln!(text, "construction unsupported: {e}")?;
            }
        }
    }

    if exhaustive {
        let rep = exhaustive_1fair_check(&g)?;
        writeln!(
            text,
            "exhaustive: {} permutations, {} stabilize, {} fail",
            rep.permutations_tested,
            rep.stabilizing_permutations,
            rep.failures.len()
        )?;
        if let Some(note) = &rep.note {
            writeln!(text, "note: {note}")?;
        }
        report.exhaustive = Some(rep);
    }
    let text = text.trim_end().to_string();
    emit(&cli.out, &cli.format, &text, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_construct(seed: u64, graph: &GraphArgs, what: &str, periods: usize) -> Result<ExitCode> {
    let g = graph.load()?;
    let decisions: Vec<Decision> = match what {
        "2fair" => construct_2fair_enumeration(&g)?
            .into_iter()
            .map(|(u, v)| Decision::Edge(u, v))
            .collect(),
        "1fair" => {
            let order = construct_1fair_nonnilpotent(&g)?;
            order
                .into_iter()
                .map(|i| {
                    let (u, v) = g.edge(i);
                    Decision::Edge(u, v)
                })
                .collect()
        }
        "each-edge-twice" => g
            .edges()
            .iter()
            .flat_map(|&(u, v)| [Decision::Edge(u, v), Decision::Edge(u, v)])
            .collect(),
        "star3fair" => {
            let n = g.n();
            if !(n >= 3 && g.degree(0) == n - 1) {
                bail!("star3fair needs a star with center 0");
            }
            star_3fair_schedule(n - 1)?
                .into_iter()
                .map(Decision::Node)
                .collect()
        }
        other => bail!("unknown construction {other:?} (2fair|1fair|each-edge-twice|star3fair)"),
    };
    println!("# {}", header(seed));
    println!(
        "# graph: n={} m={}  construction: {what}  period length: {}",
        g.n(),
        g.m(),
        decisions.len()
    );
    for _ in 0..periods.max(1) {
        for d in &decisions {
            println!("{}", d.to_line());
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ExperimentReport {
    version: String,
    seed: u64,
    config: String,
    mode: String,
    rows: Vec<ExperimentRowOut>,
}

#[derive(Serialize)]
struct ExperimentRowOut {
    family: String,
    n: usize,
    samples: usize,
    mean_rounds: f64,
    stderr: f64,
    seed: u64,
    reference: Option<f64>,
    relative_deviation: Option<f64>,
}

fn cmd_experiment(
    cli: &Cli,
    seed: u64,
    families: &str,
    n_list: &str,
    samples: usize,
    mode: &str,
    compare_paper: bool,
) -> Result<ExitCode> {
    let families: Vec<PermFamily> = families
        .split(',')
        .map(|f| f.trim().parse())
        .collect::<Result<_, _>>()?;
    let ns: Vec<usize> = n_list
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;
    let mode_enum = if mode == "edge" {
        ExperimentMode::EdgeDaemon
    } else {
        ExperimentMode::NodeDaemon
    };
    let table = convergence_experiment(&ns, &families, samples, seed, mode_enum)?;

    let rows: Vec<ExperimentRowOut> = table
        .rows
        .iter()
        .map(|r| {
            let family: PermFamily = r.family.parse().expect("round-trips");
            let reference = compare_paper
                .then(|| reference_mean_rounds(family, r.n))
                .flatten();
            let relative_deviation = reference.map(|ref_v| (r.mean_rounds - ref_v).abs() / ref_v);
            ExperimentRowOut {
                family: r.family.clone(),
                n: r.n,
                samples: r.samples,
                mean_rounds: r.mean_rounds,
                stderr: r.stderr,
                seed: r.seed,
                reference,
                relative_deviation,
            }
        })
        .collect();

    let mut csv = String::from(if compare_paper {
        "family,n,samples,mean_rounds,stderr,seed,reference,relative_deviation\n"
    } else {
        "family,n,samples,mean_rounds,stderr,seed\n"
    });
    for r in &rows {
        if compare_paper {
            writeln!(
                csv,
                "{},{},{},{:.4},{:.4},{},{},{}",
                r.family,
                r.n,
                r.samples,
                r.mean_rounds,
                r.stderr,
                r.seed,
                r.reference.map_or(String::new(), |v| format!("{v:.3}")),
                r.relative_deviation
                    .map_or(String::new(), |v| format!("{v:.4}")),
            )?;
        } else {
            writeln!(
                csv,
                "{},{},{},{:.4},{:.4},{}",
                r.family, r.n, r.samples, r.mean_rounds, r.stderr, r.seed
            )?;
        }
    }

    let report = ExperimentReport {
        version: VERSION.into(),
        seed,
        config: header(seed),
        mode: mode.into(),
        rows,
    };
    match cli.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&report)?),
        _ => {
            println!("# {}", header(seed));
            print!("{csv}");
        }
    }
    if let Some(path) = &cli.out {
        if cli.format == "json" {
            fs::write(path, serde_json::to_string_pretty(&report)?)?;
        } else {
            fs::write(path, &csv)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct GameReport {
    version: String,
    seed: u64,
    config: String,
    graph: String,
    mode: String,
    won: Option<bool>,
    rounds_used: Option<usize>,
    luck_wins: Option<bool>,
    states_explored: Option<usize>,
    starts_tested: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_game(
    cli: &Cli,
    seed: u64,
    graph: &GraphArgs,
    scheduler: &str,
    strategy: &str,
    x0: &str,
    max_rounds: usize,
    solve: bool,
    witness: &Option<String>,
    trials: &str,
) -> Result<ExitCode> {
    let g = graph.load()?;
    let spec = parse_scheduler(scheduler, &g)?;
    let mut text = header(seed);
    writeln!(text)?;
    writeln!(text, "graph: n={} m={}", g.n(), g.m())?;

    let mut report = GameReport {
        version: VERSION.into(),
        seed,
        config: header(seed),
        graph: g.to_text(),
        mode: if solve { "solve".into() } else { "play".into() },
        won: None,
        rounds_used: None,
        luck_wins: None,
        states_explored: None,
        starts_tested: None,
    };

    if solve {
        let start = match x0 {
            "ones" => Configuration::ones(g.n()),
            "random" => bail!("--solve needs a fixed x0 (use ones or a bit string)"),
            bits => Configuration::parse(bits)?,
        };
        let sched = spec.build(&g, seed, 0)?;
        let out = solve_luck_game(&g, &sched, &start, None)?;
        writeln!(text, "x0: {start}")?;
        write!(
            text,
            "luck wins: {}  (states explored: {})",
            out.luck_wins, out.states_explored
        )?;
        if let (Some(path), Some(w)) = (witness, &out.witness) {
            fs::write(path, serde_json::to_string_pretty(w)?)?;
            write!(text, "\nwitness written to {path}")?;
        }
        report.luck_wins = Some(out.luck_wins);
        report.states_explored = Some(out.states_explored);
        emit(&cli.out, &cli.format, &text, &report)?;
        return Ok(ExitCode::from(if out.luck_wins { 0 } else { 2 }));
    }

    let strat = build_strategy(strategy, &g)?;
    let play_one = |start: &Configuration| -> Result<bool> {
        let mut sched = spec.build(&g, seed, 0)?;
        let out = play_game(&g, &mut sched, &strat, start, max_rounds, false)?;
        Ok(out.won)
    };

    if x0 == "all" || trials == "all" {
        if g.n() > 16 {
            bail!("exhausting all starts is limited to 16 vertices");
        }
        let mut all_won = true;
        let mut failures = Vec::new();
        for mask in 0..1u64 << g.n() {
            let start = Configuration::from_mask(mask, g.n());
            if !play_one(&start)? {
                all_won = false;
                failures.push(start.to_string());
            }
        }
        writeln!(text, "starts tested: {}", 1u64 << g.n())?;
        write!(
            text,
            "verdict: {}",
            if all_won {
                "won from every start".into()
            } else {
                format!(
                    "lost from {} starts (first: {})",
                    failures.len(),
                    failures[0]
                )
            }
        )?;
        report.won = Some(all_won);
        report.starts_tested = Some(1 << g.n());
        emit(&cli.out, &cli.format, &text, &report)?;
        return Ok(ExitCode::from(if all_won { 0 } else { 2 }));
    }

    let trial_count: usize = trials.parse().context("--trials takes `all` or a count")?;
    if trial_count > 1 {
        let mut wins = 0;
        for i in 0..trial_count as u64 {
            let start = InitialCondition::RandomNonzero.sample(g.n(), seed, i);
            wins += play_one(&start)? as usize;
        }
        writeln!(text, "trials: {trial_count}  won: {wins}")?;
        let all_won = wins == trial_count;
        report.won = Some(all_won);
        report.starts_tested = Some(trial_count);
        emit(&cli.out, &cli.format, &text, &report)?;
        return Ok(ExitCode::from(if all_won { 0 } else { 2 }));
    }

    let start = match x0 {
        "ones" => Configuration::ones(g.n()),
        "random" => InitialCondition::RandomNonzero.sample(g.n(), seed, 0),
        bits => Configuration::parse(bits)?,
    };
    let mut sched = spec.build(&g, seed, 0)?;
    let out = play_game(&g, &mut sched, &strat, &start, max_rounds, false)?;
    writeln!(text, "x0: {start}")?;
    write!(
        text,
        "won: {}  rounds used: {}  steps: {}",
        out.won, out.rounds_used, out.steps
    )?;
    report.won = Some(out.won);
    report.rounds_used = Some(out.rounds_used);
    emit(&cli.out, &cli.format, &text, &report)?;
    Ok(ExitCode::from(if out.won { 0 } else { 2 }))
}

fn build_strategy(spec: &str, g: &Graph) -> Result<LuckStrategy> {
    Ok(match spec {
        "star" => LuckStrategy::star_for_graph(g)?,
        "matching" => {
            let m = perfect_matching(g).ok_or_else(|| anyhow!("graph has no perfect matching"))?;
            LuckStrategy::matching(&m)?
        }
        "line" => {
            let path = path_order(g)?;
            LuckStrategy::line(&path)?
        }
        "tree" => LuckStrategy::for_tree(g)?,
        "auto" => LuckStrategy::for_random_graph(g)
            .ok_or_else(|| anyhow!("no winning-strategy certificate found"))?,
        other => bail!("unknown strategy {other:?} (star|matching|line|tree|auto)"),
    })
}

/// Vertices of a path graph in path order.
fn path_order(g: &Graph) -> Result<Vec<usize>> {
    let n = g.n();
    if g.m() != n - 1 || (0..n).any(|v| g.degree(v) > 2) || !g.is_connected() {
        bail!("graph is not a path");
    }
    let start = (0..n).find(|&v| g.degree(v) == 1).unwrap();
    let mut order = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    while order.len() < n {
        let next = *g
            .neighbors(cur)
            .iter()
            .find(|&&w| w != prev)
            .expect("interior path vertex has a next neighbor");
        order.push(next);
        prev = cur;
        cur = next;
    }
    Ok(order)
}

#[derive(Serialize)]
struct VerifyReport {
    version: String,
    seed: u64,
    config: String,
    exhaustive: Option<pavlov::verify::ExhaustiveReport>,
    profile: Option<pavlov::verify::FairnessProfile>,
}

fn cmd_verify(
    cli: &Cli,
    seed: u64,
    graph: &GraphArgs,
    profile: &Option<String>,
    steps: usize,
) -> Result<ExitCode> {
    let g = graph.load()?;
    let mut text = header(seed);
    writeln!(text)?;
    writeln!(text, "graph: n={} m={}", g.n(), g.m())?;
    let mut report = VerifyReport {
        version: VERSION.into(),
        seed,
        config: header(seed),
        exhaustive: None,
        profile: None,
    };
    if let Some(sched) = profile {
        let spec = parse_scheduler(sched, &g)?;
        let prof = fairness_profile(&g, &spec, steps, seed)?;
        writeln!(text, "profiled {} steps", prof.report.steps)?;
        writeln!(
            text,
            "worst-case bound: {}",
            prof.report
                .bound
                .map_or("undefined".into(), |b| b.to_string())
        )?;
        for (q, v) in &prof.quantiles {
            writeln!(text, "  window-max p{:.0}: {v}", q * 100.0)?;
        }
        if !prof.report.never_rescheduled.is_empty() {
            writeln!(
                text,
                "never rescheduled: {:?}",
                prof.report.never_rescheduled
            )?;
        }
        report.profile = Some(prof);
        let text = text.trim_end().to_string();
        emit(&cli.out, &cli.format, &text, &report)?;
        return Ok(ExitCode::SUCCESS);
    }
    let rep = exhaustive_1fair_check(&g)?;
    writeln!(
        text,
        "permutations: {}  stabilizing: {}  failing: {}",
        rep.permutations_tested,
        rep.stabilizing_permutations,
        rep.failures.len()
    )?;
    if let Some(note) = &rep.note {
        writeln!(text, "note: {note}")?;
    }
    write!(
        text,
        "verdict: {}",
        if rep.all_stabilize() {
            "every 1-fair edge daemon stabilizes this graph"
        } else {
            "some 1-fair edge daemon precludes stabilization"
        }
    )?;
    report.exhaustive = Some(rep);
    emit(&cli.out, &cli.format, &text, &report)?;
    Ok(ExitCode::SUCCESS)
}
