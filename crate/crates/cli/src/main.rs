//! `dcop`: generate problems, run BnB-ADOPT variants, check them against the
//! exact oracle and replay the built-in four-agent example.
//!
//! Exit codes: 0 success, 2 bound violation or trace mismatch, 3 cycle cap
//! reached, 4 unreadable or malformed input, 64 bad command line.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dcop::fixtures;
use dcop::gen::{self, GenSpec};
use dcop::io::{read_problem, write_problem, LoadedProblem};
use dcop::oracle::exact_solve;
use dcop::sim::{csv_mean_row, csv_row, trace_tsv, RunOutcome, CSV_HEADER};
use dcop::{run, Cost, Error, HeuristicTable, Problem, PseudoTree, SimConfig, Transport, TransportConfig, Variant};

const EXIT_VIOLATION: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_INPUT: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "dcop", version, about = "BnB-ADOPT distributed constraint optimization solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a problem file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Output path; stdout when omitted.
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Run a solver variant and print CSV metrics.
    Run(RunArgs),
    /// Run a solver variant and check its cost against the exact optimum.
    Verify(RunArgs),
    /// Replay the four-agent example and compare every cycle with the
    /// expected variable dump.
    ReplayPaper {
        /// Print the captured trace as TSV.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Random graph coloring: 3 colors, density·n random edges.
    Coloring {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        density: f64,
        #[arg(long, default_value_t = 10000)]
        cost_max: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sensor network on a grid of targets.
    Sensor {
        #[arg(long)]
        targets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Hierarchical meeting scheduling, five meetings per unit.
    Meeting {
        #[arg(long)]
        units: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The four-agent example with its pseudo-tree and heuristic table.
    Example,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantKind {
    Optimal,
    Aem,
    Rem,
    Whm,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicKind {
    Zero,
    Dp2,
    /// The `heuristics` block of the problem file.
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportKind {
    Sync,
    Delay,
}

#[derive(Args)]
struct RunArgs {
    /// Problem file, or a generator spec: `coloring:N:DENSITY:COST_MAX`,
    /// `sensor:TARGETS` or `meeting:UNITS` (seeded by --seed/--seeds).
    problem: String,
    #[arg(long, value_enum, default_value = "optimal")]
    variant: VariantKind,
    /// Absolute error bound (aem).
    #[arg(long)]
    b: Option<f64>,
    /// Relative error bound (rem).
    #[arg(long)]
    p: Option<f64>,
    /// Heuristic weight (whm).
    #[arg(long)]
    w: Option<f64>,
    #[arg(long, value_enum, default_value = "dp2")]
    heuristic: HeuristicKind,
    /// Multiply heuristic values by this factor in [0, 1], rounding down.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, value_enum, default_value = "sync")]
    transport: TransportKind,
    /// Largest extra delay in cycles (delay transport).
    #[arg(long, default_value_t = 3)]
    max_delay: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inclusive seed range `a..b`; one row per seed plus a mean row.
    #[arg(long, conflicts_with = "seed")]
    seeds: Option<String>,
    /// NCCC cost charged per message.
    #[arg(long, default_value_t = 0)]
    nccc_t: u64,
    #[arg(long, default_value_t = 1_000_000)]
    cycle_cap: u64,
    /// Write one TSV trace per run.
    #[arg(long)]
    trace: bool,
    /// Trace directory; DCOP_TRACE_DIR takes precedence.
    #[arg(long, default_value = "traces")]
    trace_dir: PathBuf,
    /// Append CSV rows to this file instead of stdout.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[arg(long)]
    no_header: bool,
}

/// Outcome classes that map to exit codes.
#[derive(Debug)]
enum Failure {
    Violation(String),
    Timeout(String),
    Input(String),
    Usage(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Timeout { .. }) => Failure::Timeout(format!("{e:#}")),
            Some(
                Error::Io(_)
                | Error::Json(_)
                | Error::Format(_)
                | Error::UnknownAgent { .. }
                | Error::OutOfDomain { .. }
                | Error::EmptyDomain { .. }
                | Error::SelfConstraint(_)
                | Error::DuplicateConstraint(..)
                | Error::BadCostTable { .. }
                | Error::InvalidTree(_)
                | Error::InvalidHeuristic(_)
                | Error::Disconnected { .. },
            ) => Failure::Input(format!("{e:#}")),
            _ => Failure::Other(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Gen { kind, out } => cmd_gen(kind, out.as_deref()),
        Command::Run(args) => cmd_run(&args, false),
        Command::Verify(args) => cmd_run(&args, true),
        Command::ReplayPaper { trace } => cmd_replay(trace),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Timeout(msg)) => {
            eprintln!("timeout: {msg}");
            ExitCode::from(EXIT_TIMEOUT)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_gen(kind: GenKind, out: Option<&Path>) -> Result<(), Failure> {
    let (problem, tree, heuristics) = match kind {
        GenKind::Coloring { n, density, cost_max, seed } => {
            (gen::generate(GenSpec::GraphColoring { n, density, cost_max }, seed)?, None, None)
        }
        GenKind::Sensor { targets, seed } => (gen::generate(GenSpec::SensorNetwork { targets }, seed)?, None, None),
        GenKind::Meeting { units, seed } => (gen::generate(GenSpec::MeetingScheduling { units }, seed)?, None, None),
        GenKind::Example => {
            let p = fixtures::example_problem();
            let t = fixtures::example_tree(&p);
            let h = fixtures::example_heuristics(&p, &t);
            (p, Some(t), Some(h))
        }
    };
    match out {
        Some(path) => write_problem(path, &problem, tree.as_ref(), heuristics.as_ref())?,
        None => println!("{}", dcop::io::problem_to_json(&problem, tree.as_ref(), heuristics.as_ref())),
    }
    Ok(())
}

fn parse_seeds(args: &RunArgs) -> Result<Vec<u64>, Failure> {
    let Some(range) = &args.seeds else { return Ok(vec![args.seed]) };
    let (a, b) = range.split_once("..").ok_or_else(|| usage(format!("--seeds expects a..b, got {range}")))?;
    let a: u64 = a.trim().parse().map_err(|_| usage(format!("bad seed {a}")))?;
    let b: u64 = b.trim().parse().map_err(|_| usage(format!("bad seed {b}")))?;
    if a > b {
        return Err(usage(format!("empty seed range {range}")));
    }
    Ok((a..=b).collect())
}

fn usage(msg: String) -> Failure {
    Failure::Usage(msg)
}

fn variant_of(args: &RunArgs) -> Result<Variant, Failure> {
    let need = |x: Option<f64>, flag: &str| x.ok_or_else(|| usage(format!("this variant needs --{flag}")));
    let v = match args.variant {
        VariantKind::Optimal => Variant::Optimal,
        VariantKind::Aem => Variant::Absolute(need(args.b, "b")?),
        VariantKind::Rem => Variant::Relative(need(args.p, "p")?),
        VariantKind::Whm => Variant::Weighted(need(args.w, "w")?),
    };
    v.validate().map_err(|e| usage(e.to_string()))?;
    Ok(v)
}

/// Problem for one seed: the file (seed unused) or a generator spec.
fn load(spec: &str, seed: u64) -> Result<(String, LoadedProblem), Failure> {
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    let nums: Vec<&str> = parts.collect();
    let num = |i: usize| -> Result<f64, Failure> {
        nums.get(i)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| usage(format!("bad generator spec {spec}")))
    };
    let gen_spec = match (kind, nums.len()) {
        ("coloring", 3) => Some(GenSpec::GraphColoring { n: num(0)? as usize, density: num(1)?, cost_max: num(2)? as u32 }),
        ("sensor", 1) => Some(GenSpec::SensorNetwork { targets: num(0)? as usize }),
        ("meeting", 1) => Some(GenSpec::MeetingScheduling { units: num(0)? as usize }),
        _ => None,
    };
    match gen_spec {
        Some(g) => {
            let problem = gen::generate(g, seed)?;
            Ok((spec.replace(':', "-"), LoadedProblem { problem, tree: None, heuristics: None }))
        }
        None => {
            let lp = read_problem(spec).with_context(|| format!("reading {spec}"))?;
            let name = Path::new(spec).file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, lp))
        }
    }
}

fn heuristics_for(args: &RunArgs, lp: &LoadedProblem, p: &Problem, t: &PseudoTree) -> Result<HeuristicTable, Failure> {
    let h = match args.heuristic {
        HeuristicKind::Zero => HeuristicTable::zero(p, t),
        HeuristicKind::Dp2 => HeuristicTable::dp2(p, t),
        HeuristicKind::File => {
            if lp.tree.is_none() {
                return Err(Failure::Input("--heuristic file needs a pseudo_tree block in the problem file".into()));
            }
            lp.heuristics
                .clone()
                .ok_or_else(|| Failure::Input("problem file has no heuristics block".into()))?
        }
    };
    match args.scale {
        Some(c) => h.scale(c).map_err(|e| usage(e.to_string())),
        None => Ok(h),
    }
}

fn trace_dir(args: &RunArgs) -> PathBuf {
    std::env::var_os("DCOP_TRACE_DIR").map(PathBuf::from).unwrap_or_else(|| args.trace_dir.clone())
}

struct CsvSink {
    file: Option<std::fs::File>,
}

impl CsvSink {
    fn open(args: &RunArgs) -> Result<Self, Failure> {
        let file = match &args.csv_out {
            Some(path) => {
                let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                if fresh && !args.no_header {
                    writeln!(f, "{CSV_HEADER}").map_err(|e| Failure::Input(e.to_string()))?;
                }
                Some(f)
            }
            None => {
                if !args.no_header {
                    println!("{CSV_HEADER}");
                }
                None
            }
        };
        Ok(CsvSink { file })
    }

    fn row(&mut self, line: &str) -> Result<(), Failure> {
        match &mut self.file {
            Some(f) => writeln!(f, "{line}").map_err(|e| Failure::Input(e.to_string())),
            None => {
                println!("{line}");
                Ok(())
            }
        }
    }
}

fn cmd_run(args: &RunArgs, verify: bool) -> Result<(), Failure> {
    let variant = variant_of(args)?;
    let seeds = parse_seeds(args)?;
    let mut sink = CsvSink::open(args)?;
    let mut outcomes = Vec::new();
    let mut violations = Vec::new();
    let mut name = String::new();
    for &seed in &seeds {
        let (problem_name, lp) = load(&args.problem, seed)?;
        name = problem_name;
        let p = &lp.problem;
        let t = lp.tree_or_build()?;
        let h = heuristics_for(args, &lp, p, &t)?;
        let mode = match args.transport {
            TransportKind::Sync => Transport::Synchronous,
            TransportKind::Delay => Transport::RandomDelay { max_delay: args.max_delay, seed },
        };
        let cfg = SimConfig {
            variant,
            transport: TransportConfig { mode, nccc_t: args.nccc_t },
            cycle_cap: args.cycle_cap,
            capture_trace: args.trace || verify,
            ..SimConfig::default()
        };
        let out = run(p, &t, &h, &cfg)?;
        sink.row(&csv_row(&name, variant, &seed.to_string(), &out))?;
        if args.trace {
            write_trace(args, &name, variant, seed, &out)?;
        }
        if verify {
            let (opt, _) = exact_solve(p)?;
            let bound = variant.cost_bound(opt);
            let assignment_cost = p.solution_cost(&out.best_assignment)?;
            let ok = out.final_cost >= opt
                && out.final_cost.value() <= bound.value() + 1e-9
                && assignment_cost <= out.final_cost;
            eprintln!(
                "{} seed {seed}: cost {} optimum {opt} bound {bound} assignment cost {assignment_cost}",
                if ok { "ok  " } else { "FAIL" },
                out.final_cost
            );
            if !ok {
                eprint!("{}", trace_tsv(&out.trace));
                violations.push(seed);
            }
        }
        outcomes.push(out);
    }
    if seeds.len() > 1 {
        sink.row(&csv_mean_row(&name, variant, &outcomes))?;
    }
    if !violations.is_empty() {
        return Err(Failure::Violation(format!("cost outside the guaranteed bound for seeds {violations:?}")));
    }
    Ok(())
}

fn write_trace(args: &RunArgs, name: &str, variant: Variant, seed: u64, out: &RunOutcome) -> Result<(), Failure> {
    let dir = trace_dir(args);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("{name}-{}-{seed}.tsv", variant.name()));
    std::fs::write(&path, trace_tsv(&out.trace)).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn cmd_replay(show_trace: bool) -> Result<(), Failure> {
    let p = fixtures::example_problem();
    let t = fixtures::example_tree(&p);
    let example_h = fixtures::example_heuristics(&p, &t);
    let zero_h = HeuristicTable::zero(&p, &t);
    let mut failures = Vec::new();

    let cfg = SimConfig { capture_trace: true, ..SimConfig::default() };
    let out = run(&p, &t, &example_h, &cfg)?;
    let expected = fixtures::expected_example_trace();
    let mut mismatched = 0;
    for (k, rows) in expected.iter().enumerate() {
        for (a, want) in rows.iter().enumerate() {
            let got = out.trace.iter().find(|r| r.cycle == k as u64 + 1 && r.agent == a);
            let same = got.is_some_and(|g| {
                g.context == want.context
                    && g.value == want.value
                    && g.id == want.id
                    && g.threshold == want.threshold
                    && g.lb_d == want.lb_d
                    && g.lb == want.lb
                    && g.ub_d == want.ub_d
                    && g.ub == want.ub
                    && g.child_lb == want.child_lb
                    && g.child_ub == want.child_ub
            });
            if !same {
                mismatched += 1;
                failures.push(format!("trace differs at cycle {} agent {a}", k + 1));
            }
        }
    }
    println!("trace      {} of 36 agent-cycles match", 36 - mismatched);
    if show_trace {
        print!("{}", trace_tsv(&out.trace));
    }

    let cases: [(&str, &HeuristicTable, Variant, u32, u64); 5] = [
        ("optimal", &example_h, Variant::Optimal, 12, 9),
        ("zero-h", &zero_h, Variant::Optimal, 12, 9),
        ("aem b=24", &example_h, Variant::Absolute(24.0), 18, 3),
        ("rem p=3", &example_h, Variant::Relative(3.0), 18, 3),
        ("whm w=3", &example_h, Variant::Weighted(3.0), 18, 3),
    ];
    for (label, h, v, cost, cycles) in cases {
        let out = run(&p, &t, h, &SimConfig::new(v))?;
        let ok = out.final_cost == Cost::from(cost) && out.cycles == cycles;
        println!(
            "{label:<10} cost {} cycles {} (expected {cost}, {cycles}) {}",
            out.final_cost,
            out.cycles,
            if ok { "ok" } else { "MISMATCH" }
        );
        if !ok {
            failures.push(format!("{label}: cost {} cycles {}", out.final_cost, out.cycles));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(failures.join("; ")))
    }
}
