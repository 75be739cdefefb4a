//! Command-line driver: compile patterns to automata, analyze their
//! lookahead structure, match inputs in any mode, sweep benchmarks to
//! CSV, replay cluster simulations, and generate test corpora.
//!
//! Exit codes: 0 means the input was accepted (or the command has no
//! verdict and succeeded), 1 means rejected, 2 means an error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::prelude::*;

use pardfa_core::automata::{compile_regex_unminimized, emit_grail};
use pardfa_core::corpus;
use pardfa_core::runtime::cluster::{simulate_cluster, ClusterTopology};
use pardfa_core::{
    compile_regex, minimize, parse_grail, run_parallel, Dfa, LookaheadTable, Mode, RunConfig,
    RunReport, WeightSource,
};

type CliError = Box<dyn std::error::Error>;
type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "pardfa",
    about = "Failure-free speculative parallel DFA membership testing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a pattern (or ingest an automaton file) and summarize it.
    Compile(CompileArgs),
    /// Report candidate-set structure per lookahead depth as CSV.
    Analyze(AnalyzeArgs),
    /// Match one input file and print the verdict.
    Match(MatchArgs),
    /// Sweep modes and worker counts, one CSV record per run.
    Bench(BenchArgs),
    /// Replay a run on a modeled cluster and print its phase CSV.
    Simulate(SimulateArgs),
    /// Generate automata and matching inputs for experiments.
    GenCorpus(GenCorpusArgs),
}

/// Where the machine comes from: a pattern or an automaton file.
#[derive(Args)]
struct MachineArgs {
    /// Regular expression to compile (minimized).
    #[arg(long, conflicts_with = "dfa")]
    pattern: Option<String>,
    /// Automaton file in the line-oriented transition format.
    #[arg(long)]
    dfa: Option<PathBuf>,
}

impl MachineArgs {
    fn load(&self) -> CliResult<Dfa> {
        match (&self.pattern, &self.dfa) {
            (Some(p), None) => Ok(compile_regex(p)?),
            (None, Some(path)) => Ok(parse_grail(&fs::read_to_string(path)?)?),
            _ => Err("exactly one of --pattern or --dfa is required".into()),
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    /// Regular expression to compile.
    pattern: Option<String>,
    /// Ingest this automaton file instead of a pattern.
    #[arg(long, conflicts_with = "pattern")]
    dfa: Option<PathBuf>,
    /// Keep the machine as built instead of minimizing it.
    #[arg(long)]
    no_minimize: bool,
    /// Write the automaton to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(after_help = "\
CSV columns: r,windows,i_max,gamma,reduction_rate,set_sizes
  set_sizes is a quoted size:count histogram over all windows of depth r.
  With --plan, a blank line and a worker,start,end,lookahead_start table follow.")]
struct AnalyzeArgs {
    #[command(flatten)]
    machine: MachineArgs,
    /// Largest lookahead depth to analyze, 1 through 4.
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Append a chunk plan for this many workers.
    #[arg(long)]
    plan: Option<usize>,
    /// Input length the appended plan partitions.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    machine: MachineArgs,
    /// File holding the input string.
    input: PathBuf,
    /// sequential, basic, or lookahead.
    #[arg(long, default_value = "lookahead")]
    mode: String,
    /// Worker count; 0 uses every available thread.
    #[arg(long, default_value_t = 0)]
    p: usize,
    /// Lookahead depth in symbols.
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Candidate walks advanced together; 0 walks one at a time.
    #[arg(long, default_value_t = 0)]
    lanes: usize,
    /// uniform, profiled, or a comma-separated capacity list.
    #[arg(long, default_value = "uniform")]
    weights: String,
    /// Walk through sink states instead of cutting chunks short.
    #[arg(long)]
    no_shortcircuit: bool,
}

#[derive(Args)]
#[command(after_help = "\
CSV columns: dfa,states,alphabet,mode,workers,r,i_max,gamma,n,wall_us,
  speedup,speedup_display,per_worker_symbols,comm_fraction
  speedup is the raw sequential/parallel wall ratio; speedup_display folds
  ratios under 1 to -1/ratio. per_worker_symbols is a quoted space-joined
  list of chunk lengths. comm_fraction stays empty for live runs.")]
struct BenchArgs {
    /// Directory of automaton files to sweep.
    #[arg(long, conflicts_with_all = ["pattern", "dfa"])]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    machine: MachineArgs,
    /// Comma-separated modes to run.
    #[arg(long, default_value = "sequential,basic,lookahead")]
    modes: String,
    /// Comma-separated worker counts for the parallel modes.
    #[arg(long, default_value = "4")]
    p: String,
    /// Lookahead depth for structure columns and lookahead runs.
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Input length in symbols.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    /// Seed for input generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generate inputs that never leave the live states.
    #[arg(long)]
    planted: bool,
}

#[derive(Args)]
#[command(after_help = "\
CSV columns: phase,worker,node,start_us,end_us
  One row per match walk, per-node merge, and cross-node merge hop.
  A summary with finish_us, match_finish_us, tree_finish_us, and
  comm_fraction goes to stderr so the CSV stays clean.")]
struct SimulateArgs {
    /// Cluster description file.
    #[arg(long)]
    topology: PathBuf,
    #[command(flatten)]
    machine: MachineArgs,
    /// File holding the input string; omit to generate one.
    input: Option<PathBuf>,
    /// Length of the generated input when no file is given.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    /// Seed for input generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// basic or lookahead.
    #[arg(long, default_value = "lookahead")]
    mode: String,
    /// Lookahead depth in symbols.
    #[arg(long, default_value_t = 1)]
    r: usize,
}

#[derive(Args)]
#[command(after_help = "\
Manifest columns: id,states,alphabet,input_len,dfa_file,input_file
  One row per generated machine, written to stdout.")]
struct GenCorpusArgs {
    /// Directory the automata and inputs are written into.
    #[arg(long)]
    out: PathBuf,
    /// How many machines to generate.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Alphabet size for random machines, 1 through 26.
    #[arg(long, default_value_t = 4)]
    alphabet: usize,
    /// Generate motif patterns over the 20-letter protein alphabet.
    #[arg(long, conflicts_with = "alphabet")]
    amino: bool,
    /// Comma-separated state-count targets, cycled across machines.
    #[arg(long, default_value = "8,16,32")]
    states: String,
    /// Length of each generated input.
    #[arg(long, default_value_t = 100_000)]
    input_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Compile(args) => cmd_compile(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Match(args) => cmd_match(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::GenCorpus(args) => cmd_gen_corpus(args),
    }
}

fn parse_usize_list(text: &str, what: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("{what} expects comma-separated integers, got {t:?}").into())
        })
        .collect()
}

fn sink_label(dfa: &Dfa) -> String {
    match dfa.sink() {
        Some(s) => format!("s{s}"),
        None => "none".to_string(),
    }
}

fn cmd_compile(args: CompileArgs) -> CliResult<ExitCode> {
    let dfa = match (&args.pattern, &args.dfa) {
        (Some(p), None) => {
            if args.no_minimize {
                compile_regex_unminimized(p)?
            } else {
                compile_regex(p)?
            }
        }
        (None, Some(path)) => {
            let parsed = parse_grail(&fs::read_to_string(path)?)?;
            if args.no_minimize {
                parsed
            } else {
                minimize(&parsed)
            }
        }
        _ => return Err("pass a pattern or --dfa <file>".into()),
    };
    if let Some(out) = &args.out {
        fs::write(out, emit_grail(&dfa)?)?;
    }
    println!(
        "|Q|={} |Σ|={} sink={}",
        dfa.state_count(),
        dfa.alphabet().len(),
        sink_label(&dfa)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<ExitCode> {
    if args.r == 0 || args.r > 4 {
        return Err("--r must be between 1 and 4".into());
    }
    let dfa = args.machine.load()?;
    println!("r,windows,i_max,gamma,reduction_rate,set_sizes");
    let mut deepest = None;
    for r in 1..=args.r {
        let table = LookaheadTable::build(&dfa, r)?;
        let width = dfa.alphabet().len().max(1);
        let windows = width.pow(r as u32);
        let mut histogram = vec![0usize; table.i_max() + 1];
        let mut window = vec![0u8; r];
        for index in 0..windows {
            let mut rest = index;
            for slot in window.iter_mut().rev() {
                *slot = (rest % width) as u8;
                rest /= width;
            }
            let size = table.candidate_set_for(&window)?.len();
            histogram[size] += 1;
        }
        let sizes: Vec<String> = histogram
            .iter()
            .enumerate()
            .filter(|(_, &count)| count > 0)
            .map(|(size, count)| format!("{size}:{count}"))
            .collect();
        let gamma = table.gamma().value();
        println!(
            "{r},{windows},{},{gamma},{},\"{}\"",
            table.i_max(),
            1.0 - gamma,
            sizes.join(" ")
        );
        deepest = Some(table);
    }
    if let Some(workers) = args.plan {
        let table = deepest.expect("at least one depth was analyzed");
        let plan = pardfa_core::plan_chunks(
            args.n,
            &pardfa_core::WorkerProfile::uniform(workers),
            table.i_max(),
            Some(table.lookahead()),
        )?;
        println!();
        print!("{}", plan.to_csv());
    }
    Ok(ExitCode::SUCCESS)
}

fn verdict_line(report: &RunReport) -> String {
    if report.outcome.accepted {
        format!("ACCEPT s{}", report.outcome.last_state)
    } else {
        "REJECT".to_string()
    }
}

fn verdict_code(accepted: bool) -> ExitCode {
    if accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_match(args: MatchArgs) -> CliResult<ExitCode> {
    let dfa = args.machine.load()?;
    let input = fs::read(&args.input)?;
    let config = RunConfig {
        mode: args.mode.parse::<Mode>()?,
        lookahead: args.r,
        parallelism: args.p,
        weights: args.weights.parse::<WeightSource>()?,
        lane_width: args.lanes,
        sink_shortcircuit: !args.no_shortcircuit,
        ..RunConfig::default()
    };
    let report = run_parallel(&dfa, &input, &config)?;
    println!("{}", verdict_line(&report));
    println!(
        "n={} mode={} workers={} wall_us={:.1} match_us={:.1} merge_us={:.1}",
        input.len(),
        report.mode,
        report.workers.len(),
        report.timings.total_us,
        report.timings.match_us,
        report.timings.merge_us
    );
    Ok(verdict_code(report.outcome.accepted))
}

fn corpus_entries(dir: &Path) -> CliResult<Vec<(String, Dfa)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "grail"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("no .grail files under {}", dir.display()).into());
    }
    let mut entries = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        entries.push((name, parse_grail(&fs::read_to_string(&path)?)?));
    }
    Ok(entries)
}

fn bench_input(rng: &mut StdRng, dfa: &Dfa, n: usize, planted: bool) -> Vec<u8> {
    if planted {
        corpus::live_walk_bytes(rng, dfa, n)
    } else {
        corpus::random_bytes(rng, dfa.alphabet(), n)
    }
}

fn timed_run(dfa: &Dfa, input: &[u8], config: &RunConfig) -> CliResult<(RunReport, f64)> {
    let start = Instant::now();
    let report = run_parallel(dfa, input, config)?;
    let wall_us = start.elapsed().as_secs_f64() * 1e6;
    Ok((report, wall_us))
}

fn cmd_bench(args: BenchArgs) -> CliResult<ExitCode> {
    let machines = match &args.corpus {
        Some(dir) => corpus_entries(dir)?,
        None => vec![("machine".to_string(), args.machine.load()?)],
    };
    let modes: Vec<Mode> = args
        .modes
        .split(',')
        .map(|m| m.trim().parse::<Mode>())
        .collect::<Result<_, _>>()?;
    let worker_counts = parse_usize_list(&args.p, "--p")?;

    println!("dfa,states,alphabet,mode,workers,r,i_max,gamma,n,wall_us,speedup,speedup_display,per_worker_symbols,comm_fraction");
    for (index, (name, dfa)) in machines.iter().enumerate() {
        let mut rng = StdRng::seed_from_u64(args.seed.wrapping_add(index as u64));
        let input = bench_input(&mut rng, dfa, args.n, args.planted);
        let table = LookaheadTable::build(dfa, args.r)?;

        let sequential = RunConfig {
            mode: Mode::Sequential,
            sink_shortcircuit: false,
            ..RunConfig::default()
        };
        let baseline = timed_run(dfa, &input, &sequential)?;
        let baseline_us = baseline.1;

        for &mode in &modes {
            let counts: &[usize] = if mode == Mode::Sequential { &[1] } else { &worker_counts };
            for &workers in counts {
                let (report, wall_us) = if mode == Mode::Sequential {
                    baseline.clone()
                } else {
                    let config = RunConfig {
                        mode,
                        lookahead: args.r,
                        parallelism: workers,
                        sink_shortcircuit: false,
                        ..RunConfig::default()
                    };
                    timed_run(dfa, &input, &config)?
                };
                let speedup = baseline_us / wall_us;
                let display = if speedup >= 1.0 { speedup } else { -1.0 / speedup };
                let symbols: Vec<String> = report
                    .workers
                    .iter()
                    .map(|w| w.chunk_len.to_string())
                    .collect();
                println!(
                    "{name},{},{},{mode},{workers},{},{},{},{},{wall_us:.3},{speedup:.4},{display:.4},\"{}\",",
                    dfa.state_count(),
                    dfa.alphabet().len(),
                    args.r,
                    table.i_max(),
                    table.gamma().value(),
                    args.n,
                    symbols.join(" ")
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<ExitCode> {
    let topology = ClusterTopology::parse(&fs::read_to_string(&args.topology)?)?;
    let dfa = args.machine.load()?;
    let input = match &args.input {
        Some(path) => fs::read(path)?,
        None => {
            let mut rng = StdRng::seed_from_u64(args.seed);
            corpus::random_bytes(&mut rng, dfa.alphabet(), args.n)
        }
    };
    let config = RunConfig {
        mode: args.mode.parse::<Mode>()?,
        lookahead: args.r,
        ..RunConfig::default()
    };
    let run = simulate_cluster(&dfa, &input, &topology, &config)?;
    print!("{}", run.phases_csv());
    eprintln!(
        "finish_us={:.3} match_finish_us={:.3} tree_finish_us={:.3} comm_fraction={:.4} verdict={}",
        run.finish_us,
        run.match_finish_us,
        run.tree_finish_us,
        run.comm_fraction,
        if run.outcome.accepted { "accept" } else { "reject" }
    );
    Ok(verdict_code(run.outcome.accepted))
}

fn cmd_gen_corpus(args: GenCorpusArgs) -> CliResult<ExitCode> {
    if args.alphabet == 0 || args.alphabet > 26 {
        return Err("--alphabet must be between 1 and 26".into());
    }
    let targets = parse_usize_list(&args.states, "--states")?;
    if targets.is_empty() || args.count == 0 {
        return Err("need at least one state target and a positive count".into());
    }
    fs::create_dir_all(&args.out)?;
    let mut rng = StdRng::seed_from_u64(args.seed);

    println!("id,states,alphabet,input_len,dfa_file,input_file");
    for i in 0..args.count {
        let dfa = if args.amino {
            let elements = rng.random_range(2..=6);
            let motif = corpus::motif_pattern(&mut rng, elements);
            compile_regex(&motif)?
        } else {
            let target = targets[i % targets.len()];
            corpus::random_dfa(&mut rng, target, args.alphabet)
        };
        let input = corpus::random_bytes(&mut rng, dfa.alphabet(), args.input_len);

        let dfa_file = format!("dfa_{i:03}.grail");
        let input_file = format!("input_{i:03}.txt");
        fs::write(args.out.join(&dfa_file), emit_grail(&dfa)?)?;
        fs::write(args.out.join(&input_file), &input)?;
        println!(
            "{i},{},{},{},{dfa_file},{input_file}",
            dfa.state_count(),
            dfa.alphabet().len(),
            input.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}
