//! Orchestration: capacity profiling, plan construction, parallel
//! execution, and the merge that recovers the sequential verdict.
//!
//! [`run_parallel`] is the whole pipeline behind one call: encode the
//! input, weigh the workers, build candidate sets for the chosen mode,
//! match every chunk on a rayon pool, and fold the chunk maps back
//! into a single exit state. Debug builds additionally replay the
//! input sequentially and assert both executions agree.

use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::automata::{Dfa, EncodedInput, FlatTable, ForeignBytePolicy, SymbolBuffer};
use crate::error::{Error, Result};
use crate::matching::{self, ChunkOptions, MatchOutcome, StateMap, WorkerStats};
use crate::partition::{plan_chunks, sort_fastest_first, ChunkPlan, WorkerProfile};
use crate::speculation::{window_image, Gamma, LookaheadTable, StateSet, DEFAULT_TABLE_CAP};

pub mod cluster;

/// Smallest sample a throughput measurement will accept.
pub const PROFILE_MIN_SAMPLE: usize = 100_000;

/// Default number of timed repetitions per worker profile.
pub const PROFILE_DEFAULT_REPS: usize = 5;

/// How chunk entry states are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// One worker walks the whole input; the baseline.
    Sequential,
    /// Every live state is a candidate for chunks after the first.
    Basic,
    /// Candidates come from the image of the window before each chunk.
    #[default]
    Lookahead,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "sequential" => Ok(Mode::Sequential),
            "basic" => Ok(Mode::Basic),
            "lookahead" => Ok(Mode::Lookahead),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}; expected sequential, basic, or lookahead"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Mode::Sequential => "sequential",
            Mode::Basic => "basic",
            Mode::Lookahead => "lookahead",
        };
        f.write_str(name)
    }
}

/// Where chunk weights come from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum WeightSource {
    /// Every worker gets the same share.
    #[default]
    Uniform,
    /// Capacities measured by timing each worker on a sample.
    Profiled,
    /// Caller-supplied capacities, one per worker.
    Explicit(Vec<f64>),
}

impl FromStr for WeightSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<WeightSource> {
        match s {
            "uniform" => Ok(WeightSource::Uniform),
            "profiled" => Ok(WeightSource::Profiled),
            list => {
                let caps = list
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|_| {
                        Error::Config(format!(
                            "unknown weights {list:?}; expected uniform, profiled, or a comma-separated capacity list"
                        ))
                    })?;
                Ok(WeightSource::Explicit(caps))
            }
        }
    }
}

/// Everything a run needs besides the machine and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Window depth in symbols; lookahead mode requires at least 1.
    pub lookahead: usize,
    /// Worker count; 0 picks the rayon pool width.
    pub parallelism: usize,
    pub weights: WeightSource,
    /// Candidate walks advanced together per pass; 0 walks one lane.
    pub lane_width: usize,
    pub sink_shortcircuit: bool,
    /// Upper bound on lookahead table entries.
    pub table_cap: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            mode: Mode::Lookahead,
            lookahead: 1,
            parallelism: 0,
            weights: WeightSource::Uniform,
            lane_width: 0,
            sink_shortcircuit: true,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.mode == Mode::Lookahead && self.lookahead == 0 {
            return Err(Error::ZeroLookahead);
        }
        if let WeightSource::Explicit(caps) = &self.weights {
            if caps.is_empty() {
                return Err(Error::NoWorkers);
            }
            if self.parallelism != 0 && caps.len() != self.parallelism {
                return Err(Error::Config(format!(
                    "{} explicit capacities for {} workers",
                    caps.len(),
                    self.parallelism
                )));
            }
            for (index, &value) in caps.iter().enumerate() {
                if !value.is_finite() || value <= 0.0 {
                    return Err(Error::BadCapacity { index, value });
                }
            }
        }
        Ok(())
    }

    /// Worker count after resolving 0 against the rayon pool.
    pub fn resolved_parallelism(&self) -> usize {
        if let WeightSource::Explicit(caps) = &self.weights {
            if self.parallelism == 0 {
                return caps.len();
            }
        }
        match self.parallelism {
            0 => rayon::current_num_threads(),
            p => p,
        }
    }

    fn chunk_options(&self) -> ChunkOptions {
        ChunkOptions {
            lanes: self.lane_width.max(1),
            sink_shortcircuit: self.sink_shortcircuit,
        }
    }
}

/// One worker's share of a finished run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerReport {
    pub worker: usize,
    pub chunk_len: usize,
    /// Entry states this worker had to track.
    pub candidates: usize,
    pub steps: u64,
    pub match_us: f64,
}

/// Wall-clock breakdown of a run, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimings {
    pub encode_us: f64,
    pub plan_us: f64,
    pub match_us: f64,
    pub merge_us: f64,
    pub total_us: f64,
}

/// The verdict plus everything measured on the way to it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcome: MatchOutcome,
    pub mode: Mode,
    pub plan: ChunkPlan,
    pub gamma: Option<Gamma>,
    pub workers: Vec<WorkerReport>,
    /// First byte outside the alphabet, if one cut the run short.
    pub foreign: Option<(usize, u8)>,
    pub timings: PhaseTimings,
}

impl RunReport {
    /// Transitions executed across all workers.
    pub fn total_steps(&self) -> u64 {
        self.workers.iter().map(|w| w.steps).sum()
    }

    /// Per-worker match wall times, in chunk order.
    pub fn worker_match_us(&self) -> Vec<f64> {
        self.workers.iter().map(|w| w.match_us).collect()
    }
}

fn micros(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e6
}

/// Walks `bytes[..offset]` to report where a foreign byte left the
/// machine. The full input is a definitive non-match either way.
fn foreign_reject(
    table: &FlatTable,
    bytes: &[u8],
    offset: usize,
    shortcircuit: bool,
) -> (MatchOutcome, Vec<WorkerReport>) {
    let prefix = table
        .encode_input(&bytes[..offset], ForeignBytePolicy::Strict)
        .expect("bytes before the first foreign byte are in the alphabet")
        .expect_symbols();
    let walked = matching::match_sequential(table, prefix.as_slice(), shortcircuit);
    let outcome = MatchOutcome {
        accepted: false,
        last_state: walked.last_state,
        steps: walked.steps,
    };
    let worker = WorkerReport {
        worker: 0,
        chunk_len: offset,
        candidates: 1,
        steps: walked.steps,
        match_us: 0.0,
    };
    (outcome, vec![worker])
}

struct PreparedRun {
    table: FlatTable,
    symbols: SymbolBuffer,
    plan: ChunkPlan,
    candidates: Vec<StateSet>,
    gamma: Option<Gamma>,
}

enum Prepared {
    Foreign { table: Box<FlatTable>, offset: usize },
    Ready(Box<PreparedRun>),
}

/// Flattens, encodes, weighs, plans, and derives candidate sets; the
/// part of a run shared by live execution and the cluster model.
fn prepare(
    dfa: &Dfa,
    input: &[u8],
    config: &RunConfig,
    mut workers: Vec<WorkerProfile>,
    reorder: bool,
) -> Result<Prepared> {
    let table = FlatTable::flatten(dfa)?;
    let symbols = match table.encode_input(input, ForeignBytePolicy::Reject)? {
        EncodedInput::Symbols(s) => s,
        EncodedInput::Foreign { offset, .. } => {
            return Ok(Prepared::Foreign {
                table: Box::new(table),
                offset,
            })
        }
    };

    if reorder {
        sort_fastest_first(&mut workers);
    }

    let (budget, lookahead_table) = match config.mode {
        Mode::Sequential => (1, None),
        Mode::Basic => (dfa.live_state_count().max(1), None),
        Mode::Lookahead => {
            let lt = LookaheadTable::build_with_cap(dfa, config.lookahead, config.table_cap)?;
            (lt.i_max(), Some(lt))
        }
    };
    let window = match config.mode {
        Mode::Lookahead => Some(config.lookahead),
        _ => None,
    };
    let plan = plan_chunks(symbols.len(), &workers, budget, window)?;

    let mut candidates = Vec::with_capacity(plan.chunks().len());
    for (k, chunk) in plan.chunks().iter().enumerate() {
        let set = if k == 0 {
            StateSet::from_states(dfa.state_count(), [dfa.start()])
        } else {
            match (&lookahead_table, chunk.window_range()) {
                (Some(lt), Some((ws, we))) => {
                    let w = &symbols.as_slice()[ws..we];
                    if w.len() == lt.lookahead() {
                        lt.candidate_set_for(w)?.clone()
                    } else {
                        window_image(dfa, w)
                    }
                }
                _ => StateSet::all_live(dfa),
            }
        };
        candidates.push(set);
    }

    let gamma = lookahead_table.as_ref().map(|lt| lt.gamma());
    Ok(Prepared::Ready(Box::new(PreparedRun {
        table,
        symbols,
        plan,
        candidates,
        gamma,
    })))
}

fn resolve_weights(
    table: &FlatTable,
    symbols: &SymbolBuffer,
    config: &RunConfig,
) -> Result<Vec<WorkerProfile>> {
    let count = config.resolved_parallelism();
    if count == 0 {
        return Err(Error::NoWorkers);
    }
    match &config.weights {
        WeightSource::Uniform => Ok(WorkerProfile::uniform(count)),
        WeightSource::Explicit(caps) => Ok(caps
            .iter()
            .enumerate()
            .map(|(id, &capacity)| WorkerProfile { id, capacity })
            .collect()),
        WeightSource::Profiled => {
            let sample = symbols.as_slice();
            let take = sample.len().min(1_000_000);
            profile_workers(table, &sample[..take], count, PROFILE_DEFAULT_REPS)
        }
    }
}

/// Runs the full speculative pipeline and reports the sequential
/// verdict along with per-phase and per-worker accounting.
pub fn run_parallel(dfa: &Dfa, input: &[u8], config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let total_start = Instant::now();

    let encode_start = Instant::now();
    let table = FlatTable::flatten(dfa)?;
    let encoded = table.encode_input(input, ForeignBytePolicy::Reject)?;
    let encode_us = micros(encode_start);

    let symbols = match encoded {
        EncodedInput::Symbols(s) => s,
        EncodedInput::Foreign { offset, byte } => {
            let (outcome, workers) =
                foreign_reject(&table, input, offset, config.sink_shortcircuit);
            let plan = plan_chunks(offset, &WorkerProfile::uniform(1), 1, None)?;
            return Ok(RunReport {
                outcome,
                mode: config.mode,
                plan,
                gamma: None,
                workers,
                foreign: Some((offset, byte)),
                timings: PhaseTimings {
                    encode_us,
                    total_us: micros(total_start),
                    ..PhaseTimings::default()
                },
            });
        }
    };

    if config.mode == Mode::Sequential {
        let match_start = Instant::now();
        let outcome = matching::match_sequential(&table, symbols.as_slice(), config.sink_shortcircuit);
        let match_us = micros(match_start);
        let plan = plan_chunks(symbols.len(), &WorkerProfile::uniform(1), 1, None)?;
        return Ok(RunReport {
            outcome,
            mode: config.mode,
            plan,
            gamma: None,
            workers: vec![WorkerReport {
                worker: 0,
                chunk_len: symbols.len(),
                candidates: 1,
                steps: outcome.steps,
                match_us,
            }],
            foreign: None,
            timings: PhaseTimings {
                encode_us,
                match_us,
                total_us: micros(total_start),
                ..PhaseTimings::default()
            },
        });
    }

    let plan_start = Instant::now();
    let workers = resolve_weights(&table, &symbols, config)?;
    let prepared = match prepare(dfa, input, config, workers, true)? {
        Prepared::Ready(p) => p,
        Prepared::Foreign { .. } => unreachable!("input already encoded cleanly"),
    };
    let plan_us = micros(plan_start);

    let opts = config.chunk_options();
    let match_start = Instant::now();
    let results: Vec<(StateMap, WorkerStats, f64)> = prepared
        .plan
        .chunks()
        .par_iter()
        .zip_eq(prepared.candidates.par_iter())
        .enumerate()
        .map(|(index, (chunk, cands))| {
            let worker_start = Instant::now();
            let slice = &prepared.symbols.as_slice()[chunk.start..chunk.end];
            let (map, steps) = matching::match_chunk(&prepared.table, slice, cands, &opts);
            let stats = WorkerStats {
                worker: chunk.worker,
                chunk_index: index,
                chunk_len: chunk.len(),
                lanes: cands.len(),
                steps,
            };
            (map, stats, micros(worker_start))
        })
        .collect();
    let match_us = micros(match_start);

    let merge_start = Instant::now();
    let maps: Vec<StateMap> = results.iter().map(|(m, _, _)| m.clone()).collect();
    let last_state = matching::merge_sequential(dfa.start(), &maps);
    let merge_us = micros(merge_start);

    let outcome = MatchOutcome {
        accepted: dfa.is_final(last_state),
        last_state,
        steps: results.iter().map(|(_, s, _)| s.steps).sum(),
    };

    #[cfg(debug_assertions)]
    {
        let replay = matching::match_sequential(&prepared.table, prepared.symbols.as_slice(), false);
        debug_assert_eq!(replay.last_state, outcome.last_state);
        debug_assert_eq!(replay.accepted, outcome.accepted);
    }

    let workers = results
        .iter()
        .map(|(_, stats, us)| WorkerReport {
            worker: stats.worker,
            chunk_len: stats.chunk_len,
            candidates: stats.lanes,
            steps: stats.steps,
            match_us: *us,
        })
        .collect();

    Ok(RunReport {
        outcome,
        mode: config.mode,
        plan: prepared.plan,
        gamma: prepared.gamma,
        workers,
        foreign: None,
        timings: PhaseTimings {
            encode_us,
            plan_us,
            match_us,
            merge_us,
            total_us: micros(total_start),
        },
    })
}

/// Times each worker over `sample` and returns measured capacities in
/// symbols per microsecond. Workers are timed one at a time, `reps`
/// timed walks each, and the median survives.
pub fn profile_workers(
    table: &FlatTable,
    sample: &[u8],
    workers: usize,
    reps: usize,
) -> Result<Vec<WorkerProfile>> {
    if workers == 0 {
        return Err(Error::NoWorkers);
    }
    profile_workers_scaled(table, sample, &vec![1.0; workers], reps)
}

/// [`profile_workers`] with a per-worker load multiplier, so tests and
/// demos can stand in for genuinely unequal hardware: a worker with
/// load 2.0 walks the sample twice per timed rep and measures half the
/// capacity.
pub fn profile_workers_scaled(
    table: &FlatTable,
    sample: &[u8],
    loads: &[f64],
    reps: usize,
) -> Result<Vec<WorkerProfile>> {
    if loads.is_empty() {
        return Err(Error::NoWorkers);
    }
    for (index, &value) in loads.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::BadCapacity { index, value });
        }
    }
    if sample.len() < PROFILE_MIN_SAMPLE {
        return Err(Error::SampleTooSmall {
            min: PROFILE_MIN_SAMPLE,
            got: sample.len(),
        });
    }
    if reps.is_multiple_of(2) {
        return Err(Error::EvenReps { got: reps });
    }

    let mut profiles = Vec::with_capacity(loads.len());
    for (id, &load) in loads.iter().enumerate() {
        let work = ((sample.len() as f64) * load).round() as usize;
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            let mut remaining = work;
            while remaining > 0 {
                let take = remaining.min(sample.len());
                black_box(matching::match_sequential(table, &sample[..take], false));
                remaining -= take;
            }
            times.push(micros(start));
        }
        times.sort_by(f64::total_cmp);
        let median = times[reps / 2];
        if median <= 0.0 {
            return Err(Error::TimerResolution);
        }
        profiles.push(WorkerProfile {
            id,
            capacity: sample.len() as f64 / median,
        });
    }
    Ok(profiles)
}

/// Population standard deviation over the mean; 0 for degenerate input.
pub fn relative_stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt() / mean.abs()
}

/// Spread of per-worker busy times across a set of runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl BalanceReport {
    /// Relative stddev of each run's worker times, summarized.
    pub fn from_runs(runs: &[Vec<f64>]) -> BalanceReport {
        let spreads: Vec<f64> = runs.iter().map(|r| relative_stddev(r)).collect();
        if spreads.is_empty() {
            return BalanceReport {
                min: 0.0,
                avg: 0.0,
                max: 0.0,
            };
        }
        BalanceReport {
            min: spreads.iter().cloned().fold(f64::INFINITY, f64::min),
            avg: spreads.iter().sum::<f64>() / spreads.len() as f64,
            max: spreads.iter().cloned().fold(0.0, f64::max),
        }
    }
}

impl std::fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "min {:.2}% avg {:.2}% max {:.2}%",
            self.min * 100.0,
            self.avg * 100.0,
            self.max * 100.0
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::testutil::{abc_machine, four_live_machine, random_machine};
    use rand::prelude::*;

    fn run(dfa: &Dfa, input: &[u8], config: &RunConfig) -> RunReport {
        run_parallel(dfa, input, config).unwrap()
    }

    fn random_input(rng: &mut StdRng, dfa: &Dfa, len: usize) -> Vec<u8> {
        (0..len)
            .map(|_| *dfa.alphabet().choose(rng).unwrap())
            .collect()
    }

    #[test]
    fn twelve_symbol_run_splits_into_three_even_chunks() {
        let d = abc_machine();
        let config = RunConfig {
            parallelism: 3,
            ..RunConfig::default()
        };
        let report = run(&d, b"aaaaaaabcccc", &config);

        assert!(report.outcome.accepted);
        assert_eq!(report.outcome.last_state, 1);
        assert_eq!(report.gamma.as_ref().unwrap().value(), 0.5);
        let lens: Vec<usize> = report.workers.iter().map(|w| w.chunk_len).collect();
        assert_eq!(lens, [4, 4, 4]);
        let lanes: Vec<usize> = report.workers.iter().map(|w| w.candidates).collect();
        assert_eq!(lanes, [1, 1, 1]);
        assert_eq!(report.total_steps(), 12);
        assert_eq!(report.plan.base_length(), 4.0);
    }

    #[test]
    fn uniform_lookahead_plan_gives_long_first_chunk() {
        let d = four_live_machine();
        let input: Vec<u8> = b"bababbababbababbaaabbababbbaabbaaaba".to_vec();
        let config = RunConfig {
            parallelism: 3,
            ..RunConfig::default()
        };
        let report = run(&d, &input, &config);

        assert_eq!(report.plan.base_length(), 18.0);
        let lens: Vec<usize> = report.workers.iter().map(|w| w.chunk_len).collect();
        assert_eq!(lens, [18, 9, 9]);
        let lanes: Vec<usize> = report.workers.iter().map(|w| w.candidates).collect();
        assert_eq!(lanes, [1, 2, 2]);

        let walked = d.walk(
            d.start(),
            &input.iter().map(|&b| d.symbol_index(b).unwrap()).collect::<Vec<u8>>(),
        );
        assert_eq!(report.outcome.last_state, walked);
        assert_eq!(report.outcome.accepted, d.is_final(walked));
    }

    #[test]
    fn single_worker_matches_sequential_exactly() {
        let d = four_live_machine();
        let mut rng = StdRng::seed_from_u64(41);
        let input = random_input(&mut rng, &d, 500);
        let config = RunConfig {
            mode: Mode::Basic,
            parallelism: 1,
            sink_shortcircuit: false,
            ..RunConfig::default()
        };
        let report = run(&d, &input, &config);
        let seq = run(
            &d,
            &input,
            &RunConfig {
                mode: Mode::Sequential,
                sink_shortcircuit: false,
                ..RunConfig::default()
            },
        );
        assert_eq!(report.outcome, seq.outcome);
        assert_eq!(report.total_steps(), 500);
    }

    #[test]
    fn every_mode_agrees_with_sequential_on_random_machines() {
        let mut rng = StdRng::seed_from_u64(1209);
        for trial in 0..60 {
            let d = random_machine(&mut rng, 12, 4);
            let len = rng.random_range(0..400);
            let input = random_input(&mut rng, &d, len);
            let seq = run(&d, &input, &RunConfig {
                mode: Mode::Sequential,
                ..RunConfig::default()
            });

            let mode = if rng.random_bool(0.5) { Mode::Basic } else { Mode::Lookahead };
            let parallelism = rng.random_range(1..=6);
            let weights = if rng.random_bool(0.3) {
                WeightSource::Explicit(
                    (0..parallelism).map(|_| rng.random_range(0.2..4.0)).collect(),
                )
            } else {
                WeightSource::Uniform
            };
            let config = RunConfig {
                mode,
                lookahead: rng.random_range(1..=2),
                parallelism,
                weights,
                lane_width: rng.random_range(0..=5),
                sink_shortcircuit: rng.random_bool(0.5),
                ..RunConfig::default()
            };
            let report = run(&d, &input, &config);
            assert_eq!(
                (report.outcome.accepted, report.outcome.last_state),
                (seq.outcome.accepted, seq.outcome.last_state),
                "trial {trial} diverged from the sequential verdict"
            );
            assert_eq!(report.workers.len(), parallelism);
        }
    }

    #[test]
    fn foreign_byte_rejects_with_prefix_state() {
        let d = abc_machine();
        let report = run(&d, b"abXa", &RunConfig::default());
        assert!(!report.outcome.accepted);
        assert_eq!(report.foreign, Some((2, b'X')));
        assert_eq!(report.outcome.last_state, d.walk(d.start(), &[0, 1]));
        assert_eq!(report.outcome.steps, 2);
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        let d = abc_machine();
        let zero = RunConfig {
            lookahead: 0,
            ..RunConfig::default()
        };
        assert!(matches!(
            run_parallel(&d, b"a", &zero),
            Err(Error::ZeroLookahead)
        ));

        let mismatched = RunConfig {
            parallelism: 3,
            weights: WeightSource::Explicit(vec![1.0, 1.0]),
            ..RunConfig::default()
        };
        assert!(matches!(
            run_parallel(&d, b"a", &mismatched),
            Err(Error::Config(_))
        ));

        let negative = RunConfig {
            weights: WeightSource::Explicit(vec![1.0, -2.0]),
            ..RunConfig::default()
        };
        assert!(matches!(
            run_parallel(&d, b"a", &negative),
            Err(Error::BadCapacity { index: 1, .. })
        ));
    }

    #[test]
    fn explicit_capacities_become_expected_weights() {
        let d = four_live_machine();
        let mut rng = StdRng::seed_from_u64(7);
        let input = random_input(&mut rng, &d, 36);
        let config = RunConfig {
            mode: Mode::Basic,
            weights: WeightSource::Explicit(vec![50.0, 25.0, 25.0]),
            ..RunConfig::default()
        };
        let report = run(&d, &input, &config);
        assert_eq!(report.plan.weight(0), 1.5);
        assert_eq!(report.plan.weight(1), 0.75);
        assert_eq!(report.plan.weight(2), 0.75);
        assert_eq!(report.plan.base_length(), 19.2);
        let lens: Vec<usize> = report.workers.iter().map(|w| w.chunk_len).collect();
        assert_eq!(lens, [28, 4, 4]);
    }

    #[test]
    fn mode_and_weight_parsing_round_trips() {
        assert_eq!("basic".parse::<Mode>().unwrap(), Mode::Basic);
        assert_eq!(Mode::Lookahead.to_string(), "lookahead");
        assert!("turbo".parse::<Mode>().is_err());

        assert_eq!("uniform".parse::<WeightSource>().unwrap(), WeightSource::Uniform);
        assert_eq!(
            "50,25,25".parse::<WeightSource>().unwrap(),
            WeightSource::Explicit(vec![50.0, 25.0, 25.0])
        );
        assert!("fast,slow".parse::<WeightSource>().is_err());
    }

    #[test]
    fn profiling_validates_sample_and_reps() {
        let d = abc_machine();
        let table = d.flatten().unwrap();
        let sample = vec![0u8; 200_000];
        assert!(matches!(
            profile_workers(&table, &sample[..99], 2, 5),
            Err(Error::SampleTooSmall { got: 99, .. })
        ));
        assert!(matches!(
            profile_workers(&table, &sample, 2, 4),
            Err(Error::EvenReps { got: 4 })
        ));
        assert!(matches!(
            profile_workers(&table, &sample, 0, 5),
            Err(Error::NoWorkers)
        ));
        assert!(matches!(
            profile_workers_scaled(&table, &sample, &[1.0, 0.0], 5),
            Err(Error::BadCapacity { index: 1, .. })
        ));
    }

    #[test]
    fn uniform_workers_profile_within_ten_percent() {
        let d = four_live_machine();
        let table = d.flatten().unwrap();
        let mut rng = StdRng::seed_from_u64(99);
        let sample: Vec<u8> = (0..400_000).map(|_| rng.random_range(0..2u8)).collect();
        let profiles = profile_workers(&table, &sample, 3, 5).unwrap();
        let caps: Vec<f64> = profiles.iter().map(|p| p.capacity).collect();
        let lo = caps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = caps.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 1.10, "uniform capacities spread too far: {caps:?}");
    }

    #[test]
    fn scaled_load_recovers_capacity_ratio() {
        let d = four_live_machine();
        let table = d.flatten().unwrap();
        let mut rng = StdRng::seed_from_u64(100);
        let sample: Vec<u8> = (0..400_000).map(|_| rng.random_range(0..2u8)).collect();
        let profiles = profile_workers_scaled(&table, &sample, &[1.0, 1.41], 5).unwrap();
        let ratio = profiles[0].capacity / profiles[1].capacity;
        assert!(
            (ratio / 1.41 - 1.0).abs() < 0.05,
            "measured ratio {ratio} strays from 1.41"
        );
    }

    #[test]
    fn balance_report_summarizes_spreads() {
        assert_eq!(relative_stddev(&[]), 0.0);
        assert_eq!(relative_stddev(&[5.0, 5.0, 5.0]), 0.0);
        let spread = relative_stddev(&[1.0, 3.0]);
        assert!((spread - 0.5).abs() < 1e-12);

        let report = BalanceReport::from_runs(&[vec![5.0, 5.0], vec![1.0, 3.0]]);
        assert_eq!(report.min, 0.0);
        assert!((report.max - 0.5).abs() < 1e-12);
        assert!((report.avg - 0.25).abs() < 1e-12);
        assert_eq!(report.to_string(), "min 0.00% avg 25.00% max 50.00%");
    }
}
