//! Deterministic model of a run spread across cluster nodes.
//!
//! Chunk maps are computed for real; only the clock is modeled. Every
//! worker matches in parallel, each node's leader folds its local maps
//! as they arrive over the intra-node link, and the master (the leader
//! on the first node) folds one partial result per node arriving over
//! the inter-node link. Link delays are drawn from a seeded generator,
//! so a topology and seed replay bit for bit. A binary-tree merge over
//! the same links is clocked alongside as the comparison point: it
//! serializes log-many inter-node hops where the two-tier fold pays
//! roughly one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{foreign_reject, prepare, Mode, Prepared, RunConfig};
use crate::automata::Dfa;
use crate::error::{Error, Result};
use crate::matching::{self, MatchOutcome};
use crate::partition::WorkerProfile;

/// One machine in the cluster. A core stays unallocated to absorb the
/// operating system; the first allocated core doubles as merge leader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub cores: usize,
    /// Cores running workers, at most `cores - 1`.
    pub allocated: usize,
    /// Relative throughput of this node's cores.
    pub capacity: f64,
}

impl NodeSpec {
    /// A node running workers on all but one core.
    pub fn new(cores: usize) -> NodeSpec {
        NodeSpec {
            cores,
            allocated: cores.saturating_sub(1),
            capacity: 1.0,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.cores < 2 {
            return Err(format!("a node needs at least 2 cores, got {}", self.cores));
        }
        if self.allocated == 0 || self.allocated > self.cores - 1 {
            return Err(format!(
                "allocated must be between 1 and cores - 1, got {} of {}",
                self.allocated, self.cores
            ));
        }
        if !self.capacity.is_finite() || self.capacity <= 0.0 {
            return Err(format!("capacity must be positive, got {}", self.capacity));
        }
        Ok(())
    }
}

/// How link delays are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayModel {
    /// Truncated normal around the configured means.
    #[default]
    Normal,
    /// Every delay is exactly its mean; no randomness consumed.
    Fixed,
}

impl std::str::FromStr for DelayModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<DelayModel> {
        match s {
            "normal" => Ok(DelayModel::Normal),
            "fixed" => Ok(DelayModel::Fixed),
            other => Err(Error::Config(format!(
                "unknown delay model {other:?}; expected normal or fixed"
            ))),
        }
    }
}

impl std::fmt::Display for DelayModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DelayModel::Normal => "normal",
            DelayModel::Fixed => "fixed",
        })
    }
}

/// Cluster shape plus the timing constants of its links and cores.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTopology {
    pub nodes: Vec<NodeSpec>,
    pub intra_mean_us: f64,
    pub intra_stddev_pct: f64,
    pub inter_mean_us: f64,
    pub inter_stddev_pct: f64,
    pub delay_model: DelayModel,
    /// Symbols per microsecond walked by a capacity-1.0 core.
    pub core_rate: f64,
    pub merge_cost_us: f64,
    pub seed: u64,
}

impl Default for ClusterTopology {
    fn default() -> ClusterTopology {
        ClusterTopology {
            nodes: Vec::new(),
            intra_mean_us: 2.68,
            intra_stddev_pct: 0.14,
            inter_mean_us: 362.0,
            inter_stddev_pct: 3.6,
            delay_model: DelayModel::Normal,
            core_rate: 100.0,
            merge_cost_us: 0.5,
            seed: 0,
        }
    }
}

impl ClusterTopology {
    /// `nodes` identical machines of `cores` cores each.
    pub fn uniform(nodes: usize, cores: usize) -> ClusterTopology {
        ClusterTopology {
            nodes: (0..nodes).map(|_| NodeSpec::new(cores)).collect(),
            ..ClusterTopology::default()
        }
    }

    /// Workers the cluster can run, one per allocated core.
    pub fn worker_count(&self) -> usize {
        self.nodes.iter().map(|n| n.allocated).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Topology {
                line: 0,
                msg: "topology declares no nodes".to_string(),
            });
        }
        for (i, node) in self.nodes.iter().enumerate() {
            node.check().map_err(|msg| Error::Topology {
                line: 0,
                msg: format!("node {i}: {msg}"),
            })?;
        }
        for (key, value) in [
            ("intra_mean_us", self.intra_mean_us),
            ("inter_mean_us", self.inter_mean_us),
            ("core_rate", self.core_rate),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Topology {
                    line: 0,
                    msg: format!("{key} must be positive, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Parses the line-oriented form written by [`to_text`]: one
    /// `key value` pair per line, `node` lines carrying `key=value`
    /// fields, `#` starting a comment.
    ///
    /// [`to_text`]: ClusterTopology::to_text
    pub fn parse(text: &str) -> Result<ClusterTopology> {
        let mut topology = ClusterTopology::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let key = tokens.next().expect("non-empty line has a first token");
            if key == "node" {
                let node = parse_node(tokens, line)?;
                topology.nodes.push(node);
                continue;
            }
            let value = tokens.next().ok_or_else(|| Error::Topology {
                line,
                msg: format!("{key} expects a value"),
            })?;
            if tokens.next().is_some() {
                return Err(Error::Topology {
                    line,
                    msg: format!("trailing tokens after {key}"),
                });
            }
            match key {
                "intra_mean_us" => topology.intra_mean_us = parse_num(value, key, line)?,
                "intra_stddev_pct" => topology.intra_stddev_pct = parse_num(value, key, line)?,
                "inter_mean_us" => topology.inter_mean_us = parse_num(value, key, line)?,
                "inter_stddev_pct" => topology.inter_stddev_pct = parse_num(value, key, line)?,
                "core_rate" => topology.core_rate = parse_num(value, key, line)?,
                "merge_cost_us" => topology.merge_cost_us = parse_num(value, key, line)?,
                "seed" => {
                    topology.seed = value.parse().map_err(|_| Error::Topology {
                        line,
                        msg: format!("seed expects an unsigned integer, got {value:?}"),
                    })?
                }
                "delay_model" => {
                    topology.delay_model = value.parse().map_err(|_| Error::Topology {
                        line,
                        msg: format!("delay_model expects normal or fixed, got {value:?}"),
                    })?
                }
                other => {
                    return Err(Error::Topology {
                        line,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        topology.validate()?;
        Ok(topology)
    }

    /// Renders the topology in the format [`parse`] reads.
    ///
    /// [`parse`]: ClusterTopology::parse
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("delay_model {}\n", self.delay_model));
        out.push_str(&format!("intra_mean_us {}\n", self.intra_mean_us));
        out.push_str(&format!("intra_stddev_pct {}\n", self.intra_stddev_pct));
        out.push_str(&format!("inter_mean_us {}\n", self.inter_mean_us));
        out.push_str(&format!("inter_stddev_pct {}\n", self.inter_stddev_pct));
        out.push_str(&format!("core_rate {}\n", self.core_rate));
        out.push_str(&format!("merge_cost_us {}\n", self.merge_cost_us));
        for node in &self.nodes {
            out.push_str(&format!(
                "node cores={} allocated={} capacity={}\n",
                node.cores, node.allocated, node.capacity
            ));
        }
        out
    }
}

fn parse_num(value: &str, key: &str, line: usize) -> Result<f64> {
    value.parse().map_err(|_| Error::Topology {
        line,
        msg: format!("{key} expects a number, got {value:?}"),
    })
}

fn parse_node<'a>(tokens: impl Iterator<Item = &'a str>, line: usize) -> Result<NodeSpec> {
    let mut cores = None;
    let mut allocated = None;
    let mut capacity = 1.0;
    for token in tokens {
        let (key, value) = token.split_once('=').ok_or_else(|| Error::Topology {
            line,
            msg: format!("node fields look like key=value, got {token:?}"),
        })?;
        match key {
            "cores" => {
                cores = Some(value.parse::<usize>().map_err(|_| Error::Topology {
                    line,
                    msg: format!("cores expects an integer, got {value:?}"),
                })?)
            }
            "allocated" => {
                allocated = Some(value.parse::<usize>().map_err(|_| Error::Topology {
                    line,
                    msg: format!("allocated expects an integer, got {value:?}"),
                })?)
            }
            "capacity" => {
                capacity = value.parse().map_err(|_| Error::Topology {
                    line,
                    msg: format!("capacity expects a number, got {value:?}"),
                })?
            }
            other => {
                return Err(Error::Topology {
                    line,
                    msg: format!("unknown node field {other:?}"),
                })
            }
        }
    }
    let cores = cores.ok_or_else(|| Error::Topology {
        line,
        msg: "node lines need cores=<n>".to_string(),
    })?;
    let node = NodeSpec {
        cores,
        allocated: allocated.unwrap_or_else(|| cores.saturating_sub(1)),
        capacity,
    };
    node.check().map_err(|msg| Error::Topology { line, msg })?;
    Ok(node)
}

/// What a slice of modeled time was spent on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Match,
    IntraMerge,
    InterMerge,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Match => "match",
            Phase::IntraMerge => "intra_merge",
            Phase::InterMerge => "inter_merge",
        })
    }
}

/// One interval on the modeled clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub phase: Phase,
    pub worker: usize,
    pub node: usize,
    pub start_us: f64,
    pub end_us: f64,
}

/// A finished simulation: the true verdict and the modeled clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    pub outcome: MatchOutcome,
    /// Node owning each chunk, in chunk order.
    pub node_of: Vec<usize>,
    /// Modeled match duration per worker, in chunk order.
    pub match_durations_us: Vec<f64>,
    pub phases: Vec<PhaseSample>,
    /// When the last worker finished matching.
    pub match_finish_us: f64,
    /// When the master held the final state.
    pub finish_us: f64,
    /// Finish time of a binary-tree merge over the same links.
    pub tree_finish_us: f64,
    /// Share of the total spent merging and on the wire.
    pub comm_fraction: f64,
}

impl SimulatedRun {
    /// Phase intervals as CSV, one row per interval.
    pub fn phases_csv(&self) -> String {
        let mut out = String::from("phase,worker,node,start_us,end_us\n");
        for p in &self.phases {
            out.push_str(&format!(
                "{},{},{},{:.3},{:.3}\n",
                p.phase, p.worker, p.node, p.start_us, p.end_us
            ));
        }
        out
    }
}

fn draw_delay(rng: &mut ChaCha8Rng, mean: f64, stddev_pct: f64, model: DelayModel) -> f64 {
    match model {
        DelayModel::Fixed => mean,
        DelayModel::Normal => {
            let sd = mean * stddev_pct / 100.0;
            if sd <= 0.0 {
                return mean.max(0.0);
            }
            Normal::new(mean, sd)
                .expect("finite mean and stddev")
                .sample(rng)
                .max(0.0)
        }
    }
}

fn tree_finish(
    lo: usize,
    hi: usize,
    durations: &[f64],
    node_of: &[usize],
    topology: &ClusterTopology,
    rng: &mut ChaCha8Rng,
) -> (f64, usize) {
    if hi - lo == 1 {
        return (durations[lo], node_of[lo]);
    }
    let mid = (lo + hi) / 2;
    let (left, left_node) = tree_finish(lo, mid, durations, node_of, topology, rng);
    let (right, right_node) = tree_finish(mid, hi, durations, node_of, topology, rng);
    let link = if left_node == right_node {
        draw_delay(rng, topology.intra_mean_us, topology.intra_stddev_pct, topology.delay_model)
    } else {
        draw_delay(rng, topology.inter_mean_us, topology.inter_stddev_pct, topology.delay_model)
    };
    (left.max(right) + link + topology.merge_cost_us, left_node)
}

const TREE_STREAM_SALT: u64 = 0x7472_6565;

/// Runs the speculative pipeline with one worker per allocated core
/// and clocks the merge against the topology's links. Chunk weights
/// always come from node capacities; workers on one node own adjacent
/// chunks so the leader can fold them without leaving the machine.
pub fn simulate_cluster(
    dfa: &Dfa,
    input: &[u8],
    topology: &ClusterTopology,
    config: &RunConfig,
) -> Result<SimulatedRun> {
    topology.validate()?;
    if config.mode == Mode::Sequential {
        return Err(Error::Config(
            "cluster simulation needs a parallel mode".to_string(),
        ));
    }
    if config.mode == Mode::Lookahead && config.lookahead == 0 {
        return Err(Error::ZeroLookahead);
    }
    let worker_count = topology.worker_count();
    if config.parallelism != 0 && config.parallelism != worker_count {
        return Err(Error::Config(format!(
            "topology provides {worker_count} workers but the run asks for {}",
            config.parallelism
        )));
    }

    let mut workers = Vec::with_capacity(worker_count);
    let mut node_of = Vec::with_capacity(worker_count);
    for (n, node) in topology.nodes.iter().enumerate() {
        for _ in 0..node.allocated {
            workers.push(WorkerProfile {
                id: workers.len(),
                capacity: node.capacity,
            });
            node_of.push(n);
        }
    }

    let prepared = match prepare(dfa, input, config, workers, false)? {
        Prepared::Foreign { table, offset } => {
            let (outcome, _) = foreign_reject(&table, input, offset, config.sink_shortcircuit);
            return Ok(SimulatedRun {
                outcome,
                node_of,
                match_durations_us: Vec::new(),
                phases: Vec::new(),
                match_finish_us: 0.0,
                finish_us: 0.0,
                tree_finish_us: 0.0,
                comm_fraction: 0.0,
            });
        }
        Prepared::Ready(p) => p,
    };

    let opts = config.chunk_options();
    let mut maps = Vec::with_capacity(worker_count);
    let mut durations = Vec::with_capacity(worker_count);
    let mut total_steps = 0u64;
    for (k, chunk) in prepared.plan.chunks().iter().enumerate() {
        let slice = &prepared.symbols.as_slice()[chunk.start..chunk.end];
        let (map, steps) = matching::match_chunk(&prepared.table, slice, &prepared.candidates[k], &opts);
        maps.push(map);
        total_steps += steps;
        let capacity = topology.nodes[node_of[k]].capacity;
        durations.push(steps as f64 / (topology.core_rate * capacity));
    }

    let last_state = matching::merge_two_tier(dfa.start(), &maps, &node_of);
    let outcome = MatchOutcome {
        accepted: dfa.is_final(last_state),
        last_state,
        steps: total_steps,
    };
    #[cfg(debug_assertions)]
    {
        let replay = matching::match_sequential(&prepared.table, prepared.symbols.as_slice(), false);
        debug_assert_eq!(replay.last_state, outcome.last_state);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(topology.seed);
    let mut phases: Vec<PhaseSample> = durations
        .iter()
        .enumerate()
        .map(|(w, &d)| PhaseSample {
            phase: Phase::Match,
            worker: w,
            node: node_of[w],
            start_us: 0.0,
            end_us: d,
        })
        .collect();

    let mut node_done = Vec::with_capacity(topology.nodes.len());
    let mut node_leader = Vec::with_capacity(topology.nodes.len());
    let mut next_worker = 0;
    for (n, node) in topology.nodes.iter().enumerate() {
        let leader = next_worker;
        node_leader.push(leader);
        let mut done = durations[leader];
        let members = durations.iter().enumerate();
        for (j, &duration) in members.skip(leader + 1).take(node.allocated - 1) {
            let delay = draw_delay(
                &mut rng,
                topology.intra_mean_us,
                topology.intra_stddev_pct,
                topology.delay_model,
            );
            let arrival = duration + delay;
            let begin = done.max(arrival);
            done = begin + topology.merge_cost_us;
            phases.push(PhaseSample {
                phase: Phase::IntraMerge,
                worker: j,
                node: n,
                start_us: begin,
                end_us: done,
            });
        }
        node_done.push(done);
        next_worker += node.allocated;
    }

    let mut finish = node_done[0];
    for n in 1..topology.nodes.len() {
        let delay = draw_delay(
            &mut rng,
            topology.inter_mean_us,
            topology.inter_stddev_pct,
            topology.delay_model,
        );
        let arrival = node_done[n] + delay;
        let begin = finish.max(arrival);
        finish = begin + topology.merge_cost_us;
        phases.push(PhaseSample {
            phase: Phase::InterMerge,
            worker: node_leader[n],
            node: n,
            start_us: begin,
            end_us: finish,
        });
    }

    let match_finish = durations.iter().cloned().fold(0.0, f64::max);
    let comm_fraction = if finish > 0.0 {
        (finish - match_finish) / finish
    } else {
        0.0
    };

    let mut tree_rng = ChaCha8Rng::seed_from_u64(topology.seed ^ TREE_STREAM_SALT);
    let (tree_finish_us, _) = tree_finish(
        0,
        worker_count,
        &durations,
        &node_of,
        topology,
        &mut tree_rng,
    );

    Ok(SimulatedRun {
        outcome,
        node_of,
        match_durations_us: durations,
        phases,
        match_finish_us: match_finish,
        finish_us: finish,
        tree_finish_us,
        comm_fraction,
    })
}
