//! Matching kernels and the state-map algebra.
//!
//! A worker matches its chunk once per candidate entry state and
//! records where each walk ended. The result is a [`StateMap`]: a
//! partial function from entry state to exit state. State maps compose
//! associatively, the identity map is the unit, and the sink absorbs,
//! so per-chunk maps can be folded left to right, reduced as a binary
//! tree, or merged in two tiers across nodes, all yielding the state a
//! sequential run would have reached.
//!
//! The kernels walk pre-scaled table rows (see
//! [`crate::automata::FlatTable`]) and can run several candidate walks
//! in lockstep over one pass of the chunk, which keeps the symbol
//! stream in cache instead of re-reading it per candidate.

use rayon::prelude::*;

use crate::automata::FlatTable;
use crate::error::{Error, Result};
use crate::partition::ChunkPlan;
use crate::speculation::StateSet;

const UNSET: u32 = u32::MAX;

/// How a chunk should be matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkOptions {
    /// Candidate walks advanced together per pass over the chunk.
    pub lanes: usize,
    /// Stop a walk early once every lane sits in the sink.
    pub sink_shortcircuit: bool,
}

impl Default for ChunkOptions {
    fn default() -> ChunkOptions {
        ChunkOptions {
            lanes: 4,
            sink_shortcircuit: true,
        }
    }
}

impl ChunkOptions {
    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 {
            return Err(Error::Config("lane width must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// The final verdict of a run, however it was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcome {
    pub accepted: bool,
    pub last_state: u32,
    /// Symbol steps actually walked, across all lanes.
    pub steps: u64,
}

/// Per-chunk accounting from a speculative run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkerStats {
    pub worker: usize,
    pub chunk_index: usize,
    pub chunk_len: usize,
    /// Candidate entry states this chunk had to track.
    pub lanes: usize,
    pub steps: u64,
}

/// A partial function from entry state to exit state for one chunk.
///
/// The sink is absorbing: looking up the sink always yields the sink,
/// whether or not the map stores it, which is what lets candidate sets
/// drop the sink entirely. A lookup that misses any other state means
/// the candidate set failed to cover a reachable boundary state; the
/// merge treats that as a bug and panics rather than guess.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateMap {
    /// Every state maps to itself; produced by empty chunks.
    Identity { universe: usize, sink: Option<u32> },
    /// Exit states indexed by entry state, `UNSET` where unknown.
    Dense { entries: Vec<u32>, sink: Option<u32> },
    /// Sorted `(entry, exit)` pairs; compact when few states are live.
    Sparse {
        pairs: Vec<(u32, u32)>,
        universe: usize,
        sink: Option<u32>,
    },
}

impl StateMap {
    pub fn identity(universe: usize, sink: Option<u32>) -> StateMap {
        StateMap::Identity { universe, sink }
    }

    pub fn from_pairs(
        universe: usize,
        sink: Option<u32>,
        mut pairs: Vec<(u32, u32)>,
    ) -> StateMap {
        pairs.sort_unstable();
        if 2 * pairs.len() >= universe {
            let mut entries = vec![UNSET; universe];
            for (from, to) in pairs {
                entries[from as usize] = to;
            }
            StateMap::Dense { entries, sink }
        } else {
            StateMap::Sparse {
                pairs,
                universe,
                sink,
            }
        }
    }

    pub fn universe(&self) -> usize {
        match self {
            StateMap::Identity { universe, .. } => *universe,
            StateMap::Dense { entries, .. } => entries.len(),
            StateMap::Sparse { universe, .. } => *universe,
        }
    }

    pub fn sink(&self) -> Option<u32> {
        match self {
            StateMap::Identity { sink, .. } => *sink,
            StateMap::Dense { sink, .. } => *sink,
            StateMap::Sparse { sink, .. } => *sink,
        }
    }

    /// Exit state for `state`, with the sink absorbing.
    pub fn lookup(&self, state: u32) -> Option<u32> {
        if Some(state) == self.sink() {
            return Some(state);
        }
        match self {
            StateMap::Identity { universe, .. } => {
                ((state as usize) < *universe).then_some(state)
            }
            StateMap::Dense { entries, .. } => match entries.get(state as usize) {
                Some(&to) if to != UNSET => Some(to),
                _ => None,
            },
            StateMap::Sparse { pairs, .. } => pairs
                .binary_search_by_key(&state, |&(from, _)| from)
                .ok()
                .map(|i| pairs[i].1),
        }
    }

    /// Entry states the map was computed for, sink aside.
    pub fn domain(&self) -> Vec<u32> {
        match self {
            StateMap::Identity { universe, .. } => (0..*universe as u32).collect(),
            StateMap::Dense { entries, .. } => entries
                .iter()
                .enumerate()
                .filter(|(_, &to)| to != UNSET)
                .map(|(from, _)| from as u32)
                .collect(),
            StateMap::Sparse { pairs, .. } => pairs.iter().map(|&(from, _)| from).collect(),
        }
    }
}

fn missing(state: u32) -> ! {
    panic!(
        "state map holds no entry for state {state}; \
         the boundary candidate set failed to cover a reachable state"
    );
}

/// Applies `first` then `second`, keeping `first`'s domain.
pub fn compose(first: &StateMap, second: &StateMap) -> StateMap {
    debug_assert_eq!(first.universe(), second.universe());
    debug_assert_eq!(first.sink(), second.sink());
    if let StateMap::Identity { .. } = second {
        return first.clone();
    }
    let apply = |to: u32| second.lookup(to).unwrap_or_else(|| missing(to));
    match first {
        StateMap::Identity { .. } => second.clone(),
        StateMap::Dense { entries, sink } => StateMap::Dense {
            entries: entries
                .iter()
                .map(|&to| if to == UNSET { UNSET } else { apply(to) })
                .collect(),
            sink: *sink,
        },
        StateMap::Sparse {
            pairs,
            universe,
            sink,
        } => StateMap::Sparse {
            pairs: pairs.iter().map(|&(f, t)| (f, apply(t))).collect(),
            universe: *universe,
            sink: *sink,
        },
    }
}

/// Folds chunk maps left to right from `start`.
pub fn merge_sequential(start: u32, maps: &[StateMap]) -> u32 {
    let mut state = start;
    for map in maps {
        state = map.lookup(state).unwrap_or_else(|| missing(state));
    }
    state
}

/// Reduces chunk maps as a balanced binary tree, then applies `start`.
/// Same answer as [`merge_sequential`]; exists so merge strategies can
/// be compared.
pub fn merge_tree(start: u32, maps: &[StateMap]) -> u32 {
    fn reduce(maps: &[StateMap]) -> StateMap {
        match maps.len() {
            1 => maps[0].clone(),
            n => {
                let (left, right) = maps.split_at(n / 2);
                compose(&reduce(left), &reduce(right))
            }
        }
    }
    if maps.is_empty() {
        return start;
    }
    let folded = reduce(maps);
    folded.lookup(start).unwrap_or_else(|| missing(start))
}

/// Merges in two tiers: chunks sharing a node id are composed by that
/// node, then the per-node maps are folded in node order. `node_of` is
/// indexed by chunk and must be non-decreasing.
pub fn merge_two_tier(start: u32, maps: &[StateMap], node_of: &[usize]) -> u32 {
    assert_eq!(maps.len(), node_of.len());
    debug_assert!(node_of.windows(2).all(|w| w[0] <= w[1]));
    let mut node_maps: Vec<StateMap> = Vec::new();
    let mut i = 0;
    while i < maps.len() {
        let node = node_of[i];
        let mut acc = maps[i].clone();
        i += 1;
        while i < maps.len() && node_of[i] == node {
            acc = compose(&acc, &maps[i]);
            i += 1;
        }
        node_maps.push(acc);
    }
    merge_sequential(start, &node_maps)
}

/// Walks one row through `symbols`; returns the exit row and the steps
/// actually taken (short-circuiting at the sink skips the rest).
fn walk_scalar(
    table: &FlatTable,
    mut row: u32,
    symbols: &[u8],
    shortcircuit: bool,
) -> (u32, u64) {
    if let (true, Some(sink)) = (shortcircuit, table.row_of_sink()) {
        for (i, &sym) in symbols.iter().enumerate() {
            if row == sink {
                return (row, i as u64);
            }
            row = table.step(row, sym);
        }
        (row, symbols.len() as u64)
    } else {
        for &sym in symbols {
            row = table.step(row, sym);
        }
        (row, symbols.len() as u64)
    }
}

/// Advances up to eight rows in lockstep over one pass of the chunk.
fn walk_group(
    table: &FlatTable,
    rows: &mut [u32],
    symbols: &[u8],
    shortcircuit: bool,
) -> u64 {
    let sink = table.row_of_sink();
    let mut steps = 0u64;
    for (i, &sym) in symbols.iter().enumerate() {
        if shortcircuit && i % 64 == 0 {
            if let Some(sink) = sink {
                if rows.iter().all(|&r| r == sink) {
                    return steps;
                }
            }
        }
        for row in rows.iter_mut() {
            *row = table.step(*row, sym);
        }
        steps += rows.len() as u64;
    }
    steps
}

/// Matches one chunk for every candidate entry state.
pub fn match_chunk(
    table: &FlatTable,
    symbols: &[u8],
    candidates: &StateSet,
    opts: &ChunkOptions,
) -> (StateMap, u64) {
    let universe = table.state_count();
    let sink = table.row_of_sink().map(|r| table.state_of_row(r));
    if symbols.is_empty() {
        return (StateMap::identity(universe, sink), 0);
    }

    let entries: Vec<u32> = candidates.iter().collect();
    let mut pairs = Vec::with_capacity(entries.len());
    let mut steps = 0u64;
    let lanes = opts.lanes.max(1);

    if lanes == 1 {
        for &state in &entries {
            let row = table.row_of_state(state);
            let (exit, taken) = walk_scalar(table, row, symbols, opts.sink_shortcircuit);
            pairs.push((state, table.state_of_row(exit)));
            steps += taken;
        }
    } else {
        let mut rows: Vec<u32> = Vec::with_capacity(lanes);
        for group in entries.chunks(lanes) {
            rows.clear();
            rows.extend(group.iter().map(|&s| table.row_of_state(s)));
            steps += walk_group(table, &mut rows, symbols, opts.sink_shortcircuit);
            for (&state, &row) in group.iter().zip(rows.iter()) {
                pairs.push((state, table.state_of_row(row)));
            }
        }
    }

    (StateMap::from_pairs(universe, sink, pairs), steps)
}

/// Matches the whole input from the start state on a single lane.
pub fn match_sequential(table: &FlatTable, symbols: &[u8], shortcircuit: bool) -> MatchOutcome {
    let (row, steps) = walk_scalar(table, table.row_of_start(), symbols, shortcircuit);
    MatchOutcome {
        accepted: table.is_final_row(row),
        last_state: table.state_of_row(row),
        steps,
    }
}

/// Matches every chunk of `plan` in parallel, one rayon task per
/// chunk. `candidates[k]` holds chunk k's entry states; the first
/// chunk's set is the start state alone.
pub fn match_plan(
    table: &FlatTable,
    symbols: &[u8],
    plan: &ChunkPlan,
    candidates: &[StateSet],
    opts: &ChunkOptions,
) -> Vec<(StateMap, WorkerStats)> {
    assert_eq!(plan.chunks().len(), candidates.len());
    plan.chunks()
        .par_iter()
        .zip_eq(candidates.par_iter())
        .enumerate()
        .map(|(index, (chunk, cands))| {
            let slice = &symbols[chunk.start..chunk.end];
            let (map, steps) = match_chunk(table, slice, cands, opts);
            let stats = WorkerStats {
                worker: chunk.worker,
                chunk_index: index,
                chunk_len: chunk.len(),
                lanes: cands.len(),
                steps,
            };
            (map, stats)
        })
        .collect()
}
