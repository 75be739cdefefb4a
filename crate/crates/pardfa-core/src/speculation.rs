//! Reverse lookahead: which states can the machine possibly be in at a
//! chunk boundary?
//!
//! A worker that starts mid-input cannot know the exact state, but the
//! `r` symbols just before its chunk pin the state down to the image of
//! the whole state set under that window. [`LookaheadTable`] stores the
//! image for every window of length `r`, indexed by the window read
//! left to right. The sink never appears in a stored set: a run that
//! has reached the sink stays there, so the merge recovers it without
//! any speculative work (see [`crate::matching::StateMap`]).
//!
//! The widest stored set, `i_max`, is the worst-case number of start
//! states a worker has to track. Its ratio to the number of live
//! states, [`Gamma`], is what the partitioner uses to decide how much
//! longer the speculated chunks can be.
//!
//! Tables are cheap to rebuild for small alphabets but grow as
//! `|alphabet|^r`, so they can be written to a sidecar cache file and
//! reloaded, keyed by the machine fingerprint.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::automata::Dfa;
use crate::error::{Error, Result};

/// Default limit on stored windows; `|alphabet|^r` past this errors.
pub const DEFAULT_TABLE_CAP: u64 = 1 << 20;

/// A set of machine states, packed into 64-bit blocks.
#[derive(Clone, PartialEq, Eq)]
pub struct StateSet {
    blocks: Vec<u64>,
    universe: usize,
}

impl StateSet {
    /// The empty set over a universe of `universe` states.
    pub fn new(universe: usize) -> StateSet {
        StateSet {
            blocks: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    /// Every state of `dfa` except the sink.
    pub fn all_live(dfa: &Dfa) -> StateSet {
        let mut set = StateSet::new(dfa.state_count());
        for s in 0..dfa.state_count() as u32 {
            if Some(s) != dfa.sink() {
                set.insert(s);
            }
        }
        set
    }

    pub fn from_states<I: IntoIterator<Item = u32>>(universe: usize, states: I) -> StateSet {
        let mut set = StateSet::new(universe);
        for s in states {
            set.insert(s);
        }
        set
    }

    pub fn insert(&mut self, state: u32) {
        debug_assert!((state as usize) < self.universe);
        self.blocks[state as usize / 64] |= 1 << (state % 64);
    }

    pub fn contains(&self, state: u32) -> bool {
        (state as usize) < self.universe && self.blocks[state as usize / 64] & (1 << (state % 64)) != 0
    }

    /// Number of states in the set.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// States in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().enumerate().flat_map(|(i, &block)| {
            let mut rest = block;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros();
                rest &= rest - 1;
                Some(i as u32 * 64 + bit)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Image of the live-state set under `window`, dropping the sink after
/// every step. An empty window yields every live state, which is also
/// the candidate set used when no lookahead is available.
pub fn window_image(dfa: &Dfa, window: &[u8]) -> StateSet {
    let mut cur = StateSet::all_live(dfa);
    for &c in window {
        cur = step_live(dfa, &cur, c);
    }
    cur
}

fn step_live(dfa: &Dfa, set: &StateSet, symbol: u8) -> StateSet {
    let mut next = StateSet::new(dfa.state_count());
    for s in set.iter() {
        let t = dfa.delta(s, symbol);
        if Some(t) != dfa.sink() {
            next.insert(t);
        }
    }
    next
}

/// Worst-case boundary candidates over the number of live states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gamma {
    pub i_max: usize,
    pub live_states: usize,
}

impl Gamma {
    pub fn value(&self) -> f64 {
        self.i_max as f64 / self.live_states.max(1) as f64
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} ({:.3})",
            self.i_max,
            self.live_states.max(1),
            self.value()
        )
    }
}

/// Candidate state sets for every window of a fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookaheadTable {
    lookahead: usize,
    alphabet_len: usize,
    state_count: usize,
    live_states: usize,
    fingerprint: u64,
    sets: Vec<StateSet>,
    i_max: usize,
}

impl LookaheadTable {
    /// Builds the table for windows of `lookahead` symbols.
    pub fn build(dfa: &Dfa, lookahead: usize) -> Result<LookaheadTable> {
        LookaheadTable::build_with_cap(dfa, lookahead, DEFAULT_TABLE_CAP)
    }

    pub fn build_with_cap(dfa: &Dfa, lookahead: usize, cap: u64) -> Result<LookaheadTable> {
        if lookahead == 0 {
            return Err(Error::ZeroLookahead);
        }
        let width = dfa.alphabet().len();
        let needed = (width as u128).pow(lookahead as u32);
        if needed > cap as u128 {
            return Err(Error::LookaheadCap { needed, cap });
        }

        let mut sets = vec![StateSet::all_live(dfa)];
        for _ in 0..lookahead {
            let mut next = Vec::with_capacity(sets.len() * width);
            for set in &sets {
                for c in 0..width {
                    next.push(step_live(dfa, set, c as u8));
                }
            }
            sets = next;
        }

        let i_max = sets.iter().map(StateSet::len).max().unwrap_or(0).max(1);
        Ok(LookaheadTable {
            lookahead,
            alphabet_len: width,
            state_count: dfa.state_count(),
            live_states: dfa.live_state_count(),
            fingerprint: dfa.fingerprint(),
            sets,
            i_max,
        })
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    pub fn entry_count(&self) -> usize {
        self.sets.len()
    }

    /// Widest stored set, clamped to at least 1 so capacity planning
    /// never divides by zero on machines whose every window is dead.
    pub fn i_max(&self) -> usize {
        self.i_max
    }

    pub fn gamma(&self) -> Gamma {
        Gamma {
            i_max: self.i_max,
            live_states: self.live_states,
        }
    }

    /// Candidate states after reading exactly `window`, given as symbol
    /// indices, oldest first.
    pub fn candidate_set_for(&self, window: &[u8]) -> Result<&StateSet> {
        if window.len() != self.lookahead {
            return Err(Error::SuffixLength {
                got: window.len(),
                want: self.lookahead,
            });
        }
        let mut idx = 0usize;
        for &c in window {
            if c as usize >= self.alphabet_len {
                return Err(Error::UnknownSymbol {
                    symbol: c as usize,
                    alphabet: self.alphabet_len,
                });
            }
            idx = idx * self.alphabet_len + c as usize;
        }
        Ok(&self.sets[idx])
    }

    /// Writes the table to a sidecar cache file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "pardfa-lookahead v1").unwrap();
        writeln!(out, "fingerprint {:016x}", self.fingerprint).unwrap();
        writeln!(out, "lookahead {}", self.lookahead).unwrap();
        writeln!(out, "alphabet {}", self.alphabet_len).unwrap();
        writeln!(out, "states {}", self.state_count).unwrap();
        writeln!(out, "entries {}", self.sets.len()).unwrap();
        for set in &self.sets {
            out.push_str("set");
            for s in set.iter() {
                write!(out, " {s}").unwrap();
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reloads a cache written by [`LookaheadTable::save`], refusing a
    /// file that was built for another machine or another depth.
    pub fn load(path: &Path, dfa: &Dfa, lookahead: usize) -> Result<LookaheadTable> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();

        let mut header = |key: &str| -> Result<String> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::CacheParse {
                    line: 0,
                    msg: format!("missing {key} line"),
                })?;
            let rest = line.strip_prefix(key).ok_or_else(|| Error::CacheParse {
                line: i + 1,
                msg: format!("expected a {key} line"),
            })?;
            Ok(rest.trim().to_string())
        };

        let version = header("pardfa-lookahead")?;
        if version != "v1" {
            return Err(Error::CacheMismatch(format!(
                "unsupported cache version {version:?}"
            )));
        }
        let fingerprint = u64::from_str_radix(&header("fingerprint")?, 16)
            .map_err(|e| Error::CacheParse {
                line: 2,
                msg: format!("bad fingerprint: {e}"),
            })?;
        let parse_num = |name: &str, value: String, line: usize| -> Result<usize> {
            value.parse().map_err(|e| Error::CacheParse {
                line,
                msg: format!("bad {name}: {e}"),
            })
        };
        let file_lookahead = parse_num("lookahead", header("lookahead")?, 3)?;
        let alphabet_len = parse_num("alphabet", header("alphabet")?, 4)?;
        let state_count = parse_num("states", header("states")?, 5)?;
        let entries = parse_num("entries", header("entries")?, 6)?;

        if fingerprint != dfa.fingerprint() {
            return Err(Error::CacheMismatch(format!(
                "cache fingerprint {fingerprint:016x} does not match the machine {:016x}",
                dfa.fingerprint()
            )));
        }
        if file_lookahead != lookahead {
            return Err(Error::CacheMismatch(format!(
                "cache was built for depth {file_lookahead}, wanted {lookahead}"
            )));
        }
        if alphabet_len != dfa.alphabet().len() || state_count != dfa.state_count() {
            return Err(Error::CacheMismatch(
                "cache dimensions do not match the machine".to_string(),
            ));
        }
        if entries != (alphabet_len as u128).pow(lookahead as u32) as usize {
            return Err(Error::CacheMismatch(format!(
                "cache holds {entries} entries, expected alphabet^depth"
            )));
        }

        let mut sets = Vec::with_capacity(entries);
        for (i, line) in lines {
            if sets.len() == entries {
                return Err(Error::CacheParse {
                    line: i + 1,
                    msg: "trailing content after the last set".to_string(),
                });
            }
            let rest = line.strip_prefix("set").ok_or_else(|| Error::CacheParse {
                line: i + 1,
                msg: "expected a set line".to_string(),
            })?;
            let mut set = StateSet::new(state_count);
            for token in rest.split_whitespace() {
                let s: u32 = token.parse().map_err(|e| Error::CacheParse {
                    line: i + 1,
                    msg: format!("bad state id: {e}"),
                })?;
                if s as usize >= state_count {
                    return Err(Error::CacheParse {
                        line: i + 1,
                        msg: format!("state {s} is out of range"),
                    });
                }
                set.insert(s);
            }
            sets.push(set);
        }
        if sets.len() != entries {
            return Err(Error::CacheParse {
                line: 0,
                msg: format!("file holds {} sets, header promised {entries}", sets.len()),
            });
        }

        let i_max = sets.iter().map(StateSet::len).max().unwrap_or(0).max(1);
        Ok(LookaheadTable {
            lookahead,
            alphabet_len,
            state_count,
            live_states: dfa.live_state_count(),
            fingerprint,
            sets,
            i_max,
        })
    }
}
