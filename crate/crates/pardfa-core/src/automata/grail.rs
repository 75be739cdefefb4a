//! Grail+ style text format for automata.
//!
//! One fact per line, whitespace separated:
//!
//! ```text
//! (START) |- 0
//! 0 a 1
//! 1 -| (FINAL)
//! ```
//!
//! A `src label dst` triple is a transition, `(START) |- s` names the
//! start state, `s -| (FINAL)` marks a final state. Labels are single
//! printable characters (one byte). Transitions involving the sink are
//! left out when emitting, and parsing completes whatever is missing:
//! either into a state the file shows to be dead, or into a freshly
//! synthesized sink.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::Dfa;
use crate::error::{Error, Result};

/// Parses Grail+ text into a complete DFA.
///
/// States may be numbered sparsely; they are renumbered densely in
/// ascending numeric order. Missing transitions are completed into a
/// sink, synthesizing a new state when no existing state can serve.
pub fn parse_grail(text: &str) -> Result<Dfa> {
    let fail = |line: usize, msg: &str| Error::GrailParse {
        line,
        msg: msg.to_string(),
    };

    let mut start_raw: Option<u64> = None;
    let mut finals_raw: BTreeSet<u64> = BTreeSet::new();
    let mut triples: Vec<(usize, u64, u8, u64)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw_line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 3 {
            return Err(fail(line, "expected three whitespace-separated tokens"));
        }
        let parse_id = |tok: &str| {
            tok.parse::<u64>()
                .map_err(|_| fail(line, "state id must be a non-negative integer"))
        };
        match tokens[1] {
            "|-" => {
                if tokens[0] != "(START)" {
                    return Err(fail(line, "start line must begin with (START)"));
                }
                if start_raw.is_some() {
                    return Err(fail(line, "duplicate start line"));
                }
                start_raw = Some(parse_id(tokens[2])?);
            }
            "-|" => {
                if tokens[2] != "(FINAL)" {
                    return Err(fail(line, "final line must end with (FINAL)"));
                }
                finals_raw.insert(parse_id(tokens[0])?);
            }
            label => {
                if label.len() != 1 {
                    return Err(fail(line, "transition labels must be a single byte"));
                }
                triples.push((line, parse_id(tokens[0])?, label.as_bytes()[0], parse_id(tokens[2])?));
            }
        }
    }

    let start_raw = start_raw.ok_or(Error::MissingStart)?;

    let mut ids: BTreeSet<u64> = BTreeSet::new();
    ids.insert(start_raw);
    ids.extend(finals_raw.iter().copied());
    for &(_, src, _, dst) in &triples {
        ids.insert(src);
        ids.insert(dst);
    }
    let index: BTreeMap<u64, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i as u32))
        .collect();
    let alphabet: Vec<u8> = triples.iter().map(|&(_, _, b, _)| b).collect::<BTreeSet<u8>>()
        .into_iter()
        .collect();

    let mut states = ids.len();
    let width = alphabet.len();
    let mut table: Vec<Option<u32>> = vec![None; states * width];
    for &(line, src, byte, dst) in &triples {
        let c = alphabet.binary_search(&byte).unwrap();
        let slot = index[&src] as usize * width + c;
        let dst = index[&dst];
        match table[slot] {
            None => table[slot] = Some(dst),
            Some(existing) if existing == dst => {}
            Some(_) => {
                return Err(fail(line, "conflicting transition for the same state and label"))
            }
        }
    }

    let start = index[&start_raw];
    let mut finals = vec![false; states];
    for f in &finals_raw {
        finals[index[f] as usize] = true;
    }

    if table.iter().any(Option::is_none) {
        let sink = choose_sink(&table, width, start, &finals).unwrap_or_else(|| {
            finals.push(false);
            table.extend(std::iter::repeat_n(None, width));
            states += 1;
            states as u32 - 1
        });
        for s in 0..states as u32 {
            for c in 0..width {
                let slot = s as usize * width + c;
                if table[slot].is_none() {
                    table[slot] = Some(if s == sink { s } else { sink });
                }
            }
        }
    }

    let transitions: Vec<u32> = table.into_iter().map(Option::unwrap).collect();
    Dfa::new(alphabet, transitions, start, finals)
}

/// Picks the state that absorbs missing transitions: a non-final,
/// non-start state whose defined rows all self-loop. States with no
/// defined rows at all are preferred (that is how [`emit_grail`] leaves
/// a sink visible only as a transition target), then lower indices win.
fn choose_sink(table: &[Option<u32>], width: usize, start: u32, finals: &[bool]) -> Option<u32> {
    let mut best: Option<(bool, u32)> = None;
    for s in 0..finals.len() as u32 {
        if s == start || finals[s as usize] {
            continue;
        }
        let row = &table[s as usize * width..(s as usize + 1) * width];
        if !row.iter().flatten().all(|&t| t == s) {
            continue;
        }
        let key = (!row.iter().all(Option::is_none), s);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    best.map(|(_, s)| s)
}

/// Renders a DFA as Grail+ text.
///
/// Transitions from or into the sink are omitted, except for the
/// minimal marker rows needed to keep otherwise-invisible states and
/// alphabet symbols in the file (so a parse round-trip reconstructs an
/// isomorphic automaton).
pub fn emit_grail(dfa: &Dfa) -> Result<String> {
    let n = dfa.state_count() as u32;
    let width = dfa.alphabet().len();
    let sink = dfa.sink();

    let mut rows: Vec<(u32, usize, u32)> = Vec::new();
    let mut mentioned = vec![false; n as usize];
    let mut symbol_seen = vec![false; width];
    for s in 0..n {
        for (c, seen) in symbol_seen.iter_mut().enumerate() {
            let t = dfa.delta(s, c as u8);
            if Some(s) == sink || Some(t) == sink {
                continue;
            }
            rows.push((s, c, t));
            mentioned[s as usize] = true;
            mentioned[t as usize] = true;
            *seen = true;
        }
    }

    if let Some(z) = sink {
        for (c, _) in symbol_seen.iter().enumerate().filter(|(_, &seen)| !seen) {
            // Every non-sink state maps this symbol into the sink, so
            // any row is a faithful witness for it.
            let src = (0..n).find(|&s| s != z).unwrap_or(z);
            rows.push((src, c, dfa.delta(src, c as u8)));
            mentioned[src as usize] = true;
            mentioned[z as usize] = true;
        }
        if width > 0 {
            for s in 0..n {
                if s == z || mentioned[s as usize] || s == dfa.start() || dfa.is_final(s) {
                    continue;
                }
                rows.push((s, 0, dfa.delta(s, 0)));
                mentioned[z as usize] = true;
            }
        }
    }

    rows.sort_unstable();
    rows.dedup();

    let mut out = String::new();
    let _ = writeln!(out, "(START) |- {}", dfa.start());
    for (s, c, t) in rows {
        let byte = dfa.alphabet()[c];
        if !byte.is_ascii_graphic() {
            return Err(Error::UnprintableLabel { byte });
        }
        let _ = writeln!(out, "{} {} {}", s, byte as char, t);
    }
    for f in dfa.final_states() {
        let _ = writeln!(out, "{f} -| (FINAL)");
    }
    Ok(out)
}
