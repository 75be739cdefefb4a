//! Seeded generators for machines and inputs.
//!
//! Benchmarks and the acceptance suite need families of machines with
//! controlled state counts, patterns that look like protein motifs,
//! and inputs that exercise live paths instead of collapsing into the
//! sink after a few symbols. Everything here is deterministic in the
//! caller's RNG.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::automata::{minimize, Dfa};

/// The twenty amino acid codes used by motif patterns.
pub const AMINO_ACIDS: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

const SIZE_TOLERANCE: f64 = 0.2;
const GROWTH_ATTEMPTS: usize = 64;

/// A random total machine whose minimized size lands within twenty
/// percent of `target_states`. Returns the closest attempt if no draw
/// lands inside the band.
pub fn random_dfa<R: Rng>(rng: &mut R, target_states: usize, alphabet_len: usize) -> Dfa {
    assert!(target_states >= 1, "need at least one state");
    assert!(
        (1..=26).contains(&alphabet_len),
        "alphabet must hold 1 to 26 letters"
    );
    let alphabet: Vec<u8> = (0..alphabet_len).map(|i| b'a' + i as u8).collect();

    let mut best: Option<(usize, Dfa)> = None;
    for _ in 0..GROWTH_ATTEMPTS {
        let states = (target_states as f64 * rng.random_range(1.0..1.3)).ceil() as usize;
        let mut transitions: Vec<u32> = (0..states * alphabet_len)
            .map(|_| rng.random_range(0..states as u32))
            .collect();
        for s in 1..states {
            let from = rng.random_range(0..s);
            let symbol = rng.random_range(0..alphabet_len);
            transitions[from * alphabet_len + symbol] = s as u32;
        }
        let finals: Vec<bool> = (0..states).map(|_| rng.random_bool(0.25)).collect();
        let raw = Dfa::new(alphabet.clone(), transitions, 0, finals)
            .expect("generated tables are well formed");
        let small = minimize(&raw);

        let distance = small.state_count().abs_diff(target_states);
        if distance as f64 <= target_states as f64 * SIZE_TOLERANCE {
            return small;
        }
        if best.as_ref().is_none_or(|(d, _)| distance < *d) {
            best = Some((distance, small));
        }
    }
    best.expect("at least one attempt ran").1
}

/// A motif-style pattern over the amino acid alphabet: literal
/// residues, residue choices, exclusions, wildcards, and short gaps.
pub fn motif_pattern<R: Rng>(rng: &mut R, elements: usize) -> String {
    assert!(elements >= 1, "a motif needs at least one element");
    let mut out = String::new();
    for _ in 0..elements {
        let roll = rng.random_range(0..100u32);
        if roll < 40 {
            out.push(*AMINO_ACIDS.choose(rng).unwrap() as char);
        } else if roll < 65 {
            let picks = rng.random_range(2..=4usize);
            let mut chosen: Vec<u8> = AMINO_ACIDS
                .choose_multiple(rng, picks)
                .copied()
                .collect();
            chosen.sort_unstable();
            out.push('[');
            out.extend(chosen.iter().map(|&b| b as char));
            out.push(']');
        } else if roll < 80 {
            let excluded = *AMINO_ACIDS.choose(rng).unwrap();
            out.push('[');
            out.extend(
                AMINO_ACIDS
                    .iter()
                    .filter(|&&b| b != excluded)
                    .map(|&b| b as char),
            );
            out.push(']');
        } else if roll < 95 {
            out.push('[');
            out.extend(AMINO_ACIDS.iter().map(|&b| b as char));
            out.push(']');
        } else {
            let lo = rng.random_range(1..=3usize);
            let hi = lo + rng.random_range(0..=3usize);
            out.push('[');
            out.extend(AMINO_ACIDS.iter().map(|&b| b as char));
            out.push_str(&format!("]{{{lo},{hi}}}"));
        }
    }
    out
}

/// Uniform random bytes drawn from `alphabet`.
pub fn random_bytes<R: Rng>(rng: &mut R, alphabet: &[u8], len: usize) -> Vec<u8> {
    assert!(!alphabet.is_empty(), "cannot sample an empty alphabet");
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// A random walk over `dfa` that picks symbols keeping the run out of
/// the sink whenever any such symbol exists. The result exercises live
/// transitions for its whole length instead of parking in the sink.
pub fn live_walk_bytes<R: Rng>(rng: &mut R, dfa: &Dfa, len: usize) -> Vec<u8> {
    let alphabet = dfa.alphabet().to_vec();
    assert!(!alphabet.is_empty(), "machine has no symbols to walk");
    let mut out = Vec::with_capacity(len);
    let mut state = dfa.start();
    for _ in 0..len {
        let live: Vec<u8> = (0..alphabet.len() as u8)
            .filter(|&c| Some(dfa.delta(state, c)) != dfa.sink())
            .collect();
        let symbol = match live.as_slice() {
            [] => rng.random_range(0..alphabet.len() as u8),
            choices => *choices.choose(rng).unwrap(),
        };
        state = dfa.delta(state, symbol);
        out.push(alphabet[symbol as usize]);
    }
    out
}
