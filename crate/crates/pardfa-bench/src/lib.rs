//! Fixtures shared by the benchmark targets: reference machines and
//! deterministic inputs sized so steady-state matching dominates setup.

use rand::prelude::*;

use pardfa_core::{corpus, parse_grail, Dfa};

/// Default input length; long enough that planning and merging are noise.
pub const INPUT_LEN: usize = 1_000_000;

const FOUR_LIVE: &str = "\
(START) |- 0
0 a 1
0 b 2
1 b 3
2 a 1
2 b 3
3 a 3
3 -| (FINAL)
";

/// The four-live-state reference machine.
pub fn four_live() -> Dfa {
    parse_grail(FOUR_LIVE).expect("reference machine parses")
}

/// A random total machine near `states` states over four letters.
pub fn sized_machine(states: usize) -> Dfa {
    let mut rng = StdRng::seed_from_u64(0xbe7c ^ states as u64);
    corpus::random_dfa(&mut rng, states, 4)
}

/// Deterministic bytes drawn from the machine's alphabet.
pub fn input_for(dfa: &Dfa, len: usize) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(0x1289);
    corpus::random_bytes(&mut rng, dfa.alphabet(), len)
}

/// Deterministic symbol indices for kernel-level benchmarks.
pub fn encoded_input(alphabet_len: usize, len: usize) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(0x51ab);
    (0..len)
        .map(|_| rng.random_range(0..alphabet_len) as u8)
        .collect()
}
