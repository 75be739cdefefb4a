//! Deterministic finite automata and the forms they take on the way to
//! the matching kernels.
//!
//! A [`Dfa`] is always complete: every state has a transition for every
//! alphabet symbol. Inputs that fall outside the language run into a
//! sink state (non-final, all self-loops) and stay there. The type is
//! produced by [`parse_grail`], [`compile_regex`] or the generators in
//! [`crate::corpus`], optionally reduced by [`minimize`], and finally
//! lowered by [`FlatTable::flatten`] into the row-offset table the
//! kernels walk.

mod flat;
mod grail;
mod minimize;
mod regex;

pub use flat::{EncodedInput, FlatTable, ForeignBytePolicy, SymbolBuffer};
pub use grail::{emit_grail, parse_grail};
pub use minimize::minimize;
pub use regex::{compile_regex, compile_regex_unminimized};

use crate::error::{Error, Result};

/// A complete deterministic finite automaton over a byte alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    /// Sorted, distinct input bytes.
    pub(crate) alphabet: Vec<u8>,
    /// Row-major transition table: `transitions[s * alphabet.len() + c]`
    /// is the successor of state `s` on the `c`-th alphabet symbol.
    pub(crate) transitions: Vec<u32>,
    pub(crate) start: u32,
    pub(crate) finals: Vec<bool>,
    /// The unique non-final all-self-loop state, if the DFA has one.
    pub(crate) sink: Option<u32>,
}

impl Dfa {
    /// Builds a DFA from parts, validating completeness and bounds.
    pub fn new(
        alphabet: Vec<u8>,
        transitions: Vec<u32>,
        start: u32,
        finals: Vec<bool>,
    ) -> Result<Dfa> {
        let states = finals.len();
        if states == 0 {
            return Err(Error::InvalidDfa("a DFA needs at least one state".into()));
        }
        if !alphabet.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidDfa(
                "alphabet bytes must be sorted and distinct".into(),
            ));
        }
        if transitions.len() != states * alphabet.len() {
            return Err(Error::InvalidDfa(format!(
                "expected {} transitions for {} states over {} symbols, got {}",
                states * alphabet.len(),
                states,
                alphabet.len(),
                transitions.len()
            )));
        }
        if let Some(&t) = transitions.iter().find(|&&t| t as usize >= states) {
            return Err(Error::InvalidDfa(format!(
                "transition target {t} is out of range for {states} states"
            )));
        }
        if start as usize >= states {
            return Err(Error::InvalidDfa(format!(
                "start state {start} is out of range for {states} states"
            )));
        }
        let mut dfa = Dfa {
            alphabet,
            transitions,
            start,
            finals,
            sink: None,
        };
        dfa.sink = dfa.detect_sink();
        Ok(dfa)
    }

    /// Number of states, sink included.
    pub fn state_count(&self) -> usize {
        self.finals.len()
    }

    /// Number of states excluding the sink. This is the `|Q|` that the
    /// planning and speedup arithmetic uses: the sink row never needs to
    /// be matched speculatively, since its exit state is always itself.
    pub fn live_state_count(&self) -> usize {
        self.state_count() - usize::from(self.sink.is_some())
    }

    /// The sorted input bytes this DFA distinguishes.
    pub fn alphabet(&self) -> &[u8] {
        &self.alphabet
    }

    /// Index of `byte` within the alphabet, if it is a member.
    pub fn symbol_index(&self, byte: u8) -> Option<u8> {
        self.alphabet.binary_search(&byte).ok().map(|i| i as u8)
    }

    /// Successor of `state` on the symbol with alphabet index `sym`.
    pub fn delta(&self, state: u32, sym: u8) -> u32 {
        self.transitions[state as usize * self.alphabet.len() + sym as usize]
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn is_final(&self, state: u32) -> bool {
        self.finals[state as usize]
    }

    /// Final states in ascending order.
    pub fn final_states(&self) -> Vec<u32> {
        (0..self.state_count() as u32)
            .filter(|&s| self.finals[s as usize])
            .collect()
    }

    /// The cached sink state, if any.
    pub fn sink(&self) -> Option<u32> {
        self.sink
    }

    /// Scans for the unique non-final state whose transitions all
    /// self-loop. Returns `None` when no state qualifies or when more
    /// than one does.
    pub fn detect_sink(&self) -> Option<u32> {
        let mut found = None;
        for s in 0..self.state_count() as u32 {
            if self.finals[s as usize] {
                continue;
            }
            let all_self = (0..self.alphabet.len() as u8).all(|c| self.delta(s, c) == s);
            if all_self {
                if found.is_some() {
                    return None;
                }
                found = Some(s);
            }
        }
        found
    }

    /// Runs the DFA from `from` over a slice of symbol indices.
    pub fn walk(&self, from: u32, symbols: &[u8]) -> u32 {
        let width = self.alphabet.len();
        let mut s = from as usize;
        for &c in symbols {
            s = self.transitions[s * width + c as usize] as usize;
        }
        s as u32
    }

    /// Whether the DFA accepts the given symbol-index string.
    pub fn accepts(&self, symbols: &[u8]) -> bool {
        self.is_final(self.walk(self.start, symbols))
    }

    /// Lowers the machine into the flat row form the kernels walk.
    pub fn flatten(&self) -> crate::error::Result<FlatTable> {
        FlatTable::flatten(self)
    }

    /// A stable 64-bit content fingerprint (FNV-1a over the structure),
    /// used to key cached lookahead tables to their DFA.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write(b"dfa-v1");
        h.write(&(self.state_count() as u64).to_le_bytes());
        h.write(&(self.alphabet.len() as u64).to_le_bytes());
        h.write(&self.alphabet);
        h.write(&self.start.to_le_bytes());
        for &f in &self.finals {
            h.write(&[u8::from(f)]);
        }
        for &t in &self.transitions {
            h.write(&t.to_le_bytes());
        }
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Fnv {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dfa {
        // Two live states and a sink over {a, b}: accepts a(ba)*.
        Dfa::new(
            vec![b'a', b'b'],
            vec![1, 2, 2, 0, 2, 2],
            0,
            vec![false, true, false],
        )
        .unwrap()
    }

    #[test]
    fn constructor_rejects_bad_parts() {
        assert!(Dfa::new(vec![b'b', b'a'], vec![0, 0], 0, vec![false]).is_err());
        assert!(Dfa::new(vec![b'a'], vec![5], 0, vec![false]).is_err());
        assert!(Dfa::new(vec![b'a'], vec![0], 3, vec![false]).is_err());
        assert!(Dfa::new(vec![b'a'], vec![0, 0], 0, vec![false]).is_err());
        assert!(Dfa::new(vec![], vec![], 0, vec![]).is_err());
    }

    #[test]
    fn sink_detection_and_live_count() {
        let d = toy();
        assert_eq!(d.sink(), Some(2));
        assert_eq!(d.state_count(), 3);
        assert_eq!(d.live_state_count(), 2);

        // A final state with self-loops is not a sink.
        let all_live = Dfa::new(vec![b'a'], vec![0], 0, vec![true]).unwrap();
        assert_eq!(all_live.sink(), None);
        assert_eq!(all_live.live_state_count(), 1);

        // Two dead states: ambiguous, so none is reported.
        let two_dead = Dfa::new(
            vec![b'a'],
            vec![1, 1, 2],
            0,
            vec![false, false, false],
        )
        .unwrap();
        assert_eq!(two_dead.sink(), None);
    }

    #[test]
    fn walk_and_accept() {
        let d = toy();
        assert_eq!(d.walk(0, &[0]), 1);
        assert_eq!(d.walk(0, &[0, 1, 0]), 1);
        assert!(d.accepts(&[0]));
        assert!(d.accepts(&[0, 1, 0]));
        assert!(!d.accepts(&[]));
        assert!(!d.accepts(&[1]));
        assert_eq!(d.walk(0, &[1]), 2);
    }

    #[test]
    fn fingerprint_tracks_structure() {
        let d = toy();
        assert_eq!(d.fingerprint(), d.clone().fingerprint());
        let mut other = d.clone();
        other.transitions[0] = 0;
        assert_ne!(d.fingerprint(), other.fingerprint());
        let refinaled = Dfa::new(
            d.alphabet.clone(),
            d.transitions.clone(),
            d.start,
            vec![true, true, false],
        )
        .unwrap();
        assert_ne!(d.fingerprint(), refinaled.fingerprint());
    }

    #[test]
    fn isomorphism_helper_finds_renumberings() {
        use super::testutil::isomorphic;
        let d = toy();
        // Swap states 0 and 1.
        let swapped = Dfa::new(
            vec![b'a', b'b'],
            vec![2, 1, 0, 2, 2, 2],
            1,
            vec![true, false, false],
        )
        .unwrap();
        assert!(isomorphic(&d, &swapped));
        let different = Dfa::new(
            vec![b'a', b'b'],
            vec![1, 2, 1, 0, 2, 2],
            0,
            vec![false, true, false],
        )
        .unwrap();
        assert!(!isomorphic(&d, &different));
    }
}
