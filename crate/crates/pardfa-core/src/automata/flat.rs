//! Flattened transition tables and encoded inputs.
//!
//! The matching kernels never consult [`Dfa`] directly. They walk a
//! table whose entries are pre-scaled row offsets: entry
//! `sbase[s * w + c]` holds `delta(s, c) * w`, where `w` is the
//! alphabet width. A walk therefore keeps the current *row offset*
//! rather than the state index, and each step is a single add and
//! load: `row = sbase[row + symbol]`. Input bytes are translated once
//! into alphabet indices by [`FlatTable::encode_input`], so the hot
//! loop never touches the 256-entry byte map.

use super::Dfa;
use crate::error::{Error, Result};

/// Marker in the byte map for bytes outside the alphabet.
const FOREIGN: u16 = u16::MAX;

/// How to treat input bytes that are not in the DFA's alphabet.
///
/// A complete DFA only defines transitions over its own alphabet; a
/// string containing any other byte cannot be in the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForeignBytePolicy {
    /// The input as a whole is a definitive non-match.
    #[default]
    Reject,
    /// A foreign byte is an error in the input.
    Strict,
}

/// A DFA lowered to the row-offset form the kernels walk.
#[derive(Debug, Clone)]
pub struct FlatTable {
    /// Row-major table of pre-scaled successor row offsets.
    sbase: Vec<u32>,
    /// Row width: the alphabet length, or 1 for an empty alphabet so
    /// that distinct states still get distinct rows.
    stride: usize,
    alphabet_len: usize,
    state_count: usize,
    /// Byte value to alphabet index, or [`FOREIGN`].
    symbol_map: [u16; 256],
    row_of_start: u32,
    row_of_sink: Option<u32>,
    finals_by_state: Vec<bool>,
}

impl FlatTable {
    /// Lowers a DFA into its flat form.
    pub fn flatten(dfa: &Dfa) -> Result<FlatTable> {
        let states = dfa.state_count();
        let width = dfa.alphabet().len();
        let stride = width.max(1);
        if states
            .checked_mul(stride)
            .is_none_or(|e| e > u32::MAX as usize)
        {
            return Err(Error::TableTooLarge {
                states,
                symbols: width,
            });
        }

        let mut sbase = Vec::with_capacity(states * width);
        for s in 0..states as u32 {
            for c in 0..width {
                sbase.push(dfa.delta(s, c as u8) * stride as u32);
            }
        }

        let mut symbol_map = [FOREIGN; 256];
        for (i, &b) in dfa.alphabet().iter().enumerate() {
            symbol_map[b as usize] = i as u16;
        }

        Ok(FlatTable {
            sbase,
            stride,
            alphabet_len: width,
            state_count: states,
            symbol_map,
            row_of_start: dfa.start() * stride as u32,
            row_of_sink: dfa.sink().map(|s| s * stride as u32),
            finals_by_state: (0..states as u32).map(|s| dfa.is_final(s)).collect(),
        })
    }

    pub fn sbase(&self) -> &[u32] {
        &self.sbase
    }

    /// Row width used for offset scaling.
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn row_of_start(&self) -> u32 {
        self.row_of_start
    }

    pub fn row_of_sink(&self) -> Option<u32> {
        self.row_of_sink
    }

    pub fn row_of_state(&self, state: u32) -> u32 {
        state * self.stride as u32
    }

    pub fn state_of_row(&self, row: u32) -> u32 {
        row / self.stride as u32
    }

    pub fn is_final_state(&self, state: u32) -> bool {
        self.finals_by_state[state as usize]
    }

    pub fn is_final_row(&self, row: u32) -> bool {
        self.finals_by_state[self.state_of_row(row) as usize]
    }

    /// Row offsets of the final states, ascending.
    pub fn rows_of_finals(&self) -> Vec<u32> {
        (0..self.state_count as u32)
            .filter(|&s| self.finals_by_state[s as usize])
            .map(|s| self.row_of_state(s))
            .collect()
    }

    /// Alphabet index for a byte, if the byte is in the alphabet.
    pub fn symbol_of_byte(&self, byte: u8) -> Option<u8> {
        match self.symbol_map[byte as usize] {
            FOREIGN => None,
            i => Some(i as u8),
        }
    }

    /// One kernel step from `row` on symbol index `sym`.
    #[inline]
    pub fn step(&self, row: u32, sym: u8) -> u32 {
        self.sbase[row as usize + sym as usize]
    }

    /// Translates raw bytes to alphabet indices.
    ///
    /// Under [`ForeignBytePolicy::Reject`], a byte outside the alphabet
    /// short-circuits into [`EncodedInput::Foreign`]: the whole input is
    /// a definitive non-match and nothing needs to run. Under
    /// [`ForeignBytePolicy::Strict`] the same byte is an error.
    pub fn encode_input(&self, bytes: &[u8], policy: ForeignBytePolicy) -> Result<EncodedInput> {
        let mut symbols = Vec::with_capacity(bytes.len());
        for (offset, &byte) in bytes.iter().enumerate() {
            match self.symbol_map[byte as usize] {
                FOREIGN => {
                    return match policy {
                        ForeignBytePolicy::Reject => Ok(EncodedInput::Foreign { offset, byte }),
                        ForeignBytePolicy::Strict => Err(Error::ForeignByte { offset, byte }),
                    }
                }
                i => symbols.push(i as u8),
            }
        }
        Ok(EncodedInput::Symbols(SymbolBuffer { symbols }))
    }
}

/// Result of encoding raw bytes against a table's alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncodedInput {
    /// Every byte mapped to an alphabet index.
    Symbols(SymbolBuffer),
    /// The first byte outside the alphabet; the input cannot match.
    Foreign { offset: usize, byte: u8 },
}

impl EncodedInput {
    /// Unwraps the symbol buffer, panicking on a foreign byte.
    pub fn expect_symbols(self) -> SymbolBuffer {
        match self {
            EncodedInput::Symbols(s) => s,
            EncodedInput::Foreign { offset, byte } => {
                panic!("input holds foreign byte 0x{byte:02x} at offset {offset}")
            }
        }
    }
}

/// An input translated to alphabet indices, ready for the kernels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolBuffer {
    symbols: Vec<u8>,
}

impl SymbolBuffer {
    /// Wraps pre-encoded symbol indices, validating them against an
    /// alphabet width.
    pub fn new(symbols: Vec<u8>, alphabet_len: usize) -> Result<SymbolBuffer> {
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= alphabet_len) {
            return Err(Error::UnknownSymbol {
                symbol: s as usize,
                alphabet: alphabet_len,
            });
        }
        Ok(SymbolBuffer { symbols })
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_grail;

    const FOUR_LIVE: &str = "(START) |- 0\n0 a 1\n0 b 2\n1 b 3\n2 a 1\n2 b 3\n3 a 3\n3 -| (FINAL)\n";

    fn four_live_table() -> FlatTable {
        FlatTable::flatten(&parse_grail(FOUR_LIVE).unwrap()).unwrap()
    }

    #[test]
    fn flatten_prescales_rows() {
        let t = four_live_table();
        assert_eq!(t.stride(), 2);
        assert_eq!(t.sbase(), &[2, 4, 8, 6, 2, 6, 6, 8, 8, 8]);
        assert_eq!(t.row_of_start(), 0);
        assert_eq!(t.row_of_sink(), Some(8));
        assert_eq!(t.rows_of_finals(), vec![6]);
        assert!(t.is_final_row(6));
        assert!(!t.is_final_row(0));
        assert_eq!(t.state_of_row(6), 3);
        assert_eq!(t.row_of_state(4), 8);
    }

    #[test]
    fn byte_map_covers_alphabet_only() {
        let t = four_live_table();
        assert_eq!(t.symbol_of_byte(b'a'), Some(0));
        assert_eq!(t.symbol_of_byte(b'b'), Some(1));
        assert_eq!(t.symbol_of_byte(b'z'), None);
        assert_eq!(t.symbol_of_byte(0), None);
    }

    #[test]
    fn encode_maps_bytes_to_indices() {
        let t = four_live_table();
        let enc = t
            .encode_input(b"bababbababbababababa", ForeignBytePolicy::Reject)
            .unwrap()
            .expect_symbols();
        assert_eq!(
            enc.as_slice(),
            &[1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0]
        );
    }

    #[test]
    fn foreign_bytes_follow_the_policy() {
        let t = four_live_table();
        match t.encode_input(b"abz", ForeignBytePolicy::Reject).unwrap() {
            EncodedInput::Foreign { offset, byte } => {
                assert_eq!((offset, byte), (2, b'z'));
            }
            other => panic!("expected foreign verdict, got {other:?}"),
        }
        assert!(matches!(
            t.encode_input(b"abz", ForeignBytePolicy::Strict),
            Err(crate::error::Error::ForeignByte { offset: 2, byte: b'z' })
        ));
    }

    #[test]
    fn empty_alphabet_still_has_distinct_rows() {
        let d = parse_grail("(START) |- 0\n0 -| (FINAL)\n").unwrap();
        let t = FlatTable::flatten(&d).unwrap();
        assert_eq!(t.alphabet_len(), 0);
        assert_eq!(t.stride(), 1);
        assert!(t.sbase().is_empty());
        let enc = t.encode_input(b"", ForeignBytePolicy::Reject).unwrap();
        assert!(matches!(enc, EncodedInput::Symbols(ref s) if s.is_empty()));
        assert!(matches!(
            t.encode_input(b"a", ForeignBytePolicy::Reject).unwrap(),
            EncodedInput::Foreign { offset: 0, byte: b'a' }
        ));
    }

    #[test]
    fn symbol_buffer_validates_indices() {
        assert!(SymbolBuffer::new(vec![0, 1, 1], 2).is_ok());
        assert!(SymbolBuffer::new(vec![2], 2).is_err());
        assert!(SymbolBuffer::new(vec![], 0).is_ok());
    }
}
