//! Regex compilation: pattern to Thompson NFA to subset-constructed,
//! minimized complete DFA.
//!
//! Patterns are matched byte-wise. Supported syntax:
//!
//! - literal bytes, `.` for any byte
//! - classes `[a-f0-9]` and negated classes `[^ab]`, with ranges;
//!   `-` is literal when first or last
//! - grouping `(...)` and alternation `|`
//! - postfix `*`, `+`, `?`, and bounded repetition `{m}`, `{m,}`,
//!   `{m,n}` with bounds up to 512
//! - escapes: `\n`, `\t`, `\r`, `\0`, and `\X` for a literal `X`
//!
//! A `{` not followed by a digit is a literal brace. The compiled
//! DFA's alphabet is exactly the set of bytes the pattern can consume,
//! so inputs containing other bytes are definitive non-matches (see
//! [`super::ForeignBytePolicy`]).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{minimize, Dfa};
use crate::error::{Error, Result};

const MAX_REPETITION: u32 = 512;
const MAX_NFA_STATES: usize = 200_000;

/// Compiles a pattern to its minimal complete DFA.
pub fn compile_regex(pattern: &str) -> Result<Dfa> {
    Ok(minimize(&compile_regex_unminimized(pattern)?))
}

/// Compiles a pattern without the final minimization pass.
pub fn compile_regex_unminimized(pattern: &str) -> Result<Dfa> {
    let ast = parse_pattern(pattern)?;
    let nfa = build_nfa(&ast)?;
    subset_construction(&nfa)
}

/// A set of byte values, as four 64-bit blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ByteSet([u64; 4]);

impl ByteSet {
    const EMPTY: ByteSet = ByteSet([0; 4]);

    fn single(b: u8) -> ByteSet {
        let mut s = ByteSet::EMPTY;
        s.insert(b);
        s
    }

    fn full() -> ByteSet {
        ByteSet([u64::MAX; 4])
    }

    fn insert(&mut self, b: u8) {
        self.0[b as usize / 64] |= 1 << (b % 64);
    }

    fn insert_range(&mut self, lo: u8, hi: u8) {
        for b in lo..=hi {
            self.insert(b);
        }
    }

    fn contains(&self, b: u8) -> bool {
        self.0[b as usize / 64] & (1 << (b % 64)) != 0
    }

    fn negate(&self) -> ByteSet {
        ByteSet([!self.0[0], !self.0[1], !self.0[2], !self.0[3]])
    }

    fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0u16..256).map(|b| b as u8).filter(|&b| self.contains(b))
    }
}

#[derive(Debug, Clone)]
enum Ast {
    /// The empty string.
    Empty,
    /// One byte from the set.
    Class(ByteSet),
    Concat(Vec<Ast>),
    Alt(Vec<Ast>),
    Repeat {
        node: Box<Ast>,
        min: u32,
        max: Option<u32>,
    },
}

fn parse_pattern(pattern: &str) -> Result<Ast> {
    let mut p = Parser {
        bytes: pattern.as_bytes(),
        pos: 0,
    };
    let ast = p.alternation()?;
    match p.peek() {
        None => Ok(ast),
        Some(b')') => Err(p.fail("unmatched closing parenthesis")),
        Some(_) => Err(p.fail("trailing input")),
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn fail(&self, msg: &str) -> Error {
        Error::RegexSyntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn alternation(&mut self) -> Result<Ast> {
        let mut parts = vec![self.concat()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            parts.push(self.concat()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Ast::Alt(parts)
        })
    }

    fn concat(&mut self) -> Result<Ast> {
        let mut items = Vec::new();
        while let Some(b) = self.peek() {
            if b == b'|' || b == b')' {
                break;
            }
            items.push(self.postfixed()?);
        }
        Ok(match items.len() {
            0 => Ast::Empty,
            1 => items.pop().unwrap(),
            _ => Ast::Concat(items),
        })
    }

    fn postfixed(&mut self) -> Result<Ast> {
        let mut node = self.atom()?;
        loop {
            let (min, max) = match self.peek() {
                Some(b'*') => (0, None),
                Some(b'+') => (1, None),
                Some(b'?') => (0, Some(1)),
                Some(b'{') if self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit) => {
                    self.pos += 1;
                    let (min, max) = self.repetition_bounds()?;
                    node = Ast::Repeat {
                        node: Box::new(node),
                        min,
                        max,
                    };
                    continue;
                }
                _ => break,
            };
            self.pos += 1;
            node = Ast::Repeat {
                node: Box::new(node),
                min,
                max,
            };
        }
        Ok(node)
    }

    /// Parses `m}`, `m,}` or `m,n}` after the opening brace.
    fn repetition_bounds(&mut self) -> Result<(u32, Option<u32>)> {
        let min = self.number()?;
        let max = match self.bump() {
            Some(b'}') => Some(min),
            Some(b',') => match self.peek() {
                Some(b'}') => {
                    self.pos += 1;
                    None
                }
                Some(b) if b.is_ascii_digit() => {
                    let n = self.number()?;
                    if self.bump() != Some(b'}') {
                        return Err(self.fail("expected '}' after repetition bounds"));
                    }
                    if n < min {
                        return Err(self.fail("repetition upper bound is below the lower bound"));
                    }
                    Some(n)
                }
                _ => return Err(self.fail("expected a digit or '}' after ','")),
            },
            _ => return Err(self.fail("expected '}' or ',' in repetition")),
        };
        Ok((min, max))
    }

    fn number(&mut self) -> Result<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.fail("expected a number"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let n: u32 = text
            .parse()
            .map_err(|_| self.fail("repetition bound does not fit"))?;
        if n > MAX_REPETITION {
            return Err(Error::RepetitionTooLarge {
                got: n,
                max: MAX_REPETITION,
            });
        }
        Ok(n)
    }

    fn atom(&mut self) -> Result<Ast> {
        match self.peek() {
            None => Err(self.fail("expected an atom")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.alternation()?;
                if self.bump() != Some(b')') {
                    return Err(self.fail("unclosed group"));
                }
                Ok(inner)
            }
            Some(b'[') => {
                self.pos += 1;
                self.class()
            }
            Some(b'.') => {
                self.pos += 1;
                Ok(Ast::Class(ByteSet::full()))
            }
            Some(b'\\') => {
                self.pos += 1;
                let b = self.escape()?;
                Ok(Ast::Class(ByteSet::single(b)))
            }
            Some(b) if b == b'*' || b == b'+' || b == b'?' => Err(self.fail("nothing to repeat")),
            Some(b'{') if self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit) => {
                Err(self.fail("nothing to repeat"))
            }
            Some(b) => {
                self.pos += 1;
                Ok(Ast::Class(ByteSet::single(b)))
            }
        }
    }

    fn escape(&mut self) -> Result<u8> {
        match self.bump() {
            None => Err(self.fail("trailing backslash")),
            Some(b'n') => Ok(b'\n'),
            Some(b't') => Ok(b'\t'),
            Some(b'r') => Ok(b'\r'),
            Some(b'0') => Ok(0),
            Some(b) => Ok(b),
        }
    }

    /// Parses a class body after the opening bracket.
    fn class(&mut self) -> Result<Ast> {
        let negated = if self.peek() == Some(b'^') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut set = ByteSet::EMPTY;
        loop {
            let lo = match self.bump() {
                None => return Err(self.fail("unterminated class")),
                Some(b']') => break,
                Some(b'\\') => self.escape()?,
                Some(b) => b,
            };
            if self.peek() == Some(b'-') && self.bytes.get(self.pos + 1) != Some(&b']') {
                self.pos += 1;
                let hi = match self.bump() {
                    None => return Err(self.fail("unterminated class")),
                    Some(b'\\') => self.escape()?,
                    Some(b) => b,
                };
                if lo > hi {
                    return Err(self.fail("class range is reversed"));
                }
                set.insert_range(lo, hi);
            } else {
                set.insert(lo);
            }
        }
        let set = if negated { set.negate() } else { set };
        if set.is_empty() {
            return Err(self.fail("class matches no byte"));
        }
        Ok(Ast::Class(set))
    }
}

/// Thompson construction product: epsilon edges plus labeled edges.
struct Nfa {
    eps: Vec<Vec<u32>>,
    edges: Vec<Vec<(ByteSet, u32)>>,
    start: u32,
    accept: u32,
}

fn build_nfa(ast: &Ast) -> Result<Nfa> {
    let mut b = NfaBuilder {
        eps: Vec::new(),
        edges: Vec::new(),
    };
    let (start, accept) = b.fragment(ast)?;
    Ok(Nfa {
        eps: b.eps,
        edges: b.edges,
        start,
        accept,
    })
}

struct NfaBuilder {
    eps: Vec<Vec<u32>>,
    edges: Vec<Vec<(ByteSet, u32)>>,
}

impl NfaBuilder {
    fn state(&mut self) -> Result<u32> {
        if self.eps.len() >= MAX_NFA_STATES {
            return Err(Error::RegexSyntax {
                pos: 0,
                msg: format!("pattern expands past {MAX_NFA_STATES} NFA states"),
            });
        }
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        Ok(self.eps.len() as u32 - 1)
    }

    fn fragment(&mut self, ast: &Ast) -> Result<(u32, u32)> {
        match ast {
            Ast::Empty => {
                let s = self.state()?;
                Ok((s, s))
            }
            Ast::Class(set) => {
                let s = self.state()?;
                let t = self.state()?;
                self.edges[s as usize].push((*set, t));
                Ok((s, t))
            }
            Ast::Concat(items) => {
                let mut cur: Option<(u32, u32)> = None;
                for item in items {
                    let (i, o) = self.fragment(item)?;
                    cur = Some(match cur {
                        None => (i, o),
                        Some((first, last)) => {
                            self.eps[last as usize].push(i);
                            (first, o)
                        }
                    });
                }
                Ok(cur.expect("parser never builds an empty concat"))
            }
            Ast::Alt(parts) => {
                let s = self.state()?;
                let t = self.state()?;
                for part in parts {
                    let (i, o) = self.fragment(part)?;
                    self.eps[s as usize].push(i);
                    self.eps[o as usize].push(t);
                }
                Ok((s, t))
            }
            Ast::Repeat { node, min, max } => {
                if *max == Some(0) {
                    let s = self.state()?;
                    return Ok((s, s));
                }
                let mut chain: Option<(u32, u32)> = None;
                let mut append = |b: &mut Self, i: u32, o: u32| {
                    chain = Some(match chain.take() {
                        None => (i, o),
                        Some((first, last)) => {
                            b.eps[last as usize].push(i);
                            (first, o)
                        }
                    });
                };
                for _ in 0..*min {
                    let (i, o) = self.fragment(node)?;
                    append(self, i, o);
                }
                match max {
                    None => {
                        // Kleene block after the mandatory copies.
                        let s = self.state()?;
                        let t = self.state()?;
                        let (i, o) = self.fragment(node)?;
                        self.eps[s as usize].push(i);
                        self.eps[s as usize].push(t);
                        self.eps[o as usize].push(t);
                        self.eps[o as usize].push(i);
                        append(self, s, t);
                    }
                    Some(max) => {
                        for _ in *min..*max {
                            let s = self.state()?;
                            let t = self.state()?;
                            let (i, o) = self.fragment(node)?;
                            self.eps[s as usize].push(i);
                            self.eps[s as usize].push(t);
                            self.eps[o as usize].push(t);
                            append(self, s, t);
                        }
                    }
                }
                Ok(chain.expect("repeat always places at least one fragment"))
            }
        }
    }
}

/// Epsilon-closure of `set`, in place; `set` stays sorted and unique.
fn closure(nfa: &Nfa, set: &mut Vec<u32>) {
    let mut stack: Vec<u32> = set.clone();
    let mut seen: BTreeSet<u32> = set.iter().copied().collect();
    while let Some(s) = stack.pop() {
        for &t in &nfa.eps[s as usize] {
            if seen.insert(t) {
                stack.push(t);
            }
        }
    }
    *set = seen.into_iter().collect();
}

fn subset_construction(nfa: &Nfa) -> Result<Dfa> {
    let alphabet: Vec<u8> = nfa
        .edges
        .iter()
        .flatten()
        .flat_map(|(set, _)| set.iter())
        .collect::<BTreeSet<u8>>()
        .into_iter()
        .collect();
    let width = alphabet.len();

    let mut ids: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
    let mut transitions: Vec<u32> = Vec::new();
    let mut finals: Vec<bool> = Vec::new();
    let mut queue: VecDeque<Vec<u32>> = VecDeque::new();

    let mut start_set = vec![nfa.start];
    closure(nfa, &mut start_set);
    finals.push(start_set.contains(&nfa.accept));
    ids.insert(start_set.clone(), 0);
    queue.push_back(start_set);
    transitions.resize(width, 0);

    while let Some(set) = queue.pop_front() {
        let id = ids[&set];
        for (c, &byte) in alphabet.iter().enumerate() {
            let mut target: Vec<u32> = Vec::new();
            for &s in &set {
                for &(label, t) in &nfa.edges[s as usize] {
                    if label.contains(byte) {
                        target.push(t);
                    }
                }
            }
            target.sort_unstable();
            target.dedup();
            closure(nfa, &mut target);
            let next_id = match ids.get(&target) {
                Some(&i) => i,
                None => {
                    let i = ids.len() as u32;
                    ids.insert(target.clone(), i);
                    finals.push(target.contains(&nfa.accept));
                    transitions.resize(transitions.len() + width, 0);
                    queue.push_back(target);
                    i
                }
            };
            transitions[id as usize * width + c] = next_id;
        }
    }

    Dfa::new(alphabet, transitions, 0, finals)
}
