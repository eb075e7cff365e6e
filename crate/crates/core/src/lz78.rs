//! LZ78 with fixed-width pointers: token `i` (1-based) writes the index of
//! its parent phrase in `⌈log2 i⌉` bits, then one literal bit.

use thiserror::Error;

use crate::bits::BitString;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LzDecodeError {
    #[error("stream truncated inside token {token} at bit {position}")]
    Truncated { token: usize, position: usize },
    #[error("token {token} at bit {position} points to phrase {pointer}, which does not exist yet")]
    BadPointer { token: usize, position: usize, pointer: u64 },
}

/// `⌈log2 i⌉`, with `ceil_log2(1) = 0`.
pub fn ceil_log2(i: u64) -> u32 {
    assert!(i >= 1);
    64 - (i - 1).leading_zeros()
}

/// Bits spent on token `i`.
pub fn token_cost(i: u64) -> u64 {
    ceil_log2(i) as u64 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub pointer: u64,
    pub bit: bool,
}

/// Greedy parse of a string.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LzParse {
    /// Tokens in order, token `i` at position `i - 1`.
    pub tokens: Vec<Token>,
    /// When the last token repeats an earlier phrase, that phrase's index.
    pub tail: Option<u64>,
    /// Index the first token would have had; 1 for an unprimed parse.
    pub first_index: u64,
}

impl LzParse {
    /// Phrases spelled by the tokens, resolving pointers into `primed`
    /// phrases (index 1..) when the parse continues a dictionary.
    pub fn phrases_with(&self, primed: &[BitString]) -> Vec<BitString> {
        let mut all: Vec<BitString> = Vec::with_capacity(1 + primed.len() + self.tokens.len());
        all.push(BitString::new());
        all.extend_from_slice(primed);
        for t in &self.tokens {
            let mut p = all[t.pointer as usize].clone();
            p.push(t.bit);
            all.push(p);
        }
        all.split_off(1 + primed.len())
    }

    pub fn phrases(&self) -> Vec<BitString> {
        self.phrases_with(&[])
    }

    pub fn encoded_len(&self) -> u64 {
        (0..self.tokens.len() as u64).map(|j| token_cost(self.first_index + j)).sum()
    }
}

/// Online LZ78 state: the phrase trie, the count of complete phrases, and the
/// bits emitted for them.
#[derive(Debug, Clone)]
pub struct Lz78State {
    /// `children[node][bit]`; node 0 is the empty phrase, node `i` is phrase `i`.
    children: Vec<[u32; 2]>,
    parent: Vec<(u32, bool)>,
    current: u32,
    pending_len: usize,
    code_len: u64,
    tokens: Vec<Token>,
    keep_tokens: bool,
}

const NONE: u32 = u32::MAX;

impl Default for Lz78State {
    fn default() -> Self {
        Self::new()
    }
}

impl Lz78State {
    pub fn new() -> Self {
        Lz78State {
            children: vec![[NONE, NONE]],
            parent: vec![(0, false)],
            current: 0,
            pending_len: 0,
            code_len: 0,
            tokens: Vec::new(),
            keep_tokens: true,
        }
    }

    /// Same, without recording tokens (for long online measurements).
    pub fn counting_only() -> Self {
        Lz78State { keep_tokens: false, ..Self::new() }
    }

    /// Number of complete phrases.
    pub fn phrase_count(&self) -> u64 {
        (self.children.len() - 1) as u64
    }

    /// Bits emitted for complete phrases.
    pub fn code_len(&self) -> u64 {
        self.code_len
    }

    pub fn pending_len(&self) -> usize {
        self.pending_len
    }

    /// Length of the encoding of everything fed so far, counting the pending
    /// phrase as a duplicate tail token.
    pub fn online_len(&self) -> u64 {
        if self.pending_len > 0 {
            self.code_len + token_cost(self.phrase_count() + 1)
        } else {
            self.code_len
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Feed one bit; returns the token when it completes a phrase.
    pub fn push(&mut self, bit: bool) -> Option<Token> {
        let child = self.children[self.current as usize][bit as usize];
        if child != NONE {
            self.current = child;
            self.pending_len += 1;
            return None;
        }
        let id = self.children.len() as u32;
        self.children[self.current as usize][bit as usize] = id;
        self.children.push([NONE, NONE]);
        self.parent.push((self.current, bit));
        let token = Token { pointer: self.current as u64, bit };
        self.code_len += token_cost(id as u64);
        if self.keep_tokens {
            self.tokens.push(token);
        }
        self.current = 0;
        self.pending_len = 0;
        Some(token)
    }

    pub fn extend(&mut self, bits: &[bool]) {
        for &b in bits {
            self.push(b);
        }
    }

    /// Drop the pending partial phrase; the next bit starts a fresh phrase.
    pub fn abandon_pending(&mut self) {
        self.current = 0;
        self.pending_len = 0;
    }

    /// Token that would encode the pending phrase as a duplicate, with the
    /// index of the phrase it duplicates.
    pub fn tail_token(&self) -> Option<(Token, u64)> {
        if self.pending_len == 0 {
            return None;
        }
        let (pointer, bit) = self.parent[self.current as usize];
        Some((Token { pointer: pointer as u64, bit }, self.current as u64))
    }

    /// Structural check: every phrase's parent is an earlier phrase and
    /// sibling links are consistent.
    pub fn check_structure(&self) -> bool {
        (1..self.children.len()).all(|i| {
            let (p, b) = self.parent[i];
            (p as usize) < i && self.children[p as usize][b as usize] == i as u32
        })
    }
}

pub fn lz_parse(x: &[bool]) -> LzParse {
    let mut st = Lz78State::new();
    st.extend(x);
    finish_parse(&st, 1, 0)
}

fn finish_parse(st: &Lz78State, first_index: u64, skip: usize) -> LzParse {
    let mut tokens = st.tokens[skip..].to_vec();
    let tail = st.tail_token().map(|(t, dup)| {
        tokens.push(t);
        dup
    });
    LzParse { tokens, tail, first_index }
}

fn write_tokens(tokens: &[Token], first_index: u64) -> BitString {
    let mut out = BitString::new();
    for (j, t) in tokens.iter().enumerate() {
        let width = ceil_log2(first_index + j as u64) as usize;
        out.extend_from_slice(&BitString::from_u64(t.pointer, width));
        out.push(t.bit);
    }
    out
}

pub fn lz_encode(x: &[bool]) -> BitString {
    let p = lz_parse(x);
    write_tokens(&p.tokens, 1)
}

pub fn lz_decode(code: &[bool]) -> Result<BitString, LzDecodeError> {
    let mut phrases: Vec<BitString> = vec![BitString::new()];
    let mut out = BitString::new();
    let mut pos = 0;
    let mut i = 1u64;
    while pos < code.len() {
        let width = ceil_log2(i) as usize;
        if pos + width + 1 > code.len() {
            return Err(LzDecodeError::Truncated { token: i as usize, position: pos });
        }
        let pointer = BitString::from(&code[pos..pos + width]).to_u64();
        if pointer >= i {
            return Err(LzDecodeError::BadPointer { token: i as usize, position: pos, pointer });
        }
        let mut phrase = phrases[pointer as usize].clone();
        phrase.push(code[pos + width]);
        out.extend_from_slice(&phrase);
        phrases.push(phrase);
        pos += width + 1;
        i += 1;
    }
    Ok(out)
}

/// Encoding of `y` by LZ78 after it has parsed `x`. A partial phrase left at
/// the end of `x` is dropped, so `y` starts a fresh phrase and its first
/// token has index `d + 1`, `d` being the complete phrases of `x`.
pub fn lz_conditional(y: &[bool], x: &[bool]) -> (BitString, u64) {
    let mut st = Lz78State::new();
    st.extend(x);
    st.abandon_pending();
    let d = st.phrase_count();
    let skip = st.tokens.len();
    st.extend(y);
    let parse = finish_parse(&st, d + 1, skip);
    let bits = write_tokens(&parse.tokens, d + 1);
    let len = bits.len() as u64;
    (bits, len)
}

/// `√(2(ℓ+1)·nℓ) · log2(d + √(2(ℓ+1)·nℓ))` for `|y| = ℓ` repeated `n` times
/// after a dictionary of `d` phrases.
pub fn repeat_bound(len_y: u64, n: u64, d: u64) -> f64 {
    let s = (2.0 * (len_y as f64 + 1.0) * (n as f64 * len_y as f64)).sqrt();
    s * (d as f64 + s).log2()
}

/// `index,pointer,bit,cumulative_bits` rows for a parse.
pub fn parse_table_csv(parse: &LzParse) -> String {
    let mut s = String::from("index,pointer,bit,cumulative_bits\n");
    let mut total = 0;
    for (j, t) in parse.tokens.iter().enumerate() {
        let i = parse.first_index + j as u64;
        total += token_cost(i);
        s.push_str(&format!("{i},{},{},{total}\n", t.pointer, t.bit as u8));
    }
    s
}
