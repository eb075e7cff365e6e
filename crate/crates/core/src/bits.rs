//! Binary strings and the elementary string codes used throughout the crate:
//! `bin`/`string` number codes, bit doubling, reversal, and the `†`/`⋄`
//! self-delimiting pair codes.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("invalid character {found:?} at position {position}; expected '0' or '1'")]
    InvalidChar { position: usize, found: char },
    #[error("natural-number codes are defined for n >= 1")]
    ZeroNatural,
    #[error("the dagger code is undefined on the empty string")]
    EmptyDagger,
}

/// A finite string over `{0,1}`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn with_capacity(cap: usize) -> Self {
        BitString(Vec::with_capacity(cap))
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// `n` copies of `bit`.
    pub fn repeat_bit(bit: bool, n: usize) -> Self {
        BitString(vec![bit; n])
    }

    /// The `len`-bit big-endian representation of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        BitString((0..len).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn concat(&self, other: &[bool]) -> BitString {
        let mut out = self.clone();
        out.0.extend_from_slice(other);
        out
    }

    /// `self` repeated `times` times.
    pub fn power(&self, times: usize) -> BitString {
        let mut out = Vec::with_capacity(self.len() * times);
        for _ in 0..times {
            out.extend_from_slice(&self.0);
        }
        BitString(out)
    }

    pub fn is_prefix_of(&self, other: &[bool]) -> bool {
        other.starts_with(&self.0)
    }

    /// Unsigned value of the string read as big-endian binary. Only meaningful
    /// for strings of at most 64 bits.
    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }
}

impl Deref for BitString {
    type Target = Vec<bool>;
    fn deref(&self) -> &Vec<bool> {
        &self.0
    }
}

impl DerefMut for BitString {
    fn deref_mut(&mut self) -> &mut Vec<bool> {
        &mut self.0
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl From<&[bool]> for BitString {
    fn from(bits: &[bool]) -> Self {
        BitString(bits.to_vec())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString(iter.into_iter().collect())
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(position, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                found => Err(BitsError::InvalidChar { position, found }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_ascii(&self.0))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("λ")
        } else {
            write!(f, "\"{}\"", to_ascii(&self.0))
        }
    }
}

/// Render bits as ASCII `'0'`/`'1'`.
pub fn to_ascii(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parse an ASCII `'0'`/`'1'` string, ignoring surrounding whitespace.
pub fn parse_bits(s: &str) -> Result<BitString, BitsError> {
    s.trim().parse()
}

/// Shorthand used heavily in tests and fixtures. Panics on malformed input.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("literal bit string")
}

/// Standard binary representation of `n >= 1` (leading bit 1).
pub fn nat_bin(n: u64) -> Result<BitString, BitsError> {
    if n == 0 {
        return Err(BitsError::ZeroNatural);
    }
    let width = 64 - n.leading_zeros() as usize;
    Ok(BitString::from_u64(n, width))
}

/// `bin(n)` with its leading 1 removed; `|string(n)| = ⌊log n⌋`.
pub fn nat_string(n: u64) -> Result<BitString, BitsError> {
    let mut b = nat_bin(n)?;
    b.remove(0);
    Ok(b)
}

/// Inverse of [`nat_string`]: the `n` with `string(n) = s`.
pub fn string_value(s: &[bool]) -> Option<u64> {
    if s.len() >= 64 {
        return None;
    }
    Some(s.iter().fold(1u64, |acc, &b| (acc << 1) | b as u64))
}

/// `x_1 0 x_2 0 … x_{l-1} 0 x_l 1`.
pub fn dagger(x: &[bool]) -> Result<BitString, BitsError> {
    if x.is_empty() {
        return Err(BitsError::EmptyDagger);
    }
    let mut out = BitString::with_capacity(2 * x.len());
    for (i, &b) in x.iter().enumerate() {
        out.push(b);
        out.push(i + 1 == x.len());
    }
    Ok(out)
}

/// Bitwise complement of `(1x)†`. Defined for every `x`, including `λ`.
pub fn diamond(x: &[bool]) -> BitString {
    let mut one_x = Vec::with_capacity(x.len() + 1);
    one_x.push(true);
    one_x.extend_from_slice(x);
    let d = dagger(&one_x).expect("1x is never empty");
    complement(&d)
}

pub fn complement(x: &[bool]) -> BitString {
    x.iter().map(|&b| !b).collect()
}

/// Each bit written twice.
pub fn double(x: &[bool]) -> BitString {
    let mut out = BitString::with_capacity(2 * x.len());
    for &b in x {
        out.push(b);
        out.push(b);
    }
    out
}

pub fn reverse(x: &[bool]) -> BitString {
    x.iter().rev().copied().collect()
}

/// Enumerate every string of length exactly `len` in lexicographic order.
pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
    assert!(len < 64, "enumeration width too large");
    (0..(1u64 << len)).map(move |v| BitString::from_u64(v, len))
}

/// Enumerate every string of length `<= max_len`, shortest first, each length
/// in lexicographic order.
pub fn all_up_to(max_len: usize) -> impl Iterator<Item = BitString> {
    (0..=max_len).flat_map(all_of_length)
}
