//! Binary descriptions of transducers and a self-delimiting tuple code.
//!
//! A description is `d(bin(i)) · 01 · π`, where `d(bin(i))` is the doubled
//! 1-based start index and `π` lists, for every state `q_1..q_m` and input bit,
//! an optional `bin(n)†` target component followed by the `⋄` code of the
//! emission. The target component is omitted for self-loops; otherwise the
//! target is `q_{1 + (n mod m)}`. `π` parses left to right because a `⋄`
//! component always opens with `00` or `01` and a `†` component with `10` or
//! `11`.

use thiserror::Error;

use crate::bits::{dagger, diamond, double, nat_bin, string_value, BitString};
use crate::fst::{Edge, FstSpec};

/// Why a string is not in the description domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("empty or truncated start pointer")]
    TruncatedPointer,
    #[error("start pointer is not a doubled binary numeral at bit {0}")]
    BadDoubling(usize),
    #[error("start pointer has a leading zero")]
    LeadingZeroPointer,
    #[error("transition table is empty")]
    EmptyTable,
    #[error("odd trailing bit at position {0}")]
    OddLength(usize),
    #[error("component starting at bit {0} is truncated")]
    TruncatedComponent(usize),
    #[error("expected an emission component at bit {0}")]
    MissingEmission(usize),
    #[error("table has an odd number ({0}) of transitions")]
    OddTransitionCount(usize),
    #[error("start state {start} exceeds state count {num_states}")]
    StartOutOfRange { start: u64, num_states: usize },
    #[error("numeral too large at bit {0}")]
    Overflow(usize),
}

/// A description together with its decoding, when it has one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaDescription {
    pub bits: BitString,
    pub decoded: Option<FstSpec>,
}

impl SigmaDescription {
    pub fn from_bits(bits: BitString) -> Self {
        let decoded = decode_fst(&bits).ok();
        SigmaDescription { bits, decoded }
    }
}

/// Canonical description: minimal start pointer, self-loops without a target
/// component, and the smallest `n >= 1` for every other target.
pub fn encode_fst(t: &FstSpec) -> SigmaDescription {
    let m = t.num_states();
    let mut out = double(&nat_bin(t.start() as u64 + 1).expect("index >= 1"));
    out.push(false);
    out.push(true);
    for (q, row) in t.table().iter().enumerate() {
        for edge in row {
            if edge.next != q {
                out.extend_from_slice(&dagger(&nat_bin(target_numeral(edge.next, m)).expect("n >= 1")).expect("bin is nonempty"));
            }
            out.extend_from_slice(&diamond(&edge.out));
        }
    }
    SigmaDescription { bits: out, decoded: Some(t.clone()) }
}

/// Smallest `n >= 1` with `n mod m` equal to the 0-based `target`.
fn target_numeral(target: usize, m: usize) -> u64 {
    if target == 0 {
        m as u64
    } else {
        target as u64
    }
}

/// Length of the canonical description. This is an upper bound on the
/// shortest description of `t`.
pub fn fst_size(t: &FstSpec) -> usize {
    let m = t.num_states();
    let pointer = 2 * bit_width(t.start() as u64 + 1) + 2;
    let table: usize = t
        .table()
        .iter()
        .enumerate()
        .flat_map(|(q, row)| row.iter().map(move |e| (q, e)))
        .map(|(q, e)| {
            let target = if e.next == q { 0 } else { 2 * bit_width(target_numeral(e.next, m)) };
            target + 2 * (e.out.len() + 1)
        })
        .sum();
    pointer + table
}

fn bit_width(n: u64) -> usize {
    64 - n.leading_zeros() as usize
}

/// Decode a description, or report why it is outside the domain.
pub fn decode_fst(bits: &[bool]) -> Result<FstSpec, DecodeError> {
    // Doubled start pointer terminated by `01`.
    let mut pos = 0;
    let mut start: u64 = 0;
    let mut pointer_len = 0;
    loop {
        if pos + 1 >= bits.len() {
            return Err(DecodeError::TruncatedPointer);
        }
        match (bits[pos], bits[pos + 1]) {
            (false, true) => {
                pos += 2;
                break;
            }
            (true, false) => return Err(DecodeError::BadDoubling(pos)),
            (b, _) => {
                if pointer_len == 0 && !b {
                    return Err(DecodeError::LeadingZeroPointer);
                }
                if pointer_len >= 63 {
                    return Err(DecodeError::Overflow(pos));
                }
                start = (start << 1) | b as u64;
                pointer_len += 1;
                pos += 2;
            }
        }
    }
    if pointer_len == 0 {
        return Err(DecodeError::TruncatedPointer);
    }

    // π as a sequence of (optional target numeral, emission).
    let mut entries: Vec<(Option<u64>, BitString)> = Vec::new();
    while pos < bits.len() {
        if pos + 1 >= bits.len() {
            return Err(DecodeError::OddLength(pos));
        }
        let mut target = None;
        if bits[pos] {
            let begin = pos;
            let mut n: u64 = 0;
            let mut width = 0;
            loop {
                if pos + 1 >= bits.len() {
                    return Err(DecodeError::TruncatedComponent(begin));
                }
                if width >= 63 {
                    return Err(DecodeError::Overflow(begin));
                }
                n = (n << 1) | bits[pos] as u64;
                width += 1;
                let last = bits[pos + 1];
                pos += 2;
                if last {
                    break;
                }
            }
            target = Some(n);
            if pos + 1 >= bits.len() || bits[pos] {
                return Err(DecodeError::MissingEmission(pos));
            }
        }
        // ⋄ component: complemented groups of (1e)†; the first group is `0?`.
        let begin = pos;
        let mut emission = BitString::new();
        let mut first = true;
        loop {
            if pos + 1 >= bits.len() {
                return Err(DecodeError::TruncatedComponent(begin));
            }
            let (b, cont) = (bits[pos], bits[pos + 1]);
            if !first {
                emission.push(!b);
            }
            first = false;
            pos += 2;
            if !cont {
                break;
            }
        }
        entries.push((target, emission));
    }

    if entries.is_empty() {
        return Err(DecodeError::EmptyTable);
    }
    if !entries.len().is_multiple_of(2) {
        return Err(DecodeError::OddTransitionCount(entries.len()));
    }
    let m = entries.len() / 2;
    if start as usize > m {
        return Err(DecodeError::StartOutOfRange { start, num_states: m });
    }
    let mut table = Vec::with_capacity(m);
    let mut it = entries.into_iter();
    for q in 0..m {
        let edge = |(target, out): (Option<u64>, BitString)| Edge {
            next: match target {
                None => q,
                Some(n) => (n % m as u64) as usize,
            },
            out,
        };
        let e0 = edge(it.next().expect("even count"));
        let e1 = edge(it.next().expect("even count"));
        table.push([e0, e1]);
    }
    Ok(FstSpec::new(start as usize - 1, table).expect("decoded table is well formed"))
}

/// Self-delimiting tuple code: each part but the last is written as
/// `1^{⌈log n⌉} 0 bin(n) x` with `n = |x|`; the last part is appended raw.
///
/// Empty non-final parts use `bin(0) := 0`, which the decoder tells apart
/// from `bin(1) = 1` after the zero-length unary prefix.
pub fn tuple_encode(parts: &[BitString]) -> BitString {
    let mut out = BitString::new();
    let Some((last, init)) = parts.split_last() else {
        return out;
    };
    for x in init {
        let n = x.len() as u64;
        out.extend(std::iter::repeat_n(true, ceil_log2(n)));
        out.push(false);
        if n == 0 {
            out.push(false);
        } else {
            out.extend_from_slice(&nat_bin(n).expect("n >= 1"));
        }
        out.extend_from_slice(x);
    }
    out.extend_from_slice(last);
    out
}

fn ceil_log2(n: u64) -> usize {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("tuple code truncated at bit {0}")]
pub struct TupleDecodeError(pub usize);

/// Inverse of [`tuple_encode`] for a known number of parts.
pub fn tuple_decode(bits: &[bool], parts: usize) -> Result<Vec<BitString>, TupleDecodeError> {
    let mut out = Vec::with_capacity(parts);
    let mut pos = 0;
    let take = |pos: &mut usize| -> Result<bool, TupleDecodeError> {
        let b = *bits.get(*pos).ok_or(TupleDecodeError(*pos))?;
        *pos += 1;
        Ok(b)
    };
    for _ in 0..parts.saturating_sub(1) {
        let mut ones = 0;
        while take(&mut pos)? {
            ones += 1;
        }
        // For u = ⌈log n⌉ >= 1, bin(n) has u bits unless n = 2^u, which has
        // u + 1 bits and is the only case whose first u bits read 10…0.
        let n: u64 = if ones == 0 {
            if take(&mut pos)? { 1 } else { 0 }
        } else {
            let mut v: u64 = 0;
            for _ in 0..ones {
                v = (v << 1) | take(&mut pos)? as u64;
            }
            if v == 1 << (ones - 1) {
                if take(&mut pos)? {
                    return Err(TupleDecodeError(pos - 1));
                }
                v << 1
            } else {
                v
            }
        };
        let end = pos + n as usize;
        if end > bits.len() {
            return Err(TupleDecodeError(bits.len()));
        }
        out.push(BitString::from(&bits[pos..end]));
        pos = end;
    }
    if parts > 0 {
        out.push(BitString::from(&bits[pos..]));
    }
    Ok(out)
}

/// Value of the emission `e` as used in `string(n') = e`.
pub fn emission_numeral(e: &[bool]) -> Option<u64> {
    string_value(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{all_up_to, bits};
    use crate::fst::random_fst;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn silent() -> FstSpec {
        FstSpec::repeater(&[])
    }

    #[test]
    fn silent_machine_description() {
        let d = encode_fst(&silent());
        assert_eq!(d.bits, bits("11010000"));
        assert_eq!(decode_fst(&bits("11010000")), Ok(silent()));
        assert_eq!(fst_size(&silent()), 8);
    }

    #[test]
    fn identity_roundtrip_and_size() {
        let id = FstSpec::identity();
        let d = encode_fst(&id);
        // 11 01 ⋄(0)=0110 ⋄(1)=0100
        assert_eq!(d.bits, bits("110101100100"));
        assert_eq!(decode_fst(&d.bits), Ok(id.clone()));
        assert_eq!(fst_size(&id), 12);
    }

    #[test]
    fn malformed_descriptions() {
        assert_eq!(decode_fst(&[]), Err(DecodeError::TruncatedPointer));
        assert_eq!(decode_fst(&bits("10010000")), Err(DecodeError::BadDoubling(0)));
        assert_eq!(decode_fst(&bits("0001")), Err(DecodeError::LeadingZeroPointer));
        assert_eq!(decode_fst(&bits("1101")), Err(DecodeError::EmptyTable));
        assert_eq!(decode_fst(&bits("110100")), Err(DecodeError::OddTransitionCount(1)));
        assert_eq!(decode_fst(&bits("11010")), Err(DecodeError::OddLength(4)));
        assert_eq!(
            decode_fst(&bits("11110100000000")),
            Err(DecodeError::StartOutOfRange { start: 3, num_states: 2 })
        );
        // A target component must be followed by an emission.
        assert_eq!(decode_fst(&bits("110111")), Err(DecodeError::MissingEmission(6)));
        assert_eq!(decode_fst(&bits("110101")), Err(DecodeError::TruncatedComponent(4)));
    }

    #[test]
    fn non_minimal_target_numerals_decode() {
        // One state, bin(3)† = 1011 on bit 0: 1 + (3 mod 1) = state 1.
        let t = decode_fst(&bits("1101" /* ptr */).concat(&bits("1011")).concat(&bits("00")).concat(&bits("00"))).unwrap();
        assert_eq!(t, silent());
    }

    #[test]
    fn two_state_exhaustive_roundtrip() {
        let emissions: Vec<BitString> = all_up_to(2).collect();
        let mut count = 0;
        for start in 0..2 {
            for targets in 0..16u32 {
                for e in 0..emissions.len().pow(4) {
                    let mut idx = e;
                    let mut table = Vec::new();
                    for q in 0..2 {
                        let mut row = Vec::new();
                        for b in 0..2 {
                            let next = ((targets >> (2 * q + b)) & 1) as usize;
                            row.push(Edge { next, out: emissions[idx % emissions.len()].clone() });
                            idx /= emissions.len();
                        }
                        table.push([row[0].clone(), row[1].clone()]);
                    }
                    let t = FstSpec::new(start, table).unwrap();
                    let d = encode_fst(&t);
                    assert_eq!(d.bits.len(), fst_size(&t));
                    assert_eq!(decode_fst(&d.bits).as_ref(), Ok(&t));
                    count += 1;
                }
            }
        }
        assert_eq!(count, 2 * 16 * 7usize.pow(4));
    }

    #[test]
    fn size_lower_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.gen_range(1..=6);
            let t = random_fst(&mut rng, m, 3);
            let size = fst_size(&t);
            assert!(size >= 4);
            let log_m = 63 - (m as u64).leading_zeros() as usize;
            assert!(size >= 2 * log_m + 4);
        }
    }

    #[test]
    fn tuple_examples() {
        assert_eq!(tuple_encode(&[bits("0110")]), bits("0110"));
        assert_eq!(tuple_encode(&[bits("01"), bits("1")]), bits("1010011"));
        assert_eq!(
            tuple_decode(&bits("1010011"), 2).unwrap(),
            vec![bits("01"), bits("1")]
        );
        // |x| = 4 is a power of two: bin(4) = 100 after two unary ones.
        let enc = tuple_encode(&[bits("1111"), bits("")]);
        assert_eq!(enc, bits("110100").concat(&bits("1111")));
        assert_eq!(tuple_decode(&enc, 2).unwrap(), vec![bits("1111"), bits("")]);
        assert_eq!(tuple_decode(&bits("110"), 2), Err(TupleDecodeError(3)));
    }

    #[test]
    fn tuple_random_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let parts: Vec<BitString> = (0..rng.gen_range(1..6))
                .map(|_| (0..rng.gen_range(0..40)).map(|_| rng.gen::<bool>()).collect())
                .collect();
            let enc = tuple_encode(&parts);
            assert_eq!(tuple_decode(&enc, parts.len()).unwrap(), parts);
        }
    }
}
