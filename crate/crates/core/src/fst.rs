//! Deterministic finite-state transducers over `{0,1}`: simulation,
//! information-losslessness checking, composition, start shifting and
//! inverse-pair verification.
//!
//! States are numbered `1..=m` in the textual format and `0..m` internally.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::bits::{BitString, BitsError};

/// Emission length bound applied when parsing or generating specs.
pub const DEFAULT_MAX_EMISSION: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FstError {
    #[error("a transducer needs at least one state")]
    NoStates,
    #[error("start state {start} outside 1..={num_states}")]
    StartOutOfRange { start: usize, num_states: usize },
    #[error("transition ({state}, {bit}) targets state {target} outside 1..={num_states}")]
    TargetOutOfRange {
        state: usize,
        bit: u8,
        target: usize,
        num_states: usize,
    },
    #[error("missing transition for ({state}, {bit})")]
    MissingTransition { state: usize, bit: u8 },
    #[error("duplicate transition for ({state}, {bit}) on line {line}")]
    DuplicateTransition { state: usize, bit: u8, line: usize },
    #[error("emission of ({state}, {bit}) has {len} bits, limit is {limit}")]
    EmissionTooLong {
        state: usize,
        bit: u8,
        len: usize,
        limit: usize,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Bits(#[from] BitsError),
}

/// One entry of the transition table: target state and emitted bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub next: usize,
    pub out: BitString,
}

/// A finite-state transducer `(Q, q0, δ, ν)` with `Q = {0, …, m-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FstSpec {
    start: usize,
    table: Vec<[Edge; 2]>,
}

/// Output and final state of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub output: BitString,
    pub final_state: usize,
}

impl FstSpec {
    /// Build from a 0-based table. Every state must have both bit edges.
    pub fn new(start: usize, table: Vec<[Edge; 2]>) -> Result<Self, FstError> {
        let spec = FstSpec { start, table };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), FstError> {
        let m = self.table.len();
        if m == 0 {
            return Err(FstError::NoStates);
        }
        if self.start >= m {
            return Err(FstError::StartOutOfRange {
                start: self.start + 1,
                num_states: m,
            });
        }
        for (q, row) in self.table.iter().enumerate() {
            for (b, edge) in row.iter().enumerate() {
                if edge.next >= m {
                    return Err(FstError::TargetOutOfRange {
                        state: q + 1,
                        bit: b as u8,
                        target: edge.next + 1,
                        num_states: m,
                    });
                }
            }
        }
        Ok(())
    }

    /// Reject emissions longer than `limit` bits.
    pub fn check_emission_limit(&self, limit: usize) -> Result<(), FstError> {
        for (q, row) in self.table.iter().enumerate() {
            for (b, edge) in row.iter().enumerate() {
                if edge.out.len() > limit {
                    return Err(FstError::EmissionTooLong {
                        state: q + 1,
                        bit: b as u8,
                        len: edge.out.len(),
                        limit,
                    });
                }
            }
        }
        Ok(())
    }

    /// The one-state transducer copying its input.
    pub fn identity() -> Self {
        FstSpec {
            start: 0,
            table: vec![[
                Edge { next: 0, out: BitString::repeat_bit(false, 1) },
                Edge { next: 0, out: BitString::repeat_bit(true, 1) },
            ]],
        }
    }

    /// The one-state transducer emitting `r` on every input bit, so that
    /// `T_r(x) = r^{|x|}`.
    pub fn repeater(r: &[bool]) -> Self {
        let edge = Edge { next: 0, out: BitString::from(r) };
        FstSpec { start: 0, table: vec![[edge.clone(), edge]] }
    }

    pub fn num_states(&self) -> usize {
        self.table.len()
    }

    /// 0-based start state.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn edge(&self, state: usize, bit: bool) -> &Edge {
        &self.table[state][bit as usize]
    }

    pub fn table(&self) -> &[[Edge; 2]] {
        &self.table
    }

    pub fn max_emission(&self) -> usize {
        self.table
            .iter()
            .flat_map(|row| row.iter().map(|e| e.out.len()))
            .max()
            .unwrap_or(0)
    }

    /// Same table, different start state.
    pub fn with_start(&self, start: usize) -> Result<Self, FstError> {
        FstSpec::new(start, self.table.clone())
    }

    /// Run from the start state.
    pub fn run(&self, input: &[bool]) -> RunResult {
        self.run_from(self.start, input)
    }

    pub fn run_from(&self, state: usize, input: &[bool]) -> RunResult {
        let mut q = state;
        let mut output = BitString::new();
        for &b in input {
            let e = self.edge(q, b);
            output.extend_from_slice(&e.out);
            q = e.next;
        }
        RunResult { output, final_state: q }
    }

    /// `δ̂(x)` without materialising the output.
    pub fn final_state(&self, input: &[bool]) -> usize {
        input.iter().fold(self.start, |q, &b| self.edge(q, b).next)
    }

    /// Parse with the default emission limit.
    pub fn from_text(text: &str) -> Result<Self, FstError> {
        Self::from_text_with_limit(text, DEFAULT_MAX_EMISSION)
    }

    /// Parse the line format: `fst m start` followed by `q b -> q' emission`
    /// lines, emission `-` for λ. Blank lines and `#` comments are ignored.
    pub fn from_text_with_limit(text: &str, limit: usize) -> Result<Self, FstError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(FstError::Syntax {
            line: 1,
            message: "missing `fst m start` header".into(),
        })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "fst" {
            return Err(FstError::Syntax {
                line: hline,
                message: format!("expected `fst m start`, got {header:?}"),
            });
        }
        let m = parse_index(h[1], hline)?;
        let start = parse_index(h[2], hline)?;
        if m == 0 {
            return Err(FstError::NoStates);
        }
        if start == 0 || start > m {
            return Err(FstError::StartOutOfRange { start, num_states: m });
        }
        let mut slots: Vec<[Option<Edge>; 2]> = vec![[None, None]; m];
        for (line, body) in lines {
            let t: Vec<&str> = body.split_whitespace().collect();
            if t.len() != 5 || t[2] != "->" {
                return Err(FstError::Syntax {
                    line,
                    message: format!("expected `q b -> q' emission`, got {body:?}"),
                });
            }
            let q = parse_index(t[0], line)?;
            let b = match t[1] {
                "0" => 0u8,
                "1" => 1u8,
                other => {
                    return Err(FstError::Syntax {
                        line,
                        message: format!("input symbol must be 0 or 1, got {other:?}"),
                    })
                }
            };
            let target = parse_index(t[3], line)?;
            let out = parse_emission(t[4])?;
            if q == 0 || q > m {
                return Err(FstError::Syntax {
                    line,
                    message: format!("state {q} outside 1..={m}"),
                });
            }
            if target == 0 || target > m {
                return Err(FstError::TargetOutOfRange {
                    state: q,
                    bit: b,
                    target,
                    num_states: m,
                });
            }
            let slot = &mut slots[q - 1][b as usize];
            if slot.is_some() {
                return Err(FstError::DuplicateTransition { state: q, bit: b, line });
            }
            *slot = Some(Edge { next: target - 1, out });
        }
        let mut table = Vec::with_capacity(m);
        for (q, [e0, e1]) in slots.into_iter().enumerate() {
            let e0 = e0.ok_or(FstError::MissingTransition { state: q + 1, bit: 0 })?;
            let e1 = e1.ok_or(FstError::MissingTransition { state: q + 1, bit: 1 })?;
            table.push([e0, e1]);
        }
        let spec = FstSpec::new(start - 1, table)?;
        spec.check_emission_limit(limit)?;
        Ok(spec)
    }

    /// Canonical text rendering; round-trips through [`FstSpec::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = format!("fst {} {}\n", self.num_states(), self.start + 1);
        for (q, row) in self.table.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                s.push_str(&format!(
                    "{} {} -> {} {}\n",
                    q + 1,
                    b,
                    e.next + 1,
                    emission_text(&e.out)
                ));
            }
        }
        s
    }
}

impl fmt::Display for FstSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for FstSpec {
    type Err = FstError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FstSpec::from_text(s)
    }
}

pub(crate) fn emission_text(bits: &[bool]) -> String {
    if bits.is_empty() {
        "-".to_string()
    } else {
        crate::bits::to_ascii(bits)
    }
}

pub(crate) fn parse_emission(token: &str) -> Result<BitString, BitsError> {
    if token == "-" {
        Ok(BitString::new())
    } else {
        token.parse()
    }
}

fn parse_index(token: &str, line: usize) -> Result<usize, FstError> {
    token.parse().map_err(|_| FstError::Syntax {
        line,
        message: format!("expected a state number, got {token:?}"),
    })
}

/// Outcome of a bounded injectivity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IlVerdict {
    Pass,
    /// Two distinct inputs with identical (output, final state).
    Collision(BitString, BitString),
}

/// Check that `x ↦ (T(x), δ̂(x))` is injective over every `|x| <= max_len`.
///
/// Inputs are visited shortest first, lexicographically within a length; the
/// first input whose image was already seen is reported with the earlier one.
pub fn il_check(t: &FstSpec, max_len: usize) -> IlVerdict {
    let mut seen: HashMap<(BitString, usize), BitString> = HashMap::new();
    let mut frontier: VecDeque<(BitString, BitString, usize)> = VecDeque::new();
    frontier.push_back((BitString::new(), BitString::new(), t.start));
    while let Some((x, out, q)) = frontier.pop_front() {
        if let Some(prev) = seen.get(&(out.clone(), q)) {
            return IlVerdict::Collision(prev.clone(), x);
        }
        seen.insert((out.clone(), q), x.clone());
        if x.len() < max_len {
            for b in [false, true] {
                let e = t.edge(q, b);
                let mut nx = x.clone();
                nx.push(b);
                frontier.push_back((nx, out.concat(&e.out), e.next));
            }
        }
    }
    IlVerdict::Pass
}

/// The transducer computing `x ↦ A(B(x))`. Product states are numbered in
/// breadth-first discovery order from `(start_A, start_B)`; unreachable
/// pairs are dropped.
pub fn fst_compose(a: &FstSpec, b: &FstSpec) -> FstSpec {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let root = (a.start, b.start);
    index.insert(root, 0);
    order.push(root);
    queue.push_back(root);
    let mut rows: Vec<Option<[Edge; 2]>> = vec![None];
    while let Some((qa, qb)) = queue.pop_front() {
        let id = index[&(qa, qb)];
        let mut row: Vec<Edge> = Vec::with_capacity(2);
        for bit in [false, true] {
            let eb = b.edge(qb, bit);
            let ra = a.run_from(qa, &eb.out);
            let key = (ra.final_state, eb.next);
            let next = *index.entry(key).or_insert_with(|| {
                order.push(key);
                rows.push(None);
                queue.push_back(key);
                order.len() - 1
            });
            row.push(Edge { next, out: ra.output });
        }
        let e1 = row.pop().expect("two edges");
        let e0 = row.pop().expect("two edges");
        rows[id] = Some([e0, e1]);
    }
    let table = rows.into_iter().map(|r| r.expect("every discovered state expanded")).collect();
    FstSpec { start: 0, table }
}

/// The transducer `T_w`: identical to `T` but starting where `T` ends on `w`.
pub fn shift_start(t: &FstSpec, w: &[bool]) -> FstSpec {
    FstSpec { start: t.final_state(w), table: t.table.clone() }
}

/// Check `x↾(|x|-c) ⊑ Tinv(T(x)) ⊑ x` for every `|x| <= max_len`; returns the
/// first failing `x` in length-lexicographic order.
pub fn verify_inverse_pair(
    t: &FstSpec,
    tinv: &FstSpec,
    slack: usize,
    max_len: usize,
) -> Result<(), BitString> {
    for x in crate::bits::all_up_to(max_len) {
        let y = tinv.run(&t.run(&x).output).output;
        let keep = x.len().saturating_sub(slack);
        let lower_ok = y.len() >= keep && y[..keep] == x[..keep];
        let upper_ok = y.is_prefix_of(&x);
        if !(lower_ok && upper_ok) {
            return Err(x);
        }
    }
    Ok(())
}

/// A uniformly random spec with `num_states` states and emissions of at most
/// `max_emission` bits.
pub fn random_fst<R: Rng + ?Sized>(rng: &mut R, num_states: usize, max_emission: usize) -> FstSpec {
    assert!(num_states > 0);
    let edge = |rng: &mut R| {
        let len = rng.gen_range(0..=max_emission);
        Edge {
            next: rng.gen_range(0..num_states),
            out: (0..len).map(|_| rng.gen::<bool>()).collect(),
        }
    };
    let table = (0..num_states).map(|_| [edge(rng), edge(rng)]).collect();
    FstSpec { start: rng.gen_range(0..num_states), table }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{all_up_to, bits};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn silent() -> FstSpec {
        FstSpec::repeater(&[])
    }

    /// Emits each input bit twice.
    fn doubler() -> FstSpec {
        FstSpec::from_text("fst 1 1\n1 0 -> 1 00\n1 1 -> 1 11\n").unwrap()
    }

    /// Keeps every second input bit.
    fn halver() -> FstSpec {
        FstSpec::from_text("fst 2 1\n1 0 -> 2 -\n1 1 -> 2 -\n2 0 -> 1 0\n2 1 -> 1 1\n").unwrap()
    }

    #[test]
    fn run_examples() {
        let id = FstSpec::identity();
        assert_eq!(
            id.run(&bits("0110")),
            RunResult { output: bits("0110"), final_state: 0 }
        );
        let tr = FstSpec::repeater(&bits("10"));
        assert_eq!(tr.run(&bits("00")).output, bits("1010"));
        assert_eq!(tr.run(&bits("")), RunResult { output: bits(""), final_state: 0 });
    }

    #[test]
    fn il_examples() {
        assert_eq!(il_check(&FstSpec::identity(), 8), IlVerdict::Pass);
        for t in [silent(), FstSpec::repeater(&bits("10"))] {
            match il_check(&t, 2) {
                IlVerdict::Collision(x, y) => {
                    assert_ne!(x, y);
                    assert_eq!(t.run(&x), t.run(&y));
                }
                IlVerdict::Pass => panic!("lossy transducer passed"),
            }
        }
        // Both single bits collide under the silent machine.
        let t = silent();
        assert_eq!(t.run(&bits("0")), t.run(&bits("1")));
        assert_eq!(il_check(&doubler(), 10), IlVerdict::Pass);
    }

    #[test]
    fn compose_examples() {
        let id = FstSpec::identity();
        let r = bits("10");
        let tr = FstSpec::repeater(&r);
        let ii = fst_compose(&id, &id);
        let a = fst_compose(&id, &tr);
        let b = fst_compose(&tr, &id);
        for x in all_up_to(10) {
            assert_eq!(ii.run(&x).output, x);
            if x.len() <= 6 {
                assert_eq!(a.run(&x).output, r.power(x.len()));
                assert_eq!(b.run(&x).output, r.power(x.len()));
            }
        }
        // The halver is back in its start state after each doubled pair.
        let hd = fst_compose(&halver(), &doubler());
        assert_eq!(hd.num_states(), 1);
        for x in all_up_to(8) {
            assert_eq!(hd.run(&x).output, x);
        }
    }

    #[test]
    fn compose_prunes_unreachable_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_fst(&mut rng, 3, 2);
            let b = random_fst(&mut rng, 4, 2);
            let c = fst_compose(&a, &b);
            assert!(c.num_states() <= a.num_states() * b.num_states());
        }
    }

    #[test]
    fn shift_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_fst(&mut rng, 3, 2);
        assert_eq!(shift_start(&t, &[]), t);
        let id = FstSpec::identity();
        assert_eq!(shift_start(&id, &bits("0110")), id);
        let w = bits("011");
        let tw = shift_start(&t, &w);
        for y in all_up_to(8) {
            let whole = t.run(&w.concat(&y)).output;
            assert_eq!(whole, t.run(&w).output.concat(&tw.run(&y).output));
        }
    }

    #[test]
    fn inverse_pair_examples() {
        let id = FstSpec::identity();
        assert_eq!(verify_inverse_pair(&id, &id, 0, 8), Ok(()));
        let zeros = FstSpec::repeater(&bits("0"));
        assert_eq!(verify_inverse_pair(&id, &zeros, 0, 2), Err(bits("1")));
        assert_eq!(verify_inverse_pair(&doubler(), &halver(), 1, 8), Ok(()));
        // Dropping the last bit needs slack 1.
        assert_eq!(verify_inverse_pair(&id, &halver(), 0, 2), Err(bits("0")));
    }

    #[test]
    fn text_format_is_bit_exact() {
        let text = "fst 2 2\n1 0 -> 2 -\n1 1 -> 1 01\n2 0 -> 2 1\n2 1 -> 1 -\n";
        let t = FstSpec::from_text(text).unwrap();
        assert_eq!(t.to_text(), text);
        assert_eq!(t.start(), 1);
        let shuffled = "# comment\nfst 2 2\n\n2 1 -> 1 -\n1 1 -> 1 01\n2 0 -> 2 1\n1 0 -> 2 -\n";
        assert_eq!(FstSpec::from_text(shuffled).unwrap(), t);
    }

    #[test]
    fn text_format_errors() {
        assert!(matches!(
            FstSpec::from_text("fst 1 1\n1 0 -> 1 0\n"),
            Err(FstError::MissingTransition { state: 1, bit: 1 })
        ));
        assert!(matches!(
            FstSpec::from_text("fst 1 2\n"),
            Err(FstError::StartOutOfRange { .. })
        ));
        assert!(matches!(
            FstSpec::from_text("fst 1 1\n1 0 -> 2 0\n1 1 -> 1 1\n"),
            Err(FstError::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            FstSpec::from_text("fst 1 1\n1 0 -> 1 0\n1 0 -> 1 0\n1 1 -> 1 1\n"),
            Err(FstError::DuplicateTransition { line: 3, .. })
        ));
        assert!(matches!(
            FstSpec::from_text("fst 1 1\n1 0 -> 1 000000000\n1 1 -> 1 1\n"),
            Err(FstError::EmissionTooLong { len: 9, .. })
        ));
        assert!(FstSpec::from_text_with_limit("fst 1 1\n1 0 -> 1 000000000\n1 1 -> 1 1\n", 9).is_ok());
        assert!(matches!(FstSpec::from_text(""), Err(FstError::Syntax { .. })));
        assert!(matches!(FstSpec::from_text("fst 0 1"), Err(FstError::NoStates)));
    }
}
