//! k-finite-state complexity: the universe of transducers with a description
//! of at most `k` bits, and the shortest input making one of them print a
//! target string. Also the block-padding code used to concatenate
//! descriptions and the combiner transducer that reads it.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::bits::{all_up_to, BitString};
use crate::codec::{decode_fst, encode_fst};
use crate::fst::{Edge, FstSpec};

/// Largest description length [`enum_fsts`] accepts by default.
pub const DEFAULT_ENUM_CEILING: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KfsError {
    #[error(
        "description bound k = {k} exceeds the enumeration ceiling {ceiling} \
         ({candidates} candidate descriptions); the universe grows as 2^(k+1)"
    )]
    CeilingExceeded { k: usize, ceiling: usize, candidates: u128 },
    #[error("machine list is empty")]
    EmptyMachineSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadError {
    #[error("block size must be at least 1")]
    ZeroBlock,
    #[error("block starting at bit {0} is truncated")]
    TruncatedBlock(usize),
    #[error("missing tail marker")]
    MissingMarker,
    #[error("tail pair at bit {0} is not doubled")]
    BadDoubling(usize),
    #[error("tail holds {found} bits but must be shorter than the block size {block}")]
    TailTooLong { found: usize, block: usize },
}

/// A complexity value; `Infinite` sorts above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Complexity {
    Finite(usize),
    Infinite,
}

impl Complexity {
    pub fn finite(self) -> Option<usize> {
        match self {
            Complexity::Finite(v) => Some(v),
            Complexity::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Complexity::Finite(_))
    }
}

impl Ord for Complexity {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Complexity::Finite(a), Complexity::Finite(b)) => a.cmp(b),
            (Complexity::Finite(_), Complexity::Infinite) => Ordering::Less,
            (Complexity::Infinite, Complexity::Finite(_)) => Ordering::Greater,
            (Complexity::Infinite, Complexity::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Complexity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Finite(v) => write!(f, "{v}"),
            Complexity::Infinite => f.write_str("inf"),
        }
    }
}

/// A machine with the shortest description that decodes to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniverseEntry {
    pub description: BitString,
    pub spec: FstSpec,
}

/// Every distinct transducer having a description of at most `k` bits, in
/// order of their shortest description (length first, then lexicographic).
#[derive(Debug, Clone)]
pub struct FstUniverse {
    pub k: usize,
    pub machines: Vec<UniverseEntry>,
}

impl FstUniverse {
    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    pub fn contains(&self, t: &FstSpec) -> bool {
        self.machines.iter().any(|e| &e.spec == t)
    }

    /// `D^k(x)` over this universe.
    pub fn complexity(&self, x: &[bool]) -> ComplexityResult {
        search(x, self.machines.iter().map(|e| (&e.spec, &e.description)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub description: BitString,
    pub input: BitString,
    pub machine_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityResult {
    pub value: Complexity,
    pub witness: Option<Witness>,
}

impl ComplexityResult {
    fn infinite() -> Self {
        ComplexityResult { value: Complexity::Infinite, witness: None }
    }

    /// Plain-text record: `value=… description=… input=… machine=…`.
    pub fn to_record(&self) -> String {
        match &self.witness {
            Some(w) => format!(
                "value={} description={} input={} machine={}",
                self.value,
                w.description,
                if w.input.is_empty() { "-".to_string() } else { w.input.to_string() },
                w.machine_index
            ),
            None => format!("value={} description=- input=- machine=-", self.value),
        }
    }
}

pub fn enum_fsts(k: usize) -> Result<FstUniverse, KfsError> {
    enum_fsts_with_ceiling(k, DEFAULT_ENUM_CEILING)
}

pub fn enum_fsts_with_ceiling(k: usize, ceiling: usize) -> Result<FstUniverse, KfsError> {
    if k > ceiling {
        return Err(KfsError::CeilingExceeded {
            k,
            ceiling,
            candidates: (1u128 << (k.min(126) + 1)) - 1,
        });
    }
    let mut seen: HashMap<FstSpec, ()> = HashMap::new();
    let mut machines = Vec::new();
    for w in all_up_to(k) {
        if let Ok(spec) = decode_fst(&w) {
            if seen.insert(spec.clone(), ()).is_none() {
                machines.push(UniverseEntry { description: w, spec });
            }
        }
    }
    Ok(FstUniverse { k, machines })
}

/// `D^k(x)`: the length of the shortest `y` with `T(y) = x` for some `T` whose
/// description has at most `k` bits.
pub fn kfs_complexity(x: &[bool], k: usize) -> Result<ComplexityResult, KfsError> {
    Ok(enum_fsts(k)?.complexity(x))
}

/// The same minimum restricted to an explicit machine list. Witness
/// descriptions are the canonical encodings.
pub fn kfs_over_set(x: &[bool], machines: &[FstSpec]) -> Result<ComplexityResult, KfsError> {
    if machines.is_empty() {
        return Err(KfsError::EmptyMachineSet);
    }
    let descriptions: Vec<BitString> = machines.iter().map(|t| encode_fst(t).bits).collect();
    Ok(search(x, machines.iter().zip(descriptions.iter())))
}

fn search<'a, I>(x: &[bool], machines: I) -> ComplexityResult
where
    I: Iterator<Item = (&'a FstSpec, &'a BitString)>,
{
    let machines: Vec<_> = machines.collect();
    let best = machines
        .par_iter()
        .enumerate()
        .filter_map(|(i, (t, _))| shortest_input(t, x).map(|y| (y.len(), i, y)))
        .min_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    match best {
        None => ComplexityResult::infinite(),
        Some((len, i, input)) => ComplexityResult {
            value: Complexity::Finite(len),
            witness: Some(Witness {
                description: machines[i].1.clone(),
                input,
                machine_index: i,
            }),
        },
    }
}

/// Lexicographically smallest among the shortest inputs `y` with
/// `t.run(y).output == x`, by breadth-first search over
/// `(state, matched prefix length)`.
pub fn shortest_input(t: &FstSpec, x: &[bool]) -> Option<BitString> {
    let n = x.len();
    let m = t.num_states();
    let node = |q: usize, pos: usize| q * (n + 1) + pos;
    let mut parent: Vec<Option<(usize, bool)>> = vec![None; m * (n + 1)];
    let mut visited = vec![false; m * (n + 1)];
    let root = node(t.start(), 0);
    visited[root] = true;
    let mut queue = VecDeque::from([(t.start(), 0usize)]);
    let mut goal = None;
    while let Some((q, pos)) = queue.pop_front() {
        if pos == n {
            goal = Some(node(q, pos));
            break;
        }
        for b in [false, true] {
            let Edge { next, out } = t.edge(q, b);
            let end = pos + out.len();
            if end > n || x[pos..end] != out[..] {
                continue;
            }
            let id = node(*next, end);
            if !visited[id] {
                visited[id] = true;
                parent[id] = Some((node(q, pos), b));
                queue.push_back((*next, end));
            }
        }
    }
    let mut cur = goal?;
    let mut y = Vec::new();
    while let Some((prev, b)) = parent[cur] {
        y.push(b);
        cur = prev;
    }
    y.reverse();
    Some(BitString::from(y))
}

/// `0 p_1…p_b 0 p_{b+1}…p_{2b} … 1` followed by the last `|p| mod b` bits
/// doubled.
pub fn pad_blocks(p: &[bool], block: usize) -> Result<BitString, PadError> {
    if block == 0 {
        return Err(PadError::ZeroBlock);
    }
    let full = p.len() / block * block;
    let mut out = BitString::with_capacity(p.len() + p.len() / block + 2 * block + 1);
    for chunk in p[..full].chunks(block) {
        out.push(false);
        out.extend_from_slice(chunk);
    }
    out.push(true);
    for &bit in &p[full..] {
        out.push(bit);
        out.push(bit);
    }
    Ok(out)
}

pub fn unpad_blocks(padded: &[bool], block: usize) -> Result<BitString, PadError> {
    if block == 0 {
        return Err(PadError::ZeroBlock);
    }
    let mut out = BitString::new();
    let mut pos = 0;
    loop {
        match padded.get(pos) {
            None => return Err(PadError::MissingMarker),
            Some(true) => {
                pos += 1;
                break;
            }
            Some(false) => {
                let end = pos + 1 + block;
                if end > padded.len() {
                    return Err(PadError::TruncatedBlock(pos));
                }
                out.extend_from_slice(&padded[pos + 1..end]);
                pos = end;
            }
        }
    }
    let tail = &padded[pos..];
    if !tail.len().is_multiple_of(2) {
        return Err(PadError::BadDoubling(padded.len() - 1));
    }
    for (i, pair) in tail.chunks(2).enumerate() {
        if pair[0] != pair[1] {
            return Err(PadError::BadDoubling(pos + 2 * i));
        }
        out.push(pair[0]);
    }
    if tail.len() / 2 >= block {
        return Err(PadError::TailTooLong { found: tail.len() / 2, block });
    }
    Ok(out)
}

/// A transducer `M` with `M(pad_blocks(p, block) · 10 · q) = A(p) · B(q)`.
///
/// While reading blocks it feeds `p` through `A`; after the `1` marker it
/// decodes doubled pairs, and the pair `10` switches to running `B` from its
/// start state. The pair `01` leads to a silent sink.
pub fn padded_combiner(a: &FstSpec, b: &FstSpec, block: usize) -> Result<FstSpec, PadError> {
    if block == 0 {
        return Err(PadError::ZeroBlock);
    }
    let ma = a.num_states();
    // Layout: block states (qa, r) for r in 0..=block, then tail states
    // (qa, pending) with pending ∈ {none, 0, 1}, then B's states, then sink.
    let block_id = |qa: usize, r: usize| qa * (block + 1) + r;
    let tail_base = ma * (block + 1);
    let tail_id = |qa: usize, pending: Option<bool>| {
        tail_base + qa * 3 + match pending {
            None => 0,
            Some(false) => 1,
            Some(true) => 2,
        }
    };
    let b_base = tail_base + 3 * ma;
    let sink = b_base + b.num_states();
    let silent = |next: usize| Edge { next, out: BitString::new() };

    let mut table: Vec<[Edge; 2]> = Vec::with_capacity(sink + 1);
    for qa in 0..ma {
        for r in 0..=block {
            if r == 0 {
                table.push([silent(block_id(qa, block)), silent(tail_id(qa, None))]);
            } else {
                let step = |bit: bool| {
                    let e = a.edge(qa, bit);
                    Edge { next: block_id(e.next, r - 1), out: e.out.clone() }
                };
                table.push([step(false), step(true)]);
            }
        }
    }
    for qa in 0..ma {
        table.push([silent(tail_id(qa, Some(false))), silent(tail_id(qa, Some(true)))]);
        let feed = |bit: bool| {
            let e = a.edge(qa, bit);
            Edge { next: tail_id(e.next, None), out: e.out.clone() }
        };
        // pending 0: "00" feeds 0, "01" is malformed.
        table.push([feed(false), silent(sink)]);
        // pending 1: "10" switches to B, "11" feeds 1.
        table.push([silent(b_base + b.start()), feed(true)]);
    }
    for row in b.table() {
        table.push([
            Edge { next: b_base + row[0].next, out: row[0].out.clone() },
            Edge { next: b_base + row[1].next, out: row[1].out.clone() },
        ]);
    }
    table.push([silent(sink), silent(sink)]);
    Ok(FstSpec::new(block_id(a.start(), 0), table).expect("combiner table is well formed"))
}
