//! Seeded generators for three families of structured binary sequences, and
//! the finite-state randomness test used to pick their random blocks.
//!
//! * Recipe A: an interval partition whose even intervals repeat a short
//!   finite-state-random string and whose odd intervals are pseudorandom.
//! * Recipe B: zones `R 1^k reverse(R)` with `R` free of `1^k`.
//! * Recipe C: for each length `n`, all strings without `1^k`, palindromes
//!   first, then the rest paired with their reversals across flagged zones.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::BitString;
use crate::kfs::{enum_fsts, Complexity, DEFAULT_ENUM_CEILING};

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("certified mode needs 3k <= {ceiling}, got k = {k}")]
    CertificationOutOfReach { k: usize, ceiling: usize },
    #[error("no candidate among {tried} met the randomness bound")]
    SearchExhausted { tried: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("sequence would exceed {limit} bits")]
    TooLarge { limit: u128 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Interval growth: `|I_1| = 2, |I_j| = 2^{|I_1|+…+|I_{j-1}|}`, or `g^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Growth {
    Tower,
    Scaled { g: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Truncation {
    /// 1-based index of the first interval left out.
    pub index: usize,
    /// Its length, or `None` when it does not fit in 128 bits.
    pub length: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalPartition {
    pub growth: Growth,
    pub lengths: Vec<u128>,
    pub truncated: Option<Truncation>,
}

impl IntervalPartition {
    /// `(min, max)` of every interval.
    pub fn bounds(&self) -> Vec<(u128, u128)> {
        let mut start = 0u128;
        self.lengths
            .iter()
            .map(|&len| {
                let b = (start, start + len - 1);
                start += len;
                b
            })
            .collect()
    }

    pub fn total(&self) -> u128 {
        self.lengths.iter().sum()
    }
}

/// Length of interval `j` (1-based) given the lengths before it.
fn interval_length(growth: Growth, j: usize, previous_total: u128) -> Option<u128> {
    match growth {
        Growth::Tower if j == 1 => Some(2),
        Growth::Tower => {
            if previous_total < 128 {
                Some(1u128 << previous_total)
            } else {
                None
            }
        }
        Growth::Scaled { g } => (g as u128).checked_pow(j as u32),
    }
}

/// The first `max_count` intervals, stopping early at the first one that
/// would take the total past `bit_budget`.
pub fn intervals(growth: Growth, max_count: usize, bit_budget: u128) -> IntervalPartition {
    let mut lengths = Vec::new();
    let mut total = 0u128;
    let mut truncated = None;
    for j in 1..=max_count {
        let len = interval_length(growth, j, total);
        match len {
            Some(l) if total.checked_add(l).is_some_and(|t| t <= bit_budget) => {
                lengths.push(l);
                total += l;
            }
            _ => {
                truncated = Some(Truncation { index: j, length: len });
                break;
            }
        }
    }
    IntervalPartition { growth, lengths, truncated }
}

/// The bound `k` an even interval index is assigned to: `j = 2^k (2t + 1)`.
pub fn devoted_bound(j: usize) -> Option<usize> {
    if j == 0 || j % 2 == 1 {
        None
    } else {
        Some(j.trailing_zeros() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomMode {
    Certified,
    Surrogate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Certificate {
    /// `value` is the `3k`-bounded complexity; `None` means infinite.
    Certified { value: Option<usize>, threshold: i64, candidates: usize },
    Uncertified,
}

/// Candidates tried by certified search before giving up.
pub const CERTIFY_ATTEMPTS: usize = 256;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_bits<R: Rng>(rng: &mut R, len: usize) -> BitString {
    (0..len).map(|_| rng.gen::<bool>()).collect()
}

/// A string of `length` bits that no transducer with a description of at
/// most `3k` bits compresses by more than `4k` bits.
///
/// Certified mode tries seeded candidates in order and returns the first
/// that passes; surrogate mode returns the first candidate unchecked.
pub fn fs_random_string(
    length: usize,
    k: usize,
    mode: RandomMode,
    seed: u64,
    stream: u64,
) -> Result<(BitString, Certificate), SeqError> {
    let candidate = |i: usize| random_bits(&mut stream_rng(seed, stream.wrapping_mul(1 << 16).wrapping_add(i as u64)), length);
    match mode {
        RandomMode::Surrogate => Ok((candidate(0), Certificate::Uncertified)),
        RandomMode::Certified => {
            if 3 * k > DEFAULT_ENUM_CEILING {
                return Err(SeqError::CertificationOutOfReach { k, ceiling: DEFAULT_ENUM_CEILING });
            }
            let universe = enum_fsts(3 * k).expect("within ceiling");
            let threshold = length as i64 - 4 * k as i64;
            for i in 0..CERTIFY_ATTEMPTS {
                let r = candidate(i);
                let value = universe.complexity(&r).value;
                let passes = match value {
                    Complexity::Infinite => true,
                    Complexity::Finite(v) => v as i64 >= threshold,
                };
                if passes {
                    return Ok((r, Certificate::Certified { value: value.finite(), threshold, candidates: i + 1 }));
                }
            }
            Err(SeqError::SearchExhausted { tried: CERTIFY_ATTEMPTS })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "recipe")]
pub enum Recipe {
    A { growth: Growth, stages: usize, certify: bool },
    B { k: usize, stages: usize },
    C { k: usize, v: usize, stages: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeConfig {
    pub recipe: Recipe,
    pub seed: u64,
    /// Stop after this many bits, cutting the last block.
    pub max_bits: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockRecord {
    pub label: String,
    pub start: u64,
    pub len: u64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub bits: BitString,
    pub blocks: Vec<BlockRecord>,
    pub notices: Vec<String>,
}

/// Hard limit on generated length.
pub const MAX_GENERATED_BITS: u128 = 1 << 28;

struct Sink {
    bits: BitString,
    blocks: Vec<BlockRecord>,
    notices: Vec<String>,
    limit: Option<u64>,
}

impl Sink {
    fn new(limit: Option<u64>) -> Self {
        Sink { bits: BitString::new(), blocks: Vec::new(), notices: Vec::new(), limit }
    }

    fn full(&self) -> bool {
        self.limit.is_some_and(|l| self.bits.len() as u64 >= l)
    }

    /// Append a block; returns false once the limit is reached.
    fn add(&mut self, label: String, block: &[bool], note: String) -> bool {
        let start = self.bits.len() as u64;
        let room = self.limit.map_or(usize::MAX, |l| (l - start) as usize);
        let take = block.len().min(room);
        self.bits.extend_from_slice(&block[..take]);
        let note = if take < block.len() {
            self.notices.push(format!("{label} cut to {take} of {} bits by the length limit", block.len()));
            format!("{note}; cut to {take} bits")
        } else {
            note
        };
        self.blocks.push(BlockRecord { label, start, len: take as u64, note });
        !self.full()
    }

    fn finish(self) -> Generated {
        Generated { bits: self.bits, blocks: self.blocks, notices: self.notices }
    }
}

pub fn generate(cfg: &RecipeConfig) -> Result<Generated, SeqError> {
    match &cfg.recipe {
        Recipe::A { growth, stages, certify } => gen_recipe_a(*growth, *stages, *certify, cfg.seed, cfg.max_bits),
        Recipe::B { k, stages } => gen_recipe_b(*k, *stages, cfg.seed, cfg.max_bits),
        Recipe::C { k, v, stages } => gen_recipe_c(*k, *v, *stages, cfg.max_bits),
    }
}

fn gen_recipe_a(
    growth: Growth,
    stages: usize,
    certify: bool,
    seed: u64,
    max_bits: Option<u64>,
) -> Result<Generated, SeqError> {
    if let Growth::Scaled { g } = growth {
        if g < 2 {
            return Err(SeqError::InvalidParameters("scaled growth needs g >= 2".into()));
        }
    }
    let budget = max_bits.map_or(MAX_GENERATED_BITS, |b| (b as u128).min(MAX_GENERATED_BITS));
    // Intervals are produced in full; the sink cuts at max_bits.
    let part = intervals(growth, stages, MAX_GENERATED_BITS);
    let mut sink = Sink::new(max_bits);
    if let Some(t) = &part.truncated {
        sink.notices.push(match t.length {
            Some(l) => format!("interval {} has {l} bits; generation stops before it", t.index),
            None => format!("interval {} has more than 2^128 bits; generation stops before it", t.index),
        });
    }
    let mut r_cache: Vec<Option<(BitString, Certificate)>> = Vec::new();
    for (idx, &len) in part.lengths.iter().enumerate() {
        let j = idx + 1;
        let len = len as usize;
        let more = match devoted_bound(j) {
            None => {
                let block = random_bits(&mut stream_rng(seed, j as u64), len);
                sink.add(format!("S_{j}"), &block, "pseudorandom".into())
            }
            Some(k) => {
                if r_cache.len() <= k {
                    r_cache.resize(k + 1, None);
                }
                if r_cache[k].is_none() {
                    let r_len = interval_length_at(growth, 1usize << k)
                        .filter(|&l| l <= budget)
                        .ok_or(SeqError::TooLarge { limit: budget })?
                        as usize;
                    let mode = if certify && 3 * k <= DEFAULT_ENUM_CEILING {
                        RandomMode::Certified
                    } else {
                        RandomMode::Surrogate
                    };
                    r_cache[k] = Some(fs_random_string(r_len, k, mode, seed, (1u64 << 40) + k as u64)?);
                }
                let (r, cert) = r_cache[k].as_ref().expect("filled above");
                let block = r.power(len / r.len());
                let note = format!(
                    "bound k={k}; r_k has {} bits; {}",
                    r.len(),
                    match cert {
                        Certificate::Certified { value: Some(v), threshold, .. } => format!("certified D={v} >= {threshold}"),
                        Certificate::Certified { value: None, .. } => "certified D=inf".to_string(),
                        Certificate::Uncertified => "uncertified".to_string(),
                    }
                );
                sink.add(format!("S_{j}"), &block, note)
            }
        };
        if !more {
            break;
        }
    }
    Ok(sink.finish())
}

/// `|I_j|` for a single index, computing the prefix sums it depends on.
fn interval_length_at(growth: Growth, j: usize) -> Option<u128> {
    let mut total = 0u128;
    for i in 1..j {
        total = total.checked_add(interval_length(growth, i, total)?)?;
    }
    interval_length(growth, j, total)
}

/// Smallest power of `k` that is at least `n`.
pub fn t_of(n: u64, k: u64) -> u64 {
    let mut t = 1;
    while t < n {
        t *= k;
    }
    t
}

pub fn contains_run(x: &[bool], k: usize) -> bool {
    let mut run = 0;
    for &b in x {
        run = if b { run + 1 } else { 0 };
        if run >= k {
            return true;
        }
    }
    false
}

/// Rejection attempts before the fallback in [`recipe_b_block`].
pub const REJECTION_ATTEMPTS: usize = 64;

/// `R_j` for recipe B and whether it came from the fallback, which takes a
/// random string and clears every `k`-th bit.
pub fn recipe_b_block(k: usize, j: usize, seed: u64) -> (BitString, bool) {
    let len = k * t_of(j as u64, k as u64) as usize;
    let mut rng = stream_rng(seed, j as u64);
    for _ in 0..REJECTION_ATTEMPTS {
        let r = random_bits(&mut rng, len);
        if !contains_run(&r, k) {
            return (r, false);
        }
    }
    let mut r = random_bits(&mut rng, len);
    for i in (k - 1..len).step_by(k) {
        r[i] = false;
    }
    (r, true)
}

fn gen_recipe_b(k: usize, stages: usize, seed: u64, max_bits: Option<u64>) -> Result<Generated, SeqError> {
    if k <= 8 {
        return Err(SeqError::InvalidParameters(format!("recipe B needs k > 8, got {k}")));
    }
    let mut projected = 0u128;
    for j in 1..=stages {
        projected += 2 * (k as u128) * t_of(j as u64, k as u64) as u128 + k as u128;
    }
    if projected > MAX_GENERATED_BITS && max_bits.is_none_or(|b| b as u128 > MAX_GENERATED_BITS) {
        return Err(SeqError::TooLarge { limit: MAX_GENERATED_BITS });
    }
    let mut sink = Sink::new(max_bits);
    for j in 1..=stages {
        let (r, fallback) = recipe_b_block(k, j, seed);
        let mut block = r.clone();
        block.extend(std::iter::repeat_n(true, k));
        block.extend(r.iter().rev());
        let note = format!("|R_j|={}; {}", r.len(), if fallback { "fallback" } else { "sampled" });
        if !sink.add(format!("S_{j}"), &block, note) {
            break;
        }
    }
    Ok(sink.finish())
}

/// Length-`n` strings without `1^k`, as integers in increasing (= lexicographic)
/// order.
pub fn flag_free_words(n: usize, k: usize) -> Vec<u64> {
    assert!(n < 40, "word length too large to enumerate");
    (0..(1u64 << n)).filter(|&w| !has_run(w, k)).collect()
}

fn has_run(w: u64, k: usize) -> bool {
    let mut acc = w;
    for _ in 1..k {
        acc &= acc >> 1;
    }
    acc != 0
}

fn reverse_word(w: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        w.reverse_bits() >> (64 - n)
    }
}

fn word_bits(w: u64, n: usize) -> BitString {
    BitString::from_u64(w, n)
}

/// One length-`n` stage of recipe C, split into its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecipeCStage {
    pub n: usize,
    pub flag: usize,
    pub palindromes: Vec<u64>,
    /// Zones `1..=v+1`: the `x` words of each zone in emission order.
    pub zones: Vec<Vec<u64>>,
    /// Whether each nonempty zone got its first `x` starting with 0 and its
    /// last `x` ending with 0.
    pub rotation_ok: Vec<bool>,
}

impl RecipeCStage {
    pub fn build(n: usize, k: usize, v: usize) -> Self {
        let words = flag_free_words(n, k);
        let mut palindromes = Vec::new();
        let mut xs = Vec::new();
        for &w in &words {
            let r = reverse_word(w, n);
            if r == w {
                palindromes.push(w);
            } else if w < r {
                xs.push(w);
            }
        }
        let pairs = xs.len();
        let per_zone = pairs / v;
        let mut zones = Vec::with_capacity(v + 1);
        let mut rotation_ok = Vec::with_capacity(v + 1);
        let mut rest = xs.as_slice();
        for i in 1..=v + 1 {
            let take = if i <= v { per_zone } else { rest.len() };
            let (zone, tail) = rest.split_at(take);
            rest = tail;
            let (rotated, ok) = rotate_zone(zone, n);
            zones.push(rotated);
            rotation_ok.push(ok);
        }
        let flag = flag_length(n, k, v);
        RecipeCStage { n, flag, palindromes, zones, rotation_ok }
    }

    pub fn bits(&self) -> BitString {
        let n = self.n;
        let mut out = BitString::new();
        for &a in &self.palindromes {
            out.extend_from_slice(&word_bits(a, n));
        }
        out.extend(std::iter::repeat_n(true, self.flag));
        for (i, zone) in self.zones.iter().enumerate() {
            let x: BitString = zone.iter().flat_map(|&w| word_bits(w, n).into_vec()).collect();
            out.extend_from_slice(&x);
            out.extend(std::iter::repeat_n(true, self.flag + i + 1));
            out.extend(x.iter().rev());
        }
        out
    }
}

/// Rotate so the first word starts with 0 and the last ends with 0; when no
/// rotation does both, settle for the first condition.
fn rotate_zone(zone: &[u64], n: usize) -> (Vec<u64>, bool) {
    let t = zone.len();
    if t == 0 {
        return (Vec::new(), true);
    }
    let starts0 = |w: u64| (w >> (n - 1)) & 1 == 0;
    let ends0 = |w: u64| w & 1 == 0;
    let full = (0..t).find(|&r| starts0(zone[r]) && ends0(zone[(r + t - 1) % t]));
    let r = full.or_else(|| (0..t).find(|&r| starts0(zone[r]))).unwrap_or(0);
    let mut out = zone[r..].to_vec();
    out.extend_from_slice(&zone[..r]);
    (out, full.is_some())
}

/// `f(k) = 2k`, `f(n+1) = f(n) + v + 2`.
pub fn flag_length(n: usize, k: usize, v: usize) -> usize {
    2 * k + (n - k) * (v + 2)
}

fn gen_recipe_c(k: usize, v: usize, stages: usize, max_bits: Option<u64>) -> Result<Generated, SeqError> {
    if k < 4 || v < 1 {
        return Err(SeqError::InvalidParameters(format!("recipe C needs k >= 4 and v >= 1, got k={k}, v={v}")));
    }
    if stages >= 40 {
        return Err(SeqError::TooLarge { limit: MAX_GENERATED_BITS });
    }
    let mut sink = Sink::new(max_bits);
    for n in 1..=stages.min(k - 1) {
        let block: BitString = (0..(1u64 << n)).flat_map(|w| word_bits(w, n).into_vec()).collect();
        if !sink.add(format!("S_{n}"), &block, "all strings of this length".into()) {
            return Ok(sink.finish());
        }
    }
    if stages >= k {
        let flags: BitString = (k..2 * k).flat_map(|l| std::iter::repeat_n(true, l)).collect();
        if !sink.add("flags".into(), &flags, format!("1^{k} .. 1^{}", 2 * k - 1)) {
            return Ok(sink.finish());
        }
    }
    for n in k..=stages {
        if let Some(limit) = max_bits {
            if sink.bits.len() as u64 >= limit {
                break;
            }
        }
        let stage = RecipeCStage::build(n, k, v);
        let block = stage.bits();
        if sink.bits.len() as u128 + block.len() as u128 > MAX_GENERATED_BITS {
            return Err(SeqError::TooLarge { limit: MAX_GENERATED_BITS });
        }
        let misses = stage.rotation_ok.iter().filter(|ok| !**ok).count();
        let note = format!(
            "{} palindromes; {} pairs; flag {}; {}",
            stage.palindromes.len(),
            stage.zones.iter().map(Vec::len).sum::<usize>(),
            stage.flag,
            if misses == 0 { "zone ends ok".to_string() } else { format!("{misses} zone(s) without a 0-bounded rotation") }
        );
        if !sink.add(format!("S_{n}"), &block, note) {
            break;
        }
    }
    Ok(sink.finish())
}

/// Hex SHA-256 of the ASCII rendering.
pub fn bits_sha256(bits: &[bool]) -> String {
    hex::encode(Sha256::digest(crate::bits::to_ascii(bits).as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: RecipeConfig,
    pub total_bits: u64,
    pub sha256: String,
    pub blocks: Vec<BlockRecord>,
    pub notices: Vec<String>,
}

impl Manifest {
    pub fn new(config: &RecipeConfig, g: &Generated) -> Self {
        Manifest {
            config: config.clone(),
            total_bits: g.bits.len() as u64,
            sha256: bits_sha256(&g.bits),
            blocks: g.blocks.clone(),
            notices: g.notices.clone(),
        }
    }
}

pub fn manifest_path(bits_path: &Path) -> PathBuf {
    let mut name = bits_path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Write the ASCII bit file and its `.json` sidecar; returns the sidecar path.
pub fn write_generated(path: &Path, config: &RecipeConfig, g: &Generated) -> Result<PathBuf, SeqError> {
    fs::write(path, crate::bits::to_ascii(&g.bits))?;
    let side = manifest_path(path);
    fs::write(&side, serde_json::to_string_pretty(&Manifest::new(config, g))?)?;
    Ok(side)
}

/// Read an ASCII bit file, ignoring whitespace.
pub fn read_bits_file(path: &Path) -> Result<BitString, SeqError> {
    let text = fs::read_to_string(path)?;
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    cleaned
        .parse()
        .map_err(|e| SeqError::InvalidParameters(format!("{}: {e}", path.display())))
}
