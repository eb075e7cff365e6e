//! Per-prefix compressed lengths of a sequence under named compressors, the
//! gap between two of them, and CSV rendering.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::BitString;
use crate::fst::{FstError, FstSpec};
use crate::kfs::{enum_fsts, Complexity, FstUniverse, KfsError};
use crate::lz78::Lz78State;
use crate::pushdown::{build_half_compressor, PdcError, PdcSpec, StackKind};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown compressor {0:?}")]
    UnknownCompressor(String),
    #[error("bad grid {0:?}: {1}")]
    BadGrid(String, String),
    #[error("grid point {n} lies beyond the sequence length {len}")]
    GridBeyondSequence { n: u64, len: u64 },
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Fst(#[from] FstError),
    #[error("{0}")]
    Pdc(#[from] PdcError),
    #[error("{0}")]
    Kfs(#[from] KfsError),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// A compressor named on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompressorSpec {
    IdentityFst,
    IdentityPdc,
    Lz78,
    HalfCompressor { k: usize, v: usize, m: usize },
    Repeater(BitString),
    /// Minimum over every transducer with a description of at most this many bits.
    Kfs(usize),
    FstFile(PathBuf),
    PdcFile(PathBuf),
}

fn call_args<'a>(s: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

impl FromStr for CompressorSpec {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ProfileError::UnknownCompressor(s.to_string());
        let num = |t: &str| t.parse::<usize>().map_err(|_| unknown());
        match s {
            "identity-fst" => return Ok(CompressorSpec::IdentityFst),
            "identity-pdc" => return Ok(CompressorSpec::IdentityPdc),
            "lz78" => return Ok(CompressorSpec::Lz78),
            _ => {}
        }
        if let Some(a) = call_args(s, "half-compressor") {
            if a.len() != 3 {
                return Err(unknown());
            }
            return Ok(CompressorSpec::HalfCompressor { k: num(a[0])?, v: num(a[1])?, m: num(a[2])? });
        }
        if let Some(a) = call_args(s, "repeater") {
            let r = if a == [""] || a == ["-"] { BitString::new() } else { a.join("").parse().map_err(|_| unknown())? };
            return Ok(CompressorSpec::Repeater(r));
        }
        if let Some(a) = call_args(s, "kfs") {
            if a.len() != 1 {
                return Err(unknown());
            }
            return Ok(CompressorSpec::Kfs(num(a[0])?));
        }
        if s.ends_with(".fst") {
            return Ok(CompressorSpec::FstFile(PathBuf::from(s)));
        }
        if s.ends_with(".pdc") {
            return Ok(CompressorSpec::PdcFile(PathBuf::from(s)));
        }
        Err(unknown())
    }
}

impl fmt::Display for CompressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressorSpec::IdentityFst => f.write_str("identity-fst"),
            CompressorSpec::IdentityPdc => f.write_str("identity-pdc"),
            CompressorSpec::Lz78 => f.write_str("lz78"),
            CompressorSpec::HalfCompressor { k, v, m } => write!(f, "half-compressor({k},{v},{m})"),
            CompressorSpec::Repeater(r) => write!(f, "repeater({r})"),
            CompressorSpec::Kfs(k) => write!(f, "kfs({k})"),
            CompressorSpec::FstFile(p) | CompressorSpec::PdcFile(p) => write!(f, "{}", p.display()),
        }
    }
}

/// A compressor ready to run.
#[derive(Debug, Clone)]
pub enum Machine {
    Fst(FstSpec),
    Pdc(PdcSpec),
    Lz78,
    Kfs(FstUniverse),
}

fn read(path: &PathBuf) -> Result<String, ProfileError> {
    fs::read_to_string(path).map_err(|source| ProfileError::Read { path: path.clone(), source })
}

impl CompressorSpec {
    pub fn resolve(&self) -> Result<Machine, ProfileError> {
        Ok(match self {
            CompressorSpec::IdentityFst => Machine::Fst(FstSpec::identity()),
            CompressorSpec::IdentityPdc => Machine::Pdc(PdcSpec::identity(StackKind::Unary)),
            CompressorSpec::Lz78 => Machine::Lz78,
            CompressorSpec::HalfCompressor { k, v, m } => Machine::Pdc(build_half_compressor(*k, *v, *m)?),
            CompressorSpec::Repeater(r) => Machine::Fst(FstSpec::repeater(r)),
            CompressorSpec::Kfs(k) => Machine::Kfs(enum_fsts(*k)?),
            CompressorSpec::FstFile(p) => Machine::Fst(FstSpec::from_text(&read(p)?)?),
            CompressorSpec::PdcFile(p) => Machine::Pdc(PdcSpec::from_text(&read(p)?)?),
        })
    }
}

/// Compressed length of one prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Bits(u64),
    /// The compressor had no move at this input position.
    Stuck { position: u64 },
    /// No transducer in the enumerated set prints the prefix.
    Infinite,
}

impl Measure {
    pub fn bits(self) -> Option<u64> {
        match self {
            Measure::Bits(b) => Some(b),
            _ => None,
        }
    }

    fn cell(self) -> String {
        match self {
            Measure::Bits(b) => b.to_string(),
            Measure::Stuck { .. } => "stuck".into(),
            Measure::Infinite => "inf".into(),
        }
    }
}

/// Output length of `machine` on each prefix `x[..n]`, `n` in `grid`
/// (increasing). Streaming compressors make one pass over `x`.
pub fn measure(machine: &Machine, x: &[bool], grid: &[u64]) -> Vec<Measure> {
    let mut out = Vec::with_capacity(grid.len());
    match machine {
        Machine::Fst(t) => {
            let mut q = t.start();
            let mut len = 0u64;
            let mut pos = 0usize;
            for &n in grid {
                while pos < n as usize {
                    let e = t.edge(q, x[pos]);
                    len += e.out.len() as u64;
                    q = e.next;
                    pos += 1;
                }
                out.push(Measure::Bits(len));
            }
        }
        Machine::Pdc(c) => {
            let mut r = c.runner();
            let mut buf = BitString::new();
            let mut len = 0u64;
            let mut pos = 0usize;
            let mut stuck = None;
            for &n in grid {
                while stuck.is_none() && pos < n as usize {
                    buf.clear();
                    match r.feed(x[pos], &mut buf) {
                        Ok(()) => len += buf.len() as u64,
                        Err(_) => stuck = Some(pos as u64),
                    }
                    pos += 1;
                }
                out.push(match stuck {
                    Some(position) => Measure::Stuck { position },
                    None => Measure::Bits(len),
                });
            }
        }
        Machine::Lz78 => {
            let mut st = Lz78State::counting_only();
            let mut pos = 0usize;
            for &n in grid {
                while pos < n as usize {
                    st.push(x[pos]);
                    pos += 1;
                }
                out.push(Measure::Bits(st.online_len()));
            }
        }
        Machine::Kfs(u) => {
            for &n in grid {
                out.push(match u.complexity(&x[..n as usize]).value {
                    Complexity::Finite(v) => Measure::Bits(v as u64),
                    Complexity::Infinite => Measure::Infinite,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Linear(u64),
    Geometric(f64),
}

/// Prefix lengths `start..=stop`, stepping additively or by a factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: u64,
    pub stop: u64,
    pub step: Step,
}

impl FromStr for Grid {
    type Err = ProfileError;

    /// `a:b:step` or `a:b:*factor`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| ProfileError::BadGrid(s.to_string(), m.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let start: u64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
        let stop: u64 = parts[1].parse().map_err(|_| bad("stop is not a number"))?;
        let step = if let Some(f) = parts[2].strip_prefix('*') {
            let f: f64 = f.parse().map_err(|_| bad("factor is not a number"))?;
            if f.is_nan() || f <= 1.0 {
                return Err(bad("factor must exceed 1"));
            }
            Step::Geometric(f)
        } else {
            let d: u64 = parts[2].parse().map_err(|_| bad("step is not a number"))?;
            if d == 0 {
                return Err(bad("step must be positive"));
            }
            Step::Linear(d)
        };
        if start == 0 || start > stop {
            return Err(bad("need 1 <= start <= stop"));
        }
        Ok(Grid { start, stop, step })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Step::Linear(d) => write!(f, "{}:{}:{d}", self.start, self.stop),
            Step::Geometric(g) => write!(f, "{}:{}:*{g}", self.start, self.stop),
        }
    }
}

impl Grid {
    pub fn points(&self) -> Vec<u64> {
        let mut pts = Vec::new();
        let mut n = self.start;
        while n <= self.stop {
            pts.push(n);
            n = match self.step {
                Step::Linear(d) => n.saturating_add(d),
                Step::Geometric(g) => ((n as f64 * g).ceil() as u64).max(n + 1),
            };
        }
        pts
    }

    /// First `n` of the tail: the last `fraction` of the range `start..=stop`.
    pub fn tail_cut(&self, fraction: f64) -> f64 {
        self.stop as f64 - fraction * (self.stop - self.start) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub n: u64,
    pub weak: Measure,
    pub strong: Measure,
}

impl ProfileRow {
    pub fn gap(&self) -> Option<i64> {
        Some(self.weak.bits()? as i64 - self.strong.bits()? as i64)
    }

    pub fn gap_over_n(&self) -> Option<f64> {
        self.gap().map(|g| g as f64 / self.n as f64)
    }
}

/// Minimum and maximum of a value over the grid tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSummary {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl TailSummary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut s = TailSummary { min: None, max: None };
        for v in values {
            s.min = Some(s.min.map_or(v, |m: f64| m.min(v)));
            s.max = Some(s.max.map_or(v, |m: f64| m.max(v)));
        }
        s
    }

    fn line(&self) -> String {
        let f = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
        format!("# tail_min={},tail_max={}", f(self.min), f(self.max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    pub weak: String,
    pub strong: String,
    pub tail_from: f64,
    pub rows: Vec<ProfileRow>,
}

pub const PROFILE_HEADER: &str = "n,weak_bits,strong_bits,gap,gap_over_n";

fn check_grid(grid: &[u64], len: usize) -> Result<(), ProfileError> {
    match grid.last() {
        Some(&n) if n > len as u64 => Err(ProfileError::GridBeyondSequence { n, len: len as u64 }),
        _ => Ok(()),
    }
}

impl DepthProfile {
    pub fn compute(
        x: &[bool],
        weak: (&str, &Machine),
        strong: (&str, &Machine),
        grid: &Grid,
        tail_fraction: f64,
    ) -> Result<Self, ProfileError> {
        let pts = grid.points();
        check_grid(&pts, x.len())?;
        let (w, s) = rayon::join(|| measure(weak.1, x, &pts), || measure(strong.1, x, &pts));
        let rows = pts
            .iter()
            .zip(w.into_iter().zip(s))
            .map(|(&n, (weak, strong))| ProfileRow { n, weak, strong })
            .collect();
        Ok(DepthProfile {
            weak: weak.0.to_string(),
            strong: strong.0.to_string(),
            tail_from: grid.tail_cut(tail_fraction),
            rows,
        })
    }

    pub fn tail(&self) -> TailSummary {
        TailSummary::of(
            self.rows
                .iter()
                .filter(|r| r.n as f64 >= self.tail_from)
                .filter_map(|r| r.gap_over_n()),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{PROFILE_HEADER}\n");
        for r in &self.rows {
            let (gap, gon) = match r.gap() {
                Some(g) => (g.to_string(), format!("{:.6}", g as f64 / r.n as f64)),
                None => ("NA".into(), "NA".into()),
            };
            s.push_str(&format!("{},{},{},{gap},{gon}\n", r.n, r.weak.cell(), r.strong.cell()));
        }
        s.push_str(&self.tail().line());
        s.push('\n');
        s
    }

    /// Parse CSV written by [`DepthProfile::to_csv`], re-checking the gap
    /// columns and row order. Labels are not stored in the CSV.
    pub fn from_csv(text: &str) -> Result<Vec<ProfileRow>, ProfileError> {
        let err = |line: usize, message: String| ProfileError::Csv { line, message };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == PROFILE_HEADER => {}
            _ => return Err(err(1, "missing header".into())),
        }
        let mut rows: Vec<ProfileRow> = Vec::new();
        for (i, line) in lines {
            let ln = i + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(err(ln, format!("expected 5 fields, found {}", f.len())));
            }
            let n: u64 = f[0].parse().map_err(|_| err(ln, "bad n".into()))?;
            let cell = |c: &str| -> Result<Measure, ProfileError> {
                match c {
                    "stuck" => Ok(Measure::Stuck { position: 0 }),
                    "inf" => Ok(Measure::Infinite),
                    v => v.parse().map(Measure::Bits).map_err(|_| err(ln, format!("bad length {v:?}"))),
                }
            };
            let row = ProfileRow { n, weak: cell(f[1])?, strong: cell(f[2])? };
            match row.gap() {
                Some(g) => {
                    let gap: i64 = f[3].parse().map_err(|_| err(ln, "bad gap".into()))?;
                    if gap != g {
                        return Err(err(ln, format!("gap {gap} != {} - {}", f[1], f[2])));
                    }
                    let gon: f64 = f[4].parse().map_err(|_| err(ln, "bad gap_over_n".into()))?;
                    if (gon - g as f64 / n as f64).abs() > 5e-7 {
                        return Err(err(ln, format!("gap_over_n {gon} != {g}/{n}")));
                    }
                }
                None => {
                    if f[3] != "NA" || f[4] != "NA" {
                        return Err(err(ln, "gap must be NA when a length is missing".into()));
                    }
                }
            }
            if rows.last().is_some_and(|p| p.n >= n) {
                return Err(err(ln, "rows must be sorted by n".into()));
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

/// `|C(x[..n])| / n` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    pub label: String,
    pub tail_from: f64,
    pub rows: Vec<(u64, Measure)>,
}

impl RatioTable {
    pub fn compute(x: &[bool], c: (&str, &Machine), grid: &Grid, tail_fraction: f64) -> Result<Self, ProfileError> {
        let pts = grid.points();
        check_grid(&pts, x.len())?;
        let m = measure(c.1, x, &pts);
        Ok(RatioTable { label: c.0.to_string(), tail_from: grid.tail_cut(tail_fraction), rows: pts.into_iter().zip(m).collect() })
    }

    pub fn ratio(n: u64, m: Measure) -> Option<f64> {
        m.bits().map(|b| b as f64 / n as f64)
    }

    pub fn tail(&self) -> TailSummary {
        TailSummary::of(
            self.rows
                .iter()
                .filter(|(n, _)| *n as f64 >= self.tail_from)
                .filter_map(|&(n, m)| Self::ratio(n, m)),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,bits,ratio\n");
        for &(n, m) in &self.rows {
            let r = Self::ratio(n, m).map_or("NA".to_string(), |r| format!("{r:.6}"));
            s.push_str(&format!("{n},{},{r}\n", m.cell()));
        }
        s.push_str(&self.tail().line());
        s.push('\n');
        s
    }
}
