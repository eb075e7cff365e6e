//! Deterministic pushdown compressors with a bounded number of consecutive
//! λ-moves, over a binary (`{0,1,z}`) or unary (`{0,z}`) stack alphabet.
//!
//! States are 0-based in memory and 1-based in the text format. Push strings
//! are written top-first; the rule replaces the current top by the push
//! string, so `[top]` leaves the stack untouched and `[]` pops.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::bits::{all_up_to, BitString, BitsError};
use crate::fst::{emission_text, parse_emission, FstSpec, IlVerdict};

/// Default limit on product states built by [`compose_pdc_fst`].
pub const DEFAULT_STATE_CEILING: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Zero,
    One,
    Bottom,
}

impl Sym {
    pub const ALL: [Sym; 3] = [Sym::Zero, Sym::One, Sym::Bottom];

    fn index(self) -> usize {
        match self {
            Sym::Zero => 0,
            Sym::One => 1,
            Sym::Bottom => 2,
        }
    }

    pub fn from_bit(b: bool) -> Sym {
        if b {
            Sym::One
        } else {
            Sym::Zero
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Sym::Zero => '0',
            Sym::One => '1',
            Sym::Bottom => 'z',
        }
    }

    pub fn from_char(c: char) -> Option<Sym> {
        match c {
            '0' => Some(Sym::Zero),
            '1' => Some(Sym::One),
            'z' => Some(Sym::Bottom),
            _ => None,
        }
    }
}

/// Render a top-first stack, e.g. `10z`.
pub fn stack_text(stack: &[Sym]) -> String {
    stack.iter().map(|s| s.to_char()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StackKind {
    Binary,
    Unary,
}

impl StackKind {
    pub fn alphabet(self) -> &'static [Sym] {
        match self {
            StackKind::Binary => &[Sym::Zero, Sym::One, Sym::Bottom],
            StackKind::Unary => &[Sym::Zero, Sym::Bottom],
        }
    }
}

impl fmt::Display for StackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StackKind::Binary => "binary",
            StackKind::Unary => "unary",
        })
    }
}

/// Input side of a rule key: a bit, or `None` for λ.
pub type InputSym = Option<bool>;

fn input_index(input: InputSym) -> usize {
    match input {
        Some(false) => 0,
        Some(true) => 1,
        None => 2,
    }
}

fn input_text(input: InputSym) -> &'static str {
    match input {
        Some(false) => "0",
        Some(true) => "1",
        None => "-",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub next: usize,
    /// Replacement for the top symbol, top-first.
    pub push: Vec<Sym>,
    pub emit: BitString,
}

impl Rule {
    pub fn new(next: usize, push: Vec<Sym>, emit: BitString) -> Self {
        Rule { next, push, emit }
    }
}

/// A rule key `(state, input, top)` rendered 1-based for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleKey {
    pub state: usize,
    pub input: InputSym,
    pub top: Sym,
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(q{}, {}, {})", self.state + 1, input_text(self.input), self.top.to_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoStates,
    StartOutOfRange { start: usize, num_states: usize },
    TargetOutOfRange { key: RuleKey, target: usize },
    Nondeterministic { state: usize, top: Sym },
    BottomNotPreserved { key: RuleKey },
    BottomMisplaced { key: RuleKey },
    LambdaEmits { key: RuleKey },
    UnaryViolation { key: RuleKey },
    LambdaCycle { state: usize, top: Sym },
    LambdaBudget { longest: usize, budget: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "no states"),
            Violation::StartOutOfRange { start, num_states } => {
                write!(f, "start state q{} outside 1..={num_states}", start + 1)
            }
            Violation::TargetOutOfRange { key, target } => {
                write!(f, "{key}: target q{} out of range", target + 1)
            }
            Violation::Nondeterministic { state, top } => write!(
                f,
                "determinism: (q{}, {}) has both a λ-move and a bit move",
                state + 1,
                top.to_char()
            ),
            Violation::BottomNotPreserved { key } => {
                write!(f, "{key}: push on bottom marker must end with z")
            }
            Violation::BottomMisplaced { key } => {
                write!(f, "{key}: z may only appear at the bottom")
            }
            Violation::LambdaEmits { key } => write!(f, "{key}: λ-move must emit nothing"),
            Violation::UnaryViolation { key } => {
                write!(f, "{key}: unary stack may only hold 0 above z")
            }
            Violation::LambdaCycle { state, top } => write!(
                f,
                "λ-budget: unbounded succession of λ-moves through (q{}, {})",
                state + 1,
                top.to_char()
            ),
            Violation::LambdaBudget { longest, budget } => write!(
                f,
                "λ-budget: a chain of {longest} λ-moves exceeds the declared bound {budget}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationReport(pub Vec<Violation>);


#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdcError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate rule for {key}")]
    DuplicateRule { line: usize, key: RuleKey },
    #[error("invalid pushdown compressor: {0}")]
    Invalid(#[from] ValidationReport),
    #[error("stuck at input position {position}: no move from (q{}, {}) on {}", .state + 1, .top.to_char(), u8::from(*.bit))]
    Stuck { position: usize, state: usize, top: Sym, bit: bool },
    #[error("start configuration invalid: {0}")]
    BadConfiguration(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("composition needs more than {ceiling} states; refusing")]
    Refused { ceiling: usize },
    #[error(transparent)]
    Bits(#[from] BitsError),
}

type RuleRow = [[Option<Rule>; 3]; 3];

fn empty_row() -> RuleRow {
    Default::default()
}

/// An unchecked rule table. [`PdcBuilder::build`] validates it into a
/// [`PdcSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdcBuilder {
    pub start: usize,
    pub kind: StackKind,
    pub lambda_budget: usize,
    rules: Vec<RuleRow>,
}

impl PdcBuilder {
    pub fn new(num_states: usize, start: usize, kind: StackKind, lambda_budget: usize) -> Self {
        PdcBuilder { start, kind, lambda_budget, rules: vec![empty_row(); num_states] }
    }

    pub fn num_states(&self) -> usize {
        self.rules.len()
    }

    /// Set the rule for `(state, input, top)`, returning the one it replaces.
    ///
    /// Panics if `state` is out of range.
    pub fn set(&mut self, state: usize, input: InputSym, top: Sym, rule: Rule) -> Option<Rule> {
        self.rules[state][top.index()][input_index(input)].replace(rule)
    }

    pub fn get(&self, state: usize, input: InputSym, top: Sym) -> Option<&Rule> {
        self.rules.get(state)?[top.index()][input_index(input)].as_ref()
    }

    fn keys(&self) -> impl Iterator<Item = (RuleKey, &Rule)> + '_ {
        self.rules.iter().enumerate().flat_map(|(state, row)| {
            Sym::ALL.into_iter().flat_map(move |top| {
                [Some(false), Some(true), None].into_iter().filter_map(move |input| {
                    row[top.index()][input_index(input)]
                        .as_ref()
                        .map(|r| (RuleKey { state, input, top }, r))
                })
            })
        })
    }

    /// Longest succession of λ-moves in the `(state, top)` graph, where a pop
    /// may expose any symbol. `Err` names a node on a λ-cycle.
    pub fn lambda_chain_bound(&self) -> Result<usize, (usize, Sym)> {
        let alphabet = self.kind.alphabet();
        let n = self.rules.len();
        // 0 unvisited, 1 on the DFS path, 2 done.
        let mut mark = vec![[0u8; 3]; n];
        let mut longest = vec![[0usize; 3]; n];
        fn visit(
            b: &PdcBuilder,
            alphabet: &[Sym],
            q: usize,
            top: Sym,
            mark: &mut [[u8; 3]],
            longest: &mut [[usize; 3]],
        ) -> Result<usize, (usize, Sym)> {
            match mark[q][top.index()] {
                1 => return Err((q, top)),
                2 => return Ok(longest[q][top.index()]),
                _ => {}
            }
            let Some(rule) = b.get(q, None, top) else {
                mark[q][top.index()] = 2;
                return Ok(0);
            };
            mark[q][top.index()] = 1;
            let mut best = 0;
            if rule.next < b.num_states() {
                let tops: Vec<Sym> = match rule.push.first() {
                    Some(&s) => vec![s],
                    None => alphabet.to_vec(),
                };
                for t in tops {
                    best = best.max(visit(b, alphabet, rule.next, t, mark, longest)?);
                }
            }
            mark[q][top.index()] = 2;
            longest[q][top.index()] = best + 1;
            Ok(best + 1)
        }
        let mut overall = 0;
        for q in 0..n {
            for &top in alphabet {
                overall = overall.max(visit(self, alphabet, q, top, &mut mark, &mut longest)?);
            }
        }
        Ok(overall)
    }

    pub fn validate(&self) -> Result<(), ValidationReport> {
        let mut v = Vec::new();
        let n = self.num_states();
        if n == 0 {
            return Err(ValidationReport(vec![Violation::NoStates]));
        }
        if self.start >= n {
            v.push(Violation::StartOutOfRange { start: self.start, num_states: n });
        }
        for state in 0..n {
            for top in Sym::ALL {
                let has_lambda = self.get(state, None, top).is_some();
                let has_bit = self.get(state, Some(false), top).is_some()
                    || self.get(state, Some(true), top).is_some();
                if has_lambda && has_bit {
                    v.push(Violation::Nondeterministic { state, top });
                }
            }
        }
        for (key, rule) in self.keys() {
            if rule.next >= n {
                v.push(Violation::TargetOutOfRange { key, target: rule.next });
            }
            if key.top == Sym::Bottom {
                if rule.push.last() != Some(&Sym::Bottom) {
                    v.push(Violation::BottomNotPreserved { key });
                }
                if rule.push.iter().rev().skip(1).any(|&s| s == Sym::Bottom) {
                    v.push(Violation::BottomMisplaced { key });
                }
            } else if rule.push.contains(&Sym::Bottom) {
                v.push(Violation::BottomMisplaced { key });
            }
            if key.input.is_none() && !rule.emit.is_empty() {
                v.push(Violation::LambdaEmits { key });
            }
            if self.kind == StackKind::Unary
                && (key.top == Sym::One || rule.push.contains(&Sym::One))
            {
                v.push(Violation::UnaryViolation { key });
            }
        }
        match self.lambda_chain_bound() {
            Err((state, top)) => v.push(Violation::LambdaCycle { state, top }),
            Ok(longest) if longest > self.lambda_budget => {
                v.push(Violation::LambdaBudget { longest, budget: self.lambda_budget })
            }
            Ok(_) => {}
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ValidationReport(v))
        }
    }

    pub fn build(self) -> Result<PdcSpec, PdcError> {
        self.validate()?;
        Ok(PdcSpec(self))
    }

    /// Parse the text format without validating.
    pub fn from_text(text: &str) -> Result<Self, PdcError> {
        let syntax = |line: usize, message: String| PdcError::Syntax { line, message };
        let mut builder: Option<PdcBuilder> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tok: Vec<&str> = content.split_whitespace().collect();
            let Some(b) = builder.as_mut() else {
                if tok.len() != 5 || tok[0] != "pdc" {
                    return Err(syntax(line, "expected header `pdc <states> <start> binary|unary <c>`".into()));
                }
                let num = parse_count(tok[1], line)?;
                let start = parse_state(tok[2], line)?;
                let kind = match tok[3] {
                    "binary" => StackKind::Binary,
                    "unary" => StackKind::Unary,
                    other => return Err(syntax(line, format!("unknown stack kind {other:?}"))),
                };
                let budget = parse_count(tok[4], line)?;
                if num == 0 {
                    return Err(syntax(line, "state count must be positive".into()));
                }
                builder = Some(PdcBuilder::new(num, start, kind, budget));
                continue;
            };
            if tok.len() != 7 || tok[3] != "->" {
                return Err(syntax(line, "expected `q in top -> q' push emission`".into()));
            }
            let state = parse_state(tok[0], line)?;
            if state >= b.num_states() {
                return Err(syntax(line, format!("state {} out of range", tok[0])));
            }
            let input = match tok[1] {
                "0" => Some(false),
                "1" => Some(true),
                "-" => None,
                other => return Err(syntax(line, format!("bad input symbol {other:?}"))),
            };
            let top = match tok[2] {
                t if t.chars().count() == 1 => Sym::from_char(t.chars().next().unwrap()),
                _ => None,
            }
            .ok_or_else(|| syntax(line, format!("bad stack symbol {:?}", tok[2])))?;
            let next = parse_state(tok[4], line)?;
            let push = parse_push(tok[5], line)?;
            let emit = parse_emission(tok[6])?;
            let key = RuleKey { state, input, top };
            if b.set(state, input, top, Rule { next, push, emit }).is_some() {
                return Err(PdcError::DuplicateRule { line, key });
            }
        }
        builder.ok_or_else(|| syntax(0, "missing header".into()))
    }
}

fn parse_count(token: &str, line: usize) -> Result<usize, PdcError> {
    token.parse().map_err(|_| PdcError::Syntax { line, message: format!("expected a number, found {token:?}") })
}

fn parse_state(token: &str, line: usize) -> Result<usize, PdcError> {
    match token.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(PdcError::Syntax { line, message: format!("expected a state number >= 1, found {token:?}") }),
    }
}

fn parse_push(token: &str, line: usize) -> Result<Vec<Sym>, PdcError> {
    if token == "-" {
        return Ok(Vec::new());
    }
    token
        .chars()
        .map(|c| {
            Sym::from_char(c)
                .ok_or_else(|| PdcError::Syntax { line, message: format!("bad stack symbol {c:?} in push") })
        })
        .collect()
}

/// A validated pushdown compressor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdcSpec(PdcBuilder);

/// Output, final state and final stack (top-first) of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdcRun {
    pub output: BitString,
    pub final_state: usize,
    pub final_stack: Vec<Sym>,
}

impl PdcRun {
    pub fn stack_text(&self) -> String {
        stack_text(&self.final_stack)
    }
}

impl PdcSpec {
    /// One state that copies its input and never touches the stack.
    pub fn identity(kind: StackKind) -> Self {
        let mut b = PdcBuilder::new(1, 0, kind, 0);
        for &top in kind.alphabet() {
            for bit in [false, true] {
                b.set(0, Some(bit), top, Rule::new(0, vec![top], BitString::from_bits(vec![bit])));
            }
        }
        b.build().expect("identity is valid")
    }

    pub fn builder(&self) -> &PdcBuilder {
        &self.0
    }

    pub fn into_builder(self) -> PdcBuilder {
        self.0
    }

    pub fn num_states(&self) -> usize {
        self.0.num_states()
    }

    pub fn start(&self) -> usize {
        self.0.start
    }

    pub fn kind(&self) -> StackKind {
        self.0.kind
    }

    pub fn lambda_budget(&self) -> usize {
        self.0.lambda_budget
    }

    pub fn rule(&self, state: usize, input: InputSym, top: Sym) -> Option<&Rule> {
        self.0.get(state, input, top)
    }

    /// A run in progress from the start configuration.
    pub fn runner(&self) -> PdcRunner<'_> {
        let mut r = PdcRunner { spec: self, state: self.0.start, stack: vec![Sym::Bottom], position: 0 };
        r.closure();
        r
    }

    pub fn run(&self, x: &[bool]) -> Result<PdcRun, PdcError> {
        let mut r = self.runner();
        let mut out = BitString::new();
        for &b in x {
            r.feed(b, &mut out)?;
        }
        Ok(r.finish(out))
    }

    /// Run from an arbitrary configuration; `stack` is top-first and must end
    /// with the only `z`.
    pub fn run_from(&self, state: usize, stack: &[Sym], x: &[bool]) -> Result<PdcRun, PdcError> {
        if state >= self.num_states() {
            return Err(PdcError::BadConfiguration(format!("state q{} out of range", state + 1)));
        }
        let bottom_ok = stack.last() == Some(&Sym::Bottom)
            && stack.iter().filter(|&&s| s == Sym::Bottom).count() == 1;
        if !bottom_ok {
            return Err(PdcError::BadConfiguration("stack must end with a single z".into()));
        }
        let mut r = PdcRunner {
            spec: self,
            state,
            stack: stack.iter().rev().copied().collect(),
            position: 0,
        };
        r.closure();
        let mut out = BitString::new();
        for &b in x {
            r.feed(b, &mut out)?;
        }
        Ok(r.finish(out))
    }

    pub fn to_text(&self) -> String {
        let b = &self.0;
        let mut s = format!("pdc {} {} {} {}\n", b.num_states(), b.start + 1, b.kind, b.lambda_budget);
        for (key, rule) in b.keys() {
            let push = if rule.push.is_empty() { "-".to_string() } else { stack_text(&rule.push) };
            s.push_str(&format!(
                "{} {} {} -> {} {} {}\n",
                key.state + 1,
                input_text(key.input),
                key.top.to_char(),
                rule.next + 1,
                push,
                emission_text(&rule.emit)
            ));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, PdcError> {
        PdcBuilder::from_text(text)?.build()
    }
}

impl fmt::Display for PdcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PdcSpec {
    type Err = PdcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PdcSpec::from_text(s)
    }
}

/// Incremental execution: feed bits one at a time.
#[derive(Debug, Clone)]
pub struct PdcRunner<'a> {
    spec: &'a PdcSpec,
    state: usize,
    /// Top at the end.
    stack: Vec<Sym>,
    position: usize,
}

impl PdcRunner<'_> {
    pub fn state(&self) -> usize {
        self.state
    }

    pub fn height(&self) -> usize {
        self.stack.len() - 1
    }

    pub fn stack_top_first(&self) -> Vec<Sym> {
        self.stack.iter().rev().copied().collect()
    }

    fn top(&self) -> Sym {
        *self.stack.last().expect("bottom marker is never popped")
    }

    fn apply(&mut self, rule: &Rule) {
        self.stack.pop();
        self.stack.extend(rule.push.iter().rev());
        self.state = rule.next;
    }

    /// Apply λ-moves while one is defined. Validation bounds their number.
    fn closure(&mut self) {
        while let Some(rule) = self.spec.rule(self.state, None, self.top()) {
            self.apply(rule);
        }
    }

    /// Read one bit, appending its emission to `out`.
    pub fn feed(&mut self, bit: bool, out: &mut BitString) -> Result<(), PdcError> {
        let top = self.top();
        let Some(rule) = self.spec.rule(self.state, Some(bit), top) else {
            return Err(PdcError::Stuck { position: self.position, state: self.state, top, bit });
        };
        out.extend_from_slice(&rule.emit);
        self.apply(rule);
        self.closure();
        self.position += 1;
        Ok(())
    }

    fn finish(self, output: BitString) -> PdcRun {
        PdcRun { output, final_state: self.state, final_stack: self.stack_top_first() }
    }
}

/// Check that `x ↦ (C(x), final state)` is injective over every `|x| <= max_len`
/// on which `c` does not get stuck. Inputs are visited shortest first.
pub fn pdc_il_check(c: &PdcSpec, max_len: usize) -> IlVerdict {
    let mut seen: HashMap<(BitString, usize), BitString> = HashMap::new();
    for x in all_up_to(max_len) {
        let Ok(run) = c.run(&x) else { continue };
        if let Some(prev) = seen.insert((run.output, run.final_state), x.clone()) {
            return IlVerdict::Collision(prev, x);
        }
    }
    IlVerdict::Pass
}

enum Sim {
    Done { state: usize, stack: Vec<Sym>, out: BitString },
    NeedsDeeper,
    Stuck,
}

/// Run `c` on `w` from `state` over a partial stack (top at the end) that
/// may continue below. Reports when the partial stack runs out.
fn simulate(c: &PdcSpec, state: usize, mut stack: Vec<Sym>, w: &[bool]) -> Sim {
    let mut state = state;
    let mut out = BitString::new();
    let closure = |state: &mut usize, stack: &mut Vec<Sym>| -> bool {
        loop {
            let Some(&top) = stack.last() else { return false };
            let Some(rule) = c.rule(*state, None, top) else { return true };
            stack.pop();
            stack.extend(rule.push.iter().rev());
            *state = rule.next;
        }
    };
    if !closure(&mut state, &mut stack) {
        return Sim::NeedsDeeper;
    }
    for &b in w {
        let top = *stack.last().expect("closure leaves a top");
        let Some(rule) = c.rule(state, Some(b), top) else { return Sim::Stuck };
        out.extend_from_slice(&rule.emit);
        stack.pop();
        stack.extend(rule.push.iter().rev());
        state = rule.next;
        if !closure(&mut state, &mut stack) {
            return Sim::NeedsDeeper;
        }
    }
    Sim::Done { state, stack, out }
}

pub fn compose_pdc_fst(c: &PdcSpec, t: &FstSpec) -> Result<PdcSpec, PdcError> {
    compose_pdc_fst_with_ceiling(c, t, DEFAULT_STATE_CEILING)
}

/// A compressor `N` with `N(x) = C(T(x))`.
///
/// A state of `N` is `(q_C, q_T, buffer)`, where the buffer holds stack
/// symbols already popped from the real stack that `C` still sees on top of
/// its own. Before a bit move, `N` simulates `C` on both possible emissions of
/// `T`; if either would reach below the symbols at hand, `N` first pops the
/// top into the buffer with a λ-move.
pub fn compose_pdc_fst_with_ceiling(
    c: &PdcSpec,
    t: &FstSpec,
    ceiling: usize,
) -> Result<PdcSpec, PdcError> {
    type Key = (usize, usize, Vec<Sym>);
    let kind = c.kind();
    let mut ids: HashMap<Key, usize> = HashMap::new();
    let mut order: Vec<Key> = Vec::new();
    let mut queue = VecDeque::new();
    let start: Key = (c.start(), t.start(), Vec::new());
    ids.insert(start.clone(), 0);
    order.push(start.clone());
    queue.push_back(start);
    let mut pending: Vec<(usize, InputSym, Sym, Key, Vec<Sym>, BitString)> = Vec::new();

    let intern = |key: Key, ids: &mut HashMap<Key, usize>, order: &mut Vec<Key>, queue: &mut VecDeque<Key>| {
        if let Some(&id) = ids.get(&key) {
            return Ok(id);
        }
        if order.len() >= ceiling {
            return Err(PdcError::Refused { ceiling });
        }
        let id = order.len();
        ids.insert(key.clone(), id);
        order.push(key.clone());
        queue.push_back(key);
        Ok(id)
    };

    while let Some(key) = queue.pop_front() {
        let id = ids[&key];
        let (qc, qt, buffer) = &key;
        for &top in kind.alphabet() {
            let mut local = vec![top];
            local.extend_from_slice(buffer);
            let sims: Vec<Sim> = [false, true]
                .iter()
                .map(|&b| simulate(c, *qc, local.clone(), &t.edge(*qt, b).out))
                .collect();
            if sims.iter().any(|s| matches!(s, Sim::NeedsDeeper)) {
                let next: Key = (*qc, *qt, local);
                intern(next.clone(), &mut ids, &mut order, &mut queue)?;
                pending.push((id, None, top, next, Vec::new(), BitString::new()));
                continue;
            }
            for (b, sim) in [false, true].into_iter().zip(sims) {
                if let Sim::Done { state, stack, out } = sim {
                    let next: Key = (state, t.edge(*qt, b).next, Vec::new());
                    intern(next.clone(), &mut ids, &mut order, &mut queue)?;
                    let push: Vec<Sym> = stack.into_iter().rev().collect();
                    pending.push((id, Some(b), top, next, push, out));
                }
            }
        }
    }

    let mut builder = PdcBuilder::new(order.len(), 0, kind, 0);
    for (id, input, top, next, push, emit) in pending {
        builder.set(id, input, top, Rule::new(ids[&next], push, emit));
    }
    builder.lambda_budget = builder
        .lambda_chain_bound()
        .map_err(|_| PdcError::InvalidParameters("composition produced a λ-cycle".into()))?;
    builder.build()
}

/// State layout of [`build_half_compressor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfCompressorLayout {
    pub k: usize,
    pub v: usize,
    pub m: usize,
}

impl HalfCompressorLayout {
    /// Counting state `i` in `0..=m`.
    pub fn count(&self, i: usize) -> usize {
        i
    }
    pub fn scan(&self) -> usize {
        self.m + 1
    }
    /// Flag-checking state `i` in `1..=k`, on the all-ones track or not.
    pub fn flag(&self, ones: bool, i: usize) -> usize {
        self.m + 2 + if ones { 0 } else { self.k } + (i - 1)
    }
    /// Pop state `i` in `0..=k`.
    pub fn pop(&self, i: usize) -> usize {
        self.m + 2 + 2 * self.k + i
    }
    /// Compress state `i` in `1..=v+1`.
    pub fn compress(&self, i: usize) -> usize {
        self.m + 3 + 3 * self.k + (i - 1)
    }
    pub fn error(&self) -> usize {
        self.m + 4 + 3 * self.k + self.v
    }
    pub fn num_states(&self) -> usize {
        self.error() + 1
    }
}

/// A binary-stack compressor for sequences made of zones `R 1^k reverse(R)`.
///
/// It copies the first `m` bits, then copies input while pushing it and
/// scanning aligned `k`-bit groups for `1^k`. On a flag it pops the flag and
/// matches the following input against the stack, emitting one `0` per `v`
/// matched bits. A mismatch emits `1^{3m+i} 0 x` and switches to copying.
/// When the stack empties during matching, the next bit starts a new zone.
pub fn build_half_compressor(k: usize, v: usize, m: usize) -> Result<PdcSpec, PdcError> {
    if k <= 8 {
        return Err(PdcError::InvalidParameters(format!("flag length k = {k} must exceed 8")));
    }
    let mut p = k;
    while p < v {
        p = p.checked_mul(k).ok_or_else(|| PdcError::InvalidParameters("v overflows".into()))?;
    }
    if p != v {
        return Err(PdcError::InvalidParameters(format!("v = {v} is not a positive power of k = {k}")));
    }
    let l = HalfCompressorLayout { k, v, m };
    let mut b = PdcBuilder::new(l.num_states(), l.count(0), StackKind::Binary, k + 2);
    let bit = |x: bool| BitString::from_bits(vec![x]);
    let none = BitString::new;
    for y in Sym::ALL {
        for x in [false, true] {
            for i in 0..m {
                b.set(l.count(i), Some(x), y, Rule::new(l.count(i + 1), vec![y], bit(x)));
            }
            b.set(l.scan(), Some(x), y, Rule::new(l.flag(x, 1), vec![Sym::from_bit(x), y], bit(x)));
            for i in 1..k {
                b.set(l.flag(false, i), Some(x), y, Rule::new(l.flag(false, i + 1), vec![Sym::from_bit(x), y], bit(x)));
                b.set(l.flag(true, i), Some(x), y, Rule::new(l.flag(x, i + 1), vec![Sym::from_bit(x), y], bit(x)));
            }
            for i in 1..=v {
                let rule = if y == Sym::Bottom {
                    Rule::new(l.flag(x, 1), vec![Sym::from_bit(x), y], bit(x))
                } else if Sym::from_bit(x) == y {
                    Rule::new(l.compress(i + 1), vec![], if i == v { bit(false) } else { none() })
                } else {
                    let mut flag = BitString::repeat_bit(true, 3 * m + i);
                    flag.push(false);
                    flag.push(x);
                    Rule::new(l.error(), vec![y], flag)
                };
                b.set(l.compress(i), Some(x), y, rule);
            }
            b.set(l.error(), Some(x), y, Rule::new(l.error(), vec![y], bit(x)));
        }
        b.set(l.count(m), None, y, Rule::new(l.scan(), vec![y], none()));
        b.set(l.flag(false, k), None, y, Rule::new(l.scan(), vec![y], none()));
        b.set(l.flag(true, k), None, y, Rule::new(l.pop(0), vec![y], none()));
        for i in 0..k {
            let push = if y == Sym::Bottom { vec![y] } else { vec![] };
            b.set(l.pop(i), None, y, Rule::new(l.pop(i + 1), push, none()));
        }
        b.set(l.pop(k), None, y, Rule::new(l.compress(1), vec![y], none()));
        b.set(l.compress(v + 1), None, y, Rule::new(l.compress(1), vec![y], none()));
    }
    b.build()
}

fn random_push<R: Rng + ?Sized>(rng: &mut R, kind: StackKind, top: Sym, allow_pop: bool) -> Vec<Sym> {
    let sym = |rng: &mut R| match kind {
        StackKind::Binary => Sym::from_bit(rng.gen()),
        StackKind::Unary => Sym::Zero,
    };
    if top == Sym::Bottom {
        let extra = rng.gen_range(0..=2);
        let mut push: Vec<Sym> = (0..extra).map(|_| sym(rng)).collect();
        push.push(Sym::Bottom);
        return push;
    }
    match rng.gen_range(if allow_pop { 0 } else { 1 }..4) {
        0 => vec![],
        1 => vec![top],
        2 => vec![sym(rng), top],
        _ => vec![sym(rng)],
    }
}

/// A random valid compressor. λ-moves only lead to higher-numbered states, so
/// λ-chains are finite; `c` is set to the longest one. About one bit move in
/// twenty is left undefined.
pub fn random_pdc<R: Rng + ?Sized>(rng: &mut R, num_states: usize, kind: StackKind) -> PdcSpec {
    assert!(num_states > 0);
    let mut b = PdcBuilder::new(num_states, rng.gen_range(0..num_states), kind, 0);
    for q in 0..num_states {
        for &top in kind.alphabet() {
            if q + 1 < num_states && rng.gen_bool(0.3) {
                let next = rng.gen_range(q + 1..num_states);
                let push = random_push(rng, kind, top, true);
                b.set(q, None, top, Rule::new(next, push, BitString::new()));
                continue;
            }
            for bit in [false, true] {
                if rng.gen_bool(0.05) {
                    continue;
                }
                let next = rng.gen_range(0..num_states);
                let push = random_push(rng, kind, top, true);
                let emit: BitString = (0..rng.gen_range(0..=2)).map(|_| rng.gen::<bool>()).collect();
                b.set(q, Some(bit), top, Rule::new(next, push, emit));
            }
        }
    }
    b.lambda_budget = b.lambda_chain_bound().expect("λ-moves only go forward");
    b.build().expect("random construction is valid")
}
