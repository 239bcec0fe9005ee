//! One-tape Turing machines on a looped tape.
//!
//! A [`TmSpec`] holds the finite control (states, tape alphabet, blank, start
//! state and a partial transition table). Configurations always live on a
//! looped tape of `N` cells, and head arithmetic is modulo `N`.
//!
//! Besides plain execution this module decides reversibility from the
//! transition table alone ([`check_reversible`]), splits the states into
//! left-entered and right-entered classes ([`partition_states`]), completes a
//! reversible partial table to a total reversible one ([`totalize`]), and
//! builds the marching machine used to keep halting runs alive
//! ([`halting_extension`], [`recover_halting_config`]).

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Head movement of a single step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "-1")]
    Left,
    #[serde(rename = "+1")]
    Right,
}

impl Direction {
    pub fn offset(self) -> isize {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }

    pub fn reverse(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    pub fn parse(token: &str) -> Option<Direction> {
        match token {
            "+1" | "1" => Some(Direction::Right),
            "-1" => Some(Direction::Left),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "-1",
            Direction::Right => "+1",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Moves `cell` one step in `dir` on a loop of `n` cells.
pub fn step_cell(cell: usize, dir: Direction, n: usize) -> usize {
    match dir {
        Direction::Right => (cell + 1) % n,
        Direction::Left => (cell + n - 1) % n,
    }
}

/// Right-hand side of a transition: new state, written symbol, head move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub state: usize,
    pub symbol: usize,
    pub dir: Direction,
}

impl Transition {
    pub fn new(state: usize, symbol: usize, dir: Direction) -> Self {
        Transition { state, symbol, dir }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared {kind} `{name}`")]
    Undeclared {
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error("duplicate transition for ({state}, {symbol}){}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    DuplicateTransition {
        line: Option<usize>,
        state: String,
        symbol: String,
    },
    #[error("invalid machine: {0}")]
    Invalid(String),
    #[error("machine is not reversible ({} violation(s))", .0.witnesses.len())]
    NotReversible(ReversibilityReport),
    #[error("transition undefined at ({state}, {symbol})")]
    Undefined { state: String, symbol: String },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("cannot recover halting configuration: {0}")]
    Recovery(String),
}

/// Finite control of a one-tape machine. States and symbols are addressed by
/// their declaration index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmSpec {
    states: Vec<String>,
    alphabet: Vec<String>,
    blank: usize,
    start: usize,
    delta: Vec<Option<Transition>>,
}

impl TmSpec {
    /// A machine with an empty transition table.
    pub fn new<S: AsRef<str>>(states: &[S], alphabet: &[S], blank: &str, start: &str) -> Result<Self, TmError> {
        let states: Vec<String> = states.iter().map(|s| s.as_ref().to_string()).collect();
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.as_ref().to_string()).collect();
        if states.is_empty() {
            return Err(TmError::Invalid("no states declared".into()));
        }
        if alphabet.is_empty() {
            return Err(TmError::Invalid("empty alphabet".into()));
        }
        let mut seen = HashSet::new();
        for name in states.iter().chain(alphabet.iter()) {
            if !valid_name(name) {
                return Err(TmError::Invalid(format!("bad name `{name}`")));
            }
            if !seen.insert(name.as_str()) {
                return Err(TmError::Invalid(format!(
                    "`{name}` declared twice (states and symbols must be distinct)"
                )));
            }
        }
        let blank = alphabet
            .iter()
            .position(|a| a == blank)
            .ok_or_else(|| TmError::Invalid(format!("blank `{blank}` not in alphabet")))?;
        let start = states
            .iter()
            .position(|q| q == start)
            .ok_or_else(|| TmError::Invalid(format!("start `{start}` not a state")))?;
        let delta = vec![None; states.len() * alphabet.len()];
        Ok(TmSpec {
            states,
            alphabet,
            blank,
            start,
            delta,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|q| q == name)
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    pub fn symbol_name(&self, a: usize) -> &str {
        &self.alphabet[a]
    }

    pub fn transition(&self, p: usize, a: usize) -> Option<Transition> {
        self.delta[p * self.alphabet.len() + a]
    }

    /// Adds `δ(p, a) = t`. Fails if `δ(p, a)` is already defined or an index
    /// is out of range.
    pub fn add_transition(&mut self, p: usize, a: usize, t: Transition) -> Result<(), TmError> {
        let (nq, ng) = (self.num_states(), self.num_symbols());
        if p >= nq || t.state >= nq || a >= ng || t.symbol >= ng {
            return Err(TmError::Invalid("transition index out of range".into()));
        }
        let slot = &mut self.delta[p * ng + a];
        if slot.is_some() {
            return Err(TmError::DuplicateTransition {
                line: None,
                state: self.states[p].clone(),
                symbol: self.alphabet[a].clone(),
            });
        }
        *slot = Some(t);
        Ok(())
    }

    /// Name-based variant of [`TmSpec::add_transition`].
    pub fn add_rule(&mut self, p: &str, a: &str, q: &str, b: &str, dir: Direction) -> Result<(), TmError> {
        let lookup_state = |n: &str| {
            self.state_index(n)
                .ok_or_else(|| TmError::Invalid(format!("unknown state `{n}`")))
        };
        let lookup_symbol = |n: &str| {
            self.symbol_index(n)
                .ok_or_else(|| TmError::Invalid(format!("unknown symbol `{n}`")))
        };
        let (p, a, q, b) = (lookup_state(p)?, lookup_symbol(a)?, lookup_state(q)?, lookup_symbol(b)?);
        self.add_transition(p, a, Transition::new(q, b, dir))
    }

    /// All defined transitions in declaration order of `(p, a)`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, Transition)> + '_ {
        let ng = self.num_symbols();
        self.delta
            .iter()
            .enumerate()
            .filter_map(move |(k, t)| t.map(|t| (k / ng, k % ng, t)))
    }

    pub fn is_total(&self) -> bool {
        self.delta.iter().all(Option::is_some)
    }

    /// The configuration `(p, i, X)` after one step, or `None` when `δ(p, X(i))`
    /// is undefined.
    pub fn successor(&self, c: &Config) -> Option<Config> {
        let a = c.tape[c.head];
        let t = self.transition(c.state, a)?;
        let mut tape = c.tape.clone();
        tape[c.head] = t.symbol;
        Some(Config {
            state: t.state,
            head: step_cell(c.head, t.dir, tape.len()),
            tape,
        })
    }

    /// Runs at most `steps` steps. Returns the last configuration reached and
    /// the step at which the machine halted, if it did.
    pub fn run(&self, c: &Config, steps: usize) -> (Config, Option<usize>) {
        let mut cur = c.clone();
        for t in 0..steps {
            match self.successor(&cur) {
                Some(next) => cur = next,
                None => return (cur, Some(t)),
            }
        }
        (cur, None)
    }

    /// Checks that `c` is a configuration of this machine.
    pub fn validate_config(&self, c: &Config) -> Result<(), TmError> {
        if c.tape.is_empty() {
            return Err(TmError::BadConfig("empty tape".into()));
        }
        if c.head >= c.tape.len() {
            return Err(TmError::BadConfig(format!(
                "head {} outside tape of {} cells",
                c.head,
                c.tape.len()
            )));
        }
        if c.state >= self.num_states() {
            return Err(TmError::BadConfig(format!("state index {}", c.state)));
        }
        if let Some(&a) = c.tape.iter().find(|&&a| a >= self.num_symbols()) {
            return Err(TmError::BadConfig(format!("symbol index {a}")));
        }
        Ok(())
    }

    /// Line-oriented text form accepted by [`parse_tm`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("states: {}\n", self.states.join(" ")));
        out.push_str(&format!("alphabet: {}\n", self.alphabet.join(" ")));
        out.push_str(&format!("blank: {}\n", self.alphabet[self.blank]));
        out.push_str(&format!("start: {}\n", self.states[self.start]));
        for (p, a, t) in self.transitions() {
            out.push_str(&format!(
                "delta: {} {} -> {} {} {}\n",
                self.states[p], self.alphabet[a], self.states[t.state], self.alphabet[t.symbol], t.dir
            ));
        }
        out
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name != "->" && !name.contains(|c: char| c.is_whitespace() || c == '#' || c == ':')
}

/// State, head cell and tape contents on a looped tape of `tape.len()` cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub state: usize,
    pub head: usize,
    pub tape: Vec<usize>,
}

impl Config {
    pub fn new(state: usize, head: usize, tape: Vec<usize>) -> Self {
        Config { state, head, tape }
    }

    /// Start state, head on cell 0, blank tape of `n` cells.
    pub fn blank(spec: &TmSpec, n: usize) -> Self {
        Config {
            state: spec.start(),
            head: 0,
            tape: vec![spec.blank(); n],
        }
    }

    pub fn cells(&self) -> usize {
        self.tape.len()
    }
}

/// Every configuration with `n` cells, in lexicographic order of
/// `(state, head, tape)`.
pub fn all_configs(spec: &TmSpec, n: usize) -> Vec<Config> {
    let ng = spec.num_symbols();
    let tapes = ng.pow(n as u32);
    let mut out = Vec::with_capacity(spec.num_states() * n * tapes);
    for state in 0..spec.num_states() {
        for head in 0..n {
            for code in 0..tapes {
                let mut tape = vec![0; n];
                let mut rest = code;
                for cell in (0..n).rev() {
                    tape[cell] = rest % ng;
                    rest /= ng;
                }
                out.push(Config { state, head, tape });
            }
        }
    }
    out
}

/// Kind of violated reversibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// A state is entered by both a left move and a right move.
    Separability,
    /// Two distinct `(p, a)` lead to the same `(q, b)`.
    Injectivity,
}

/// Two transition-table entries `(p, a)` that together violate a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub violation: Violation,
    pub first: (usize, usize),
    pub second: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub separable: bool,
    pub injective: bool,
    pub witnesses: Vec<Witness>,
}

impl ReversibilityReport {
    pub fn is_reversible(&self) -> bool {
        self.separable && self.injective
    }
}

/// Decides reversibility from the transition table: no state is entered from
/// both sides, and no `(q, b)` has two preimages.
pub fn check_reversible(spec: &TmSpec) -> ReversibilityReport {
    let mut witnesses = Vec::new();

    // first entry reaching each target state, per direction
    let mut entered: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; spec.num_states()];
    let mut flagged = vec![false; spec.num_states()];
    for (p, a, t) in spec.transitions() {
        let side = usize::from(t.dir == Direction::Right);
        if entered[t.state][side].is_none() {
            entered[t.state][side] = Some((p, a));
        }
        if let [Some(neg), Some(pos)] = entered[t.state] {
            if !flagged[t.state] {
                flagged[t.state] = true;
                witnesses.push(Witness {
                    violation: Violation::Separability,
                    first: pos,
                    second: neg,
                });
            }
        }
    }
    let separable = witnesses.is_empty();

    let mut preimages: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (p, a, t) in spec.transitions() {
        preimages.entry((t.state, t.symbol)).or_default().push((p, a));
    }
    let mut injective = true;
    for sources in preimages.values() {
        for &other in &sources[1..] {
            injective = false;
            witnesses.push(Witness {
                violation: Violation::Injectivity,
                first: sources[0],
                second: other,
            });
        }
    }

    ReversibilityReport {
        separable,
        injective,
        witnesses,
    }
}

/// Split of the states into the classes entered by left moves (`neg`) and by
/// right moves (`pos`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePartition {
    class: Vec<Direction>,
}

impl StatePartition {
    pub fn from_classes(class: Vec<Direction>) -> Self {
        StatePartition { class }
    }

    pub fn class(&self, q: usize) -> Direction {
        self.class[q]
    }

    pub fn classes(&self) -> &[Direction] {
        &self.class
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn neg(&self) -> Vec<usize> {
        self.members(Direction::Left)
    }

    pub fn pos(&self) -> Vec<usize> {
        self.members(Direction::Right)
    }

    fn members(&self, dir: Direction) -> Vec<usize> {
        (0..self.class.len()).filter(|&q| self.class[q] == dir).collect()
    }
}

/// Classes forced by the transition targets; states never entered go to `pos`.
pub fn partition_states(spec: &TmSpec) -> Result<StatePartition, TmError> {
    let report = check_reversible(spec);
    if !report.separable {
        return Err(TmError::NotReversible(report));
    }
    let mut class = vec![Direction::Right; spec.num_states()];
    for (_, _, t) in spec.transitions() {
        class[t.state] = t.dir;
    }
    Ok(StatePartition { class })
}

fn require_reversible(spec: &TmSpec) -> Result<(), TmError> {
    let report = check_reversible(spec);
    if report.is_reversible() {
        Ok(())
    } else {
        Err(TmError::NotReversible(report))
    }
}

/// Completes a reversible table to a total reversible one. Holes `(p, a)` are
/// matched, in lexicographic order, with the pairs `(q, b)` that nothing maps
/// to yet, also in lexicographic order; the move is the class of `q`.
pub fn totalize(spec: &TmSpec) -> Result<TmSpec, TmError> {
    require_reversible(spec)?;
    let partition = partition_states(spec)?;
    let ng = spec.num_symbols();
    let mut hit = vec![false; spec.delta.len()];
    for (_, _, t) in spec.transitions() {
        hit[t.state * ng + t.symbol] = true;
    }
    let free_targets = (0..hit.len()).filter(|&k| !hit[k]);
    let holes: Vec<usize> = (0..spec.delta.len()).filter(|&k| spec.delta[k].is_none()).collect();

    let mut out = spec.clone();
    for (hole, target) in holes.into_iter().zip(free_targets) {
        let q = target / ng;
        out.delta[hole] = Some(Transition::new(q, target % ng, partition.class(q)));
    }
    debug_assert!(out.is_total());
    Ok(out)
}

/// Index of `p'` in the extended machine.
pub fn marched_state(spec: &TmSpec, p: usize) -> usize {
    spec.num_states() + p
}

/// Index of the march mark `a'` in the extended alphabet.
pub fn march_mark(spec: &TmSpec, a: usize) -> usize {
    spec.num_symbols() + a
}

/// Index of the halt mark `a''` in the extended alphabet.
pub fn halt_mark(spec: &TmSpec, a: usize) -> usize {
    2 * spec.num_symbols() + a
}

/// The marching extension of a reversible machine.
///
/// States are `Q ⊔ {p'}`; symbols are `Γ ⊔ {a'} ⊔ {a''}`. Where `δ(p, a)` is
/// undefined the new machine writes the halt mark `a''`, enters `p'` and
/// moves in the class direction of `p`; from then on `p'` marks every symbol
/// it reads with `'` and keeps moving the same way. Marked symbols have no
/// transitions.
pub fn halting_extension(spec: &TmSpec) -> Result<TmSpec, TmError> {
    require_reversible(spec)?;
    let partition = partition_states(spec)?;

    let mut states = spec.states.clone();
    states.extend(spec.states.iter().map(|p| format!("{p}'")));
    let mut alphabet = spec.alphabet.clone();
    alphabet.extend(spec.alphabet.iter().map(|a| format!("{a}'")));
    alphabet.extend(spec.alphabet.iter().map(|a| format!("{a}''")));

    let mut out = TmSpec::new(&states, &alphabet, &spec.alphabet[spec.blank], &spec.states[spec.start])
        .map_err(|e| TmError::Invalid(format!("cannot prime names: {e}")))?;

    for p in 0..spec.num_states() {
        let dir = partition.class(p);
        let primed = marched_state(spec, p);
        for a in 0..spec.num_symbols() {
            let t = spec
                .transition(p, a)
                .unwrap_or_else(|| Transition::new(primed, halt_mark(spec, a), dir));
            out.add_transition(p, a, t)?;
            out.add_transition(primed, a, Transition::new(primed, march_mark(spec, a), dir))?;
        }
    }
    Ok(out)
}

/// Rebuilds the halting configuration of `spec` from a configuration of
/// `halting_extension(spec)` whose state is marched.
///
/// Returns the configuration together with the number of steps the extension
/// marched after the halt (so the halt step is `T` minus this value).
pub fn recover_halting_config(spec: &TmSpec, c: &Config) -> Result<(Config, usize), TmError> {
    let (nq, ng) = (spec.num_states(), spec.num_symbols());
    let n = c.cells();
    if c.head >= n {
        return Err(TmError::Recovery("head outside tape".into()));
    }
    if c.state < nq || c.state >= 2 * nq {
        return Err(TmError::Recovery("state is not a marched state".into()));
    }
    let p = c.state - nq;
    let back = partition_states(spec)?.class(p).reverse();

    let mut cell = c.head;
    let mut marched = 0;
    let halt_cell = loop {
        cell = step_cell(cell, back, n);
        marched += 1;
        let sym = c.tape[cell];
        if (2 * ng..3 * ng).contains(&sym) {
            break cell;
        }
        if !(ng..2 * ng).contains(&sym) || marched >= n {
            return Err(TmError::Recovery(format!(
                "no halt mark behind the head (cell {cell} breaks the marked run)"
            )));
        }
    };

    let mut tape = Vec::with_capacity(n);
    let mut halt_marks = 0;
    for &sym in &c.tape {
        tape.push(match sym {
            s if s < ng => s,
            s if s < 2 * ng => s - ng,
            s if s < 3 * ng => {
                halt_marks += 1;
                s - 2 * ng
            }
            s => return Err(TmError::Recovery(format!("symbol index {s} out of range"))),
        });
    }
    if halt_marks != 1 {
        return Err(TmError::Recovery(format!("{halt_marks} halt marks on tape")));
    }
    Ok((
        Config {
            state: p,
            head: halt_cell,
            tape,
        },
        marched,
    ))
}

/// Parses the line-oriented machine format:
///
/// ```text
/// states: q r
/// alphabet: _ 1
/// blank: _
/// start: q
/// delta: q _ -> r 1 +1
/// ```
///
/// `#` starts a comment. After a bare `delta:` line, transitions may also be
/// given one per line without the prefix.
pub fn parse_tm(text: &str) -> Result<TmSpec, TmError> {
    let header = parse_header(text, &["delta"])?;
    let mut spec = header.build()?;
    for (line, body) in header.rest {
        let (p, a, q, b, dir) = parse_arrow(line, &body)?;
        let (p, a) = (
            resolve(&spec.states, p, line, "state")?,
            resolve(&spec.alphabet, a, line, "symbol")?,
        );
        let (q, b) = (
            resolve(&spec.states, q, line, "state")?,
            resolve(&spec.alphabet, b, line, "symbol")?,
        );
        spec.add_transition(p, a, Transition::new(q, b, dir))
            .map_err(|e| match e {
                TmError::DuplicateTransition { state, symbol, .. } => TmError::DuplicateTransition {
                    line: Some(line),
                    state,
                    symbol,
                },
                other => other,
            })?;
    }
    Ok(spec)
}

/// Header fields common to the classical and quantum text formats, plus the
/// body lines (with their line numbers and keys) that were not headers.
pub(crate) struct Header {
    states: Option<Vec<String>>,
    alphabet: Option<Vec<String>>,
    blank: Option<String>,
    start: Option<String>,
    /// `(line number, key, body)` for non-header lines; key is the body
    /// keyword (or the last seen keyword for bare continuation lines).
    pub(crate) rest: Vec<(usize, String)>,
    pub(crate) rest_keys: Vec<String>,
}

impl Header {
    pub(crate) fn build(&self) -> Result<TmSpec, TmError> {
        let missing = |what: &str| TmError::Syntax {
            line: 0,
            message: format!("missing `{what}:` line"),
        };
        let states = self.states.as_ref().ok_or_else(|| missing("states"))?;
        let alphabet = self.alphabet.as_ref().ok_or_else(|| missing("alphabet"))?;
        let blank = self.blank.as_ref().ok_or_else(|| missing("blank"))?;
        let start = self.start.as_ref().ok_or_else(|| missing("start"))?;
        TmSpec::new(states, alphabet, blank, start)
    }
}

/// Splits `text` into header fields and body lines. `body_keys` are the
/// keywords that introduce body lines.
pub(crate) fn parse_header(text: &str, body_keys: &[&str]) -> Result<Header, TmError> {
    let mut header = Header {
        states: None,
        alphabet: None,
        blank: None,
        start: None,
        rest: Vec::new(),
        rest_keys: Vec::new(),
    };
    let mut current_body: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| TmError::Syntax { line, message };
        match content.split_once(':') {
            Some((key, value)) => {
                let key = key.trim();
                let value = value.trim();
                let words: Vec<String> = value.split_whitespace().map(str::to_string).collect();
                let single = |what: &str| -> Result<String, TmError> {
                    match words.as_slice() {
                        [w] => Ok(w.clone()),
                        _ => Err(syntax(format!("`{what}:` takes exactly one name"))),
                    }
                };
                let slot_taken = |what: &str| syntax(format!("`{what}:` given twice"));
                match key {
                    "states" => {
                        if header.states.replace(words.clone()).is_some() {
                            return Err(slot_taken("states"));
                        }
                    }
                    "alphabet" => {
                        if header.alphabet.replace(words.clone()).is_some() {
                            return Err(slot_taken("alphabet"));
                        }
                    }
                    "blank" => {
                        if header.blank.replace(single("blank")?).is_some() {
                            return Err(slot_taken("blank"));
                        }
                    }
                    "start" => {
                        if header.start.replace(single("start")?).is_some() {
                            return Err(slot_taken("start"));
                        }
                    }
                    k if body_keys.contains(&k) => {
                        current_body = Some(k.to_string());
                        if !value.is_empty() {
                            header.rest.push((line, value.to_string()));
                            header.rest_keys.push(k.to_string());
                        }
                    }
                    other => return Err(syntax(format!("unknown key `{other}`"))),
                }
            }
            None => match &current_body {
                Some(k) => {
                    header.rest.push((line, content.to_string()));
                    header.rest_keys.push(k.clone());
                }
                None => return Err(syntax(format!("unexpected line `{content}`"))),
            },
        }
    }
    Ok(header)
}

/// Parses `p a -> q b D` and returns the five tokens.
pub(crate) fn parse_arrow(line: usize, body: &str) -> Result<(&str, &str, &str, &str, Direction), TmError> {
    let (lhs, rhs) = body.split_once("->").ok_or_else(|| TmError::Syntax {
        line,
        message: "expected `p a -> q b D`".into(),
    })?;
    let lhs: Vec<&str> = lhs.split_whitespace().collect();
    let rhs: Vec<&str> = rhs.split_whitespace().collect();
    match (lhs.as_slice(), rhs.as_slice()) {
        ([p, a], [q, b, d]) => {
            let dir = Direction::parse(d).ok_or_else(|| TmError::Syntax {
                line,
                message: format!("direction must be +1 or -1, got `{d}`"),
            })?;
            Ok((p, a, q, b, dir))
        }
        _ => Err(TmError::Syntax {
            line,
            message: "expected `p a -> q b D`".into(),
        }),
    }
}

pub(crate) fn resolve(names: &[String], name: &str, line: usize, kind: &'static str) -> Result<usize, TmError> {
    names.iter().position(|n| n == name).ok_or_else(|| TmError::Undeclared {
        line,
        kind,
        name: name.to_string(),
    })
}
