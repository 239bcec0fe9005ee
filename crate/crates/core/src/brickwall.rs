//! The brick function and the staggered cylindrical wall built from it.
//!
//! A wall for `T` steps has `N = 2T + 2` columns (tape cells) and `2T` rows.
//! Gate `G(h, v)` covers columns `h` and `h + 1 (mod N)` in row `v`, for `h + v`
//! even, so odd rows contain the gate that wraps from column `N - 1` to 0.
//! Every gate computes the same brick function; two consecutive rows perform
//! one machine step.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{self, Circuit, CircuitError, Gate, GateTable, Wire};
use crate::tm::{
    check_reversible, halting_extension, partition_states, recover_halting_config, totalize, Config, Direction,
    ReversibilityReport, TmError, TmSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WallError {
    #[error(transparent)]
    Tm(#[from] TmError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("transition table is not total: undefined at ({state}, {symbol})")]
    NotTotal { state: String, symbol: String },
    #[error("machine is not reversible")]
    NotReversible(ReversibilityReport),
    #[error("wall needs at least one step")]
    NoSteps,
    #[error("invalid brick datum: {0}")]
    BadDatum(String),
    #[error("cannot decode row: {0}")]
    Decode(String),
    #[error("swap case fired in row {row} on a legal simulation")]
    Garbage { row: usize },
    #[error("invalid initial configuration: {0}")]
    BadInitial(String),
}

/// State component of a cell: no head, or a head in a plain, success-marked
/// (`q↑`) or move-pending (`q↓`) state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtState {
    None,
    Plain(usize),
    Up(usize),
    Down(usize),
}

impl ExtState {
    pub fn is_scanned(self) -> bool {
        self != ExtState::None
    }

    pub fn base(self) -> Option<usize> {
        match self {
            ExtState::None => None,
            ExtState::Plain(q) | ExtState::Up(q) | ExtState::Down(q) => Some(q),
        }
    }

    /// `0` for no head, then plain, up and down states in blocks of `nq`.
    pub fn code(self, nq: usize) -> usize {
        match self {
            ExtState::None => 0,
            ExtState::Plain(q) => 1 + q,
            ExtState::Up(q) => 1 + nq + q,
            ExtState::Down(q) => 1 + 2 * nq + q,
        }
    }

    pub fn from_code(code: usize, nq: usize) -> Option<ExtState> {
        match code {
            0 => Some(ExtState::None),
            c if c <= nq => Some(ExtState::Plain(c - 1)),
            c if c <= 2 * nq => Some(ExtState::Up(c - 1 - nq)),
            c if c <= 3 * nq => Some(ExtState::Down(c - 1 - 2 * nq)),
            _ => None,
        }
    }

    /// Display name using the machine's state names.
    pub fn label(self, spec: &TmSpec) -> String {
        match self {
            ExtState::None => "0".to_string(),
            ExtState::Plain(q) => spec.state_name(q).to_string(),
            ExtState::Up(q) => format!("{}↑", spec.state_name(q)),
            ExtState::Down(q) => format!("{}↓", spec.state_name(q)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellDatum {
    pub state: ExtState,
    pub symbol: usize,
}

impl CellDatum {
    pub fn new(state: ExtState, symbol: usize) -> Self {
        CellDatum { state, symbol }
    }

    pub fn blank(symbol: usize) -> Self {
        CellDatum {
            state: ExtState::None,
            symbol,
        }
    }
}

/// Contents of the two cells under one brick; at most one of them is scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BrickDatum {
    pub left: CellDatum,
    pub right: CellDatum,
}

impl BrickDatum {
    pub fn new(left: CellDatum, right: CellDatum) -> Self {
        BrickDatum { left, right }
    }

    pub fn swapped(self) -> Self {
        BrickDatum {
            left: self.right,
            right: self.left,
        }
    }

    pub fn is_valid(self) -> bool {
        !(self.left.state.is_scanned() && self.right.state.is_scanned())
    }
}

impl fmt::Display for BrickDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |st: ExtState| match st {
            ExtState::None => "0".to_string(),
            ExtState::Plain(q) => format!("q{q}"),
            ExtState::Up(q) => format!("q{q}↑"),
            ExtState::Down(q) => format!("q{q}↓"),
        };
        write!(
            f,
            "({}, {}, {}, {})",
            s(self.left.state),
            self.left.symbol,
            s(self.right.state),
            self.right.symbol
        )
    }
}

/// Which rule of the brick function produced an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BrickCase {
    /// no head: copy
    Copy,
    /// plain state: apply the transition and mark the result
    Execute,
    /// `q↑` on its home side: drop the mark
    RemoveMark,
    /// `q↓` on its home side: finish the move
    CompleteMove,
    /// a marked state on the wrong side: exchange the two cells
    Swap,
}

/// Number of brick data for `nq` states and `ng` symbols:
/// `(2·|Q*| + 1)·|Γ|²` with `|Q*| = 3·nq`.
pub fn brick_data_count(nq: usize, ng: usize) -> usize {
    (2 * 3 * nq + 1) * ng * ng
}

/// Dense index of a brick datum: no-head data first, then head-left, then
/// head-right, each ordered by (state code, left symbol, right symbol).
pub fn brick_index(x: BrickDatum, nq: usize, ng: usize) -> usize {
    let sq = ng * ng;
    let ab = x.left.symbol * ng + x.right.symbol;
    match (x.left.state, x.right.state) {
        (ExtState::None, ExtState::None) => ab,
        (s, ExtState::None) => sq + (s.code(nq) - 1) * sq + ab,
        (ExtState::None, s) => sq + 3 * nq * sq + (s.code(nq) - 1) * sq + ab,
        _ => panic!("two-head brick datum has no index"),
    }
}

pub fn brick_from_index(k: usize, nq: usize, ng: usize) -> BrickDatum {
    let sq = ng * ng;
    let (block, ab) = (k / sq, k % sq);
    let (a, b) = (ab / ng, ab % ng);
    let one_side = 3 * nq;
    let (ls, rs) = if block == 0 {
        (ExtState::None, ExtState::None)
    } else if block <= one_side {
        (ExtState::from_code(block, nq).unwrap(), ExtState::None)
    } else {
        (ExtState::None, ExtState::from_code(block - one_side, nq).unwrap())
    };
    BrickDatum::new(CellDatum::new(ls, a), CellDatum::new(rs, b))
}

/// Every brick datum, in index order.
pub fn all_brick_data(nq: usize, ng: usize) -> impl Iterator<Item = BrickDatum> {
    (0..brick_data_count(nq, ng)).map(move |k| brick_from_index(k, nq, ng))
}

fn require_total(spec: &TmSpec) -> Result<(), WallError> {
    for p in 0..spec.num_states() {
        for a in 0..spec.num_symbols() {
            if spec.transition(p, a).is_none() {
                return Err(WallError::NotTotal {
                    state: spec.state_name(p).to_string(),
                    symbol: spec.symbol_name(a).to_string(),
                });
            }
        }
    }
    Ok(())
}

/// The brick function of a total machine.
#[derive(Debug, Clone, PartialEq)]
pub struct BrickFunction {
    spec: TmSpec,
    classes: Vec<Direction>,
}

impl BrickFunction {
    /// For a total reversible machine, with the class split of
    /// [`partition_states`].
    pub fn new(spec: &TmSpec) -> Result<Self, WallError> {
        require_total(spec)?;
        let report = check_reversible(spec);
        if !report.is_reversible() {
            return Err(WallError::NotReversible(report));
        }
        let classes = partition_states(spec)?.classes().to_vec();
        Ok(BrickFunction {
            spec: spec.clone(),
            classes,
        })
    }

    /// For any total machine. States entered from both sides are classed
    /// positive; the result need not be a bijection.
    pub fn lenient(spec: &TmSpec) -> Result<Self, WallError> {
        require_total(spec)?;
        let mut classes = vec![None; spec.num_states()];
        for (_, _, t) in spec.transitions() {
            if classes[t.state] != Some(Direction::Right) {
                classes[t.state] = Some(t.dir);
            }
        }
        let classes = classes.into_iter().map(|c| c.unwrap_or(Direction::Right)).collect();
        Ok(BrickFunction {
            spec: spec.clone(),
            classes,
        })
    }

    pub fn spec(&self) -> &TmSpec {
        &self.spec
    }

    pub fn class(&self, q: usize) -> Direction {
        self.classes[q]
    }

    pub fn apply(&self, x: BrickDatum) -> Result<BrickDatum, WallError> {
        self.apply_with_case(x).map(|(y, _)| y)
    }

    pub fn apply_with_case(&self, x: BrickDatum) -> Result<(BrickDatum, BrickCase), WallError> {
        use Direction::{Left, Right};
        use ExtState::{Down, None as Free, Plain, Up};

        let (nq, ng) = (self.spec.num_states(), self.spec.num_symbols());
        let in_range = |c: CellDatum| c.symbol < ng && c.state.base().is_none_or(|q| q < nq);
        if !x.is_valid() || !in_range(x.left) || !in_range(x.right) {
            return Err(WallError::BadDatum(x.to_string()));
        }
        let cell = CellDatum::new;
        let (l, r) = (x.left, x.right);
        let out = match (l.state, r.state) {
            (Free, Free) => (x, BrickCase::Copy),
            (Plain(p), Free) => {
                let t = self.spec.transition(p, l.symbol).expect("total");
                let y = match t.dir {
                    Right => BrickDatum::new(cell(Free, t.symbol), cell(Up(t.state), r.symbol)),
                    Left => BrickDatum::new(cell(Down(t.state), t.symbol), cell(Free, r.symbol)),
                };
                (y, BrickCase::Execute)
            }
            (Free, Plain(p)) => {
                let t = self.spec.transition(p, r.symbol).expect("total");
                let y = match t.dir {
                    Right => BrickDatum::new(cell(Free, l.symbol), cell(Down(t.state), t.symbol)),
                    Left => BrickDatum::new(cell(Up(t.state), l.symbol), cell(Free, t.symbol)),
                };
                (y, BrickCase::Execute)
            }
            (Up(q), Free) if self.class(q) == Right => {
                (BrickDatum::new(cell(Plain(q), l.symbol), r), BrickCase::RemoveMark)
            }
            (Free, Up(q)) if self.class(q) == Left => {
                (BrickDatum::new(l, cell(Plain(q), r.symbol)), BrickCase::RemoveMark)
            }
            (Down(q), Free) if self.class(q) == Right => (
                BrickDatum::new(cell(Free, l.symbol), cell(Plain(q), r.symbol)),
                BrickCase::CompleteMove,
            ),
            (Free, Down(q)) if self.class(q) == Left => (
                BrickDatum::new(cell(Plain(q), l.symbol), cell(Free, r.symbol)),
                BrickCase::CompleteMove,
            ),
            _ => (x.swapped(), BrickCase::Swap),
        };
        Ok(out)
    }

    /// The permutation of brick-datum indices computed by this function.
    pub fn table(&self) -> Vec<usize> {
        let (nq, ng) = (self.spec.num_states(), self.spec.num_symbols());
        all_brick_data(nq, ng)
            .map(|x| brick_index(self.apply(x).expect("enumerated data are valid"), nq, ng))
            .collect()
    }
}

/// Result of evaluating the brick function on every brick datum.
#[derive(Debug, Clone, PartialEq)]
pub struct BijectivityReport {
    pub bijective: bool,
    /// `(x, y, f(x))` with `x != y` and `f(x) == f(y)`.
    pub collisions: Vec<(BrickDatum, BrickDatum, BrickDatum)>,
}

/// Exhaustive injectivity check of the brick function of a total machine.
/// Machines that are not separable are evaluated with the lenient class
/// split of [`BrickFunction::lenient`].
pub fn check_brick_bijective(spec: &TmSpec) -> Result<BijectivityReport, WallError> {
    let f = if check_reversible(spec).separable {
        let classes = partition_states(spec)?.classes().to_vec();
        require_total(spec)?;
        BrickFunction {
            spec: spec.clone(),
            classes,
        }
    } else {
        BrickFunction::lenient(spec)?
    };
    let (nq, ng) = (spec.num_states(), spec.num_symbols());
    let mut preimage: Vec<Option<BrickDatum>> = vec![None; brick_data_count(nq, ng)];
    let mut collisions = Vec::new();
    for x in all_brick_data(nq, ng) {
        let y = f.apply(x)?;
        let slot = &mut preimage[brick_index(y, nq, ng)];
        match slot {
            Some(prev) => collisions.push((*prev, x, y)),
            None => *slot = Some(x),
        }
    }
    Ok(BijectivityReport {
        bijective: collisions.is_empty(),
        collisions,
    })
}

/// A configuration whose state may carry a mark.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtConfig {
    pub state: ExtState,
    pub head: usize,
    pub tape: Vec<usize>,
}

impl ExtConfig {
    pub fn plain(&self) -> Option<Config> {
        match self.state {
            ExtState::Plain(q) => Some(Config::new(q, self.head, self.tape.clone())),
            _ => None,
        }
    }
}

impl From<&Config> for ExtConfig {
    fn from(c: &Config) -> Self {
        ExtConfig {
            state: ExtState::Plain(c.state),
            head: c.head,
            tape: c.tape.clone(),
        }
    }
}

/// Cell data of a configuration: the head cell carries the state.
pub fn encode_row(c: &Config) -> Vec<CellDatum> {
    encode_ext_row(&ExtConfig::from(c))
}

pub fn encode_ext_row(c: &ExtConfig) -> Vec<CellDatum> {
    c.tape
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let state = if i == c.head { c.state } else { ExtState::None };
            CellDatum::new(state, a)
        })
        .collect()
}

pub fn decode_row(row: &[CellDatum]) -> Result<ExtConfig, WallError> {
    let heads: Vec<usize> = (0..row.len()).filter(|&i| row[i].state.is_scanned()).collect();
    match heads.as_slice() {
        [head] => Ok(ExtConfig {
            state: row[*head].state,
            head: *head,
            tape: row.iter().map(|c| c.symbol).collect(),
        }),
        _ => Err(WallError::Decode(format!("{} heads in row", heads.len()))),
    }
}

/// Left column of the gate that owns half-brick `(h, v)`.
pub fn gate_column(h: usize, v: usize, n: usize) -> usize {
    if (h + v).is_multiple_of(2) {
        h
    } else {
        (h + n - 1) % n
    }
}

/// Left columns of the gates of row `v`, in column order.
pub fn row_gates(v: usize, n: usize) -> impl Iterator<Item = usize> {
    (v % 2..n).step_by(2)
}

/// Packing of a cell datum into `state_bits + symbol_bits` bits, state first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCodec {
    pub states: usize,
    pub symbols: usize,
    pub state_bits: u32,
    pub symbol_bits: u32,
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

impl CellCodec {
    pub fn new(spec: &TmSpec) -> Self {
        let (nq, ng) = (spec.num_states(), spec.num_symbols());
        CellCodec {
            states: nq,
            symbols: ng,
            state_bits: ceil_log2(3 * nq + 1),
            symbol_bits: ceil_log2(ng),
        }
    }

    pub fn width(&self) -> u32 {
        self.state_bits + self.symbol_bits
    }

    pub fn encode(&self, c: CellDatum) -> u32 {
        ((c.state.code(self.states) as u32) << self.symbol_bits) | c.symbol as u32
    }

    pub fn decode(&self, code: u32) -> Option<CellDatum> {
        let symbol = (code & ((1 << self.symbol_bits) - 1)) as usize;
        let state = ExtState::from_code((code >> self.symbol_bits) as usize, self.states)?;
        (symbol < self.symbols).then_some(CellDatum::new(state, symbol))
    }
}

/// The compiled wall for a fixed number of steps.
#[derive(Debug, Clone)]
pub struct BrickWall {
    steps: usize,
    function: BrickFunction,
    /// brick-datum index -> index of its image
    table: Vec<usize>,
    cases: Vec<BrickCase>,
}

impl BrickWall {
    /// Wall for a total reversible machine.
    pub fn build(spec: &TmSpec, steps: usize) -> Result<Self, WallError> {
        Self::from_function(BrickFunction::new(spec)?, steps)
    }

    /// Wall around an arbitrary brick function (e.g. a lenient one).
    pub fn from_function(function: BrickFunction, steps: usize) -> Result<Self, WallError> {
        if steps < 1 {
            return Err(WallError::NoSteps);
        }
        let spec = function.spec();
        let (nq, ng) = (spec.num_states(), spec.num_symbols());
        let (table, cases) = all_brick_data(nq, ng)
            .map(|x| {
                let (y, case) = function.apply_with_case(x)?;
                Ok((brick_index(y, nq, ng), case))
            })
            .collect::<Result<(Vec<_>, Vec<_>), WallError>>()?;
        Ok(BrickWall {
            steps,
            function,
            table,
            cases,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn cells(&self) -> usize {
        2 * self.steps + 2
    }

    pub fn rows(&self) -> usize {
        2 * self.steps
    }

    pub fn gates_per_row(&self) -> usize {
        self.cells() / 2
    }

    pub fn spec(&self) -> &TmSpec {
        self.function.spec()
    }

    pub fn function(&self) -> &BrickFunction {
        &self.function
    }

    pub fn codec(&self) -> CellCodec {
        CellCodec::new(self.spec())
    }

    /// Swaps the images of two brick data. Fault injection for verification
    /// tooling; the wall is no longer the one of the machine.
    pub fn corrupt(&mut self) {
        let spec = self.spec();
        let (nq, ng) = (spec.num_states(), spec.num_symbols());
        let (p, blank) = (spec.start(), spec.blank());
        let x = BrickDatum::new(CellDatum::new(ExtState::Plain(p), blank), CellDatum::blank(blank));
        let y = if ng > 1 {
            BrickDatum::new(
                CellDatum::new(ExtState::Plain(p), blank),
                CellDatum::blank((blank + 1) % ng),
            )
        } else {
            x.swapped()
        };
        self.table.swap(brick_index(x, nq, ng), brick_index(y, nq, ng));
    }

    fn apply_brick(&self, x: BrickDatum) -> (BrickDatum, bool) {
        let spec = self.spec();
        let (nq, ng) = (spec.num_states(), spec.num_symbols());
        let k = brick_index(x, nq, ng);
        (
            brick_from_index(self.table[k], nq, ng),
            self.cases[k] == BrickCase::Swap,
        )
    }

    /// Applies row `v` to a row of cell data. The flag reports whether a swap
    /// case fired.
    pub fn apply_row(&self, v: usize, row: &[CellDatum]) -> Result<(Vec<CellDatum>, bool), WallError> {
        let n = self.cells();
        if row.len() != n {
            return Err(WallError::Decode(format!("row has {} cells, wall has {n}", row.len())));
        }
        let mut out = row.to_vec();
        let mut garbage = false;
        for l in row_gates(v, n) {
            let r = (l + 1) % n;
            let x = BrickDatum::new(row[l], row[r]);
            if !x.is_valid() {
                return Err(WallError::BadDatum(x.to_string()));
            }
            let (y, swap) = self.apply_brick(x);
            garbage |= swap;
            out[l] = y.left;
            out[r] = y.right;
        }
        Ok((out, garbage))
    }

    fn check_initial(&self, c: &Config) -> Result<(), WallError> {
        let n = self.cells();
        self.spec().validate_config(c)?;
        if c.cells() != n {
            return Err(WallError::BadInitial(format!(
                "tape has {} cells, wall has {n}",
                c.cells()
            )));
        }
        if c.head != 0 {
            return Err(WallError::BadInitial("head must start on cell 0".into()));
        }
        if c.tape[self.steps + 1] != self.spec().blank() {
            return Err(WallError::BadInitial(format!(
                "cell {} lies outside [-T, T] and must be blank",
                self.steps + 1
            )));
        }
        Ok(())
    }

    /// Runs all `2T` rows on `c0` and returns the decoded configuration.
    pub fn simulate(&self, c0: &Config) -> Result<Config, WallError> {
        self.check_initial(c0)?;
        let mut row = encode_row(c0);
        for v in 0..self.rows() {
            let (next, garbage) = self.apply_row(v, &row)?;
            if garbage {
                return Err(WallError::Garbage { row: v });
            }
            row = next;
        }
        decode_row(&row)?
            .plain()
            .ok_or_else(|| WallError::Decode("final row carries a marked state".into()))
    }

    /// Rows after each two-row step, starting with `encode_row(c0)`;
    /// `trace[t]` is the row after `t` machine steps.
    pub fn trace(&self, c0: &Config) -> Result<Vec<Vec<CellDatum>>, WallError> {
        self.check_initial(c0)?;
        let mut rows = vec![encode_row(c0)];
        let mut row = rows[0].clone();
        for v in 0..self.rows() {
            row = self.apply_row(v, &row)?.0;
            if v % 2 == 1 {
                rows.push(row.clone());
            }
        }
        Ok(rows)
    }

    /// The wall as a circuit over packed cell codes (see [`CellCodec`]).
    /// Inputs and outputs are the `N` columns in order.
    pub fn to_circuit(&self) -> Result<Circuit, WallError> {
        let spec = self.spec();
        let (nq, ng) = (spec.num_states(), spec.num_symbols());
        let codec = self.codec();
        let rows = all_brick_data(nq, ng)
            .enumerate()
            .map(|(k, x)| {
                let y = brick_from_index(self.table[k], nq, ng);
                (
                    vec![codec.encode(x.left), codec.encode(x.right)],
                    vec![codec.encode(y.left), codec.encode(y.right)],
                )
            })
            .collect();
        let table = GateTable::new(2, 2, rows)?;

        let n = self.cells();
        let mut next_id = 0;
        let mut fresh = |k: usize| -> Vec<usize> {
            let ids = (next_id..next_id + k).collect();
            next_id += k;
            ids
        };
        let inputs = fresh(n);
        let mut producer = inputs.clone();
        let mut gates = Vec::with_capacity(self.rows() * self.gates_per_row());
        let mut wires = Vec::new();
        for v in 0..self.rows() {
            for l in row_gates(v, n) {
                let r = (l + 1) % n;
                let entries = fresh(2);
                let exits = fresh(2);
                wires.push(Wire {
                    from: producer[l],
                    to: entries[0],
                });
                wires.push(Wire {
                    from: producer[r],
                    to: entries[1],
                });
                producer[l] = exits[0];
                producer[r] = exits[1];
                gates.push(Gate {
                    entries,
                    exits,
                    table: 0,
                });
            }
        }
        let outputs = fresh(n);
        for (h, &o) in outputs.iter().enumerate() {
            wires.push(Wire {
                from: producer[h],
                to: o,
            });
        }
        Ok(Circuit {
            inputs,
            outputs,
            gates,
            wires,
            tables: vec![table],
        })
    }

    /// The wall as a circuit over single bits.
    pub fn to_bit_circuit(&self) -> Result<Circuit, WallError> {
        Ok(circuit::lower_to_bits(&self.to_circuit()?, self.codec().width())?)
    }

    pub fn encode_input(&self, c: &Config) -> Vec<u32> {
        let codec = self.codec();
        encode_row(c).into_iter().map(|d| codec.encode(d)).collect()
    }

    pub fn decode_output(&self, values: &[u32]) -> Result<ExtConfig, WallError> {
        let codec = self.codec();
        let row = values
            .iter()
            .map(|&v| {
                codec
                    .decode(v)
                    .ok_or_else(|| WallError::Decode(format!("bad cell code {v}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        decode_row(&row)
    }
}

/// Checks that `spec` is total and reversible and builds its wall, then runs it.
pub fn simulate_wall(spec: &TmSpec, steps: usize, c0: &Config) -> Result<Config, WallError> {
    BrickWall::build(spec, steps)?.simulate(c0)
}

/// Outcome of a simulation that may have halted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltingOutcome {
    /// Configuration after `T` steps, or the halting configuration.
    pub config: Config,
    /// Step at which the machine halted, if it did.
    pub halted_at: Option<usize>,
}

/// Simulates a reversible, possibly partial machine through the wall of the
/// total completion of its marching extension, then undoes the march.
pub fn simulate_with_halting(spec: &TmSpec, steps: usize, c0: &Config) -> Result<HaltingOutcome, WallError> {
    spec.validate_config(c0)?;
    let extended = totalize(&halting_extension(spec)?)?;
    let end = simulate_wall(&extended, steps, c0)?;
    if end.state < spec.num_states() {
        if end.tape.iter().any(|&a| a >= spec.num_symbols()) {
            return Err(WallError::Decode("marked symbol without a marched state".into()));
        }
        return Ok(HaltingOutcome {
            config: end,
            halted_at: None,
        });
    }
    let (config, marched) = recover_halting_config(spec, &end)?;
    let halted_at = steps
        .checked_sub(marched)
        .ok_or_else(|| WallError::Tm(TmError::Recovery("march longer than the run".into())))?;
    Ok(HaltingOutcome {
        config,
        halted_at: Some(halted_at),
    })
}

/// Runs `spec` directly for up to `steps` steps; the reference for
/// [`simulate_with_halting`].
pub fn direct_halting_run(spec: &TmSpec, steps: usize, c0: &Config) -> HaltingOutcome {
    let (config, halted_at) = spec.run(c0, steps);
    HaltingOutcome { config, halted_at }
}

/// Looped-tape initial configuration for a `steps`-step wall: head on cell 0,
/// `input[k]` on cell `k` (cells beyond the input are blank).
pub fn initial_config(spec: &TmSpec, steps: usize, state: usize, input: &[usize]) -> Result<Config, WallError> {
    let n = 2 * steps + 2;
    if input.len() > n {
        return Err(WallError::BadInitial(format!("input longer than {n} cells")));
    }
    let mut tape = vec![spec.blank(); n];
    tape[..input.len()].copy_from_slice(input);
    let c = Config::new(state, 0, tape);
    spec.validate_config(&c)?;
    if c.tape[steps + 1] != spec.blank() {
        return Err(WallError::BadInitial(format!("cell {} must be blank", steps + 1)));
    }
    Ok(c)
}

/// Reference step count: `steps` successors of `c`, failing if the machine
/// halts first.
pub fn iterate_successor(spec: &TmSpec, c: &Config, steps: usize) -> Option<Config> {
    (0..steps).try_fold(c.clone(), |cur, _| spec.successor(&cur))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::parse_tm;

    fn spec(text: &str) -> TmSpec {
        parse_tm(text).unwrap()
    }

    /// δ(p,a) = (q,b,+1), δ(p,b) = (r,a,-1) with a 3-state completion.
    fn mixed() -> TmSpec {
        totalize(&spec(
            "states: p q r\nalphabet: a b c\nblank: a\nstart: p\n\
             delta: p a -> q b +1\ndelta: p b -> r a -1\n",
        ))
        .unwrap()
    }

    fn cell(s: ExtState, a: usize) -> CellDatum {
        CellDatum::new(s, a)
    }

    #[test]
    fn no_head_is_copied() {
        let f = BrickFunction::new(&mixed()).unwrap();
        let x = BrickDatum::new(CellDatum::blank(0), CellDatum::blank(1));
        assert_eq!(f.apply_with_case(x).unwrap(), (x, BrickCase::Copy));
    }

    #[test]
    fn right_move_marks_success() {
        use ExtState::*;
        let f = BrickFunction::new(&mixed()).unwrap();
        let (p, q, a, b, c) = (0, 1, 0, 1, 2);
        let x = BrickDatum::new(cell(Plain(p), a), cell(None, c));
        assert_eq!(f.apply(x).unwrap(), BrickDatum::new(cell(None, b), cell(Up(q), c)));
        // q positive: a mark on the right half is garbage and gets swapped
        let g = BrickDatum::new(cell(None, b), cell(Up(q), c));
        assert_eq!(
            f.apply_with_case(g).unwrap(),
            (BrickDatum::new(cell(Up(q), c), cell(None, b)), BrickCase::Swap)
        );
        // on the left half the mark is removed
        let h = BrickDatum::new(cell(Up(q), c), cell(None, b));
        assert_eq!(f.apply(h).unwrap(), BrickDatum::new(cell(Plain(q), c), cell(None, b)));
    }

    #[test]
    fn left_move_completes_in_next_row() {
        use ExtState::*;
        let f = BrickFunction::new(&mixed()).unwrap();
        let (p, r, a, b, c, d) = (0, 2, 0, 1, 2, 2);
        // δ(p, b) = (r, a, -1)
        let x = BrickDatum::new(cell(Plain(p), b), cell(None, c));
        assert_eq!(f.apply(x).unwrap(), BrickDatum::new(cell(Down(r), a), cell(None, c)));
        let y = BrickDatum::new(cell(None, d), cell(Down(r), a));
        assert_eq!(
            f.apply_with_case(y).unwrap(),
            (
                BrickDatum::new(cell(Plain(r), d), cell(None, a)),
                BrickCase::CompleteMove
            )
        );
    }

    #[test]
    fn rejects_two_heads() {
        let f = BrickFunction::new(&mixed()).unwrap();
        let x = BrickDatum::new(cell(ExtState::Plain(0), 0), cell(ExtState::Up(1), 0));
        assert!(matches!(f.apply(x), Err(WallError::BadDatum(_))));
    }

    #[test]
    fn brick_index_round_trips() {
        let (nq, ng) = (3, 3);
        for k in 0..brick_data_count(nq, ng) {
            assert_eq!(brick_index(brick_from_index(k, nq, ng), nq, ng), k);
        }
    }

    #[test]
    fn reversible_machine_has_bijective_brick() {
        let report = check_brick_bijective(&mixed()).unwrap();
        assert!(report.bijective, "{:?}", report.collisions.first());
    }

    #[test]
    fn injectivity_violation_collides_in_execute() {
        let s = spec("states: p\nalphabet: 0 1\nblank: 0\nstart: p\ndelta: p 0 -> p 1 +1\ndelta: p 1 -> p 1 +1\n");
        let report = check_brick_bijective(&s).unwrap();
        assert!(!report.bijective);
        let f = BrickFunction::lenient(&s).unwrap();
        let (x, y, _) = report.collisions[0];
        assert_eq!(f.apply_with_case(x).unwrap().1, BrickCase::Execute);
        assert_eq!(f.apply_with_case(y).unwrap().1, BrickCase::Execute);
    }

    #[test]
    fn separability_violation_collides() {
        let s = spec(
            "states: p q\nalphabet: 0 1\nblank: 0\nstart: p\n\
             delta: p 0 -> q 0 +1\ndelta: p 1 -> q 1 -1\ndelta: q 0 -> p 0 +1\ndelta: q 1 -> p 1 +1\n",
        );
        assert!(!check_reversible(&s).separable);
        let report = check_brick_bijective(&s).unwrap();
        assert!(!report.bijective);
    }

    #[test]
    fn brick_check_needs_total_table() {
        let s = spec("states: p\nalphabet: 0 1\nblank: 0\nstart: p\ndelta: p 0 -> p 1 +1\n");
        assert!(matches!(check_brick_bijective(&s), Err(WallError::NotTotal { .. })));
    }

    #[test]
    fn wall_dimensions() {
        let s = mixed();
        let w1 = BrickWall::build(&s, 1).unwrap();
        assert_eq!((w1.cells(), w1.rows(), w1.gates_per_row()), (4, 2, 2));
        let c = w1.to_circuit().unwrap();
        assert_eq!(c.gates.len(), 4);

        let w2 = BrickWall::build(&s, 2).unwrap();
        assert_eq!((w2.cells(), w2.rows()), (6, 4));
        let c = w2.to_circuit().unwrap();
        assert_eq!(c.gates.len(), 12);
        assert_eq!(row_gates(1, 6).collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(gate_column(0, 1, 6), 5);
        assert_eq!(gate_column(5, 1, 6), 5);
        assert_eq!(gate_column(3, 0, 6), 2);
        assert!(matches!(BrickWall::build(&s, 0), Err(WallError::NoSteps)));
    }

    #[test]
    fn encode_decode_rows() {
        let c = Config::new(1, 0, vec![0, 1, 2, 0]);
        let row = encode_row(&c);
        assert_eq!(
            row,
            vec![
                cell(ExtState::Plain(1), 0),
                cell(ExtState::None, 1),
                cell(ExtState::None, 2),
                cell(ExtState::None, 0)
            ]
        );
        assert_eq!(decode_row(&row).unwrap().plain(), Some(c));
        let none: Vec<CellDatum> = row.iter().map(|d| CellDatum::blank(d.symbol)).collect();
        assert!(decode_row(&none).is_err());
        let mut two = row.clone();
        two[2].state = ExtState::Plain(0);
        assert!(decode_row(&two).is_err());
    }

    #[test]
    fn first_row_leaves_a_marked_state() {
        let s = mixed();
        let wall = BrickWall::build(&s, 2).unwrap();
        let c = Config::new(0, 0, vec![0; 6]);
        let (row, garbage) = wall.apply_row(0, &encode_row(&c)).unwrap();
        assert!(!garbage);
        let ext = decode_row(&row).unwrap();
        assert_eq!(ext.state, ExtState::Up(1));
        assert_eq!(ext.head, 1);
    }

    #[test]
    fn right_mover_three_steps() {
        let s = spec("states: q\nalphabet: 0 1\nblank: 0\nstart: q\ndelta: q 0 -> q 1 +1\ndelta: q 1 -> q 0 +1\n");
        let c0 = Config::blank(&s, 8);
        let end = simulate_wall(&s, 3, &c0).unwrap();
        assert_eq!(end, Config::new(0, 3, vec![1, 1, 1, 0, 0, 0, 0, 0]));
        assert_eq!(iterate_successor(&s, &c0, 3), Some(end));
    }

    #[test]
    fn initial_config_constraints() {
        let s = mixed();
        let wall = BrickWall::build(&s, 2).unwrap();
        let mut c = Config::new(0, 1, vec![0; 6]);
        assert!(matches!(wall.simulate(&c), Err(WallError::BadInitial(_))));
        c.head = 0;
        c.tape[3] = 1;
        assert!(matches!(wall.simulate(&c), Err(WallError::BadInitial(_))));
        assert!(initial_config(&s, 2, 0, &[1, 2, 1]).is_ok());
        assert!(initial_config(&s, 2, 0, &[1, 2, 1, 1]).is_err());
    }

    #[test]
    fn codec_widths() {
        // |Q*| = 3, |Γ| = 2 -> 2 + 1 bits
        let s = spec("states: q\nalphabet: 0 1\nblank: 0\nstart: q\n");
        let codec = CellCodec::new(&s);
        assert_eq!((codec.state_bits, codec.symbol_bits, codec.width()), (2, 1, 3));
        for code in 0..8 {
            if let Some(d) = codec.decode(code) {
                assert_eq!(codec.encode(d), code);
            }
        }
    }

    #[test]
    fn halting_at_step_zero() {
        let s = spec("states: q\nalphabet: 0 1\nblank: 0\nstart: q\ndelta: q 0 -> q 1 +1\n");
        let c0 = initial_config(&s, 3, 0, &[1]).unwrap();
        let out = simulate_with_halting(&s, 3, &c0).unwrap();
        assert_eq!(
            out,
            HaltingOutcome {
                config: c0,
                halted_at: Some(0)
            }
        );
    }
}
