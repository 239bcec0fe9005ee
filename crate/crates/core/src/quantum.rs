//! Quantum Turing machines, the quantum brick gate, and sparse simulation of
//! the quantum wall.
//!
//! A [`QtmSpec`] assigns to every `(p, a)` a vector of amplitudes over
//! `(q, b, D)`. The brick operator acts on the span of the two-cell basis
//! vectors with at most one head, which is exactly the brick-datum set of the
//! classical wall, so basis indices are shared with [`crate::brickwall`].
//!
//! States are kept sparse: a map from extended configurations (one head,
//! possibly marked) to amplitudes. Rows never leave that subspace.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brickwall::{
    brick_data_count, brick_from_index, brick_index, gate_column, BrickDatum, CellDatum, ExtConfig, ExtState,
};
use crate::linalg::{self, inner, CMatrix, C64, ONE, ZERO};
use crate::tm::{
    check_reversible, parse_header, partition_states, resolve, step_cell, Config, Direction, StatePartition, TmError,
    TmSpec,
};

/// Default tolerance for property checks.
pub const PROPERTY_TOL: f64 = 1e-9;
/// Default tolerance for end-to-end comparisons over `T` steps.
pub const SIMULATION_TOL: f64 = 1e-8;
/// Brick-operator entries below this modulus are treated as rounding noise
/// when rows are applied.
pub const ENTRY_CUTOFF: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Tm(#[from] TmError),
    #[error("duplicate amplitude for {0}")]
    DuplicateAmplitude(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("transition amplitudes fail: {}", .0.failing().join(", "))]
    DeltaProperties(Box<DeltaReport>),
    #[error("matrix is not unitary (max |A†A − I| = {0:e})")]
    NotUnitary(f64),
    #[error("matrix has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("state key {0} is not a plain configuration")]
    NotPlain(String),
    #[error("state key has no head on its row: {0}")]
    BadKey(String),
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("invalid initial state: {0}")]
    BadInitial(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// One nonzero entry `δ_pa(q, b, D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    pub state: usize,
    pub symbol: usize,
    pub dir: Direction,
    pub amp: C64,
}

/// Quantum machine: names come from a classical signature (whose own
/// transition table is unused), amplitudes are stored per `(p, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QtmSpec {
    signature: TmSpec,
    partition: StatePartition,
    delta: Vec<Vec<Amplitude>>,
}

impl QtmSpec {
    /// Zero amplitudes, every state positive.
    pub fn new(signature: &TmSpec) -> Self {
        let sig = strip(signature);
        QtmSpec {
            partition: StatePartition::from_classes(vec![Direction::Right; sig.num_states()]),
            delta: vec![Vec::new(); sig.num_states() * sig.num_symbols()],
            signature: sig,
        }
    }

    pub fn signature(&self) -> &TmSpec {
        &self.signature
    }

    pub fn partition(&self) -> &StatePartition {
        &self.partition
    }

    pub fn set_partition(&mut self, partition: StatePartition) {
        assert_eq!(partition.len(), self.num_states());
        self.partition = partition;
    }

    pub fn num_states(&self) -> usize {
        self.signature.num_states()
    }

    pub fn num_symbols(&self) -> usize {
        self.signature.num_symbols()
    }

    /// Nonzero entries of `δ_pa`, ordered by `(q, b, D)`.
    pub fn amplitudes(&self, p: usize, a: usize) -> &[Amplitude] {
        &self.delta[p * self.num_symbols() + a]
    }

    pub fn amplitude(&self, p: usize, a: usize, q: usize, b: usize, dir: Direction) -> C64 {
        self.amplitudes(p, a)
            .iter()
            .find(|e| (e.state, e.symbol, e.dir) == (q, b, dir))
            .map_or(ZERO, |e| e.amp)
    }

    /// Sets `δ_pa(q, b, D)`; fails if it was already set.
    pub fn add_amplitude(
        &mut self,
        p: usize,
        a: usize,
        q: usize,
        b: usize,
        dir: Direction,
        amp: C64,
    ) -> Result<(), QuantumError> {
        let (nq, ng) = (self.num_states(), self.num_symbols());
        if p >= nq || q >= nq || a >= ng || b >= ng {
            return Err(TmError::Invalid("amplitude index out of range".into()).into());
        }
        let entries = &mut self.delta[p * ng + a];
        let key = (q, b, dir);
        match entries.binary_search_by(|e| (e.state, e.symbol, e.dir).cmp(&key)) {
            Ok(_) => Err(QuantumError::DuplicateAmplitude(format!(
                "{} {} -> {} {} {}",
                self.signature.state_name(p),
                self.signature.symbol_name(a),
                self.signature.state_name(q),
                self.signature.symbol_name(b),
                dir
            ))),
            Err(pos) => {
                entries.insert(
                    pos,
                    Amplitude {
                        state: q,
                        symbol: b,
                        dir,
                        amp,
                    },
                );
                Ok(())
            }
        }
    }

    /// Amplitude-one embedding of a total reversible classical machine.
    pub fn from_classical(tm: &TmSpec) -> Result<Self, QuantumError> {
        let report = check_reversible(tm);
        if !report.is_reversible() {
            return Err(TmError::NotReversible(report).into());
        }
        if !tm.is_total() {
            return Err(TmError::Invalid("classical embedding needs a total table".into()).into());
        }
        let mut q = QtmSpec::new(tm);
        q.partition = partition_states(tm)?;
        for (p, a, t) in tm.transitions() {
            q.add_amplitude(p, a, t.state, t.symbol, t.dir, ONE)?;
        }
        Ok(q)
    }

    /// The classical machine, if every `δ_pa` is a single amplitude exactly 1.
    pub fn to_classical(&self) -> Option<TmSpec> {
        let mut tm = self.signature.clone();
        let ng = self.num_symbols();
        for (k, entries) in self.delta.iter().enumerate() {
            match entries.as_slice() {
                [e] if e.amp == ONE => tm
                    .add_transition(k / ng, k % ng, crate::tm::Transition::new(e.state, e.symbol, e.dir))
                    .ok()?,
                _ => return None,
            }
        }
        Some(tm)
    }

    /// `δ_pa` as a dense vector indexed by `(q·|Γ| + b)·2 + [D = +1]`.
    fn dense_delta(&self, p: usize, a: usize) -> Vec<C64> {
        let mut v = vec![ZERO; 2 * self.num_states() * self.num_symbols()];
        for e in self.amplitudes(p, a) {
            v[(e.state * self.num_symbols() + e.symbol) * 2 + usize::from(e.dir == Direction::Right)] = e.amp;
        }
        v
    }

    /// `Σ_q δ_pa(q, b, D)|q⟩`.
    pub fn move_vector(&self, p: usize, a: usize, b: usize, dir: Direction) -> Vec<C64> {
        let mut v = vec![ZERO; self.num_states()];
        for e in self.amplitudes(p, a).iter().filter(|e| e.symbol == b && e.dir == dir) {
            v[e.state] = e.amp;
        }
        v
    }

    /// Text form accepted by [`parse_qtm`]. Amplitudes are written with the
    /// shortest decimal that reads back to the same double.
    pub fn to_text(&self) -> String {
        let sig = &self.signature;
        let mut out = String::new();
        out.push_str(&format!("states: {}\n", sig.states().join(" ")));
        out.push_str(&format!("alphabet: {}\n", sig.alphabet().join(" ")));
        out.push_str(&format!("blank: {}\n", sig.symbol_name(sig.blank())));
        out.push_str(&format!("start: {}\n", sig.state_name(sig.start())));
        for q in 0..self.num_states() {
            out.push_str(&format!(
                "partition: {} -> {}\n",
                sig.state_name(q),
                self.partition.class(q)
            ));
        }
        for p in 0..self.num_states() {
            for a in 0..self.num_symbols() {
                for e in self.amplitudes(p, a) {
                    out.push_str(&format!(
                        "amp: {} {} -> {} {} {} {:?} {:?}\n",
                        sig.state_name(p),
                        sig.symbol_name(a),
                        sig.state_name(e.state),
                        sig.symbol_name(e.symbol),
                        e.dir,
                        e.amp.re,
                        e.amp.im
                    ));
                }
            }
        }
        out
    }
}

fn strip(tm: &TmSpec) -> TmSpec {
    TmSpec::new(
        tm.states(),
        tm.alphabet(),
        tm.symbol_name(tm.blank()),
        tm.state_name(tm.start()),
    )
    .expect("names of a valid machine")
}

/// Parses the quantum machine format: the classical header, then
///
/// ```text
/// partition: q -> +1
/// amp: p a -> q b D re im
/// ```
///
/// States without a `partition:` line take the direction of the first
/// nonzero amplitude entering them, or `+1`.
pub fn parse_qtm(text: &str) -> Result<QtmSpec, QuantumError> {
    let header = parse_header(text, &["partition", "amp"])?;
    let signature = header.build()?;
    let mut spec = QtmSpec::new(&signature);
    let mut declared: Vec<Option<Direction>> = vec![None; signature.num_states()];
    let syntax = |line: usize, message: &str| QuantumError::Syntax {
        line,
        message: message.to_string(),
    };

    for ((line, body), key) in header.rest.iter().zip(&header.rest_keys) {
        let line = *line;
        let (lhs, rhs) = body.split_once("->").ok_or_else(|| syntax(line, "expected `->`"))?;
        let lhs: Vec<&str> = lhs.split_whitespace().collect();
        let rhs: Vec<&str> = rhs.split_whitespace().collect();
        let dir_of = |d: &str| Direction::parse(d).ok_or_else(|| syntax(line, "direction must be +1 or -1"));
        match key.as_str() {
            "partition" => {
                let ([q], [d]) = (lhs.as_slice(), rhs.as_slice()) else {
                    return Err(syntax(line, "expected `partition: q -> D`"));
                };
                let q = resolve(signature.states(), q, line, "state")?;
                if declared[q].replace(dir_of(d)?).is_some() {
                    return Err(syntax(line, "state partitioned twice"));
                }
            }
            _ => {
                let ([p, a], [q, b, d, re, im]) = (lhs.as_slice(), rhs.as_slice()) else {
                    return Err(syntax(line, "expected `amp: p a -> q b D re im`"));
                };
                let p = resolve(signature.states(), p, line, "state")?;
                let a = resolve(signature.alphabet(), a, line, "symbol")?;
                let q = resolve(signature.states(), q, line, "state")?;
                let b = resolve(signature.alphabet(), b, line, "symbol")?;
                let parse_f = |s: &str| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| syntax(line, &format!("bad number `{s}`")))
                };
                let amp = C64::new(parse_f(re)?, parse_f(im)?);
                spec.add_amplitude(p, a, q, b, dir_of(d)?, amp)?;
            }
        }
    }

    let mut classes = vec![Direction::Right; signature.num_states()];
    for q in 0..signature.num_states() {
        classes[q] = declared[q].unwrap_or_else(|| {
            spec.delta
                .iter()
                .flatten()
                .find(|e| e.state == q && e.amp != ZERO)
                .map_or(Direction::Right, |e| e.dir)
        });
    }
    spec.partition = StatePartition::from_classes(classes);
    Ok(spec)
}

/// Worst deviations of the three amplitude conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub tolerance: f64,
    pub unit_length: bool,
    pub orthogonality: bool,
    pub separability: bool,
    /// max over `(p, a)` of `| |δ_pa|² − 1 |`
    pub unit_length_deviation: f64,
    /// max over distinct pairs of `|⟨δ_p₁a₁|δ_p₂a₂⟩|`
    pub orthogonality_deviation: f64,
    /// max of `|⟨L_p₁a₁b₁|R_p₂a₂b₂⟩|`
    pub separability_deviation: f64,
    /// `(p, a)` with the worst unit-length deviation
    pub worst_unit_length: (usize, usize),
}

impl DeltaReport {
    pub fn passes(&self) -> bool {
        self.unit_length && self.orthogonality && self.separability
    }

    pub fn failing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.unit_length {
            out.push("unit_length");
        }
        if !self.orthogonality {
            out.push("orthogonality");
        }
        if !self.separability {
            out.push("separability");
        }
        out
    }
}

/// Unit length, orthogonality and separability of the amplitude vectors.
pub fn check_delta_properties(spec: &QtmSpec, tol: f64) -> DeltaReport {
    let (nq, ng) = (spec.num_states(), spec.num_symbols());
    let pairs: Vec<(usize, usize)> = (0..nq).flat_map(|p| (0..ng).map(move |a| (p, a))).collect();
    let dense: Vec<Vec<C64>> = pairs.iter().map(|&(p, a)| spec.dense_delta(p, a)).collect();

    let mut unit = (0.0f64, (0, 0));
    let mut ortho = 0.0f64;
    for (i, v) in dense.iter().enumerate() {
        let dev = (linalg::norm(v).powi(2) - 1.0).abs();
        if dev > unit.0 {
            unit = (dev, pairs[i]);
        }
        for w in &dense[i + 1..] {
            ortho = ortho.max(inner(v, w).norm());
        }
    }

    let moves = |dir| -> Vec<Vec<C64>> {
        pairs
            .iter()
            .flat_map(|&(p, a)| (0..ng).map(move |b| (p, a, b)))
            .map(|(p, a, b)| spec.move_vector(p, a, b, dir))
            .collect()
    };
    let (lefts, rights) = (moves(Direction::Left), moves(Direction::Right));
    let mut sep = 0.0f64;
    for l in &lefts {
        for r in &rights {
            sep = sep.max(inner(l, r).norm());
        }
    }

    DeltaReport {
        tolerance: tol,
        unit_length: unit.0 <= tol,
        orthogonality: ortho <= tol,
        separability: sep <= tol,
        unit_length_deviation: unit.0,
        orthogonality_deviation: ortho,
        separability_deviation: sep,
        worst_unit_length: unit.1,
    }
}

/// Quantum machine whose `δ_pa(q, b, D)` is the `((q, b), (p, a))` entry of
/// `alpha` when `q` is in class `D`, and zero otherwise. Rows and columns of
/// `alpha` are indexed by `state·|Γ| + symbol`.
pub fn gen_qtm_from_unitary(
    signature: &TmSpec,
    alpha: &CMatrix,
    partition: &StatePartition,
    tol: f64,
) -> Result<QtmSpec, QuantumError> {
    let (nq, ng) = (signature.num_states(), signature.num_symbols());
    let dim = nq * ng;
    if alpha.rows() != dim || alpha.cols() != dim {
        return Err(QuantumError::Dimension {
            expected: dim,
            got: alpha.rows().max(alpha.cols()),
        });
    }
    if partition.len() != nq {
        return Err(TmError::Invalid("partition size differs from state count".into()).into());
    }
    let (dev, _) = alpha.unitarity_deviation();
    if dev > tol {
        return Err(QuantumError::NotUnitary(dev));
    }
    let mut spec = QtmSpec::new(signature);
    spec.partition = partition.clone();
    for p in 0..nq {
        for a in 0..ng {
            for q in 0..nq {
                for b in 0..ng {
                    let z = alpha[(q * ng + b, p * ng + a)];
                    if z != ZERO {
                        spec.add_amplitude(p, a, q, b, partition.class(q), z)?;
                    }
                }
            }
        }
    }
    Ok(spec)
}

/// The brick gate `U` as a matrix on the brick basis, with the projectors
/// onto the left-move and right-move subspaces it was built from.
#[derive(Debug, Clone)]
pub struct BrickOperator {
    states: usize,
    symbols: usize,
    matrix: CMatrix,
    /// Nonzero entries of each column, for row application.
    columns: Vec<Vec<(usize, C64)>>,
    left_basis: Vec<Vec<C64>>,
    right_basis: Vec<Vec<C64>>,
    left_projector: CMatrix,
    right_projector: CMatrix,
}

impl BrickOperator {
    /// Checks the amplitude conditions first.
    pub fn build(spec: &QtmSpec, tol: f64) -> Result<Self, QuantumError> {
        let report = check_delta_properties(spec, tol);
        if !report.passes() {
            return Err(QuantumError::DeltaProperties(Box::new(report)));
        }
        Ok(Self::build_unchecked(spec, tol))
    }

    /// Builds `U` column by column whatever the amplitudes are; for
    /// amplitudes violating the conditions the result is not unitary.
    pub fn build_unchecked(spec: &QtmSpec, tol: f64) -> Self {
        use ExtState::{Down, None as Free, Plain, Up};
        let (nq, ng) = (spec.num_states(), spec.num_symbols());
        let dim = brick_data_count(nq, ng);

        let generators = |dir| -> Vec<Vec<C64>> {
            (0..nq)
                .flat_map(|p| (0..ng).flat_map(move |a| (0..ng).map(move |b| (p, a, b))))
                .map(|(p, a, b)| spec.move_vector(p, a, b, dir))
                .collect()
        };
        let left_basis = linalg::orthonormal_basis(&generators(Direction::Left), tol);
        let right_basis = linalg::orthonormal_basis(&generators(Direction::Right), tol);
        let pl = linalg::projector(&left_basis, nq);
        let pr = linalg::projector(&right_basis, nq);
        let id = CMatrix::identity(nq);
        let (ql, qr) = (id.sub(&pl), id.sub(&pr));

        let cell = CellDatum::new;
        let mut matrix = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let x = brick_from_index(j, nq, ng);
            let mut put = |y: BrickDatum, z: C64| {
                if z != ZERO {
                    matrix[(brick_index(y, nq, ng), j)] += z;
                }
            };
            let (l, r) = (x.left, x.right);
            // `split(P, Q, q, on, off)`: the P|q⟩ part goes through `on`, the rest through `off`
            let mut split = |proj: &CMatrix,
                             rest: &CMatrix,
                             q: usize,
                             on: &dyn Fn(usize) -> BrickDatum,
                             off: &dyn Fn(usize) -> BrickDatum| {
                for s in 0..nq {
                    put(on(s), proj[(s, q)]);
                    put(off(s), rest[(s, q)]);
                }
            };
            match (l.state, r.state) {
                (Free, Free) => put(x, ONE),
                (Plain(p), Free) => {
                    for e in spec.amplitudes(p, l.symbol) {
                        let y = match e.dir {
                            Direction::Right => BrickDatum::new(cell(Free, e.symbol), cell(Up(e.state), r.symbol)),
                            Direction::Left => BrickDatum::new(cell(Down(e.state), e.symbol), cell(Free, r.symbol)),
                        };
                        put(y, e.amp);
                    }
                }
                (Free, Plain(p)) => {
                    for e in spec.amplitudes(p, r.symbol) {
                        let y = match e.dir {
                            Direction::Left => BrickDatum::new(cell(Up(e.state), l.symbol), cell(Free, e.symbol)),
                            Direction::Right => BrickDatum::new(cell(Free, l.symbol), cell(Down(e.state), e.symbol)),
                        };
                        put(y, e.amp);
                    }
                }
                (Free, Up(q)) => split(&pl, &ql, q, &|s| BrickDatum::new(l, cell(Plain(s), r.symbol)), &|s| {
                    BrickDatum::new(cell(Up(s), r.symbol), l)
                }),
                (Up(q), Free) => split(&pr, &qr, q, &|s| BrickDatum::new(cell(Plain(s), l.symbol), r), &|s| {
                    BrickDatum::new(r, cell(Up(s), l.symbol))
                }),
                (Free, Down(q)) => split(
                    &pl,
                    &ql,
                    q,
                    &|s| BrickDatum::new(cell(Plain(s), l.symbol), cell(Free, r.symbol)),
                    &|s| BrickDatum::new(cell(Down(s), r.symbol), l),
                ),
                (Down(q), Free) => split(
                    &pr,
                    &qr,
                    q,
                    &|s| BrickDatum::new(cell(Free, l.symbol), cell(Plain(s), r.symbol)),
                    &|s| BrickDatum::new(r, cell(Down(s), l.symbol)),
                ),
                _ => unreachable!("enumerated brick data have at most one head"),
            }
        }

        let columns = (0..dim)
            .map(|j| {
                (0..dim)
                    .filter_map(|i| {
                        let z = matrix[(i, j)];
                        (z.norm() >= ENTRY_CUTOFF).then_some((i, z))
                    })
                    .collect()
            })
            .collect();
        BrickOperator {
            states: nq,
            symbols: ng,
            matrix,
            columns,
            left_basis,
            right_basis,
            left_projector: pl,
            right_projector: pr,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn left_projector(&self) -> &CMatrix {
        &self.left_projector
    }

    pub fn right_projector(&self) -> &CMatrix {
        &self.right_projector
    }

    pub fn left_rank(&self) -> usize {
        self.left_basis.len()
    }

    pub fn right_rank(&self) -> usize {
        self.right_basis.len()
    }

    /// `U` applied to one basis vector.
    pub fn column(&self, x: BrickDatum) -> &[(usize, C64)] {
        &self.columns[brick_index(x, self.states, self.symbols)]
    }
}

pub fn build_brick_operator(spec: &QtmSpec, tol: f64) -> Result<BrickOperator, QuantumError> {
    BrickOperator::build(spec, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitarityReport {
    pub unitary: bool,
    /// max entry of `|U†U − I|`
    pub max_deviation: f64,
    /// brick-basis indices of that entry
    pub worst_entry: (usize, usize),
    /// max of `|P_L² − P_L|`, `|P_R² − P_R|`, `|P_L P_R|`
    pub projector_deviation: f64,
}

pub fn check_unitary(op: &BrickOperator, tol: f64) -> UnitarityReport {
    let (dev, worst) = op.matrix.unitarity_deviation();
    let (pl, pr) = (&op.left_projector, &op.right_projector);
    let proj_dev = [
        pl.matmul(pl).sub(pl).max_abs().0,
        pr.matmul(pr).sub(pr).max_abs().0,
        pl.matmul(pr).max_abs().0,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    UnitarityReport {
        unitary: dev <= tol,
        max_deviation: dev,
        worst_entry: worst,
        projector_deviation: proj_dev,
    }
}

/// Sparse superposition of one-head extended configurations on `cells`
/// cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QState {
    amplitudes: BTreeMap<ExtConfig, C64>,
}

impl QState {
    pub fn new() -> Self {
        QState::default()
    }

    pub fn basis(c: &Config) -> Self {
        let mut s = QState::new();
        s.add(ExtConfig::from(c), ONE);
        s
    }

    pub fn add(&mut self, key: ExtConfig, amp: C64) {
        *self.amplitudes.entry(key).or_insert(ZERO) += amp;
    }

    pub fn get(&self, key: &ExtConfig) -> C64 {
        self.amplitudes.get(key).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ExtConfig, &C64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, k: C64) -> QState {
        QState {
            amplitudes: self.amplitudes.iter().map(|(key, &z)| (key.clone(), z * k)).collect(),
        }
    }

    pub fn plus(&self, other: &QState) -> QState {
        let mut out = self.clone();
        for (k, &z) in other.iter() {
            out.add(k.clone(), z);
        }
        out
    }

    /// L2 distance.
    pub fn distance(&self, other: &QState) -> f64 {
        self.plus(&other.scaled(-ONE)).norm()
    }

    /// Total squared amplitude on marked (non-plain) keys.
    pub fn marked_weight(&self) -> f64 {
        self.amplitudes
            .iter()
            .filter(|(k, _)| !matches!(k.state, ExtState::Plain(_)))
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Drops entries with modulus below `cutoff`.
    pub fn pruned(mut self, cutoff: f64) -> QState {
        self.amplitudes.retain(|_, z| z.norm() >= cutoff);
        self
    }
}

/// One step of the machine applied directly: `|p,i,X⟩ ↦ Σ δ_pX(i)(q,b,D)|q, i+D, X(b@i)⟩`.
pub fn apply_um(spec: &QtmSpec, s: &QState) -> Result<QState, QuantumError> {
    let mut out = QState::new();
    for (key, &z) in s.iter() {
        let ExtState::Plain(p) = key.state else {
            return Err(QuantumError::NotPlain(format!("{key:?}")));
        };
        let n = key.tape.len();
        if key.head >= n || p >= spec.num_states() {
            return Err(QuantumError::BadKey(format!("{key:?}")));
        }
        let a = key.tape[key.head];
        for e in spec.amplitudes(p, a) {
            let mut tape = key.tape.clone();
            tape[key.head] = e.symbol;
            out.add(
                ExtConfig {
                    state: ExtState::Plain(e.state),
                    head: step_cell(key.head, e.dir, n),
                    tape,
                },
                z * e.amp,
            );
        }
    }
    Ok(out)
}

/// Applies every gate of row `row` (even rows start at column 0, odd rows at
/// column 1 and wrap). Only the gate holding the head acts nontrivially.
pub fn apply_row(op: &BrickOperator, row: usize, s: &QState) -> Result<QState, QuantumError> {
    let mut out = QState::new();
    for (key, &z) in s.iter() {
        let n = key.tape.len();
        if key.head >= n || !key.state.is_scanned() || n % 2 != 0 {
            return Err(QuantumError::BadKey(format!("{key:?}")));
        }
        let l = gate_column(key.head, row, n);
        let r = (l + 1) % n;
        let (mut left, mut right) = (CellDatum::blank(key.tape[l]), CellDatum::blank(key.tape[r]));
        if key.head == l {
            left.state = key.state;
        } else {
            right.state = key.state;
        }
        let x = BrickDatum::new(left, right);
        for &(i, u) in op.column(x) {
            let y = brick_from_index(i, op.states, op.symbols);
            let mut tape = key.tape.clone();
            tape[l] = y.left.symbol;
            tape[r] = y.right.symbol;
            let (state, head) = if y.left.state.is_scanned() {
                (y.left.state, l)
            } else {
                (y.right.state, r)
            };
            out.add(ExtConfig { state, head, tape }, z * u);
        }
    }
    Ok(out)
}

/// Result of running the quantum wall.
#[derive(Debug, Clone)]
pub struct QuantumRun {
    pub state: QState,
    /// Norm after each row.
    pub row_norms: Vec<f64>,
}

/// Checks that `s0` is a unit superposition of plain configurations on
/// `2T + 2` cells with the head on cell 0 and cell `T + 1` blank.
pub fn check_initial_state(spec: &QtmSpec, steps: usize, s0: &QState, tol: f64) -> Result<(), QuantumError> {
    let n = 2 * steps + 2;
    for (key, _) in s0.iter() {
        let bad = |m: &str| QuantumError::BadInitial(format!("{m}: {key:?}"));
        if !matches!(key.state, ExtState::Plain(p) if p < spec.num_states()) {
            return Err(bad("not a plain state"));
        }
        if key.tape.len() != n {
            return Err(bad(&format!("tape must have {n} cells")));
        }
        if key.head != 0 {
            return Err(bad("head must start on cell 0"));
        }
        if key.tape.iter().any(|&a| a >= spec.num_symbols()) {
            return Err(bad("symbol out of range"));
        }
        if key.tape[steps + 1] != spec.signature().blank() {
            return Err(bad("cell T+1 must be blank"));
        }
    }
    let norm = s0.norm();
    if (norm - 1.0).abs() > tol {
        return Err(QuantumError::NotNormalized(norm));
    }
    Ok(())
}

/// Runs the `2T` rows of the quantum wall on `s0`. After every second row
/// the weight on marked keys must be within `tol`.
pub fn simulate_quantum_wall(
    spec: &QtmSpec,
    op: &BrickOperator,
    steps: usize,
    s0: &QState,
    tol: f64,
) -> Result<QuantumRun, QuantumError> {
    if steps < 1 {
        return Err(QuantumError::BadInitial("at least one step".into()));
    }
    check_initial_state(spec, steps, s0, tol)?;
    let mut s = s0.clone();
    let mut row_norms = Vec::with_capacity(2 * steps);
    for v in 0..2 * steps {
        s = apply_row(op, v, &s)?.pruned(ENTRY_CUTOFF);
        row_norms.push(s.norm());
        if v % 2 == 1 && s.marked_weight() > tol {
            return Err(QuantumError::Row {
                row: v,
                message: format!("weight {:e} left on marked states", s.marked_weight()),
            });
        }
    }
    Ok(QuantumRun { state: s, row_norms })
}

/// `(U_M)^T s0` by direct evolution.
pub fn evolve_direct(spec: &QtmSpec, steps: usize, s0: &QState) -> Result<QState, QuantumError> {
    (0..steps).try_fold(s0.clone(), |s, _| apply_um(spec, &s))
}

/// A random unit superposition of up to `terms` distinct plain
/// configurations that are valid wall inputs for `steps` steps.
pub fn random_initial_state<R: Rng + ?Sized>(spec: &QtmSpec, steps: usize, terms: usize, rng: &mut R) -> QState {
    let n = 2 * steps + 2;
    let (nq, ng) = (spec.num_states(), spec.num_symbols());
    let blank = spec.signature().blank();
    let mut s = QState::new();
    for _ in 0..terms.max(1) {
        let mut tape: Vec<usize> = (0..n).map(|_| rng.random_range(0..ng)).collect();
        tape[steps + 1] = blank;
        let key = ExtConfig {
            state: ExtState::Plain(rng.random_range(0..nq)),
            head: 0,
            tape,
        };
        let z = linalg::random_gaussian_vector(1, rng)[0];
        s.add(key, z);
    }
    let norm = s.norm();
    s.scaled(C64::new(1.0 / norm, 0.0))
}

/// Random state split into `neg`/`pos` classes, each state independently.
pub fn random_partition<R: Rng + ?Sized>(states: usize, rng: &mut R) -> StatePartition {
    StatePartition::from_classes(
        (0..states)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Direction::Left
                } else {
                    Direction::Right
                }
            })
            .collect(),
    )
}
