//! Syntactic circuits with table-defined gates.
//!
//! Nodes (input nodes, output nodes, gate entries and gate exits) share one id
//! space. Producers are input nodes and gate exits; consumers are gate entries
//! and output nodes. Every gate evaluates a [`GateTable`] over small integer
//! values; a bit circuit is the case where every value is 0 or 1.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("circuit is not well formed: {0:?}")]
    Invalid(Vec<Issue>),
    #[error("gate table: {0}")]
    Table(String),
    #[error("gate {gate} has no row for input {input:?}")]
    OutsideAlphabet { gate: usize, input: Vec<u32> },
    #[error("expected {expected} input values, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("invalid schedule: {0}")]
    Schedule(String),
}

/// A gate function given by its full list of rows. Rows are kept sorted by
/// input tuple; the inputs listed are exactly the admissible entry values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateTable {
    pub entries: usize,
    pub exits: usize,
    pub rows: Vec<(Vec<u32>, Vec<u32>)>,
}

impl GateTable {
    pub fn new(entries: usize, exits: usize, mut rows: Vec<(Vec<u32>, Vec<u32>)>) -> Result<Self, CircuitError> {
        if let Some((i, o)) = rows.iter().find(|(i, o)| i.len() != entries || o.len() != exits) {
            return Err(CircuitError::Table(format!("row {i:?} -> {o:?} has the wrong arity")));
        }
        rows.sort();
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(CircuitError::Table(format!("input {:?} listed twice", w[0].0)));
        }
        Ok(GateTable { entries, exits, rows })
    }

    pub fn apply(&self, input: &[u32]) -> Option<&[u32]> {
        self.rows
            .binary_search_by(|(i, _)| i.as_slice().cmp(input))
            .ok()
            .map(|k| self.rows[k].1.as_slice())
    }

    pub fn is_sorted(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].0 < w[1].0)
    }

    /// `None` when the table permutes its own domain; otherwise a witness.
    pub fn bijection_witness(&self) -> Option<TableDefect> {
        if self.entries != self.exits {
            return Some(TableDefect::ArityMismatch);
        }
        let mut images: HashMap<&[u32], &[u32]> = HashMap::new();
        for (i, o) in &self.rows {
            if let Some(prev) = images.insert(o.as_slice(), i.as_slice()) {
                return Some(TableDefect::Collision {
                    inputs: [prev.to_vec(), i.clone()],
                    output: o.clone(),
                });
            }
        }
        for (_, o) in &self.rows {
            if self.apply(o).is_none() {
                return Some(TableDefect::OutsideDomain { output: o.clone() });
            }
        }
        None
    }
}

/// Why a gate table is not a bijection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TableDefect {
    ArityMismatch,
    Collision { inputs: [Vec<u32>; 2], output: Vec<u32> },
    OutsideDomain { output: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub entries: Vec<NodeId>,
    pub exits: Vec<NodeId>,
    /// Index into [`Circuit::tables`].
    pub table: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Wire {
    pub from: NodeId,
    pub to: NodeId,
}

/// A syntactic circuit together with its gate functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
    pub gates: Vec<Gate>,
    pub wires: Vec<Wire>,
    pub tables: Vec<GateTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Input(usize),
    Output(usize),
    Entry(usize, usize),
    Exit(usize, usize),
}

impl Role {
    fn is_producer(self) -> bool {
        matches!(self, Role::Input(_) | Role::Exit(..))
    }
}

/// One violated well-formedness condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Issue {
    DuplicateNode { node: NodeId },
    EmptyGateSide { gate: usize },
    UnknownTable { gate: usize },
    TableArity { gate: usize },
    UnsortedTable { table: usize },
    UnknownNode { wire: Wire },
    WireFromConsumer { wire: Wire },
    WireToProducer { wire: Wire },
    ConsumerFanIn { node: NodeId, wires: usize },
    UnusedProducer { node: NodeId },
    Cycle { gates: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Gate bouts, fired in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub bouts: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.bouts.len()
    }
}

struct Wiring {
    roles: HashMap<NodeId, Role>,
    /// producer feeding each consumer
    source: HashMap<NodeId, NodeId>,
    /// direct prerequisites of each gate
    prereqs: Vec<Vec<usize>>,
}

fn roles(c: &Circuit, issues: &mut Vec<Issue>) -> HashMap<NodeId, Role> {
    let mut roles = HashMap::new();
    let mut claim = |node: NodeId, role: Role, issues: &mut Vec<Issue>| {
        if roles.insert(node, role).is_some() {
            issues.push(Issue::DuplicateNode { node });
        }
    };
    for (k, &n) in c.inputs.iter().enumerate() {
        claim(n, Role::Input(k), issues);
    }
    for (k, &n) in c.outputs.iter().enumerate() {
        claim(n, Role::Output(k), issues);
    }
    for (g, gate) in c.gates.iter().enumerate() {
        for (k, &n) in gate.entries.iter().enumerate() {
            claim(n, Role::Entry(g, k), issues);
        }
        for (k, &n) in gate.exits.iter().enumerate() {
            claim(n, Role::Exit(g, k), issues);
        }
    }
    roles
}

fn analyze(c: &Circuit, issues: &mut Vec<Issue>) -> Wiring {
    let roles = roles(c, issues);
    let mut source = HashMap::new();
    let mut fan_in: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut fan_out: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut prereqs = vec![Vec::new(); c.gates.len()];

    for &wire in &c.wires {
        let (Some(&from), Some(&to)) = (roles.get(&wire.from), roles.get(&wire.to)) else {
            issues.push(Issue::UnknownNode { wire });
            continue;
        };
        if !from.is_producer() {
            issues.push(Issue::WireFromConsumer { wire });
            continue;
        }
        if to.is_producer() {
            issues.push(Issue::WireToProducer { wire });
            continue;
        }
        *fan_in.entry(wire.to).or_default() += 1;
        *fan_out.entry(wire.from).or_default() += 1;
        source.insert(wire.to, wire.from);
        if let (Role::Exit(g, _), Role::Entry(h, _)) = (from, to) {
            if !prereqs[h].contains(&g) {
                prereqs[h].push(g);
            }
        }
    }

    let mut consumers: Vec<NodeId> = c.outputs.clone();
    consumers.extend(c.gates.iter().flat_map(|g| g.entries.iter().copied()));
    consumers.sort_unstable();
    consumers.dedup();
    for node in consumers {
        let wires = fan_in.get(&node).copied().unwrap_or(0);
        if wires != 1 {
            issues.push(Issue::ConsumerFanIn { node, wires });
        }
    }
    let mut producers: Vec<NodeId> = c.inputs.clone();
    producers.extend(c.gates.iter().flat_map(|g| g.exits.iter().copied()));
    producers.sort_unstable();
    producers.dedup();
    for node in producers {
        if !fan_out.contains_key(&node) {
            issues.push(Issue::UnusedProducer { node });
        }
    }

    Wiring { roles, source, prereqs }
}

/// Kahn layering; also returns the gates left on cycles.
fn layers(prereqs: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = prereqs.len();
    let mut pending: Vec<usize> = prereqs.iter().map(Vec::len).collect();
    let mut dependents = vec![Vec::new(); n];
    for (g, ps) in prereqs.iter().enumerate() {
        for &p in ps {
            dependents[p].push(g);
        }
    }
    let mut bouts = Vec::new();
    let mut ready: Vec<usize> = (0..n).filter(|&g| pending[g] == 0).collect();
    let mut placed = 0;
    while !ready.is_empty() {
        ready.sort_unstable();
        let mut next = Vec::new();
        for &g in &ready {
            for &d in &dependents[g] {
                pending[d] -= 1;
                if pending[d] == 0 {
                    next.push(d);
                }
            }
        }
        placed += ready.len();
        bouts.push(std::mem::replace(&mut ready, next));
    }
    let stuck = if placed < n {
        (0..n).filter(|&g| pending[g] > 0).collect()
    } else {
        Vec::new()
    };
    (bouts, stuck)
}

/// Checks every well-formedness condition and lists each violation.
pub fn validate(c: &Circuit) -> ValidationReport {
    let mut issues = Vec::new();
    for (g, gate) in c.gates.iter().enumerate() {
        if gate.entries.is_empty() || gate.exits.is_empty() {
            issues.push(Issue::EmptyGateSide { gate: g });
        }
        match c.tables.get(gate.table) {
            None => issues.push(Issue::UnknownTable { gate: g }),
            Some(t) if t.entries != gate.entries.len() || t.exits != gate.exits.len() => {
                issues.push(Issue::TableArity { gate: g })
            }
            Some(_) => {}
        }
    }
    for (k, t) in c.tables.iter().enumerate() {
        if !t.is_sorted() {
            issues.push(Issue::UnsortedTable { table: k });
        }
    }
    let wiring = analyze(c, &mut issues);
    let (_, stuck) = layers(&wiring.prereqs);
    if !stuck.is_empty() {
        issues.push(Issue::Cycle { gates: stuck });
    }
    ValidationReport { issues }
}

fn checked_wiring(c: &Circuit) -> Result<Wiring, CircuitError> {
    let report = validate(c);
    if !report.is_valid() {
        return Err(CircuitError::Invalid(report.issues));
    }
    let mut scratch = Vec::new();
    Ok(analyze(c, &mut scratch))
}

/// The schedule that fires each gate as soon as all its prerequisites have
/// fired. Gates within a bout are listed in index order.
pub fn eager_schedule(c: &Circuit) -> Result<Schedule, CircuitError> {
    let wiring = checked_wiring(c)?;
    let (bouts, _) = layers(&wiring.prereqs);
    Ok(Schedule { bouts })
}

/// Checks that `s` is a schedule: disjoint nonempty antichains covering every
/// gate once, each gate after all of its prerequisites.
pub fn check_schedule(c: &Circuit, s: &Schedule) -> Result<(), CircuitError> {
    let wiring = checked_wiring(c)?;
    let mut bout_of = vec![None; c.gates.len()];
    for (t, bout) in s.bouts.iter().enumerate() {
        if bout.is_empty() {
            return Err(CircuitError::Schedule(format!("bout {t} is empty")));
        }
        for &g in bout {
            let slot = bout_of
                .get_mut(g)
                .ok_or_else(|| CircuitError::Schedule(format!("unknown gate {g}")))?;
            if slot.replace(t).is_some() {
                return Err(CircuitError::Schedule(format!("gate {g} scheduled twice")));
            }
        }
    }
    for (g, ps) in wiring.prereqs.iter().enumerate() {
        let t = bout_of[g].ok_or_else(|| CircuitError::Schedule(format!("gate {g} never fires")))?;
        // direct prerequisites strictly earlier implies the same for the
        // transitive closure, and rules out comparable gates in one bout
        if let Some(&p) = ps.iter().find(|&&p| bout_of[p].is_some_and(|tp| tp >= t)) {
            return Err(CircuitError::Schedule(format!(
                "gate {g} fires no later than its prerequisite {p}"
            )));
        }
    }
    Ok(())
}

/// A random valid schedule: a random topological order cut into bouts at
/// random points and wherever a gate depends on the bout being filled.
pub fn random_schedule<R: Rng + ?Sized>(c: &Circuit, rng: &mut R) -> Result<Schedule, CircuitError> {
    let wiring = checked_wiring(c)?;
    let n = c.gates.len();
    let mut pending: Vec<usize> = wiring.prereqs.iter().map(Vec::len).collect();
    let mut dependents = vec![Vec::new(); n];
    for (g, ps) in wiring.prereqs.iter().enumerate() {
        for &p in ps {
            dependents[p].push(g);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&g| pending[g] == 0).collect();
    let mut bout_of = vec![usize::MAX; n];
    let mut bouts: Vec<Vec<usize>> = Vec::new();
    while !ready.is_empty() {
        ready.shuffle(rng);
        let g = ready.pop().unwrap();
        let blocked = wiring.prereqs[g].iter().any(|&p| bout_of[p] + 1 == bouts.len());
        if bouts.is_empty() || blocked || rng.random_bool(0.3) {
            bouts.push(Vec::new());
        }
        bout_of[g] = bouts.len() - 1;
        bouts.last_mut().unwrap().push(g);
        for &d in &dependents[g] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.push(d);
            }
        }
    }
    Ok(Schedule { bouts })
}

/// Runs `c` on `input` (values for `c.inputs`, in order) with the eager
/// schedule and returns the values at `c.outputs`.
pub fn run(c: &Circuit, input: &[u32]) -> Result<Vec<u32>, CircuitError> {
    let schedule = eager_schedule(c)?;
    run_with_schedule(c, &schedule, input)
}

pub fn run_with_schedule(c: &Circuit, s: &Schedule, input: &[u32]) -> Result<Vec<u32>, CircuitError> {
    check_schedule(c, s)?;
    let wiring = checked_wiring(c)?;
    if input.len() != c.inputs.len() {
        return Err(CircuitError::InputArity {
            expected: c.inputs.len(),
            got: input.len(),
        });
    }
    let mut value: HashMap<NodeId, u32> = c.inputs.iter().copied().zip(input.iter().copied()).collect();
    let fetch = |value: &HashMap<NodeId, u32>, consumer: NodeId| value[&wiring.source[&consumer]];
    for bout in &s.bouts {
        for &g in bout {
            let gate = &c.gates[g];
            let args: Vec<u32> = gate.entries.iter().map(|&e| fetch(&value, e)).collect();
            let out = c.tables[gate.table].apply(&args).ok_or(CircuitError::OutsideAlphabet {
                gate: g,
                input: args.clone(),
            })?;
            for (&x, &v) in gate.exits.iter().zip(out) {
                value.insert(x, v);
            }
        }
    }
    debug_assert!(c.outputs.iter().all(|o| matches!(wiring.roles[o], Role::Output(_))));
    Ok(c.outputs.iter().map(|&o| fetch(&value, o)).collect())
}

/// Evidence that a circuit is not reversible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReversibilityDefect {
    Gate { gate: usize, defect: TableDefect },
    FanOut { producer: NodeId, wires: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitReversibility {
    pub reversible: bool,
    pub witnesses: Vec<ReversibilityDefect>,
}

/// Every gate table is a bijection and every producer has exactly one
/// outgoing wire.
pub fn check_reversible_circuit(c: &Circuit) -> Result<CircuitReversibility, CircuitError> {
    checked_wiring(c)?;
    let mut witnesses = Vec::new();
    let table_defects: Vec<Option<TableDefect>> = c.tables.iter().map(GateTable::bijection_witness).collect();
    for (g, gate) in c.gates.iter().enumerate() {
        if let Some(defect) = &table_defects[gate.table] {
            witnesses.push(ReversibilityDefect::Gate {
                gate: g,
                defect: defect.clone(),
            });
        }
    }
    let mut fan_out: BTreeMap<NodeId, usize> = BTreeMap::new();
    for w in &c.wires {
        *fan_out.entry(w.from).or_default() += 1;
    }
    for (producer, wires) in fan_out {
        if wires != 1 {
            witnesses.push(ReversibilityDefect::FanOut { producer, wires });
        }
    }
    Ok(CircuitReversibility {
        reversible: witnesses.is_empty(),
        witnesses,
    })
}

/// Big-endian `width`-bit expansion of `value`.
pub fn to_bits(value: u32, width: u32) -> Vec<u32> {
    (0..width).rev().map(|k| (value >> k) & 1).collect()
}

pub fn from_bits(bits: &[u32]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b)
}

/// Largest total gate width (in bits) accepted by [`lower_to_bits`].
pub const MAX_LOWERED_GATE_BITS: u32 = 22;

/// Replaces every value-carrying node by `width` bit nodes. Each gate table
/// is extended to all bit assignments: codes of admissible inputs follow the
/// original table, every other code passes through unchanged.
pub fn lower_to_bits(c: &Circuit, width: u32) -> Result<Circuit, CircuitError> {
    checked_wiring(c)?;
    let limit = 1u64 << width;
    for t in &c.tables {
        if t.entries != t.exits {
            return Err(CircuitError::Table("lowering needs square gates".into()));
        }
        let bits = width * t.entries as u32;
        if bits > MAX_LOWERED_GATE_BITS {
            return Err(CircuitError::Table(format!("{bits}-bit gate too wide to tabulate")));
        }
        if t.rows
            .iter()
            .flat_map(|(i, o)| i.iter().chain(o))
            .any(|&v| u64::from(v) >= limit)
        {
            return Err(CircuitError::Table(format!("value does not fit in {width} bits")));
        }
    }

    let w = width as usize;
    let expand = |n: NodeId| -> Vec<NodeId> { (0..w).map(|k| n * w + k).collect() };
    let tables = c
        .tables
        .iter()
        .map(|t| {
            let bits = w * t.entries;
            let rows = (0..1u32 << bits)
                .map(|code| {
                    let input = to_bits(code, bits as u32);
                    let values: Vec<u32> = input.chunks(w).map(from_bits).collect();
                    let output = match t.apply(&values) {
                        Some(out) => out.iter().flat_map(|&v| to_bits(v, width)).collect(),
                        None => input.clone(),
                    };
                    (input, output)
                })
                .collect();
            GateTable::new(t.entries * w, t.exits * w, rows)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut wires = Vec::with_capacity(c.wires.len() * w);
    for wire in &c.wires {
        for k in 0..w {
            wires.push(Wire {
                from: wire.from * w + k,
                to: wire.to * w + k,
            });
        }
    }
    Ok(Circuit {
        inputs: c.inputs.iter().flat_map(|&n| expand(n)).collect(),
        outputs: c.outputs.iter().flat_map(|&n| expand(n)).collect(),
        gates: c
            .gates
            .iter()
            .map(|g| Gate {
                entries: g.entries.iter().flat_map(|&n| expand(n)).collect(),
                exits: g.exits.iter().flat_map(|&n| expand(n)).collect(),
                table: g.table,
            })
            .collect(),
        wires,
        tables,
    })
}
