//! The `tmwall` command line: argument definitions and one function per
//! subcommand. Commands return an [`Outcome`] instead of printing so they can
//! be driven from tests.
//!
//! Exit codes: 0 pass, 1 semantic failure (irreversible, non-unitary,
//! mismatch), 2 input error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::brickwall::{
    decode_row, encode_row, iterate_successor, simulate_with_halting, BrickWall, ExtConfig, WallError,
};
use crate::circuit::{self, Circuit};
use crate::linalg::C64;
use crate::quantum::{
    self, check_delta_properties, check_unitary, evolve_direct, parse_qtm, simulate_quantum_wall, BrickOperator,
    QState, QtmSpec, QuantumError, PROPERTY_TOL, SIMULATION_TOL,
};
use crate::tm::{check_reversible, parse_tm, totalize, Config, TmSpec};

/// Version of every JSON document the CLI writes.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tmwall",
    version,
    about = "Compile reversible and quantum Turing machines into brick-wall circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide reversibility of a machine from its transition table.
    Check { machine: PathBuf },
    /// Compile a machine into its brick-wall circuit.
    Build {
        machine: PathBuf,
        #[command(flatten)]
        steps: Steps,
        /// Lower the wall to single-bit wires.
        #[arg(long)]
        lower_bits: bool,
        /// Fail instead of completing a partial transition table.
        #[arg(long)]
        strict: bool,
        /// Write the circuit document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a machine through its wall.
    Run {
        machine: PathBuf,
        #[command(flatten)]
        steps: Steps,
        /// Initial configuration `{state, head, tape}` as a JSON file or
        /// inline JSON. Defaults to the start state on a blank tape.
        #[arg(long)]
        tape: Option<String>,
        /// Simulate through the marching extension and report halts.
        #[arg(long)]
        with_halting: bool,
        /// Fail instead of extending a partial transition table.
        #[arg(long)]
        strict: bool,
    },
    /// Compare the wall against direct execution on random tapes.
    Verify {
        machine: PathBuf,
        #[command(flatten)]
        steps: Steps,
        #[command(flatten)]
        trials: Trials,
        /// Swap two entries of the brick table before verifying.
        #[arg(long, hide = true)]
        corrupt_brick: bool,
    },
    /// Check the amplitude conditions and unitarity of the brick gate.
    Qcheck {
        machine: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Simulate a quantum machine through its wall.
    Qrun {
        machine: PathBuf,
        #[command(flatten)]
        steps: Steps,
        /// Initial state as a JSON file or inline JSON: one configuration, or
        /// `{"terms": [{state, head, tape, re, im}, …]}`.
        #[arg(long)]
        state: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Compare the quantum wall against direct evolution on random states.
    Qverify {
        machine: PathBuf,
        #[command(flatten)]
        steps: Steps,
        #[command(flatten)]
        trials: Trials,
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Steps {
    /// Number of machine steps `T` (at least 1).
    #[arg(long = "steps", short = 'T', value_parser = clap::value_parser!(u32).range(1..))]
    pub steps: u32,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Trials {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// What a command produced: the JSON report for stdout, notices for stderr,
/// and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: Vec<String>,
    pub code: i32,
}

impl Outcome {
    fn report(mut body: Value, notices: Vec<String>, code: i32) -> Self {
        if let Value::Object(map) = &mut body {
            map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        }
        Outcome {
            stdout: format!(
                "{}\n",
                serde_json::to_string_pretty(&body).expect("serializable report")
            ),
            stderr: notices,
            code,
        }
    }

    fn input_error(message: impl Into<String>) -> Self {
        Outcome {
            stdout: String::new(),
            stderr: vec![format!("error: {}", message.into())],
            code: EXIT_INPUT,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: vec![e.to_string()],
            code: e.exit_code(),
        },
    }
}

pub fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Check { machine } => cmd_check(machine),
        Command::Build {
            machine,
            steps,
            lower_bits,
            strict,
            out,
        } => cmd_build(machine, steps.steps as usize, *lower_bits, *strict, out.as_deref()),
        Command::Run {
            machine,
            steps,
            tape,
            with_halting,
            strict,
        } => cmd_run(machine, steps.steps as usize, tape.as_deref(), *with_halting, *strict),
        Command::Verify {
            machine,
            steps,
            trials,
            corrupt_brick,
        } => cmd_verify(
            machine,
            steps.steps as usize,
            trials.trials,
            trials.seed,
            *corrupt_brick,
        ),
        Command::Qcheck { machine, tol } => cmd_qcheck(machine, tol.unwrap_or(PROPERTY_TOL)),
        Command::Qrun {
            machine,
            steps,
            state,
            tol,
        } => cmd_qrun(
            machine,
            steps.steps as usize,
            state.as_deref(),
            tol.unwrap_or(SIMULATION_TOL),
        ),
        Command::Qverify {
            machine,
            steps,
            trials,
            tol,
        } => cmd_qverify(
            machine,
            steps.steps as usize,
            trials.trials,
            trials.seed,
            tol.unwrap_or(SIMULATION_TOL),
        ),
    }
}

/// Early return with an input-error outcome.
macro_rules! input {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return Outcome::input_error(e.to_string()),
        }
    };
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_tm(path: &Path) -> Result<TmSpec, String> {
    parse_tm(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_qtm(path: &Path) -> Result<QtmSpec, String> {
    parse_qtm(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Inline JSON if it looks like JSON, a file path otherwise.
fn json_argument<T: for<'de> Deserialize<'de>>(arg: &str) -> Result<T, String> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read(Path::new(arg))?
    };
    serde_json::from_str(&text).map_err(|e| format!("bad JSON: {e}"))
}

/// A configuration with states and symbols by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigJson {
    pub state: String,
    pub head: usize,
    pub tape: Vec<String>,
}

impl ConfigJson {
    pub fn from_config(spec: &TmSpec, c: &Config) -> Self {
        ConfigJson {
            state: spec.state_name(c.state).to_string(),
            head: c.head,
            tape: c.tape.iter().map(|&a| spec.symbol_name(a).to_string()).collect(),
        }
    }

    fn from_ext(spec: &TmSpec, c: &ExtConfig) -> Self {
        ConfigJson {
            state: c.state.label(spec),
            head: c.head,
            tape: c.tape.iter().map(|&a| spec.symbol_name(a).to_string()).collect(),
        }
    }

    /// Resolves names against `spec`, padding the tape with blanks to `cells`.
    pub fn to_config(&self, spec: &TmSpec, cells: usize) -> Result<Config, String> {
        let state = spec
            .state_index(&self.state)
            .ok_or_else(|| format!("unknown state `{}`", self.state))?;
        if self.tape.len() > cells {
            return Err(format!("tape has {} cells, the wall has {cells}", self.tape.len()));
        }
        let mut tape = vec![spec.blank(); cells];
        for (k, name) in self.tape.iter().enumerate() {
            tape[k] = spec
                .symbol_index(name)
                .ok_or_else(|| format!("unknown symbol `{name}`"))?;
        }
        Ok(Config::new(state, self.head, tape))
    }
}

fn witnesses_json(spec: &TmSpec, report: &crate::tm::ReversibilityReport) -> Value {
    let pair = |(p, a): (usize, usize)| json!([spec.state_name(p), spec.symbol_name(a)]);
    report
        .witnesses
        .iter()
        .map(|w| json!({"violation": w.violation, "first": pair(w.first), "second": pair(w.second)}))
        .collect()
}

pub fn cmd_check(machine: &Path) -> Outcome {
    let spec = input!(load_tm(machine));
    let report = check_reversible(&spec);
    let code = if report.is_reversible() { EXIT_PASS } else { EXIT_FAIL };
    Outcome::report(
        json!({
            "command": "check",
            "machine": machine.display().to_string(),
            "reversible": report.is_reversible(),
            "separable": report.separable,
            "injective": report.injective,
            "total": spec.is_total(),
            "witnesses": witnesses_json(&spec, &report),
        }),
        Vec::new(),
        code,
    )
}

/// Report for an irreversible machine, or `None` when it is reversible.
fn irreversible(command: &str, spec: &TmSpec) -> Option<Outcome> {
    let report = check_reversible(spec);
    (!report.is_reversible()).then(|| {
        Outcome::report(
            json!({
                "command": command,
                "error": "machine is not reversible",
                "witnesses": witnesses_json(spec, &report),
            }),
            Vec::new(),
            EXIT_FAIL,
        )
    })
}

/// The circuit file written by `build`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallDocument {
    pub schema_version: u32,
    pub steps: usize,
    pub cells: usize,
    /// Wire width: bits of one packed cell, or 1 when lowered.
    pub wire_bits: u32,
    pub lowered: bool,
    pub circuit: Circuit,
}

pub fn cmd_build(machine: &Path, steps: usize, lower_bits: bool, strict: bool, out: Option<&Path>) -> Outcome {
    let mut spec = input!(load_tm(machine));
    if let Some(fail) = irreversible("build", &spec) {
        return fail;
    }
    let mut notices = Vec::new();
    if !spec.is_total() {
        if strict {
            return Outcome::report(
                json!({"command": "build", "error": "transition table is partial and --strict is set"}),
                notices,
                EXIT_FAIL,
            );
        }
        spec = totalize(&spec).expect("reversible machines can be totalized");
        notices.push("notice: completed the partial transition table to a total reversible one".into());
    }
    let wall = input!(BrickWall::build(&spec, steps));
    let codec = wall.codec();
    let built = if lower_bits {
        wall.to_bit_circuit()
    } else {
        wall.to_circuit()
    };
    let circuit = match built {
        Ok(c) => c,
        Err(e) => {
            return Outcome::report(json!({"command": "build", "error": e.to_string()}), notices, EXIT_FAIL);
        }
    };
    let doc = WallDocument {
        schema_version: SCHEMA_VERSION,
        steps,
        cells: wall.cells(),
        wire_bits: if lower_bits { 1 } else { codec.width() },
        lowered: lower_bits,
        circuit,
    };
    let text = serde_json::to_string(&doc).expect("serializable circuit");
    match out {
        None => Outcome {
            stdout: format!("{text}\n"),
            stderr: notices,
            code: EXIT_PASS,
        },
        Some(path) => {
            input!(fs::write(path, format!("{text}\n")).map_err(|e| format!("{}: {e}", path.display())));
            Outcome::report(
                json!({
                    "command": "build",
                    "out": path.display().to_string(),
                    "steps": steps,
                    "cells": doc.cells,
                    "gates": doc.circuit.gates.len(),
                    "rows": wall.rows(),
                    "lowered": lower_bits,
                    "cell_bits": codec.width(),
                    "gate_bits": 2 * codec.width(),
                }),
                notices,
                EXIT_PASS,
            )
        }
    }
}

/// Reads a circuit document written by `build`.
pub fn load_wall_document(text: &str) -> Result<WallDocument, String> {
    serde_json::from_str(text).map_err(|e| format!("bad circuit document: {e}"))
}

pub fn cmd_run(machine: &Path, steps: usize, tape: Option<&str>, with_halting: bool, strict: bool) -> Outcome {
    let spec = input!(load_tm(machine));
    if let Some(fail) = irreversible("run", &spec) {
        return fail;
    }
    let cells = 2 * steps + 2;
    let c0 = match tape {
        None => Config::blank(&spec, cells),
        Some(arg) => {
            let json: ConfigJson = input!(json_argument(arg));
            input!(json.to_config(&spec, cells))
        }
    };
    let mut notices = Vec::new();
    let halting = with_halting || !spec.is_total();
    if halting && !with_halting {
        if strict {
            return Outcome::report(
                json!({"command": "run", "error": "transition table is partial and --strict is set"}),
                notices,
                EXIT_FAIL,
            );
        }
        notices.push("notice: partial transition table, simulating through the marching extension".into());
    }
    let result = if halting {
        simulate_with_halting(&spec, steps, &c0).map(|o| (o.config, o.halted_at))
    } else {
        crate::brickwall::simulate_wall(&spec, steps, &c0).map(|c| (c, None))
    };
    match result {
        Ok((config, halted_at)) => Outcome::report(
            json!({
                "command": "run",
                "steps": steps,
                "with_halting": halting,
                "halted": halted_at.is_some(),
                "halt_step": halted_at,
                "config": ConfigJson::from_config(&spec, &config),
            }),
            notices,
            EXIT_PASS,
        ),
        Err(e @ (WallError::Tm(_) | WallError::BadInitial(_))) => {
            notices.push(format!("error: {e}"));
            Outcome {
                stdout: String::new(),
                stderr: notices,
                code: EXIT_INPUT,
            }
        }
        Err(e) => Outcome::report(json!({"command": "run", "error": e.to_string()}), notices, EXIT_FAIL),
    }
}

/// A valid wall input: any state, head on cell 0, cell `T + 1` blank.
pub fn random_wall_input<R: Rng + ?Sized>(spec: &TmSpec, steps: usize, rng: &mut R) -> Config {
    let n = 2 * steps + 2;
    let mut tape: Vec<usize> = (0..n).map(|_| rng.random_range(0..spec.num_symbols())).collect();
    tape[steps + 1] = spec.blank();
    Config::new(rng.random_range(0..spec.num_states()), 0, tape)
}

/// First row of the wall (0-based) after which the decoded row disagrees
/// with direct execution, with both configurations.
fn first_mismatch(wall: &BrickWall, c0: &Config) -> Result<Option<(usize, Value, Value)>, WallError> {
    let spec = wall.spec();
    let mut row = encode_row(c0);
    let mut expected = c0.clone();
    for v in 0..wall.rows() {
        let (next, garbage) = wall.apply_row(v, &row)?;
        row = next;
        if v % 2 == 0 && !garbage {
            continue;
        }
        if v % 2 == 1 {
            expected = spec.successor(&expected).expect("total machine");
        }
        let got = decode_row(&row)?;
        if garbage || got != ExtConfig::from(&expected) {
            return Ok(Some((
                v,
                json!(ConfigJson::from_config(spec, &expected)),
                json!(ConfigJson::from_ext(spec, &got)),
            )));
        }
    }
    Ok(None)
}

pub fn cmd_verify(machine: &Path, steps: usize, trials: usize, seed: u64, corrupt: bool) -> Outcome {
    let mut spec = input!(load_tm(machine));
    if let Some(fail) = irreversible("verify", &spec) {
        return fail;
    }
    let mut notices = Vec::new();
    if !spec.is_total() {
        spec = totalize(&spec).expect("reversible machines can be totalized");
        notices.push("notice: completed the partial transition table to a total reversible one".into());
    }
    let mut wall = input!(BrickWall::build(&spec, steps));
    if corrupt {
        wall.corrupt();
        notices.push("notice: brick table corrupted on request".into());
    }
    let mut warnings = Vec::new();
    if trials == 0 {
        warnings.push("no trials requested; the pass is vacuous".to_string());
        notices.push("warning: no trials requested; the pass is vacuous".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatch = Value::Null;
    for trial in 0..trials {
        let c0 = random_wall_input(&spec, steps, &mut rng);
        let found = match first_mismatch(&wall, &c0) {
            Ok(m) => m.map(|(row, expected, got)| json!({"row": row, "expected": expected, "got": got})),
            Err(e) => Some(json!({"error": e.to_string()})),
        };
        if let Some(mut m) = found {
            m["trial"] = json!(trial);
            m["input"] = json!(ConfigJson::from_config(&spec, &c0));
            mismatch = m;
            break;
        }
        debug_assert_eq!(
            wall.simulate(&c0).ok(),
            iterate_successor(&spec, &c0, steps),
            "row-by-row check agrees with the end-to-end one"
        );
    }
    let pass = mismatch.is_null();
    Outcome::report(
        json!({
            "command": "verify",
            "steps": steps,
            "trials": trials,
            "seed": seed,
            "pass": pass,
            "first_mismatch": mismatch,
            "warnings": warnings,
        }),
        notices,
        if pass { EXIT_PASS } else { EXIT_FAIL },
    )
}

pub fn cmd_qcheck(machine: &Path, tol: f64) -> Outcome {
    let spec = input!(load_qtm(machine));
    let delta = check_delta_properties(&spec, tol);
    let op = BrickOperator::build_unchecked(&spec, tol);
    let unitarity = check_unitary(&op, tol);
    let mut failing: Vec<&str> = delta.failing();
    if !unitarity.unitary {
        failing.push("unitarity");
    }
    let code = if failing.is_empty() { EXIT_PASS } else { EXIT_FAIL };
    Outcome::report(
        json!({
            "command": "qcheck",
            "machine": machine.display().to_string(),
            "tolerance": tol,
            "pass": failing.is_empty(),
            "failing": failing,
            "delta": delta,
            "brick_dimension": op.dim(),
            "left_rank": op.left_rank(),
            "right_rank": op.right_rank(),
            "unitarity": unitarity,
        }),
        Vec::new(),
        code,
    )
}

#[derive(Debug, Clone, Deserialize)]
struct TermJson {
    #[serde(flatten)]
    config: ConfigJson,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum StateJson {
    Terms { terms: Vec<TermJson> },
    Single(ConfigJson),
}

fn state_from_json(spec: &QtmSpec, cells: usize, json: StateJson) -> Result<QState, String> {
    let mut s = QState::new();
    match json {
        StateJson::Single(c) => s.add(
            ExtConfig::from(&c.to_config(spec.signature(), cells)?),
            C64::new(1.0, 0.0),
        ),
        StateJson::Terms { terms } => {
            for t in terms {
                let c = t.config.to_config(spec.signature(), cells)?;
                s.add(ExtConfig::from(&c), C64::new(t.re, t.im));
            }
        }
    }
    Ok(s)
}

fn state_to_json(spec: &QtmSpec, s: &QState) -> Value {
    s.iter()
        .map(|(k, z)| {
            let mut v = json!(ConfigJson::from_ext(spec.signature(), k));
            v["re"] = json!(z.re);
            v["im"] = json!(z.im);
            v
        })
        .collect()
}

fn quantum_failure(command: &str, e: QuantumError) -> Outcome {
    match e {
        QuantumError::DeltaProperties(report) => Outcome::report(
            json!({"command": command, "error": "amplitude conditions fail", "failing": report.failing(), "delta": report}),
            Vec::new(),
            EXIT_FAIL,
        ),
        QuantumError::Row { .. } => Outcome::report(
            json!({"command": command, "error": e.to_string()}),
            Vec::new(),
            EXIT_FAIL,
        ),
        other => Outcome::input_error(other.to_string()),
    }
}

pub fn cmd_qrun(machine: &Path, steps: usize, state: Option<&str>, tol: f64) -> Outcome {
    let spec = input!(load_qtm(machine));
    let cells = 2 * steps + 2;
    let s0 = match state {
        None => QState::basis(&Config::blank(spec.signature(), cells)),
        Some(arg) => input!(state_from_json(&spec, cells, input!(json_argument(arg)))),
    };
    let op = match BrickOperator::build(&spec, tol.min(PROPERTY_TOL)) {
        Ok(op) => op,
        Err(e) => return quantum_failure("qrun", e),
    };
    match simulate_quantum_wall(&spec, &op, steps, &s0, tol) {
        Ok(run) => Outcome::report(
            json!({
                "command": "qrun",
                "steps": steps,
                "norm": run.state.norm(),
                "terms": state_to_json(&spec, &run.state),
            }),
            Vec::new(),
            EXIT_PASS,
        ),
        Err(e) => quantum_failure("qrun", e),
    }
}

pub fn cmd_qverify(machine: &Path, steps: usize, trials: usize, seed: u64, tol: f64) -> Outcome {
    let spec = input!(load_qtm(machine));
    let op = match BrickOperator::build(&spec, tol.min(PROPERTY_TOL)) {
        Ok(op) => op,
        Err(e) => return quantum_failure("qverify", e),
    };
    let mut notices = Vec::new();
    let mut warnings = Vec::new();
    if trials == 0 {
        warnings.push("no trials requested; the pass is vacuous".to_string());
        notices.push("warning: no trials requested; the pass is vacuous".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max_distance, mut max_norm_deviation) = (0.0f64, 0.0f64);
    let mut worst_trial = None;
    for trial in 0..trials {
        let s0 = quantum::random_initial_state(&spec, steps, 8, &mut rng);
        let run = match simulate_quantum_wall(&spec, &op, steps, &s0, tol) {
            Ok(run) => run,
            Err(e) => return quantum_failure("qverify", e),
        };
        let direct = input!(evolve_direct(&spec, steps, &s0));
        let d = run.state.distance(&direct);
        if d > max_distance {
            max_distance = d;
            worst_trial = Some(trial);
        }
        for n in run.row_norms {
            max_norm_deviation = max_norm_deviation.max((n - 1.0).abs());
        }
    }
    let pass = max_distance <= tol && max_norm_deviation <= tol;
    Outcome::report(
        json!({
            "command": "qverify",
            "steps": steps,
            "trials": trials,
            "seed": seed,
            "tolerance": tol,
            "pass": pass,
            "max_distance": max_distance,
            "worst_trial": worst_trial,
            "max_row_norm_deviation": max_norm_deviation,
            "warnings": warnings,
        }),
        notices,
        if pass { EXIT_PASS } else { EXIT_FAIL },
    )
}

/// Loads a circuit document and checks it is a valid reversible circuit.
pub fn validate_wall_document(doc: &WallDocument) -> bool {
    circuit::validate(&doc.circuit).is_valid()
        && circuit::check_reversible_circuit(&doc.circuit).is_ok_and(|r| r.reversible)
}
