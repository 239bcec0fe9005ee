//! Corpus loading, random machine generators and reference implementations
//! shared by the integration tests. The references here are written
//! independently of the library code they check.

#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use tmwall::quantum::{parse_qtm, QtmSpec};
use tmwall::tm::{parse_tm, totalize, Direction, TmSpec, Transition};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn files(dir: &Path, prefix: &str, ext: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name.starts_with(prefix) && name.ends_with(ext)
        })
        .collect();
    out.sort();
    out
}

fn name_of(path: &Path) -> String {
    path.file_stem().unwrap().to_str().unwrap().to_string()
}

pub fn load(path: &Path) -> TmSpec {
    parse_tm(&fs::read_to_string(path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Reversible corpus machines, completed to total ones.
pub fn reversible_corpus() -> Vec<(String, TmSpec)> {
    files(&corpus_dir(), "m", ".tm")
        .into_iter()
        .map(|p| (name_of(&p), totalize(&load(&p)).unwrap()))
        .collect()
}

/// Reversible partial machines with reachable halts, as written.
pub fn halting_corpus() -> Vec<(String, TmSpec)> {
    files(&corpus_dir(), "h", ".tm")
        .into_iter()
        .map(|p| (name_of(&p), load(&p)))
        .collect()
}

pub fn quantum_corpus() -> Vec<(String, QtmSpec)> {
    files(&corpus_dir().join("quantum"), "", ".qtm")
        .into_iter()
        .filter(|p| !name_of(p).starts_with("perturbed"))
        .map(|p| (name_of(&p), parse_qtm(&fs::read_to_string(&p).unwrap()).unwrap()))
        .collect()
}

fn signature(nq: usize, ng: usize) -> TmSpec {
    let states: Vec<String> = (0..nq).map(|q| format!("s{q}")).collect();
    let symbols: Vec<String> = (0..ng).map(|a| format!("y{a}")).collect();
    TmSpec::new(&states, &symbols, "y0", "s0").unwrap()
}

pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    if rng.random_bool(0.5) {
        Direction::Left
    } else {
        Direction::Right
    }
}

/// Arbitrary table: each entry is undefined with probability `p_undefined`,
/// otherwise uniform over `Q × Γ × {−1, +1}`.
pub fn random_table<R: Rng + ?Sized>(nq: usize, ng: usize, p_undefined: f64, rng: &mut R) -> TmSpec {
    let mut spec = signature(nq, ng);
    for p in 0..nq {
        for a in 0..ng {
            if rng.random_bool(p_undefined) {
                continue;
            }
            let t = Transition::new(rng.random_range(0..nq), rng.random_range(0..ng), random_direction(rng));
            spec.add_transition(p, a, t).unwrap();
        }
    }
    spec
}

/// Total reversible table: a random permutation of `Q × Γ` with each target
/// state moving in its own random direction.
pub fn random_reversible<R: Rng + ?Sized>(nq: usize, ng: usize, rng: &mut R) -> TmSpec {
    let classes: Vec<Direction> = (0..nq).map(|_| random_direction(rng)).collect();
    let mut targets: Vec<(usize, usize)> = (0..nq).flat_map(|q| (0..ng).map(move |b| (q, b))).collect();
    targets.shuffle(rng);
    let mut spec = signature(nq, ng);
    for (k, &(q, b)) in targets.iter().enumerate() {
        spec.add_transition(k / ng, k % ng, Transition::new(q, b, classes[q]))
            .unwrap();
    }
    spec
}

/// One step on a looped tape, from the definition of a machine step.
pub fn reference_step(spec: &TmSpec, state: usize, head: usize, tape: &[usize]) -> Option<(usize, usize, Vec<usize>)> {
    let t = spec.transition(state, tape[head])?;
    let n = tape.len();
    let mut next = tape.to_vec();
    next[head] = t.symbol;
    let head = match t.dir {
        Direction::Right => (head + 1) % n,
        Direction::Left => (head + n - 1) % n,
    };
    Some((t.state, head, next))
}

/// Reversibility by definition: no configuration on an `n`-cell loop has
/// two predecessors.
pub fn brute_force_reversible(spec: &TmSpec, n: usize) -> bool {
    let (nq, ng) = (spec.num_states(), spec.num_symbols());
    let mut seen: HashMap<(usize, usize, Vec<usize>), usize> = HashMap::new();
    let tapes = ng.pow(n as u32);
    for code in 0..tapes {
        let tape: Vec<usize> = (0..n).map(|k| code / ng.pow(k as u32) % ng).collect();
        for state in 0..nq {
            for head in 0..n {
                if let Some(next) = reference_step(spec, state, head, &tape) {
                    let count = seen.entry(next).or_insert(0);
                    *count += 1;
                    if *count > 1 {
                        return false;
                    }
                }
            }
        }
    }
    true
}
