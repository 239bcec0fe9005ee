//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails or overruns its time budget.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tmwall::brickwall::{
    check_brick_bijective, decode_row, direct_halting_run, encode_row, simulate_with_halting, BrickFunction, BrickWall,
    ExtConfig,
};
use tmwall::circuit::{check_reversible_circuit, eager_schedule, random_schedule, run_with_schedule, validate};
use tmwall::cli::random_wall_input;
use tmwall::linalg::{random_unitary, C64, ONE, ZERO};
use tmwall::quantum::{
    check_delta_properties, check_unitary, evolve_direct, gen_qtm_from_unitary, random_initial_state, random_partition,
    simulate_quantum_wall, BrickOperator, QState, QtmSpec,
};
use tmwall::tm::{check_reversible, halting_extension, Config, Direction, TmSpec, Transition};

/// Tolerance for amplitude conditions and unitarity.
const PROPERTY_TOL: f64 = 1e-9;
/// Tolerance for `T`-step state comparisons.
const SIMULATION_TOL: f64 = 1e-8;
/// Size of the single-amplitude perturbations that must be detected.
const PERTURBATION: f64 = 0.01;

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    check: Check,
}

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            title: "reversibility criterion matches predecessor counting",
            budget: Duration::from_secs(30),
            check: reversibility_criterion,
        },
        Criterion {
            id: 2,
            title: "brick function bijectivity",
            budget: Duration::from_secs(5),
            check: brick_bijectivity,
        },
        Criterion {
            id: 3,
            title: "classical wall simulation",
            budget: Duration::from_secs(60),
            check: classical_simulation,
        },
        Criterion {
            id: 4,
            title: "halting extension and recovery",
            budget: Duration::from_secs(60),
            check: halting_recovery,
        },
        Criterion {
            id: 5,
            title: "amplitude conditions and unitarity",
            budget: Duration::from_secs(30),
            check: amplitude_conditions,
        },
        Criterion {
            id: 6,
            title: "quantum wall simulation",
            budget: Duration::from_secs(120),
            check: quantum_simulation,
        },
        Criterion {
            id: 7,
            title: "classical consistency of the quantum gate",
            budget: Duration::from_secs(60),
            check: classical_consistency,
        },
        Criterion {
            id: 8,
            title: "circuit-model conformance of exported walls",
            budget: Duration::from_secs(60),
            check: circuit_conformance,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.check)();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(_) if elapsed > c.budget => ("FAIL", format!("over time budget of {:?}", c.budget)),
            Ok(detail) => ("PASS", detail),
            Err(why) => ("FAIL", why),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {} {status} [{:.2}s / {}s] {}: {detail}",
            c.id,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            c.title
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn reversibility_criterion() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases: Vec<TmSpec> = Vec::new();
    for k in 0..240 {
        let nq = 1 + k % 3;
        cases.push(common::random_table(nq, 2, 0.25, &mut rng));
    }
    for k in 0..60 {
        cases.push(common::random_reversible(1 + k % 3, 2, &mut rng));
    }
    for name in ["separability", "injectivity"] {
        cases.push(common::load(
            &common::corpus_dir().join("irreversible").join(format!("{name}.tm")),
        ));
    }
    cases.extend(common::halting_corpus().into_iter().map(|(_, s)| s));
    cases.extend(
        common::reversible_corpus()
            .into_iter()
            .map(|(_, s)| s)
            .filter(|s| s.num_symbols() == 2),
    );

    let (mut reversible, mut mismatches) = (0, Vec::new());
    for (k, spec) in cases.iter().enumerate() {
        let claimed = check_reversible(spec).is_reversible();
        let truth = common::brute_force_reversible(spec, 4);
        reversible += usize::from(truth);
        if claimed != truth {
            mismatches.push(k);
        }
    }
    ensure(mismatches.is_empty(), || format!("mismatched cases {mismatches:?}"))?;
    ensure(reversible > 0 && reversible < cases.len(), || {
        "cases do not cover both outcomes".into()
    })?;
    Ok(format!(
        "{} machines ({reversible} reversible), 0 mismatches",
        cases.len()
    ))
}

fn brick_bijectivity() -> Result<String, String> {
    let corpus = common::reversible_corpus();
    for (name, spec) in &corpus {
        let report = check_brick_bijective(spec).map_err(|e| format!("{name}: {e}"))?;
        ensure(report.bijective && report.collisions.is_empty(), || {
            format!("{name}: {} collisions", report.collisions.len())
        })?;
    }

    let mut violating: Vec<(String, TmSpec)> = Vec::new();
    let mut sep = TmSpec::new(&["p", "q"], &["0", "1"], "0", "p").unwrap();
    for (p, a, q, b, d) in [
        (0, 0, 1, 0, Direction::Right),
        (0, 1, 1, 1, Direction::Left),
        (1, 0, 0, 0, Direction::Right),
        (1, 1, 0, 1, Direction::Right),
    ] {
        sep.add_transition(p, a, Transition::new(q, b, d)).unwrap();
    }
    violating.push(("separability".into(), sep));
    violating.push((
        "injectivity".into(),
        common::load(&common::corpus_dir().join("irreversible").join("injectivity.tm")),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    while violating.len() < 40 {
        let spec = common::random_table(1 + violating.len() % 3, 2, 0.0, &mut rng);
        if !check_reversible(&spec).is_reversible() {
            violating.push((format!("random{}", violating.len()), spec));
        }
    }
    for (name, spec) in &violating {
        let report = check_brick_bijective(spec).map_err(|e| format!("{name}: {e}"))?;
        ensure(!report.bijective && !report.collisions.is_empty(), || {
            format!("{name}: no collision found")
        })?;
    }
    Ok(format!(
        "{} reversible machines collision-free, {} violating machines all collide",
        corpus.len(),
        violating.len()
    ))
}

fn reference_run(spec: &TmSpec, c: &Config, steps: usize) -> Option<Config> {
    let (mut state, mut head, mut tape) = (c.state, c.head, c.tape.clone());
    for _ in 0..steps {
        (state, head, tape) = common::reference_step(spec, state, head, &tape)?;
    }
    Some(Config::new(state, head, tape))
}

fn classical_simulation() -> Result<String, String> {
    let corpus = common::reversible_corpus();
    ensure(corpus.len() >= 10, || format!("only {} corpus machines", corpus.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut runs = 0;
    for (name, spec) in &corpus {
        for steps in 1..=8 {
            let wall = BrickWall::build(spec, steps).map_err(|e| format!("{name}: {e}"))?;
            for _ in 0..100 {
                let c0 = random_wall_input(spec, steps, &mut rng);
                let got = wall.simulate(&c0).map_err(|e| format!("{name} T={steps}: {e}"))?;
                let want = reference_run(spec, &c0, steps).expect("total machine");
                ensure(got == want, || {
                    format!("{name} T={steps}: {c0:?} gave {got:?}, want {want:?}")
                })?;
                runs += 1;
            }
        }
    }

    // two rows against one step, every configuration on six cells
    let (name, spec) = corpus.iter().find(|(n, _)| n.contains("mixed")).unwrap();
    let wall = BrickWall::build(spec, 2).unwrap();
    let n = wall.cells();
    let mut configs = 0;
    for code in 0..spec.num_symbols().pow(n as u32) {
        let tape: Vec<usize> = (0..n)
            .map(|k| code / spec.num_symbols().pow(k as u32) % spec.num_symbols())
            .collect();
        for state in 0..spec.num_states() {
            for head in 0..n {
                let c = Config::new(state, head, tape.clone());
                let want = reference_run(spec, &c, 1).unwrap();
                for first in [0, 2] {
                    let mut row = encode_row(&c);
                    for v in [first, first + 1] {
                        row = wall.apply_row(v, &row).map_err(|e| e.to_string())?.0;
                    }
                    let got = decode_row(&row).map_err(|e| e.to_string())?;
                    ensure(got == ExtConfig::from(&want), || {
                        format!("{name}: rows {first},{} on {c:?}", first + 1)
                    })?;
                }
                configs += 1;
            }
        }
    }
    Ok(format!(
        "{} machines, {runs} wall runs exact; two-row step exact on all {configs} configurations of {name} at N={n}",
        corpus.len()
    ))
}

fn halting_recovery() -> Result<String, String> {
    let corpus = common::halting_corpus();
    ensure(corpus.len() >= 5, || format!("only {} halting machines", corpus.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut runs, mut halts) = (0, 0);
    for (name, spec) in &corpus {
        let extended = halting_extension(spec).map_err(|e| format!("{name}: {e}"))?;
        let mut machine_halts = 0;
        for steps in 4..=10 {
            let mut inputs = vec![Config::blank(spec, 2 * steps + 2)];
            inputs.extend((0..40).map(|_| random_wall_input(spec, steps, &mut rng)));
            for c0 in &inputs {
                let (_, early) = extended.run(c0, steps);
                ensure(early.is_none(), || {
                    format!("{name} T={steps}: extension halts at {early:?}")
                })?;
                let got = simulate_with_halting(spec, steps, c0).map_err(|e| format!("{name} T={steps}: {e}"))?;
                let want = direct_halting_run(spec, steps, c0);
                ensure(got == want, || {
                    format!("{name} T={steps} {c0:?}: got {got:?}, want {want:?}")
                })?;
                machine_halts += usize::from(want.halted_at.is_some());
                runs += 1;
            }
        }
        ensure(machine_halts > 0, || format!("{name}: no tested input halts"))?;
        halts += machine_halts;
    }
    Ok(format!(
        "{} machines, {runs} runs for T=4..10, {halts} halting runs recovered exactly",
        corpus.len()
    ))
}

fn generated_specs(count: usize, seed: u64) -> Vec<QtmSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let nq = 1 + k % 3;
            let names: Vec<String> = (0..nq).map(|q| format!("s{q}")).collect();
            let sig = TmSpec::new(&names, &["0".to_string(), "1".to_string()], "0", "s0").unwrap();
            let alpha = random_unitary(nq * 2, &mut rng);
            let partition = random_partition(nq, &mut rng);
            gen_qtm_from_unitary(&sig, &alpha, &partition, PROPERTY_TOL).unwrap()
        })
        .collect()
}

/// `spec` with `dz` added to one amplitude.
fn perturbed(spec: &QtmSpec, at: (usize, usize, usize, usize, Direction), dz: C64) -> QtmSpec {
    let mut out = QtmSpec::new(spec.signature());
    out.set_partition(spec.partition().clone());
    let (nq, ng) = (spec.num_states(), spec.num_symbols());
    for p in 0..nq {
        for a in 0..ng {
            for q in 0..nq {
                for b in 0..ng {
                    for d in [Direction::Left, Direction::Right] {
                        let mut z = spec.amplitude(p, a, q, b, d);
                        if (p, a, q, b, d) == at {
                            z += dz;
                        }
                        if z != ZERO {
                            out.add_amplitude(p, a, q, b, d, z).unwrap();
                        }
                    }
                }
            }
        }
    }
    out
}

fn amplitude_conditions() -> Result<String, String> {
    let specs = generated_specs(24, 5);
    let (mut worst_delta, mut worst_unitary, mut perturbations) = (0.0f64, 0.0f64, 0);
    for (k, spec) in specs.iter().enumerate() {
        let delta = check_delta_properties(spec, PROPERTY_TOL);
        ensure(delta.passes(), || format!("spec {k}: {:?}", delta.failing()))?;
        worst_delta = worst_delta
            .max(delta.unit_length_deviation)
            .max(delta.orthogonality_deviation)
            .max(delta.separability_deviation);
        let op = BrickOperator::build(spec, PROPERTY_TOL).map_err(|e| format!("spec {k}: {e}"))?;
        let u = check_unitary(&op, PROPERTY_TOL);
        ensure(u.unitary, || format!("spec {k}: |U†U − I| = {:e}", u.max_deviation))?;
        worst_unitary = worst_unitary.max(u.max_deviation);

        let (nq, ng) = (spec.num_states(), spec.num_symbols());
        for p in 0..nq {
            for a in 0..ng {
                for q in 0..nq {
                    for b in 0..ng {
                        for d in [Direction::Left, Direction::Right] {
                            let bad = perturbed(spec, (p, a, q, b, d), C64::new(PERTURBATION, 0.0));
                            let detected = !check_delta_properties(&bad, PROPERTY_TOL).passes()
                                || !check_unitary(&BrickOperator::build_unchecked(&bad, PROPERTY_TOL), PROPERTY_TOL)
                                    .unitary;
                            ensure(detected, || {
                                format!("spec {k}: perturbation at {:?} undetected", (p, a, q, b, d))
                            })?;
                            perturbations += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "{} generated machines, max condition deviation {worst_delta:.1e}, max |U†U − I| {worst_unitary:.1e}, {perturbations}/{perturbations} perturbations detected",
        specs.len()
    ))
}

fn quantum_machines() -> Vec<(String, QtmSpec)> {
    let mut machines = common::quantum_corpus();
    let (_, mixed) = common::reversible_corpus()
        .into_iter()
        .find(|(n, _)| n.contains("mixed"))
        .unwrap();
    machines.push(("embedded_mixed".into(), QtmSpec::from_classical(&mixed).unwrap()));
    for (k, spec) in generated_specs(3, 6).into_iter().enumerate() {
        machines.push((format!("generated{k}"), spec));
    }
    machines
}

fn quantum_simulation() -> Result<String, String> {
    let machines = quantum_machines();
    ensure(machines.len() >= 5, || "fewer than five machines".into())?;
    for required in ["hadamard", "bouncer"] {
        ensure(machines.iter().any(|(n, _)| n == required), || {
            format!("missing {required}")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_distance, mut worst_norm, mut runs) = (0.0f64, 0.0f64, 0);
    for (name, spec) in &machines {
        let op = BrickOperator::build(spec, PROPERTY_TOL).map_err(|e| format!("{name}: {e}"))?;
        for steps in 1..=4 {
            for _ in 0..20 {
                let s0 = random_initial_state(spec, steps, 8, &mut rng);
                let run = simulate_quantum_wall(spec, &op, steps, &s0, PROPERTY_TOL)
                    .map_err(|e| format!("{name} T={steps}: {e}"))?;
                let direct = evolve_direct(spec, steps, &s0).map_err(|e| e.to_string())?;
                let d = run.state.distance(&direct);
                ensure(d <= SIMULATION_TOL, || format!("{name} T={steps}: distance {d:e}"))?;
                worst_distance = worst_distance.max(d);
                for n in run.row_norms {
                    let dev = (n - 1.0).abs();
                    ensure(dev <= PROPERTY_TOL, || {
                        format!("{name} T={steps}: row norm off by {dev:e}")
                    })?;
                    worst_norm = worst_norm.max(dev);
                }
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{} machines, {runs} runs, max distance {worst_distance:.1e}, max row-norm deviation {worst_norm:.1e}",
        machines.len()
    ))
}

fn classical_consistency() -> Result<String, String> {
    let corpus = common::reversible_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut runs = 0;
    for (name, spec) in &corpus {
        let qspec = QtmSpec::from_classical(spec).map_err(|e| format!("{name}: {e}"))?;
        let op = BrickOperator::build(&qspec, PROPERTY_TOL).map_err(|e| format!("{name}: {e}"))?;
        let table = BrickFunction::new(spec).map_err(|e| format!("{name}: {e}"))?.table();
        for (j, &image) in table.iter().enumerate() {
            for i in 0..op.dim() {
                let want = if image == i { ONE } else { ZERO };
                ensure(op.matrix()[(i, j)] == want, || format!("{name}: entry ({i}, {j})"))?;
            }
        }
        for steps in 1..=4 {
            let wall = BrickWall::build(spec, steps).unwrap();
            for _ in 0..10 {
                let c0 = random_wall_input(spec, steps, &mut rng);
                let classical = wall.simulate(&c0).map_err(|e| format!("{name}: {e}"))?;
                let run = simulate_quantum_wall(&qspec, &op, steps, &QState::basis(&c0), PROPERTY_TOL)
                    .map_err(|e| format!("{name}: {e}"))?;
                let mut want = QState::new();
                want.add(ExtConfig::from(&classical), ONE);
                ensure(run.state == want, || {
                    format!("{name} T={steps}: quantum wall left {:?}", run.state)
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{} machines: gate matrix equals the brick permutation entry for entry; {runs} basis-state runs exact",
        corpus.len()
    ))
}

fn circuit_conformance() -> Result<String, String> {
    let corpus = common::reversible_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut walls, mut schedules) = (0, 0);
    for (name, spec) in &corpus {
        for steps in 1..=4 {
            let ctx = |e: &dyn std::fmt::Display| format!("{name} T={steps}: {e}");
            let wall = BrickWall::build(spec, steps).map_err(|e| ctx(&e))?;
            let c = wall.to_circuit().map_err(|e| ctx(&e))?;
            let report = validate(&c);
            ensure(report.is_valid(), || ctx(&format!("{:?}", report.issues)))?;
            let rev = check_reversible_circuit(&c).map_err(|e| ctx(&e))?;
            ensure(rev.reversible, || ctx(&format!("{:?}", rev.witnesses)))?;
            let eager = eager_schedule(&c).map_err(|e| ctx(&e))?;
            ensure(eager.depth() == 2 * steps, || {
                ctx(&format!("eager depth {}", eager.depth()))
            })?;
            ensure(eager.bouts.iter().all(|b| b.len() == steps + 1), || ctx(&"bout width"))?;

            let mut others = Vec::new();
            for _ in 0..1000 {
                if others.len() == 5 {
                    break;
                }
                let s = random_schedule(&c, &mut rng).map_err(|e| ctx(&e))?;
                if s != eager {
                    others.push(s);
                }
            }
            ensure(others.len() == 5, || ctx(&"could not draw five non-eager schedules"))?;
            for _ in 0..20 {
                let c0 = random_wall_input(spec, steps, &mut rng);
                let input = wall.encode_input(&c0);
                let want = run_with_schedule(&c, &eager, &input).map_err(|e| ctx(&e))?;
                let decoded = wall.decode_output(&want).map_err(|e| ctx(&e))?;
                ensure(decoded == ExtConfig::from(&wall.simulate(&c0).unwrap()), || {
                    ctx(&"eager run differs from the wall")
                })?;
                for s in &others {
                    let got = run_with_schedule(&c, s, &input).map_err(|e| ctx(&e))?;
                    ensure(got == want, || ctx(&format!("schedule {:?} differs", s.bouts)))?;
                }
            }
            walls += 1;
            schedules += others.len();
        }
    }
    Ok(format!(
        "{walls} walls valid and reversible with 2T bouts of T+1 gates; {schedules} non-eager schedules agree on 20 inputs each"
    ))
}
