use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chemnn::analysis::{bistable_equilibria, verify_states, write_reports_csv, OracleIteration, PhaseReport, Stability};
use chemnn::compiler::names;
use chemnn::integrator::{integrate, run_oscillator, run_phased};
use chemnn::oracle::{self, Batch};
use chemnn::training::{chemical_forward, decision_grid, train_chemical, ChemOptions, PhaseDriver};
use chemnn::{
    compile as compile_program, compile_feedforward, Crn, IntegratorConfig, NetSpec, PhaseSchedule, PhaseTag,
    Recording, State, Trajectory, WeightSet, Weights,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliError;
use crate::svg;

/// Largest feedforward deviation accepted by `verify`.
const PHASE_TOL: f64 = 1e-4;
/// Largest oscillator against phased output deviation accepted by `verify`.
const MODE_TOL: f64 = 1e-2;
/// Most series drawn in a trajectory chart.
const MAX_SERIES: usize = 10;

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    Ok(&cfg.output_dir)
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
    let p = dir.join(name);
    fs::write(&p, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
    Ok(p)
}

fn endpoints(cfg: &ExperimentConfig) -> IntegratorConfig {
    cfg.integrator.with_record(Recording::Endpoints)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> chemnn::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Writes the training program and its species table.
pub fn compile(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let (p, x0) = compile_program(&cfg.net, &cfg.train)?;
    let dir = out_dir(cfg)?;
    write(dir, "program.crn", p.crn().to_text())?;
    write(dir, "species.csv", csv_bytes(|b| p.write_roles_csv(&x0, b))?)?;
    Ok(format!(
        "compiled {} species, {} reactions in {} phases into {}\n",
        p.crn().species_count(),
        p.crn().reactions().len(),
        p.phase_tags().len(),
        dir.display()
    ))
}

/// Reads `species,init` (or `species,role,init`) rows; unnamed species start at 0.
pub fn read_init(crn: &Crn, path: &Path) -> Result<State, CliError> {
    let mut rd = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let sp = col("species").ok_or_else(|| CliError::Config("init file needs a `species` column".into()))?;
    let val = col("init")
        .or_else(|| col("value"))
        .ok_or_else(|| CliError::Config("init file needs an `init` or `value` column".into()))?;
    let mut x = State::zeros(crn.species_count());
    for rec in rd.records() {
        let rec = rec?;
        let name = rec.get(sp).unwrap_or("").trim();
        let raw = rec.get(val).unwrap_or("").trim();
        let v: f64 = raw
            .parse()
            .map_err(|_| CliError::Config(format!("bad initial value `{raw}` for `{name}`")))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::Config(format!("initial value of `{name}` must be finite and nonnegative")));
        }
        x[crn.id(name)?] = v;
    }
    Ok(x)
}

fn trajectory_chart(title: &str, tr: &Trajectory) -> String {
    let series: Vec<(String, Vec<f64>)> = tr
        .species
        .iter()
        .enumerate()
        .take(MAX_SERIES)
        .map(|(i, n)| (n.clone(), tr.states.iter().map(|s| s.as_slice()[i]).collect()))
        .collect();
    svg::line_chart(title, "time", &tr.times, &series)
}

/// Integrates a reaction file. Phase-tagged files run window by window in
/// phased mode or under a clock ring in oscillator mode; untagged files run
/// for `duration`.
pub fn simulate(
    cfg: &ExperimentConfig,
    reactions: &Path,
    init: Option<&Path>,
    duration: Option<f64>,
) -> Result<String, CliError> {
    let text = fs::read_to_string(reactions)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", reactions.display())))?;
    let crn = Crn::parse(&text)?;
    if crn.reactions().is_empty() {
        return Err(CliError::Config(format!("{} contains no reactions", reactions.display())));
    }
    let x0 = match init {
        Some(p) => read_init(&crn, p)?,
        None => State::zeros(crn.species_count()),
    };
    let phases = crn.phase_order();
    let tr = if phases.is_empty() {
        let d = duration.ok_or_else(|| CliError::Config("--duration is required for untagged networks".into()))?;
        if !(d > 0.0 && d.is_finite()) {
            return Err(CliError::Config(format!("duration must be positive, got {d}")));
        }
        integrate(&crn, &x0, d, &cfg.integrator)?
    } else {
        match cfg.mode {
            Mode::Phased => {
                let cycle = cfg.window * phases.len() as f64;
                let cycles = match duration {
                    Some(d) => (d / cycle).ceil().max(1.0) as usize,
                    None => cfg.max_cycles,
                };
                let sched = PhaseSchedule::uniform(&crn, cfg.window, cycles)?;
                run_phased(&crn, &x0, &sched, &cfg.integrator)?
            }
            Mode::Oscillator => run_oscillator(&crn, &x0, &cfg.oscillator, cfg.max_cycles, &cfg.integrator)?.trajectory,
        }
    };
    let dir = out_dir(cfg)?;
    let mut buf = Vec::new();
    tr.write_csv(&mut buf)?;
    write(dir, "trajectory.csv", buf)?;
    if cfg.svg {
        write(dir, "trajectory.svg", trajectory_chart(&reactions.display().to_string(), &tr))?;
    }
    Ok(format!(
        "simulated {} species to t = {} ({} samples) into {}\n",
        crn.species_count(),
        tr.final_time().unwrap_or(0.0),
        tr.len(),
        dir.display()
    ))
}

fn weight_labels(w: &Weights) -> Vec<String> {
    let mut out = Vec::new();
    for (layer, m) in [(1, &w.w1), (2, &w.w2)] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push(format!("w{layer}_{}_{}", i + 1, j + 1));
            }
        }
    }
    out
}

fn weight_values(w: &Weights) -> Vec<f64> {
    let mut out = Vec::new();
    for m in [&w.w1, &w.w2] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push(m[(i, j)]);
            }
        }
    }
    out
}

struct TrainRow {
    iteration: usize,
    block: usize,
    gate: f64,
    updated: bool,
    outputs: Vec<f64>,
    errors: Vec<f64>,
    weights: WeightSet,
}

struct TrainResult {
    terminated_at: Option<usize>,
    initial: WeightSet,
    rows: Vec<TrainRow>,
    final_weights: WeightSet,
}

fn train_phased(cfg: &ExperimentConfig) -> Result<TrainResult, CliError> {
    let opts = ChemOptions {
        window: cfg.window,
        max_iterations: cfg.max_cycles,
        integrator: endpoints(cfg),
    };
    let log = train_chemical(&cfg.net, &cfg.train, &opts)?;
    Ok(TrainResult {
        terminated_at: log.terminated_at,
        initial: cfg.train.init_weights.clone(),
        rows: log
            .records
            .into_iter()
            .map(|r| TrainRow {
                iteration: r.iteration,
                block: r.block,
                gate: r.gate,
                updated: r.updated,
                outputs: r.outputs,
                errors: r.errors,
                weights: r.weights_after,
            })
            .collect(),
        final_weights: log.final_weights,
    })
}

/// One ring revolution per iteration; the clock state carries over. An
/// iteration that leaves the weights unchanged counts as converged.
fn train_oscillator(cfg: &ExperimentConfig) -> Result<TrainResult, CliError> {
    let (p, mut x) = compile_program(&cfg.net, &cfg.train)?;
    let mut osc = cfg.oscillator.clone();
    let integ = endpoints(cfg);
    let gate = p.id(&names::gate())?;
    let blocks = cfg.train.blocks();
    let mut rows = Vec::new();
    let mut terminated_at = None;
    for it in 1..=cfg.max_cycles {
        let before = p.weights(&x)?;
        let run = run_oscillator(p.crn(), &x, &osc, 1, &integ)?;
        x = run.program_state();
        osc.init = State::from_vec(run.final_state.as_slice()[run.program_species..].to_vec());
        let after = p.weights(&x)?;
        let updated = after.max_abs_diff(&before) > 1e-6;
        rows.push(TrainRow {
            iteration: it,
            block: (it - 1) % blocks,
            gate: x[gate],
            updated,
            outputs: Vec::new(),
            errors: Vec::new(),
            weights: after,
        });
        if !updated {
            terminated_at = Some(it);
            break;
        }
    }
    Ok(TrainResult {
        terminated_at,
        initial: cfg.train.init_weights.clone(),
        final_weights: p.weights(&x)?,
        rows,
    })
}

fn iterations_csv(r: &TrainResult, batch: usize) -> Result<Vec<u8>, CliError> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let with_values = r.rows.iter().all(|row| row.outputs.len() == batch);
    let mut header: Vec<String> = ["iteration", "block", "gate", "updated"].map(String::from).to_vec();
    if with_values {
        header.extend((1..=batch).map(|l| format!("y_{l}")));
        header.extend((1..=batch).map(|l| format!("e_{l}")));
    }
    wr.write_record(&header)?;
    for row in &r.rows {
        let mut rec = vec![
            row.iteration.to_string(),
            (row.block + 1).to_string(),
            row.gate.to_string(),
            u8::from(row.updated).to_string(),
        ];
        if with_values {
            rec.extend(row.outputs.iter().map(f64::to_string));
            rec.extend(row.errors.iter().map(f64::to_string));
        }
        wr.write_record(&rec)?;
    }
    wr.into_inner().map_err(|e| CliError::Config(e.to_string()))
}

fn weights_csv(r: &TrainResult) -> Result<Vec<u8>, CliError> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iteration".to_string()];
    header.extend(weight_labels(&r.initial.decode()));
    wr.write_record(&header)?;
    let history = std::iter::once((0, &r.initial)).chain(r.rows.iter().map(|row| (row.iteration, &row.weights)));
    for (it, ws) in history {
        let mut rec = vec![it.to_string()];
        rec.extend(weight_values(&ws.decode()).iter().map(f64::to_string));
        wr.write_record(&rec)?;
    }
    wr.into_inner().map_err(|e| CliError::Config(e.to_string()))
}

fn weights_chart(r: &TrainResult) -> String {
    let labels = weight_labels(&r.initial.decode());
    let history: Vec<Vec<f64>> = std::iter::once(&r.initial)
        .chain(r.rows.iter().map(|row| &row.weights))
        .map(|w| weight_values(&w.decode()))
        .collect();
    let x: Vec<f64> = (0..history.len()).map(|k| k as f64).collect();
    let series: Vec<(String, Vec<f64>)> = labels
        .iter()
        .enumerate()
        .map(|(k, l)| (l.clone(), history.iter().map(|h| h[k]).collect()))
        .collect();
    svg::line_chart("decoded weights", "iteration", &x, &series)
}

/// Runs the chemical training loop, then evaluates the trained weights.
pub fn train(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let r = match cfg.mode {
        Mode::Phased => train_phased(cfg)?,
        Mode::Oscillator => train_oscillator(cfg)?,
    };
    let dir = out_dir(cfg)?;
    write(dir, "iterations.csv", iterations_csv(&r, cfg.train.batch_size)?)?;
    write(dir, "weights.csv", weights_csv(&r)?)?;
    write(dir, "final_weights.csv", csv_bytes(|b| r.final_weights.write_csv(b))?)?;
    if cfg.svg {
        write(dir, "weights.svg", weights_chart(&r))?;
    }

    let inputs: Vec<Vec<f64>> = cfg.train.samples.iter().map(|s| s.x.clone()).collect();
    let chem = chemical_forward(&cfg.net, &r.final_weights, &inputs, cfg.window, &endpoints(cfg))?;
    let orc = oracle::predict(&r.final_weights.decode(), &inputs)?;
    let mut s = String::new();
    match r.terminated_at {
        Some(n) => {
            let _ = writeln!(s, "terminated at iteration {n}");
        }
        None => {
            let _ = writeln!(s, "no termination within {} iterations", cfg.max_cycles);
        }
    }
    let _ = writeln!(s, "weight updates: {}", r.rows.iter().filter(|row| row.updated).count());
    let _ = writeln!(s, "sample,label,chemical,oracle");
    for ((smp, c), o) in cfg.train.samples.iter().zip(&chem).zip(&orc) {
        let x: Vec<String> = smp.x.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "({}),{},{c:.6},{o:.6}", x.join(" "), smp.d);
    }
    if cfg.net.input_width == 2 {
        let g = decision_grid(&cfg.net, &r.final_weights, cfg.grid_size, cfg.window, &endpoints(cfg))?;
        write(dir, "grid.csv", csv_bytes(|b| g.write_csv(b))?)?;
        if cfg.svg {
            write(dir, "grid.svg", svg::heatmap("chemical decision surface", g.n, &g.outputs))?;
        }
        let _ = writeln!(s, "grid: {} of {} points positive, {} mixed rows", g.positives(), g.n * g.n, g.mixed_rows());
    }
    write(dir, "summary.txt", &s)?;
    Ok(s)
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn random_weights(rng: &mut ChaCha8Rng, net: &NetSpec, hi: f64) -> WeightSet {
    let mut m = |r: usize, c: usize| -> Vec<Vec<f64>> {
        (0..r).map(|_| (0..c).map(|_| rng.gen_range(0.0..hi)).collect()).collect()
    };
    let (i, h, o) = (net.input_width, net.hidden_width, net.output_width);
    let (w1p, w1m, w2p, w2m) = (m(h, i + 1), m(h, i + 1), m(o, h + 1), m(o, h + 1));
    fn rows(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }
    WeightSet::from_rows(&rows(&w1p), &rows(&w1m), &rows(&w2p), &rows(&w2m))
}

/// Random feedforward cases whose net inputs stay at least 0.5 away from 0,
/// where sign resolution finishes inside a window.
fn property_cases(cfg: &ExperimentConfig) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0_f64;
    let mut done = 0;
    let mut tried = 0;
    while done < cfg.property_cases && tried < 100 * cfg.property_cases.max(1) {
        tried += 1;
        let ws = random_weights(&mut rng, &cfg.net, 3.0);
        let inputs: Vec<Vec<f64>> = (0..cfg.train.batch_size)
            .map(|_| (0..cfg.net.input_width).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let tr = oracle::forward(&ws.decode(), &Batch::from_inputs(&inputs)?)?;
        if tr.n.iter().chain(tr.n_out.iter()).any(|v| v.abs() < 0.5) {
            continue;
        }
        done += 1;
        let chem = chemical_forward(&cfg.net, &ws, &inputs, cfg.window, &endpoints(cfg))?;
        let orc = oracle::predict(&ws.decode(), &inputs)?;
        for (a, b) in chem.iter().zip(&orc) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(Check {
        name: "random feedforward cases",
        pass: done == cfg.property_cases && worst < PHASE_TOL,
        detail: format!("{done} cases (seed {}), max output deviation {worst:.2e}", cfg.seed),
    })
}

fn report_check(name: &'static str, reports: &[PhaseReport], phases: &[usize]) -> Check {
    let tags: Vec<PhaseTag> = phases.iter().map(|&n| PhaseTag::clock(n)).collect();
    let sel: Vec<&PhaseReport> = reports.iter().filter(|r| tags.contains(&r.phase)).collect();
    let worst = sel
        .iter()
        .map(|r| (r.max_deviation(), r.phase.to_string()))
        .fold((0.0, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    Check {
        name,
        pass: !sel.is_empty() && worst.0 < PHASE_TOL,
        detail: format!("{} phases compared, max deviation {:.2e} {}", sel.len(), worst.0, worst.1),
    }
}

/// Compares one chemical iteration against the floating-point network and
/// runs the structural and randomized checks.
pub fn verify(cfg: &ExperimentConfig, program_file: Option<&Path>) -> Result<String, CliError> {
    let (p, mut x) = compile_program(&cfg.net, &cfg.train)?;
    let mut checks = Vec::new();
    if let Some(path) = program_file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = Crn::parse(&text)?;
        checks.push(Check {
            name: "program file",
            pass: parsed.to_text() == p.crn().to_text(),
            detail: format!(
                "{} species, {} reactions against {} compiled",
                parsed.species_count(),
                parsed.reactions().len(),
                p.crn().reactions().len()
            ),
        });
    }
    let closure = p.phase_closure_violations();
    let structure = p.check_structure();
    checks.push(Check {
        name: "program structure",
        pass: structure.is_ok() && closure.is_empty(),
        detail: match &structure {
            Err(e) => e.to_string(),
            Ok(()) => format!("{} phases, {} phase-closure violations", p.phase_tags().len(), closure.len()),
        },
    });
    let [k1, k2, k3, k4] = cfg.train.judge_rates;
    let eq = bistable_equilibria(k1, k2, k3, k4);
    let saddle = eq.iter().find(|e| e.stability == Stability::Unstable).map(|e| e.e);
    checks.push(Check {
        name: "judgment threshold",
        pass: saddle.is_some_and(|e| (e - cfg.train.threshold).abs() < 1e-12),
        detail: format!("equilibria {:?}", eq.iter().map(|e| e.e).collect::<Vec<_>>()),
    });

    let batch = cfg.train.batch_size;
    let oracle_it = OracleIteration::new(&cfg.train.init_weights, &cfg.train.samples[..batch], cfg.train.eta, cfg.train.threshold)?;
    let mut driver = PhaseDriver::new(p, cfg.window, endpoints(cfg))?;
    let ends = driver.run_cycle(&mut x)?;
    let reports = verify_states(&ends, &driver.program, &oracle_it)?;
    checks.push(report_check("feedforward phases", &reports, &[9, 13, 17, 21]));
    checks.push(report_check("training phases", &reports, &[23, 27, 29]));
    checks.push(property_cases(cfg)?);

    let dir = out_dir(cfg)?;
    write(dir, "phase_reports.csv", csv_bytes(|b| write_reports_csv(&reports, b))?)?;

    if cfg.mode == Mode::Oscillator {
        let inputs: Vec<Vec<f64>> = cfg.train.samples.iter().map(|s| s.x.clone()).collect();
        let phased = chemical_forward(&cfg.net, &cfg.train.init_weights, &inputs, cfg.window, &endpoints(cfg))?;
        let (fp, x0) = compile_feedforward(&cfg.net, &cfg.train.init_weights, &inputs, cfg.train.default_conc)?;
        let run = run_oscillator(fp.crn(), &x0, &cfg.oscillator, 1, &endpoints(cfg))?;
        let osc = fp.outputs(&run.program_state())?;
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(["sample", "phased", "oscillator", "abs_dev"])?;
        let mut worst = 0.0_f64;
        for (l, (a, b)) in phased.iter().zip(&osc).enumerate() {
            worst = worst.max((a - b).abs());
            wr.write_record([(l + 1).to_string(), a.to_string(), b.to_string(), (a - b).abs().to_string()])?;
        }
        write(dir, "mode_report.csv", wr.into_inner().map_err(|e| CliError::Config(e.to_string()))?)?;
        checks.push(Check {
            name: "oscillator against phased",
            pass: worst < MODE_TOL,
            detail: format!(
                "{} clock species, k_o = {}: max output deviation {worst:.2e}",
                cfg.oscillator.species_count, cfg.oscillator.k_o
            ),
        });
    }

    let mut s = String::new();
    for c in &checks {
        let _ = writeln!(s, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let _ = writeln!(s, "{} of {} checks passed", checks.len() - failed.len(), checks.len());
    write(dir, "verify_summary.txt", &s)?;
    if failed.is_empty() {
        Ok(s)
    } else {
        print!("{s}");
        Err(CliError::Verification(failed.join(", ")))
    }
}
