//! Chemical training loop and chemical evaluation of trained weights.

use crate::compiler::names;
use crate::compiler::{compile, compile_feedforward, BfcnnProgram, NetSpec, TrainSpec};
use crate::crn::{PhaseTag, State};
use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, PhasedRunner, Recording};
use crate::weights::WeightSet;

/// Gate concentration below which an iteration counts as converged.
pub const GATE_CLOSED: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ChemOptions {
    /// Duration of every phase window.
    pub window: f64,
    pub max_iterations: usize,
    pub integrator: IntegratorConfig,
}

impl Default for ChemOptions {
    fn default() -> Self {
        Self {
            window: 50.0,
            max_iterations: 100,
            integrator: IntegratorConfig::default().with_record(Recording::Endpoints),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChemIteration {
    /// 1-based.
    pub iteration: usize,
    /// 0-based block of samples seen in this iteration.
    pub block: usize,
    pub weights_before: WeightSet,
    pub outputs: Vec<f64>,
    pub errors: Vec<f64>,
    pub gate: f64,
    pub updated: bool,
    pub weights_after: WeightSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChemTrainLog {
    /// Iteration whose judgment closed the gate, if any.
    pub terminated_at: Option<usize>,
    pub records: Vec<ChemIteration>,
    pub final_weights: WeightSet,
    pub final_state: State,
}

impl ChemTrainLog {
    pub fn updates(&self) -> usize {
        self.records.iter().filter(|r| r.updated).count()
    }
}

/// Drives a compiled program window by window in idealized gating mode.
#[derive(Debug, Clone)]
pub struct PhaseDriver {
    pub program: BfcnnProgram,
    runner: PhasedRunner,
    pub window: f64,
    pub cfg: IntegratorConfig,
    pub time: f64,
}

impl PhaseDriver {
    pub fn new(program: BfcnnProgram, window: f64, cfg: IntegratorConfig) -> Result<Self> {
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::Config(format!("window must be positive, got {window}")));
        }
        cfg.validate()?;
        let runner = PhasedRunner::new(&program.crn);
        Ok(Self {
            program,
            runner,
            window,
            cfg,
            time: 0.0,
        })
    }

    pub fn run_phase(&mut self, x: &mut State, tag: &PhaseTag) -> Result<()> {
        self.runner
            .run_window(x, tag, self.time, self.window, &self.cfg, None)?;
        self.time += self.window;
        Ok(())
    }

    /// Runs `tags` in order and returns the state at the end of each.
    pub fn run_phases(&mut self, x: &mut State, tags: &[PhaseTag]) -> Result<Vec<(PhaseTag, State)>> {
        let mut out = Vec::with_capacity(tags.len());
        for t in tags {
            self.run_phase(x, t)?;
            out.push((t.clone(), x.clone()));
        }
        Ok(out)
    }

    /// One pass over every phase of the program.
    pub fn run_cycle(&mut self, x: &mut State) -> Result<Vec<(PhaseTag, State)>> {
        let tags = self.program.phase_tags();
        self.run_phases(x, &tags)
    }
}

fn errors_after_precalc(p: &BfcnnProgram, x: &State) -> Result<Vec<f64>> {
    (1..=p.batch)
        .map(|l| {
            Ok(p.value(x, &names::error_rail(names::Rail::Plus, l))?
                - p.value(x, &names::error_rail(names::Rail::Minus, l))?)
        })
        .collect()
}

/// Runs the chemical training loop until the judgment closes the gate or
/// `max_iterations` iterations have run.
pub fn train_chemical(net: &NetSpec, train: &TrainSpec, opts: &ChemOptions) -> Result<ChemTrainLog> {
    let (program, mut x) = compile(net, train)?;
    let blocks = train.blocks();
    let tags = program.phase_tags();
    let split = tags
        .iter()
        .position(|t| *t == PhaseTag::clock(25))
        .expect("training program has a judgment phase")
        + 1;
    let mut driver = PhaseDriver::new(program, opts.window, opts.integrator.clone())?;
    let gate = driver.program.id(&names::gate())?;
    let mut records = Vec::new();
    let mut terminated_at = None;
    for it in 1..=opts.max_iterations {
        let weights_before = driver.program.weights(&x)?;
        driver.run_phases(&mut x, &tags[..split])?;
        // O23 consumes the outputs into working copies; Yt keeps y
        let outputs = (1..=driver.program.batch)
            .map(|l| driver.program.value(&x, &names::y_keep(l)))
            .collect::<Result<Vec<_>>>()?;
        let errors = errors_after_precalc(&driver.program, &x)?;
        let g = x[gate];
        let closed = g < GATE_CLOSED;
        if !closed {
            driver.run_phases(&mut x, &tags[split..])?;
        }
        let weights_after = driver.program.weights(&x)?;
        records.push(ChemIteration {
            iteration: it,
            block: (it - 1) % blocks,
            weights_before,
            outputs,
            errors,
            gate: g,
            updated: !closed,
            weights_after,
        });
        if closed {
            terminated_at = Some(it);
            break;
        }
    }
    Ok(ChemTrainLog {
        terminated_at,
        final_weights: driver.program.weights(&x)?,
        records,
        final_state: x,
    })
}

/// Outputs of the chemical feedforward phases for each input vector.
pub fn chemical_forward(
    net: &NetSpec,
    ws: &WeightSet,
    inputs: &[Vec<f64>],
    window: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let (program, mut x) = compile_feedforward(net, ws, inputs, 1e-6)?;
    let mut driver = PhaseDriver::new(program, window, cfg.clone())?;
    driver.run_cycle(&mut x)?;
    driver.program.outputs(&x)
}

/// Cell-centre grid over the unit square with one output per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionGrid {
    pub n: usize,
    /// Row-major, `x₂` varying slowest.
    pub points: Vec<[f64; 2]>,
    pub outputs: Vec<f64>,
}

impl DecisionGrid {
    pub fn points(n: usize) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                out.push([(c as f64 + 0.5) / n as f64, (r as f64 + 0.5) / n as f64]);
            }
        }
        out
    }

    /// `output > 0.5` per point.
    pub fn classes(&self) -> Vec<bool> {
        self.outputs.iter().map(|y| *y > 0.5).collect()
    }

    pub fn positives(&self) -> usize {
        self.classes().iter().filter(|c| **c).count()
    }

    /// Rows containing both classes.
    pub fn mixed_rows(&self) -> usize {
        let c = self.classes();
        c.chunks(self.n)
            .filter(|row| row.iter().any(|v| *v) && row.iter().any(|v| !*v))
            .count()
    }

    /// Writes `x1,x2,output,class`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x1", "x2", "output", "class"])?;
        for (p, y) in self.points.iter().zip(&self.outputs) {
            wr.write_record([
                p[0].to_string(),
                p[1].to_string(),
                y.to_string(),
                u8::from(*y > 0.5).to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Classifies an `n × n` grid with the chemical feedforward phases.
pub fn decision_grid(
    net: &NetSpec,
    ws: &WeightSet,
    n: usize,
    window: f64,
    cfg: &IntegratorConfig,
) -> Result<DecisionGrid> {
    if net.input_width != 2 {
        return Err(Error::Config("decision grids need two inputs".into()));
    }
    let points = DecisionGrid::points(n);
    let inputs: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    let outputs = chemical_forward(net, ws, &inputs, window, cfg)?;
    Ok(DecisionGrid { n, points, outputs })
}

/// Same grid evaluated by the floating-point network.
pub fn oracle_grid(ws: &WeightSet, n: usize) -> Result<DecisionGrid> {
    let points = DecisionGrid::points(n);
    let inputs: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    let outputs = crate::oracle::predict(&ws.decode(), &inputs)?;
    Ok(DecisionGrid { n, points, outputs })
}
