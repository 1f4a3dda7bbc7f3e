//! Floating-point reference network: forward pass, squared loss, backprop
//! gradients and mini-batch gradient descent.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::weights::{WeightSet, Weights};

/// One labelled training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub d: f64,
}

impl Sample {
    pub fn new(x: &[f64], d: f64) -> Self {
        Self { x: x.to_vec(), d }
    }
}

/// Inputs stacked as columns with a trailing row of ones, plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub xi: DMatrix<f64>,
    pub delta: DMatrix<f64>,
}

impl Batch {
    pub fn new(samples: &[Sample]) -> Result<Self> {
        let width = samples
            .first()
            .map(|s| s.x.len())
            .ok_or_else(|| Error::Config("empty batch".into()))?;
        if samples.iter().any(|s| s.x.len() != width) {
            return Err(Error::Config("samples differ in input width".into()));
        }
        let n = samples.len();
        let xi = DMatrix::from_fn(width + 1, n, |i, l| {
            if i == width {
                1.0
            } else {
                samples[l].x[i]
            }
        });
        let delta = DMatrix::from_fn(1, n, |_, l| samples[l].d);
        Ok(Self { xi, delta })
    }

    pub fn from_inputs(inputs: &[Vec<f64>]) -> Result<Self> {
        let samples: Vec<Sample> = inputs.iter().map(|x| Sample::new(x, 0.0)).collect();
        Self::new(&samples)
    }

    pub fn len(&self) -> usize {
        self.xi.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.ncols() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Hidden net inputs, `H × p̃`.
    pub n: DMatrix<f64>,
    /// Hidden activations with a trailing row of ones, `(H+1) × p̃`.
    pub upsilon: DMatrix<f64>,
    /// Output net inputs, `O × p̃`.
    pub n_out: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl ForwardTrace {
    /// `d - y` per sample for a single-output network.
    pub fn errors(&self, batch: &Batch) -> Vec<f64> {
        (0..batch.len())
            .map(|l| batch.delta[(0, l)] - self.y[(0, l)])
            .collect()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn with_ones(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(r + 1, c, |i, j| if i == r { 1.0 } else { m[(i, j)] })
}

pub fn forward(w: &Weights, batch: &Batch) -> Result<ForwardTrace> {
    w.check_shape()?;
    if w.w1.ncols() != batch.xi.nrows() {
        return Err(Error::Dimension {
            expected: w.w1.ncols(),
            got: batch.xi.nrows(),
        });
    }
    let n = &w.w1 * &batch.xi;
    let upsilon = with_ones(&n.map(sigmoid));
    let n_out = &w.w2 * &upsilon;
    let y = n_out.map(sigmoid);
    Ok(ForwardTrace {
        n,
        upsilon,
        n_out,
        y,
    })
}

/// `½ Σ (δ - y)²`.
pub fn loss(y: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    0.5 * (delta - y).map(|v| v * v).sum()
}

/// Negative gradient `-∂ℰ/∂𝒲` for both layers.
pub fn gradients(w: &Weights, batch: &Batch) -> Result<Weights> {
    let tr = forward(w, batch)?;
    let h = w.hidden_width();
    // output deltas e·y(1-y)
    let e = &batch.delta - &tr.y;
    let d_out = e.zip_map(&tr.y, |e, y| e * y * (1.0 - y));
    let g2 = &d_out * tr.upsilon.transpose();
    let w2_no_bias = w.w2.columns(0, h).into_owned();
    let back = w2_no_bias.transpose() * &d_out;
    let p = tr.n.map(sigmoid);
    let d_hidden = back.zip_map(&p, |b, p| b * p * (1.0 - p));
    let g1 = &d_hidden * batch.xi.transpose();
    Ok(Weights { w1: g1, w2: g2 })
}

/// Dual-rail components `(par⁺, par⁻)` of the negative gradient, expanded the
/// way the reaction program computes them: error and second-layer weights keep
/// their rails and cross terms collect onto the minus rail.
pub fn dual_rail_gradients(ws: &WeightSet, batch: &Batch) -> Result<(Weights, Weights)> {
    let w = ws.decode();
    let tr = forward(&w, batch)?;
    let (hh, o, p) = (w.hidden_width(), w.output_width(), batch.len());
    let cols1 = w.w1.ncols();
    let mut g1p = DMatrix::zeros(hh, cols1);
    let mut g1m = DMatrix::zeros(hh, cols1);
    let mut g2p = DMatrix::zeros(o, hh + 1);
    let mut g2m = DMatrix::zeros(o, hh + 1);
    for l in 0..p {
        for k in 0..o {
            let e = batch.delta[(k, l)] - tr.y[(k, l)];
            let (ep, em) = (e.max(0.0), (-e).max(0.0));
            let y = tr.y[(k, l)];
            let dy = y * (1.0 - y);
            for j in 0..=hh {
                let u = tr.upsilon[(j, l)];
                g2p[(k, j)] += ep * dy * u;
                g2m[(k, j)] += em * dy * u;
            }
            for i in 0..hh {
                let pa = tr.upsilon[(i, l)];
                let dp = pa * (1.0 - pa);
                let (wp, wm) = (ws.w2p[(k, i)], ws.w2m[(k, i)]);
                let plus = ep * wp + em * wm;
                let minus = ep * wm + em * wp;
                for j in 0..cols1 {
                    let f = dy * dp * batch.xi[(j, l)];
                    g1p[(i, j)] += plus * f;
                    g1m[(i, j)] += minus * f;
                }
            }
        }
    }
    Ok((Weights { w1: g1p, w2: g2p }, Weights { w1: g1m, w2: g2m }))
}

/// `𝒲 + η·(-∂ℰ/∂𝒲)`.
pub fn mbgd_step(w: &Weights, batch: &Batch, eta: f64) -> Result<Weights> {
    Ok(w.add(&gradients(w, batch)?.scale(eta)))
}

/// Dual-rail update `w± += η·par±`.
pub fn mbgd_step_dual(ws: &WeightSet, batch: &Batch, eta: f64) -> Result<WeightSet> {
    let (gp, gm) = dual_rail_gradients(ws, batch)?;
    Ok(WeightSet {
        w1p: &ws.w1p + gp.w1 * eta,
        w1m: &ws.w1m + gm.w1 * eta,
        w2p: &ws.w2p + gp.w2 * eta,
        w2m: &ws.w2m + gm.w2 * eta,
    })
}

/// Samples of block `b` (0-based) under consecutive blocking.
pub fn block(samples: &[Sample], batch_size: usize, b: usize) -> &[Sample] {
    &samples[b * batch_size..(b + 1) * batch_size]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub eta: f64,
    pub threshold: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub block: usize,
    /// Weights entering the iteration.
    pub weights: WeightSet,
    pub outputs: Vec<f64>,
    pub errors: Vec<f64>,
    pub loss: f64,
    pub updated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    /// Iteration whose batch first met the threshold, if any.
    pub terminated_at: Option<usize>,
    pub records: Vec<IterationRecord>,
    pub final_weights: WeightSet,
}

impl TrainLog {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

/// Mini-batch gradient descent cycling blocks in order; stops at the first
/// iteration where every `|e_l|` of the current block is below the threshold.
pub fn train(samples: &[Sample], init: &WeightSet, cfg: &TrainConfig) -> Result<TrainLog> {
    let p = samples.len();
    if cfg.batch_size == 0 || p % cfg.batch_size != 0 {
        return Err(Error::Config(format!(
            "batch size {} does not divide {p} samples",
            cfg.batch_size
        )));
    }
    let blocks = p / cfg.batch_size;
    let mut ws = init.clone();
    let mut records = Vec::new();
    for m in 1..=cfg.max_iterations {
        let b = (m - 1) % blocks;
        let batch = Batch::new(block(samples, cfg.batch_size, b))?;
        let tr = forward(&ws.decode(), &batch)?;
        let errors = tr.errors(&batch);
        let done = errors.iter().all(|e| e.abs() < cfg.threshold);
        let mut rec = IterationRecord {
            iteration: m,
            block: b,
            weights: ws.clone(),
            outputs: tr.y.row(0).iter().copied().collect(),
            errors,
            loss: loss(&tr.y, &batch.delta),
            updated: !done,
        };
        if done {
            records.push(rec);
            return Ok(TrainLog {
                terminated_at: Some(m),
                records,
                final_weights: ws,
            });
        }
        ws = mbgd_step_dual(&ws, &batch, cfg.eta)?;
        rec.updated = true;
        records.push(rec);
    }
    Ok(TrainLog {
        terminated_at: None,
        records,
        final_weights: ws,
    })
}

/// Forward outputs of a single-output network on every sample.
pub fn predict(w: &Weights, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let batch = Batch::from_inputs(inputs)?;
    Ok(forward(w, &batch)?.y.row(0).iter().copied().collect())
}
