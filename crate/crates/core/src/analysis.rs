//! Decoders and verifiers over states and trajectories.

use std::io::Write;

use crate::compiler::names::{self, Rail};
use crate::compiler::BfcnnProgram;
use crate::crn::{Crn, PhaseTag, SpeciesId, State};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::oracle::{self, Batch, ForwardTrace, Sample};
use crate::weights::{WeightSet, Weights};

/// `x⁺ - x⁻` for a dual-rail pair.
pub fn decode_dual_rail(state: &State, pair: (SpeciesId, SpeciesId)) -> f64 {
    state[pair.0] - state[pair.1]
}

/// Dual-rail decoding by species name.
pub fn decode_named(crn: &Crn, state: &State, plus: &str, minus: &str) -> Result<f64> {
    Ok(decode_dual_rail(state, (crn.id(plus)?, crn.id(minus)?)))
}

/// `‖Γ K(x)‖∞`.
pub fn equilibrium_residual(crn: &Crn, state: &State) -> Result<f64> {
    Ok(crn.rhs(state)?.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Exponential majorant `‖x(t) - x̄‖∞ ≤ M e^{-γ (t - t₀)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub m: f64,
    pub gamma: f64,
    /// Time range used for the log-linear fit.
    pub window: (f64, f64),
    /// RMS deviation of the log residuals from the fitted line.
    pub residual_norm: f64,
}

impl RateFit {
    pub fn bound(&self, t: f64, t0: f64) -> f64 {
        self.m * (-self.gamma * (t - t0)).exp()
    }
}

fn residuals(traj: &Trajectory, target: &[f64], species: &[SpeciesId]) -> Result<Vec<f64>> {
    if target.len() != species.len() {
        return Err(Error::Dimension {
            expected: species.len(),
            got: target.len(),
        });
    }
    if species.is_empty() {
        return Err(Error::FitFailed("no species selected".into()));
    }
    Ok(traj
        .states
        .iter()
        .map(|x| {
            species
                .iter()
                .zip(target)
                .fold(0.0_f64, |m, (s, v)| m.max((x[*s] - v).abs()))
        })
        .collect())
}

/// Fits an exponential rate to the residual `‖x(t) - x̄‖∞` of `species`
/// against `target`, using samples whose residual lies in
/// `[1e-10, 1e-2] × initial`. `M` is the smallest constant for which the
/// bound holds at every sample up to the end of the fit window.
pub fn fit_exponential_rate(traj: &Trajectory, target: &[f64], species: &[SpeciesId]) -> Result<RateFit> {
    let r = residuals(traj, target, species)?;
    let (Some(&r0), Some(&rn)) = (r.first(), r.last()) else {
        return Err(Error::FitFailed("empty trajectory".into()));
    };
    if !(r0 > 0.0) {
        return Err(Error::FitFailed("initial residual is zero".into()));
    }
    if !(rn < 1e-3 * r0) {
        return Err(Error::FitFailed(format!(
            "residual only fell from {r0:e} to {rn:e}"
        )));
    }
    fit_band(traj, &r, 1e-10 * r0, 1e-2 * r0, true)
}

/// Same fit restricted to samples with residual in `[lo, hi]` (absolute),
/// for finite-time statements that only hold away from equilibrium. The
/// residual need not be monotone inside the band; only the majorant is
/// checked.
pub fn fit_exponential_window(
    traj: &Trajectory,
    target: &[f64],
    species: &[SpeciesId],
    lo: f64,
    hi: f64,
) -> Result<RateFit> {
    let r = residuals(traj, target, species)?;
    fit_band(traj, &r, lo, hi, false)
}

fn fit_band(traj: &Trajectory, r: &[f64], lo: f64, hi: f64, monotone: bool) -> Result<RateFit> {
    let t0 = traj.times[0];
    let idx: Vec<usize> = (0..r.len()).filter(|&i| r[i] >= lo && r[i] <= hi).collect();
    if idx.len() < 3 {
        return Err(Error::FitFailed(format!(
            "only {} samples with residual in [{lo:e}, {hi:e}]",
            idx.len()
        )));
    }
    let (first, last) = (idx[0], *idx.last().expect("nonempty"));
    // the residual must keep falling across the band
    for i in (first + 1..=last).filter(|_| monotone) {
        if r[i] > r[i - 1] * (1.0 + 1e-6) + 1e-15 {
            return Err(Error::FitFailed(format!(
                "residual increases at t={}",
                traj.times[i]
            )));
        }
    }
    let pts: Vec<(f64, f64)> = idx.iter().map(|&i| (traj.times[i] - t0, r[i].ln())).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitFailed("fit window has zero length".into()));
    }
    let slope = sxy / sxx;
    let gamma = -slope;
    if !(gamma > 0.0) {
        return Err(Error::FitFailed(format!("residual does not decay (slope {slope})")));
    }
    let intercept = ml - slope * mt;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let m = (0..=last)
        .map(|i| r[i] * (gamma * (traj.times[i] - t0)).exp())
        .fold(0.0_f64, f64::max);
    let fit = RateFit {
        m,
        gamma,
        window: (traj.times[first], traj.times[last]),
        residual_norm: rms,
    };
    for i in 0..=last {
        if r[i] > fit.bound(traj.times[i], t0) * (1.0 + 1e-12) {
            return Err(Error::FitFailed(format!(
                "majorization fails at t={}",
                traj.times[i]
            )));
        }
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Some eigenvalue has `|Re λ| ≤ 1e-9`.
    Degenerate,
}

/// Equilibrium `(ē, ā)` of the judgment network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JudgeEquilibrium {
    pub e: f64,
    pub a: f64,
    pub stability: Stability,
    pub eigenvalues_re: [f64; 2],
}

/// Real parts of the Jacobian eigenvalues of
/// `A -> 2E (k1)`, `2E -> E + A (k2)`, `E + A -> A (k3)`, `E -> 0 (k4)` at `(e, a)`.
pub fn judge_jacobian_re(k: [f64; 4], e: f64, a: f64) -> [f64; 2] {
    let [k1, k2, k3, k4] = k;
    let j11 = -2.0 * k2 * e - k3 * a - k4;
    let j12 = 2.0 * k1 - k3 * e;
    let j21 = 2.0 * k2 * e;
    let j22 = -k1;
    let tr = j11 + j22;
    let det = j11 * j22 - j12 * j21;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [(tr - s) / 2.0, (tr + s) / 2.0]
    } else {
        [tr / 2.0, tr / 2.0]
    }
}

fn classify(re: [f64; 2]) -> Stability {
    if re.iter().any(|v| *v > 1e-9) {
        Stability::Unstable
    } else if re.iter().all(|v| *v < -1e-9) {
        Stability::Stable
    } else {
        Stability::Degenerate
    }
}

/// Equilibria of the judgment network in increasing `e`.
///
/// The origin always exists. For `k1 k2 - 4 k3 k4 > 0` there are two more on
/// the parabola `a = (k2/k1) e²`, and at zero a single double root.
pub fn bistable_equilibria(k1: f64, k2: f64, k3: f64, k4: f64) -> Vec<JudgeEquilibrium> {
    let k = [k1, k2, k3, k4];
    let point = |e: f64| {
        let a = k2 / k1 * e * e;
        let re = judge_jacobian_re(k, e, a);
        JudgeEquilibrium {
            e,
            a,
            stability: classify(re),
            eigenvalues_re: re,
        }
    };
    let mut out = vec![point(0.0)];
    let p = k1 * k2;
    let d = p - 4.0 * k3 * k4;
    let den = 2.0 * k2 * k3;
    if d > 0.0 {
        let s = (p * d).sqrt();
        out.push(point((p - s) / den));
        out.push(point((p + s) / den));
    } else if d == 0.0 {
        let mut q = point(p / den);
        q.stability = Stability::Degenerate;
        out.push(q);
    }
    out
}

/// One compared value.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: String,
    pub chemical: f64,
    pub oracle: f64,
}

impl Comparison {
    pub fn abs_dev(&self) -> f64 {
        (self.chemical - self.oracle).abs()
    }
}

/// Chemical against oracle values at the end of one phase window.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub phase: PhaseTag,
    pub comparisons: Vec<Comparison>,
}

impl PhaseReport {
    pub fn max_deviation(&self) -> f64 {
        self.comparisons.iter().map(Comparison::abs_dev).fold(0.0, f64::max)
    }
}

/// Writes `phase,quantity,chemical,oracle,abs_dev` rows.
pub fn write_reports_csv<W: Write>(reports: &[PhaseReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["phase", "quantity", "chemical", "oracle", "abs_dev"])?;
    for r in reports {
        for c in &r.comparisons {
            wr.write_record([
                r.phase.to_string(),
                c.quantity.clone(),
                c.chemical.to_string(),
                c.oracle.to_string(),
                c.abs_dev().to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Floating-point account of one training iteration on one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleIteration {
    pub batch: Batch,
    pub trace: ForwardTrace,
    pub errors: Vec<f64>,
    /// Whether some `|e_l|` exceeds the threshold.
    pub gate_open: bool,
    pub grad_plus: Weights,
    pub grad_minus: Weights,
    pub weights_before: WeightSet,
    pub weights_after: WeightSet,
}

impl OracleIteration {
    pub fn new(ws: &WeightSet, samples: &[Sample], eta: f64, threshold: f64) -> Result<Self> {
        let batch = Batch::new(samples)?;
        let trace = oracle::forward(&ws.decode(), &batch)?;
        let errors = trace.errors(&batch);
        let gate_open = errors.iter().any(|e| e.abs() > threshold);
        let (grad_plus, grad_minus) = oracle::dual_rail_gradients(ws, &batch)?;
        let weights_after = if gate_open {
            oracle::mbgd_step_dual(ws, &batch, eta)?
        } else {
            ws.clone()
        };
        Ok(Self {
            batch,
            trace,
            errors,
            gate_open,
            grad_plus,
            grad_minus,
            weights_before: ws.clone(),
            weights_after,
        })
    }

    /// Feedforward only; labels are zero and no update happens.
    pub fn feedforward(ws: &WeightSet, inputs: &[Vec<f64>]) -> Result<Self> {
        let samples: Vec<Sample> = inputs.iter().map(|x| Sample::new(x, 0.0)).collect();
        let mut it = Self::new(ws, &samples, 1.0, f64::INFINITY)?;
        it.gate_open = false;
        Ok(it)
    }
}

fn push(out: &mut Vec<Comparison>, quantity: String, chemical: f64, oracle: f64) {
    out.push(Comparison {
        quantity,
        chemical,
        oracle,
    });
}

/// Compares one iteration's phase-end states against the oracle.
///
/// Net inputs are read after O9 and O17, activations after O13 and O21, errors
/// and `1 - y` after O23, gradients after O27 (open gate only) and weights
/// after O29. Phases missing from the trajectory are skipped.
pub fn verify_against_oracle(
    traj: &Trajectory,
    program: &BfcnnProgram,
    oracle: &OracleIteration,
) -> Result<Vec<PhaseReport>> {
    let ends: Vec<(PhaseTag, State)> = traj.window_end_states();
    verify_states(&ends, program, oracle)
}

/// [`verify_against_oracle`] on explicit phase-end states.
pub fn verify_states(
    ends: &[(PhaseTag, State)],
    program: &BfcnnProgram,
    oracle: &OracleIteration,
) -> Result<Vec<PhaseReport>> {
    let lay = program.layout;
    let pt = program.batch;
    if oracle.batch.len() != pt {
        return Err(Error::Dimension {
            expected: pt,
            got: oracle.batch.len(),
        });
    }
    let mut reports = Vec::new();
    for (tag, x) in ends {
        // end states are taken from the last matching window
        let n: usize = match tag.as_str().strip_prefix('O').and_then(|s| s.parse().ok()) {
            Some(n) => n,
            None => continue,
        };
        let mut c = Vec::new();
        match n {
            9 => {
                for l in 1..=pt {
                    for i in 1..=lay.h() {
                        push(
                            &mut c,
                            format!("n_{i}_{l}"),
                            program.net_input(x, i, l)?,
                            oracle.trace.n[(i - 1, l - 1)],
                        );
                    }
                }
            }
            13 => {
                for l in 1..=pt {
                    for i in 1..=lay.h() {
                        push(
                            &mut c,
                            format!("p_{i}_{l}"),
                            program.value(x, &names::hidden(i, l))?,
                            oracle.trace.upsilon[(i - 1, l - 1)],
                        );
                    }
                }
            }
            17 => {
                for l in 1..=pt {
                    for o in 1..=lay.o() {
                        push(
                            &mut c,
                            format!("n_out_{o}_{l}"),
                            program.net_input(x, lay.out_neuron(o), l)?,
                            oracle.trace.n_out[(o - 1, l - 1)],
                        );
                    }
                }
            }
            21 => {
                for l in 1..=pt {
                    for o in 1..=lay.o() {
                        push(
                            &mut c,
                            format!("y_{o}_{l}"),
                            program.value(x, &names::output(o, l))?,
                            oracle.trace.y[(o - 1, l - 1)],
                        );
                    }
                }
            }
            23 => {
                for l in 1..=pt {
                    let e = program.value(x, &names::error_rail(Rail::Plus, l))?
                        - program.value(x, &names::error_rail(Rail::Minus, l))?;
                    push(&mut c, format!("e_{l}"), e, oracle.errors[l - 1]);
                    push(
                        &mut c,
                        format!("one_minus_y_{l}"),
                        program.value(x, &names::one_minus_y(l))?,
                        1.0 - oracle.trace.y[(0, l - 1)],
                    );
                }
            }
            27 if oracle.gate_open => {
                let (gp, gm) = program.gradients(x)?;
                let chem = gp.add(&gm.scale(-1.0));
                let orac = oracle.grad_plus.add(&oracle.grad_minus.scale(-1.0));
                for e in lay.entries() {
                    let (a, b) = if e.layer == 1 {
                        (chem.w1[(e.row, e.col)], orac.w1[(e.row, e.col)])
                    } else {
                        (chem.w2[(e.row, e.col)], orac.w2[(e.row, e.col)])
                    };
                    push(&mut c, format!("grad_{}", e.grad), a, b);
                }
            }
            29 => {
                let ws = program.weights(x)?.decode();
                let target = oracle.weights_after.decode();
                for e in lay.entries() {
                    let (a, b) = if e.layer == 1 {
                        (ws.w1[(e.row, e.col)], target.w1[(e.row, e.col)])
                    } else {
                        (ws.w2[(e.row, e.col)], target.w2[(e.row, e.col)])
                    };
                    push(&mut c, format!("w_{}", e.grad), a, b);
                }
            }
            _ => continue,
        }
        reports.push(PhaseReport {
            phase: tag.clone(),
            comparisons: c,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{CrnBuilder, Role};
    use crate::integrator::{integrate, IntegratorConfig};

    #[test]
    fn dual_rail_examples() {
        let x = State::from_vec(vec![2.5, 1.0, 0.0, 3.0]);
        assert_eq!(decode_dual_rail(&x, (SpeciesId(0), SpeciesId(1))), 1.5);
        assert_eq!(decode_dual_rail(&x, (SpeciesId(2), SpeciesId(3))), -3.0);
    }

    #[test]
    fn judge_points_and_labels() {
        let eq = bistable_equilibria(8.0, 1.0, 2.0, 0.4375);
        let e: Vec<f64> = eq.iter().map(|p| p.e).collect();
        assert_eq!(e, vec![0.0, 0.5, 3.5]);
        let s: Vec<Stability> = eq.iter().map(|p| p.stability).collect();
        assert_eq!(s, vec![Stability::Stable, Stability::Unstable, Stability::Stable]);
        assert_eq!(bistable_equilibria(1.0, 1.0, 1.0, 1.0).len(), 1);
        // k1 k2 = 4 k3 k4
        let dbl = bistable_equilibria(4.0, 1.0, 1.0, 1.0);
        assert_eq!(dbl.len(), 2);
        assert_eq!(dbl[1].stability, Stability::Degenerate);
        assert_eq!(dbl[1].e, 2.0);
    }

    #[test]
    fn analytic_points_have_zero_residual() {
        let mut b = CrnBuilder::new();
        for s in ["E", "A"] {
            b.species(s, Role::Generic).unwrap();
        }
        b.reaction(&[("A", 1)], &[("E", 2)], 8.0, None).unwrap();
        b.reaction(&[("E", 2)], &[("E", 1), ("A", 1)], 1.0, None).unwrap();
        b.reaction(&[("E", 1), ("A", 1)], &[("A", 1)], 2.0, None).unwrap();
        b.reaction(&[("E", 1)], &[], 0.4375, None).unwrap();
        let crn = b.build().unwrap();
        for p in bistable_equilibria(8.0, 1.0, 2.0, 0.4375) {
            let r = equilibrium_residual(&crn, &State::from_vec(vec![p.e, p.a])).unwrap();
            assert!(r < 1e-12, "{r}");
        }
        assert!(equilibrium_residual(&crn, &State::from_vec(vec![1.0, 1.0])).unwrap() > 0.0);
    }

    #[test]
    fn decay_rate_is_one() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("C", 1)], &[], 1.0, None).unwrap();
        let crn = b.build().unwrap();
        let cfg = IntegratorConfig {
            abs_tol: 1e-16,
            ..IntegratorConfig::default()
        };
        let tr = integrate(&crn, &State::from_vec(vec![1.0]), 30.0, &cfg).unwrap();
        let fit = fit_exponential_rate(&tr, &[0.0], &[SpeciesId(0)]).unwrap();
        assert!((fit.gamma - 1.0).abs() < 0.01, "{fit:?}");
    }

    #[test]
    fn growing_residual_rejected() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("C", 1)], &[("C", 2)], 0.1, None).unwrap();
        let crn = b.build().unwrap();
        let tr = integrate(&crn, &State::from_vec(vec![1.0]), 5.0, &IntegratorConfig::default()).unwrap();
        assert!(matches!(
            fit_exponential_rate(&tr, &[0.0], &[SpeciesId(0)]),
            Err(Error::FitFailed(_))
        ));
    }
}
