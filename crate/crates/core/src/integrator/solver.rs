use super::{IntegratorConfig, Method, Recording, Trajectory};
use crate::crn::{Crn, MassAction, State};
use crate::error::{Error, Result};

/// Counters from one integration call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub clamped: usize,
}

impl StepStats {
    fn absorb(&mut self, other: StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.clamped += other.clamped;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Control {
    Continue,
    Stop,
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Work {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    ynew: Vec<f64>,
    err: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            ynew: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn fastest_species(ma: &MassAction, x: &[f64]) -> usize {
    let d = ma.rhs(x);
    d.iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map_or(0, |(i, _)| i)
}

fn underflow(ma: &MassAction, x: &[f64], t: f64, names: &[String]) -> Error {
    let i = fastest_species(ma, x);
    Error::StepUnderflow {
        time: t,
        species: names.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
    }
}

fn min_value(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Advances `x` from `t0` to `t_end`, calling `on_step` after every accepted step.
/// Returns the time actually reached (earlier than `t_end` when stopped).
pub(crate) fn drive<F>(
    ma: &MassAction,
    names: &[String],
    x: &mut [f64],
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut on_step: F,
) -> Result<(f64, StepStats)>
where
    F: FnMut(f64, &[f64]) -> Control,
{
    cfg.validate()?;
    if t_end <= t0 {
        return Ok((t0, StepStats::default()));
    }
    match cfg.method {
        Method::Dopri45 => dopri(ma, names, x, t0, t_end, cfg, &mut on_step),
        Method::Rk4 => rk4(ma, names, x, t0, t_end, cfg, &mut on_step),
    }
}

fn stage(y: &[f64], h: f64, terms: &[(f64, &[f64])], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn dopri<F>(
    ma: &MassAction,
    names: &[String],
    y: &mut [f64],
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    on_step: &mut F,
) -> Result<(f64, StepStats)>
where
    F: FnMut(f64, &[f64]) -> Control,
{
    let n = y.len();
    let mut w = Work::new(n);
    let mut stats = StepStats::default();
    let (atol, rtol) = (cfg.abs_tol, cfg.rel_tol);

    ma.rhs_into(y, &mut w.k[0]);
    let mut h = initial_step(ma, y, &w.k[0], t_end - t0, atol, rtol);
    let mut t = t0;
    let mut fsal_valid = true;

    while t < t_end {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::TooManySteps(cfg.max_steps));
        }
        if !fsal_valid {
            ma.rhs_into(y, &mut w.k[0]);
            fsal_valid = true;
        }
        let remaining = t_end - t;
        let mut last = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        if h < cfg.min_step * t.abs().max(1.0) && !last {
            return Err(underflow(ma, y, t, names));
        }

        let [k1, k2, k3, k4, k5, k6, k7] = &mut w.k;
        stage(y, h, &[(A21, k1)], &mut w.tmp);
        ma.rhs_into(&w.tmp, k2);
        stage(y, h, &[(A31, k1), (A32, k2)], &mut w.tmp);
        ma.rhs_into(&w.tmp, k3);
        stage(y, h, &[(A41, k1), (A42, k2), (A43, k3)], &mut w.tmp);
        ma.rhs_into(&w.tmp, k4);
        stage(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], &mut w.tmp);
        ma.rhs_into(&w.tmp, k5);
        stage(
            y,
            h,
            &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
            &mut w.tmp,
        );
        ma.rhs_into(&w.tmp, k6);
        stage(
            y,
            h,
            &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)],
            &mut w.ynew,
        );
        ma.rhs_into(&w.ynew, k7);

        let mut err_norm: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            w.err[i] = e;
            let sc = atol + rtol * y[i].abs().max(w.ynew[i].abs());
            err_norm = err_norm.max(e.abs() / sc);
        }
        if !err_norm.is_finite() {
            stats.rejected += 1;
            h *= 0.25;
            continue;
        }

        if err_norm > 1.0 {
            stats.rejected += 1;
            h *= (0.9 * err_norm.powf(-0.2)).max(0.2);
            continue;
        }

        let lowest = min_value(&w.ynew);
        let mut clamped = false;
        if lowest < 0.0 && cfg.clamp_negative {
            if lowest > -atol {
                w.ynew.iter_mut().for_each(|v| *v = v.max(0.0));
                clamped = true;
                stats.clamped += 1;
            } else {
                stats.rejected += 1;
                h *= 0.5;
                continue;
            }
        }

        t = if last { t_end } else { t + h };
        y.copy_from_slice(&w.ynew);
        w.k.swap(0, 6);
        fsal_valid = !clamped;
        stats.accepted += 1;

        if on_step(t, y) == Control::Stop {
            return Ok((t, stats));
        }

        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((t, stats))
}

fn initial_step(ma: &MassAction, y: &[f64], f0: &[f64], span: f64, atol: f64, rtol: f64) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| atol + rtol * v.abs()).collect();
    let norm = |v: &[f64]| {
        v.iter()
            .zip(&sc)
            .map(|(a, s)| (a / s) * (a / s))
            .sum::<f64>()
            .sqrt()
            / (n.max(1) as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let f1 = ma.rhs(&y1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

fn rk4_step(ma: &MassAction, y: &[f64], h: f64, w: &mut Work) {
    let [k1, k2, k3, k4, ..] = &mut w.k;
    ma.rhs_into(y, k1);
    stage(y, h, &[(0.5, k1)], &mut w.tmp);
    ma.rhs_into(&w.tmp, k2);
    stage(y, h, &[(0.5, k2)], &mut w.tmp);
    ma.rhs_into(&w.tmp, k3);
    stage(y, h, &[(1.0, k3)], &mut w.tmp);
    ma.rhs_into(&w.tmp, k4);
    let sixth = 1.0 / 6.0;
    stage(
        y,
        h,
        &[(sixth, k1), (2.0 * sixth, k2), (2.0 * sixth, k3), (sixth, k4)],
        &mut w.ynew,
    );
}

fn rk4<F>(
    ma: &MassAction,
    names: &[String],
    y: &mut [f64],
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    on_step: &mut F,
) -> Result<(f64, StepStats)>
where
    F: FnMut(f64, &[f64]) -> Control,
{
    let mut w = Work::new(y.len());
    let mut stats = StepStats::default();
    let span = t_end - t0;
    let n_steps = (span / cfg.step - 1e-9).ceil().max(1.0) as usize;
    let h_nominal = span / n_steps as f64;
    let mut t = t0;
    let mut done = 0usize;
    while done < n_steps {
        let target = if done + 1 == n_steps {
            t_end
        } else {
            t0 + (done + 1) as f64 * h_nominal
        };
        // sub-steps only when a full step overshoots below zero
        let mut sub = 1usize;
        loop {
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(Error::TooManySteps(cfg.max_steps));
            }
            let h = (target - t) / sub as f64;
            if h < cfg.min_step * t.abs().max(1.0) {
                return Err(underflow(ma, y, t, names));
            }
            let mut trial = y.to_vec();
            let mut ok = true;
            let mut clamps = 0;
            for _ in 0..sub {
                rk4_step(ma, &trial, h, &mut w);
                let lowest = min_value(&w.ynew);
                if lowest < 0.0 && cfg.clamp_negative {
                    if lowest > -cfg.abs_tol {
                        w.ynew.iter_mut().for_each(|v| *v = v.max(0.0));
                        clamps += 1;
                    } else {
                        ok = false;
                        break;
                    }
                }
                trial.copy_from_slice(&w.ynew);
            }
            if ok {
                y.copy_from_slice(&trial);
                stats.clamped += clamps;
                break;
            }
            stats.rejected += 1;
            sub *= 2;
        }
        t = target;
        done += 1;
        stats.accepted += 1;
        if on_step(t, y) == Control::Stop {
            return Ok((t, stats));
        }
    }
    Ok((t, stats))
}

fn check_initial(x0: &State, n: usize) -> Result<()> {
    if x0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x0.len(),
        });
    }
    if let Some(v) = x0.as_slice().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!(
            "initial state must be finite and nonnegative, found {v}"
        )));
    }
    Ok(())
}

/// Integrates a prepared kinetics plan in place, appending samples to `traj`
/// according to `cfg.record`. The starting sample is recorded too.
pub fn integrate_kinetics(
    ma: &MassAction,
    names: &[String],
    x: &mut State,
    t0: f64,
    duration: f64,
    cfg: &IntegratorConfig,
    mut traj: Option<&mut Trajectory>,
) -> Result<StepStats> {
    check_initial(x, ma.species_count())?;
    if duration < 0.0 || !duration.is_finite() {
        return Err(Error::Config(format!("duration must be nonnegative, got {duration}")));
    }
    if let Some(tr) = traj.as_deref_mut() {
        tr.push(t0, x.as_slice());
    }
    let t_end = t0 + duration;
    let mut count = 0usize;
    let record = cfg.record;
    let (_, stats) = drive(ma, names, x.as_mut_slice(), t0, t_end, cfg, |t, y| {
        count += 1;
        if let Some(tr) = traj.as_deref_mut() {
            let keep = match record {
                Recording::EveryStep => true,
                Recording::Stride(s) => count % s == 0,
                Recording::Endpoints => false,
            };
            if keep {
                tr.push(t, y);
            }
        }
        Control::Continue
    })?;
    if let Some(tr) = traj {
        tr.push(t_end, x.as_slice());
    }
    Ok(stats)
}

/// Integrates the full network from `x0` for `duration` time units.
pub fn integrate(crn: &Crn, x0: &State, duration: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let ma = crn.kinetics();
    let names = crn.registry().names().to_vec();
    let mut traj = Trajectory::new(names.clone());
    let mut x = x0.clone();
    integrate_kinetics(&ma, &names, &mut x, 0.0, duration, cfg, Some(&mut traj))?;
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub state: State,
    pub converged: bool,
    pub elapsed: f64,
}

fn residual(ma: &MassAction, x: &[f64]) -> f64 {
    ma.rhs(x).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Integrates until `‖rhs(x)‖∞ < residual_tol` or `max_time` elapses.
pub fn integrate_to_equilibrium(
    crn: &Crn,
    x0: &State,
    residual_tol: f64,
    max_time: f64,
    cfg: &IntegratorConfig,
) -> Result<Equilibrium> {
    if !(residual_tol > 0.0) {
        return Err(Error::Config("residual_tol must be positive".into()));
    }
    check_initial(x0, crn.species_count())?;
    let ma = crn.kinetics();
    let mut x = x0.clone();
    if residual(&ma, x.as_slice()) < residual_tol {
        return Ok(Equilibrium {
            state: x,
            converged: true,
            elapsed: 0.0,
        });
    }
    let names = crn.registry().names();
    let mut converged = false;
    let mut total = StepStats::default();
    let (t, stats) = drive(&ma, names, x.as_mut_slice(), 0.0, max_time, cfg, |_, y| {
        if residual(&ma, y) < residual_tol {
            converged = true;
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    total.absorb(stats);
    Ok(Equilibrium {
        state: x,
        converged,
        elapsed: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::CrnBuilder;

    fn decay() -> Crn {
        let mut b = CrnBuilder::new();
        b.reaction(&[("C", 1)], &[], 1.0, None).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn decay_matches_closed_form() {
        let tr = integrate(&decay(), &State::from_vec(vec![1.0]), 1.0, &IntegratorConfig::default())
            .unwrap();
        let c = tr.last().unwrap().as_slice()[0];
        assert!((c - (-1.0f64).exp()).abs() < 1e-8);
        assert_eq!(tr.final_time(), Some(1.0));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let x0 = State::from_vec(vec![1.0]);
        let exact = (-1.0f64).exp();
        let err = |h: f64| {
            let tr = integrate(&decay(), &x0, 1.0, &IntegratorConfig::rk4(h)).unwrap();
            (tr.last().unwrap().as_slice()[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn times_strictly_increase() {
        let tr = integrate(&decay(), &State::from_vec(vec![2.0]), 5.0, &IntegratorConfig::default())
            .unwrap();
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        assert!(tr.states.iter().all(State::is_nonnegative));
    }

    #[test]
    fn zero_duration_is_identity() {
        let x0 = State::from_vec(vec![0.7]);
        let tr = integrate(&decay(), &x0, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.last(), Some(&x0));
    }

    #[test]
    fn negative_initial_state_rejected() {
        let r = integrate(&decay(), &State::from_vec(vec![-1.0]), 1.0, &IntegratorConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn annihilation_reaches_boundary() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("Np", 1), ("Nm", 1)], &[], 1.0, None).unwrap();
        let crn = b.build().unwrap();
        let eq = integrate_to_equilibrium(
            &crn,
            &State::from_vec(vec![3.0, 1.0]),
            1e-10,
            1e3,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(eq.converged);
        assert!((eq.state.as_slice()[0] - 2.0).abs() < 1e-9);
        assert!(eq.state.as_slice()[1] < 1e-9);

        let again =
            integrate_to_equilibrium(&crn, &eq.state, 1e-10, 1e3, &IntegratorConfig::default())
                .unwrap();
        assert!(again.converged);
        assert_eq!(again.elapsed, 0.0);
        assert_eq!(again.state, eq.state);
    }

    #[test]
    fn step_underflow_names_species() {
        // finite-time blow-up of 2A -> 3A
        let mut b = CrnBuilder::new();
        b.reaction(&[("B", 1)], &[("B", 1), ("Z", 1)], 1.0, None).unwrap();
        b.reaction(&[("A", 2)], &[("A", 3)], 1.0, None).unwrap();
        let crn = b.build().unwrap();
        let err = integrate(
            &crn,
            &State::from_vec(vec![1.0, 0.0, 1.0]),
            5.0,
            &IntegratorConfig::default(),
        )
        .unwrap_err();
        match err {
            Error::StepUnderflow { species, time } => {
                assert_eq!(species, "A");
                assert!(time < 1.01);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
