use std::collections::HashMap;

use super::solver::{drive, integrate_kinetics, Control};
use super::{IntegratorConfig, Recording, StepStats, Trajectory};
use crate::crn::{add_catalyst, Crn, MassAction, PhaseTag, Role, SpeciesId, State};
use crate::error::{Error, Result};
use crate::oscillator::{assign_phase_tags, build_oscillator, OscillatorSpec};

/// Ordered phase windows repeated `cycles` times.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    entries: Vec<(PhaseTag, f64)>,
    cycles: usize,
}

impl PhaseSchedule {
    pub fn new(entries: Vec<(PhaseTag, f64)>, cycles: usize) -> Result<Self> {
        if let Some((tag, d)) = entries.iter().find(|(_, d)| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!(
                "phase {tag} has non-positive duration {d}"
            )));
        }
        Ok(Self { entries, cycles })
    }

    /// Every phase of `crn` in first-appearance order, each lasting `window`.
    pub fn uniform(crn: &Crn, window: f64, cycles: usize) -> Result<Self> {
        Self::new(
            crn.phase_order().into_iter().map(|p| (p, window)).collect(),
            cycles,
        )
    }

    pub fn entries(&self) -> &[(PhaseTag, f64)] {
        &self.entries
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn cycle_length(&self) -> f64 {
        self.entries.iter().map(|(_, d)| d).sum()
    }
}

/// Per-phase kinetics plans for idealized gating, where a phase window runs
/// only the reactions carrying its tag.
#[derive(Debug, Clone)]
pub struct PhasedRunner {
    names: Vec<String>,
    plans: HashMap<PhaseTag, MassAction>,
}

impl PhasedRunner {
    pub fn new(crn: &Crn) -> Self {
        let plans = crn
            .phase_order()
            .into_iter()
            .map(|p| {
                let idx = crn.reactions_in_phase(&p);
                let plan = MassAction::new(crn, idx);
                (p, plan)
            })
            .collect();
        Self {
            names: crn.registry().names().to_vec(),
            plans,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_phase(&self, tag: &PhaseTag) -> bool {
        self.plans.contains_key(tag)
    }

    pub fn plan(&self, tag: &PhaseTag) -> Result<&MassAction> {
        self.plans
            .get(tag)
            .ok_or_else(|| Error::UnknownPhase(tag.to_string()))
    }

    /// Integrates one window of `tag` starting at time `t0`.
    pub fn run_window(
        &self,
        x: &mut State,
        tag: &PhaseTag,
        t0: f64,
        duration: f64,
        cfg: &IntegratorConfig,
        traj: Option<&mut Trajectory>,
    ) -> Result<StepStats> {
        let plan = self.plan(tag)?;
        let traj = traj.map(|t| {
            t.mark(t0, tag.clone());
            t
        });
        integrate_kinetics(plan, &self.names, x, t0, duration, cfg, traj)
    }
}

/// Runs `schedule` in idealized gating mode.
pub fn run_phased(
    crn: &Crn,
    x0: &State,
    schedule: &PhaseSchedule,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let runner = PhasedRunner::new(crn);
    for (tag, _) in schedule.entries() {
        runner.plan(tag)?;
    }
    let mut traj = Trajectory::new(runner.names().to_vec());
    let mut x = x0.clone();
    traj.push(0.0, x.as_slice());
    let mut t = 0.0;
    for _ in 0..schedule.cycles() {
        for (tag, d) in schedule.entries() {
            runner.run_window(&mut x, tag, t, *d, cfg, Some(&mut traj))?;
            t += d;
        }
    }
    Ok(traj)
}

/// Result of a clock-driven simulation.
#[derive(Debug, Clone)]
pub struct OscillatorRun {
    /// Program reactions gated by their clock species, plus the ring.
    pub crn: Crn,
    pub trajectory: Trajectory,
    /// Ids of the clock species `O1..Or` in the combined registry.
    pub clocks: Vec<SpeciesId>,
    /// Phase tag to clock species.
    pub assignment: Vec<(PhaseTag, SpeciesId)>,
    pub program_species: usize,
    pub revolutions: usize,
    pub final_state: State,
}

impl OscillatorRun {
    /// Final concentrations of the program species only.
    pub fn program_state(&self) -> State {
        State::from_vec(self.final_state.as_slice()[..self.program_species].to_vec())
    }
}

/// Builds the union of the clock ring and the clock-gated program.
pub fn gate_with_oscillator(
    crn: &Crn,
    osc: &OscillatorSpec,
) -> Result<(Crn, Vec<SpeciesId>, Vec<(PhaseTag, SpeciesId)>)> {
    let ring = build_oscillator(osc)?;
    let phases = crn.phase_order();
    let slots = assign_phase_tags(&phases, osc)?;
    let mut reg = crn.registry().clone();
    let mut clocks = Vec::with_capacity(osc.species_count);
    for id in ring.registry().ids() {
        clocks.push(reg.register(ring.registry().name(id), Role::Clock)?);
    }
    let assignment: Vec<(PhaseTag, SpeciesId)> = slots
        .into_iter()
        .map(|(p, i)| (p, clocks[i]))
        .collect();
    let mut reactions = Vec::with_capacity(ring.reactions().len() + crn.reactions().len());
    for r in ring.reactions() {
        let mut r = r.clone();
        r.reactant = crate::crn::Complex::new(
            r.reactant.terms().iter().map(|(s, c)| (clocks[s.0], *c)),
        );
        r.product =
            crate::crn::Complex::new(r.product.terms().iter().map(|(s, c)| (clocks[s.0], *c)));
        reactions.push(r);
    }
    for r in crn.reactions() {
        let Some(tag) = &r.phase else {
            reactions.push(r.clone());
            continue;
        };
        let clock = assignment
            .iter()
            .find(|(p, _)| p == tag)
            .map(|(_, c)| *c)
            .ok_or_else(|| Error::UnknownPhase(tag.to_string()))?;
        reactions.push(add_catalyst(r, clock));
    }
    Ok((Crn::new(reg, reactions)?, clocks, assignment))
}

fn dominant(y: &[f64], clocks: &[SpeciesId]) -> usize {
    let mut best = 0;
    for (i, c) in clocks.iter().enumerate() {
        if y[c.0] > y[clocks[best].0] {
            best = i;
        }
    }
    best
}

/// Simulates the program with every reaction gated by its phase's clock species,
/// stopping after `cycles` revolutions of the ring.
pub fn run_oscillator(
    crn: &Crn,
    x0: &State,
    osc: &OscillatorSpec,
    cycles: usize,
    cfg: &IntegratorConfig,
) -> Result<OscillatorRun> {
    if x0.len() != crn.species_count() {
        return Err(Error::Dimension {
            expected: crn.species_count(),
            got: x0.len(),
        });
    }
    let (combined, clocks, assignment) = gate_with_oscillator(crn, osc)?;
    let mut init = x0.as_slice().to_vec();
    init.extend_from_slice(osc.init.as_slice());
    let mut x = State::from_vec(init);

    let names = combined.registry().names().to_vec();
    let ma = combined.kinetics();
    let mut traj = Trajectory::new(names.clone());
    let label = |i: usize| -> PhaseTag {
        assignment
            .iter()
            .find(|(_, c)| *c == clocks[i])
            .map(|(p, _)| p.clone())
            .unwrap_or_else(|| PhaseTag::new(format!("idle_{}", names[clocks[i].0])).expect("clock name"))
    };

    let mut current = dominant(x.as_slice(), &clocks);
    traj.mark(0.0, label(current));
    traj.push(0.0, x.as_slice());
    let mut visited = vec![false; clocks.len()];
    visited[current] = true;
    let mut revolutions = 0usize;
    let mut count = 0usize;
    let record = cfg.record;
    let horizon = 1e7;

    let mut t_reached = 0.0;
    if cycles > 0 {
        (t_reached, _) = drive(&ma, &names, x.as_mut_slice(), 0.0, horizon, cfg, |t, y| {
            count += 1;
            let keep = match record {
                Recording::EveryStep => true,
                Recording::Stride(s) => count % s == 0,
                Recording::Endpoints => false,
            };
            let d = dominant(y, &clocks);
            if d != current {
                if d == 0 && visited.iter().all(|v| *v) {
                    revolutions += 1;
                    visited.iter_mut().for_each(|v| *v = false);
                }
                visited[d] = true;
                current = d;
                if revolutions >= cycles {
                    traj.push(t, y);
                    return Control::Stop;
                }
                traj.mark(t, label(d));
            }
            if keep {
                traj.push(t, y);
            }
            Control::Continue
        })?;
    }
    traj.push(t_reached, x.as_slice());
    Ok(OscillatorRun {
        program_species: crn.species_count(),
        crn: combined,
        trajectory: traj,
        clocks,
        assignment,
        revolutions,
        final_state: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::CrnBuilder;

    #[test]
    fn windows_only_run_their_phase() {
        let mut b = CrnBuilder::new();
        let p1 = PhaseTag::clock(1);
        let p3 = PhaseTag::clock(3);
        b.reaction(&[("A", 1)], &[("A", 1), ("B", 1)], 1.0, Some(&p1)).unwrap();
        b.reaction(&[("B", 1)], &[], 1.0, Some(&p1)).unwrap();
        b.reaction(&[("B", 1)], &[("C", 1)], 1.0, Some(&p3)).unwrap();
        let crn = b.build().unwrap();
        let x0 = State::from_vec(vec![2.0, 0.0, 0.0]);
        let sched = PhaseSchedule::new(vec![(p1.clone(), 50.0)], 1).unwrap();
        let tr = run_phased(&crn, &x0, &sched, &IntegratorConfig::default()).unwrap();
        let x = tr.last().unwrap().as_slice();
        assert!((x[1] - 2.0).abs() < 1e-7, "{}", x[1]);
        assert_eq!(x[2], 0.0);

        let sched = PhaseSchedule::new(vec![(p1.clone(), 50.0), (p3.clone(), 50.0)], 1).unwrap();
        let tr = run_phased(&crn, &x0, &sched, &IntegratorConfig::default()).unwrap();
        let x = tr.last().unwrap().as_slice();
        assert!(x[1] < 1e-9 && (x[2] - 2.0).abs() < 1e-7, "{x:?}");
        assert_eq!(tr.phase_marks.len(), 2);
        assert_eq!(tr.phase_marks[1], (50.0, p3));
    }

    #[test]
    fn empty_schedule_is_identity() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("A", 1)], &[], 1.0, Some(&PhaseTag::clock(1))).unwrap();
        let crn = b.build().unwrap();
        let x0 = State::from_vec(vec![1.5]);
        let sched = PhaseSchedule::new(vec![(PhaseTag::clock(1), 10.0)], 0).unwrap();
        let tr = run_phased(&crn, &x0, &sched, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.last(), Some(&x0));
    }

    #[test]
    fn unknown_phase_rejected() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("A", 1)], &[], 1.0, Some(&PhaseTag::clock(1))).unwrap();
        let crn = b.build().unwrap();
        let sched = PhaseSchedule::new(vec![(PhaseTag::clock(9), 1.0)], 1).unwrap();
        let r = run_phased(&crn, &State::zeros(1), &sched, &IntegratorConfig::default());
        assert!(matches!(r, Err(Error::UnknownPhase(_))));
        assert!(PhaseSchedule::new(vec![(PhaseTag::clock(1), 0.0)], 1).is_err());
    }
}
