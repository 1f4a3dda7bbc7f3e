//! Ring oscillator `O_i + O_{i+1} -> 2 O_{i+1}` used as the clock of a
//! compiled program.

use crate::crn::{Crn, CrnBuilder, PhaseTag, Role, State};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Concentration of every clock species except the first in the default start.
pub const OSC_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSpec {
    pub species_count: usize,
    pub k_o: f64,
    /// Initial concentrations of `O1..Or`.
    pub init: State,
    /// Fraction of total clock mass above which a species counts as on.
    pub on_threshold: f64,
}

impl OscillatorSpec {
    /// `o1 = 1 - (r-1)·1e-6`, all others `1e-6`, threshold 0.1.
    pub fn new(species_count: usize, k_o: f64) -> Self {
        let mut init = vec![OSC_FLOOR; species_count];
        if let Some(first) = init.first_mut() {
            *first = 1.0 - (species_count.saturating_sub(1)) as f64 * OSC_FLOOR;
        }
        Self {
            species_count,
            k_o,
            init: State::from_vec(init),
            on_threshold: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.species_count < 2 {
            return Err(Error::Structural(format!(
                "an oscillator needs at least 2 species, got {}",
                self.species_count
            )));
        }
        if !(self.k_o > 0.0 && self.k_o.is_finite()) {
            return Err(Error::Config(format!("k_o must be positive, got {}", self.k_o)));
        }
        if self.init.len() != self.species_count {
            return Err(Error::Dimension {
                expected: self.species_count,
                got: self.init.len(),
            });
        }
        if !self.init.is_nonnegative() {
            return Err(Error::Config("oscillator init must be nonnegative".into()));
        }
        let thr = self.on_level();
        if !self.init.as_slice().iter().any(|&v| v > thr) {
            return Err(Error::Config(
                "oscillator init has no species above the on threshold".into(),
            ));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.init.as_slice().iter().sum()
    }

    /// Absolute on level.
    pub fn on_level(&self) -> f64 {
        self.on_threshold * self.total_mass()
    }
}

pub fn clock_name(i: usize) -> String {
    format!("O{}", i + 1)
}

/// The `r`-reaction ring over species `O1..Or`, all at rate `k_o`.
pub fn build_oscillator(spec: &OscillatorSpec) -> Result<Crn> {
    spec.validate()?;
    let r = spec.species_count;
    let mut b = CrnBuilder::new();
    let names: Vec<String> = (0..r).map(clock_name).collect();
    for n in &names {
        b.species(n, Role::Clock)?;
    }
    for i in 0..r {
        let a = names[i].as_str();
        let c = names[(i + 1) % r].as_str();
        b.reaction(&[(a, 1), (c, 1)], &[(c, 2)], spec.k_o, None)?;
    }
    b.build()
}

/// Maps phases, in execution order, onto the odd clock species `O1, O3, ...`.
/// Returned indices are 0-based positions in the ring.
pub fn assign_phase_tags(phases: &[PhaseTag], spec: &OscillatorSpec) -> Result<Vec<(PhaseTag, usize)>> {
    if 2 * phases.len() > spec.species_count {
        return Err(Error::Structural(format!(
            "{} phases need at least {} clock species, got {}",
            phases.len(),
            2 * phases.len(),
            spec.species_count
        )));
    }
    Ok(phases
        .iter()
        .enumerate()
        .map(|(k, p)| (p.clone(), 2 * k))
        .collect())
}

/// Phase assignment for every phase of a network.
pub fn assign_phases(crn: &Crn, spec: &OscillatorSpec) -> Result<Vec<(PhaseTag, usize)>> {
    assign_phase_tags(&crn.phase_order(), spec)
}

/// Maximal interval during which one clock species is above the on level.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockWindow {
    pub species: usize,
    pub start: f64,
    pub end: f64,
}

fn crossing(t0: f64, v0: f64, t1: f64, v1: f64, level: f64) -> f64 {
    if v1 == v0 {
        return t1;
    }
    t0 + (level - v0) * (t1 - t0) / (v1 - v0)
}

/// On windows of every clock species, sorted by start time.
///
/// Windows of species that are not ring neighbours must be disjoint; neighbours
/// necessarily overlap while one hands its mass to the next.
pub fn phase_windows(traj: &Trajectory, spec: &OscillatorSpec) -> Result<Vec<ClockWindow>> {
    let r = spec.species_count;
    let cols: Vec<usize> = (0..r)
        .map(|i| traj.species_index(&clock_name(i)))
        .collect::<Result<_>>()?;
    let level = spec.on_level();
    let mut out = Vec::new();
    for (i, &c) in cols.iter().enumerate() {
        let mut start: Option<f64> = None;
        for k in 0..traj.len() {
            let v = traj.states[k].as_slice()[c];
            let t = traj.times[k];
            let on = v > level;
            match (start, on) {
                (None, true) => {
                    start = Some(if k == 0 {
                        t
                    } else {
                        let vp = traj.states[k - 1].as_slice()[c];
                        crossing(traj.times[k - 1], vp, t, v, level)
                    });
                }
                (Some(s), false) => {
                    let vp = traj.states[k - 1].as_slice()[c];
                    let e = crossing(traj.times[k - 1], vp, t, v, level);
                    out.push(ClockWindow {
                        species: i,
                        start: s,
                        end: e,
                    });
                    start = None;
                }
                _ => {}
            }
        }
        if let (Some(s), Some(&t)) = (start, traj.times.last()) {
            out.push(ClockWindow {
                species: i,
                start: s,
                end: t,
            });
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start));

    for (a_i, a) in out.iter().enumerate() {
        for b in &out[a_i + 1..] {
            if b.start >= a.end {
                continue;
            }
            let d = (a.species + r - b.species) % r;
            let adjacent = d == 1 || d == r - 1 || d == 0;
            if !adjacent {
                return Err(Error::OverlappingWindows {
                    first: clock_name(a.species),
                    first_start: a.start,
                    first_end: a.end,
                    second: clock_name(b.species),
                    second_start: b.start,
                    second_end: b.end,
                });
            }
        }
    }
    Ok(out)
}

/// Mean spacing between successive window starts of the same species.
pub fn measured_period(windows: &[ClockWindow], species: usize) -> Option<f64> {
    let starts: Vec<f64> = windows
        .iter()
        .filter(|w| w.species == species)
        .map(|w| w.start)
        .collect();
    if starts.len() < 2 {
        return None;
    }
    Some((starts[starts.len() - 1] - starts[0]) / (starts.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_shape() {
        let crn = build_oscillator(&OscillatorSpec::new(4, 1.0)).unwrap();
        assert_eq!(crn.reactions().len(), 4);
        let laws: Vec<Vec<i64>> = crn
            .conservation_laws()
            .iter()
            .map(|l| l.to_i64().unwrap())
            .collect();
        assert_eq!(laws, vec![vec![1, 1, 1, 1]]);
        let two = build_oscillator(&OscillatorSpec::new(2, 1.0)).unwrap();
        assert_eq!(two.reactions().len(), 2);
        assert_eq!(two.conservation_laws().len(), 1);
    }

    #[test]
    fn too_small_ring() {
        let mut spec = OscillatorSpec::new(2, 1.0);
        spec.species_count = 1;
        spec.init = State::from_vec(vec![1.0]);
        assert!(build_oscillator(&spec).is_err());
    }

    #[test]
    fn default_init_sums_to_one() {
        let s = OscillatorSpec::new(32, 2.0);
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
        assert!((s.init.as_slice()[0] - (1.0 - 31e-6)).abs() < 1e-15);
    }

    #[test]
    fn odd_slots() {
        let phases: Vec<PhaseTag> = (0..16).map(|k| PhaseTag::clock(2 * k + 1)).collect();
        let spec = OscillatorSpec::new(32, 2.0);
        let a = assign_phase_tags(&phases, &spec).unwrap();
        assert_eq!(a[0].1, 0);
        assert_eq!(a[15].1, 30);
        assert_eq!(
            assign_phase_tags(&phases[..1], &OscillatorSpec::new(2, 1.0)).unwrap()[0].1,
            0
        );
        assert!(assign_phase_tags(&phases, &OscillatorSpec::new(16, 2.0)).is_err());
    }
}
