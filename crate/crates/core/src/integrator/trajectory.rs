use std::io::Write;

use crate::crn::{PhaseTag, SpeciesId, State};
use crate::error::{Error, Result};

/// Time-stamped states with phase boundary markers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub species: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub phase_marks: Vec<(f64, PhaseTag)>,
}

impl Trajectory {
    pub fn new(species: Vec<String>) -> Self {
        Self {
            species,
            ..Self::default()
        }
    }

    /// Appends a sample, dropping it if its time does not advance.
    pub fn push(&mut self, t: f64, x: &[f64]) {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return;
            }
        }
        self.times.push(t);
        self.states.push(State::from_vec(x.to_vec()));
    }

    pub fn mark(&mut self, t: f64, tag: PhaseTag) {
        self.phase_marks.push((t, tag));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn species_index(&self, name: &str) -> Result<usize> {
        self.species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSpecies(name.to_string()))
    }

    /// Time series of one species.
    pub fn series(&self, id: SpeciesId) -> Vec<f64> {
        self.states.iter().map(|s| s[id]).collect()
    }

    pub fn series_by_name(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.species_index(name)?;
        Ok(self.states.iter().map(|s| s.as_slice()[i]).collect())
    }

    /// Phase active at time `t`: the last mark strictly before `t`, else the first mark.
    pub fn phase_at(&self, t: f64) -> Option<&PhaseTag> {
        self.phase_marks
            .iter()
            .rev()
            .find(|(mt, _)| *mt < t)
            .or(self.phase_marks.first())
            .map(|(_, p)| p)
    }

    /// Samples at or after `t0`, and up to and including `t1`.
    pub fn window(&self, t0: f64, t1: f64) -> Trajectory {
        let mut out = Trajectory::new(self.species.clone());
        for (t, s) in self.times.iter().zip(&self.states) {
            if *t >= t0 && *t <= t1 {
                out.times.push(*t);
                out.states.push(s.clone());
            }
        }
        out.phase_marks = self
            .phase_marks
            .iter()
            .filter(|(t, _)| *t >= t0 && *t <= t1)
            .cloned()
            .collect();
        out
    }

    /// State at the end of every marked window, paired with its phase.
    pub fn window_end_states(&self) -> Vec<(PhaseTag, State)> {
        let mut out = Vec::with_capacity(self.phase_marks.len());
        for (i, (_, tag)) in self.phase_marks.iter().enumerate() {
            let end = match self.phase_marks.get(i + 1) {
                Some((t, _)) => *t,
                None => match self.final_time() {
                    Some(t) => t,
                    None => break,
                },
            };
            let k = self.times.partition_point(|t| *t <= end);
            if k > 0 {
                out.push((tag.clone(), self.states[k - 1].clone()));
            }
        }
        out
    }

    /// Writes `time,phase,<species...>` CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["time".to_string(), "phase".to_string()];
        header.extend(self.species.iter().cloned());
        wr.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for (t, s) in self.times.iter().zip(&self.states) {
            row.clear();
            row.push(t.to_string());
            row.push(self.phase_at(*t).map(|p| p.to_string()).unwrap_or_default());
            row.extend(s.as_slice().iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_phase_labels() {
        let mut t = Trajectory::new(vec!["A".into(), "B".into()]);
        t.mark(0.0, PhaseTag::clock(1));
        t.push(0.0, &[1.0, 0.0]);
        t.push(1.0, &[0.5, 0.5]);
        t.mark(1.0, PhaseTag::clock(3));
        t.push(2.0, &[0.25, 0.75]);
        t.push(2.0, &[9.0, 9.0]);
        let s = t.to_csv_string().unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "time,phase,A,B");
        assert_eq!(lines[1], "0,O1,1,0");
        assert_eq!(lines[2], "1,O1,0.5,0.5");
        assert_eq!(lines[3], "2,O3,0.25,0.75");
        assert_eq!(lines.len(), 4);
    }
}
