use super::{Crn, Reaction, SpeciesId};

pub(crate) fn mass_action_rate(r: &Reaction, x: &[f64]) -> f64 {
    let mut rate = r.rate;
    for &(id, c) in r.reactant.terms() {
        let v = x[id.0];
        if v == 0.0 {
            return 0.0;
        }
        rate *= pow_u(v, c);
    }
    rate
}

fn pow_u(v: f64, c: u32) -> f64 {
    match c {
        1 => v,
        2 => v * v,
        3 => v * v * v,
        _ => v.powi(c as i32),
    }
}

/// Nonzero net stoichiometric changes of a reaction.
pub(crate) fn net_terms(r: &Reaction) -> Vec<(SpeciesId, i64)> {
    let mut out: Vec<(SpeciesId, i64)> = Vec::new();
    for &(id, c) in r.reactant.terms() {
        out.push((id, -i64::from(c)));
    }
    for &(id, c) in r.product.terms() {
        match out.iter_mut().find(|(s, _)| *s == id) {
            Some((_, d)) => *d += i64::from(c),
            None => out.push((id, i64::from(c))),
        }
    }
    out.retain(|(_, d)| *d != 0);
    out.sort_by_key(|(s, _)| *s);
    out
}

#[derive(Debug, Clone)]
struct Compiled {
    rate: f64,
    reactants: Vec<(usize, u32)>,
    net: Vec<(usize, f64)>,
}

/// Flattened mass-action right-hand side over a subset of a network's reactions.
#[derive(Debug, Clone)]
pub struct MassAction {
    n: usize,
    reactions: Vec<Compiled>,
    indices: Vec<usize>,
}

impl MassAction {
    pub fn new(crn: &Crn, subset: impl IntoIterator<Item = usize>) -> Self {
        let indices: Vec<usize> = subset.into_iter().collect();
        Self::from_reactions(
            crn.species_count(),
            indices.iter().map(|&j| &crn.reactions()[j]),
            indices.clone(),
        )
    }

    pub(crate) fn from_reactions<'a>(
        n: usize,
        reactions: impl IntoIterator<Item = &'a Reaction>,
        indices: Vec<usize>,
    ) -> Self {
        let reactions = reactions
            .into_iter()
            .map(|r| Compiled {
                rate: r.rate,
                reactants: r.reactant.terms().iter().map(|(s, c)| (s.0, *c)).collect(),
                net: net_terms(r)
                    .into_iter()
                    .map(|(s, d)| (s.0, d as f64))
                    .collect(),
            })
            .collect();
        Self {
            n,
            reactions,
            indices,
        }
    }

    pub fn species_count(&self) -> usize {
        self.n
    }

    /// Indices into the parent network of the reactions in this plan.
    pub fn reaction_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rhs_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for r in &self.reactions {
            let mut rate = r.rate;
            for &(i, c) in &r.reactants {
                let v = x[i];
                if v <= 0.0 {
                    rate = 0.0;
                    break;
                }
                rate *= pow_u(v, c);
            }
            if rate == 0.0 {
                continue;
            }
            for &(i, d) in &r.net {
                out[i] += d * rate;
            }
        }
    }

    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.rhs_into(x, &mut out);
        out
    }

    /// Species whose concentration is changed by some reaction in the plan.
    pub fn touched(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .reactions
            .iter()
            .flat_map(|r| r.net.iter().map(|(i, _)| *i))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
