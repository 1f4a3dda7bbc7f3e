//! Chemical reaction networks with mass-action kinetics.
//!
//! A [`Crn`] is an immutable set of species (held by a [`SpeciesRegistry`])
//! and [`Reaction`]s between sparse [`Complex`]es. Concentrations live in a
//! [`State`] indexed by [`SpeciesId`].

mod conservation;
mod kinetics;
mod text;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

pub use conservation::ConservationLaw;
pub use kinetics::MassAction;

/// Index of a species inside a [`SpeciesRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpeciesId(pub usize);

impl SpeciesId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Semantic role of a species inside a compiled program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Generic,
    Sample,
    Label,
    Order,
    AuxOrder,
    Input,
    WeightPlus,
    WeightMinus,
    BiasPlus,
    BiasMinus,
    NetPlus,
    NetMinus,
    Half,
    ActivationPlus,
    ActivationMinus,
    Activation,
    OutputPlus,
    OutputMinus,
    Output,
    Precalc,
    Unit,
    ErrorPlus,
    ErrorMinus,
    Error,
    Judge,
    Gate,
    Intermediate,
    GradPlus,
    GradMinus,
    IncrementPlus,
    IncrementMinus,
    SnapshotPlus,
    SnapshotMinus,
    LearningRate,
    Clock,
}

impl Role {
    pub const ALL: [Role; 35] = [
        Role::Generic,
        Role::Sample,
        Role::Label,
        Role::Order,
        Role::AuxOrder,
        Role::Input,
        Role::WeightPlus,
        Role::WeightMinus,
        Role::BiasPlus,
        Role::BiasMinus,
        Role::NetPlus,
        Role::NetMinus,
        Role::Half,
        Role::ActivationPlus,
        Role::ActivationMinus,
        Role::Activation,
        Role::OutputPlus,
        Role::OutputMinus,
        Role::Output,
        Role::Precalc,
        Role::Unit,
        Role::ErrorPlus,
        Role::ErrorMinus,
        Role::Error,
        Role::Judge,
        Role::Gate,
        Role::Intermediate,
        Role::GradPlus,
        Role::GradMinus,
        Role::IncrementPlus,
        Role::IncrementMinus,
        Role::SnapshotPlus,
        Role::SnapshotMinus,
        Role::LearningRate,
        Role::Clock,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Generic => "generic",
            Role::Sample => "sample",
            Role::Label => "label",
            Role::Order => "order",
            Role::AuxOrder => "aux-order",
            Role::Input => "input",
            Role::WeightPlus => "weight+",
            Role::WeightMinus => "weight-",
            Role::BiasPlus => "bias+",
            Role::BiasMinus => "bias-",
            Role::NetPlus => "net+",
            Role::NetMinus => "net-",
            Role::Half => "half",
            Role::ActivationPlus => "activation+",
            Role::ActivationMinus => "activation-",
            Role::Activation => "activation",
            Role::OutputPlus => "output+",
            Role::OutputMinus => "output-",
            Role::Output => "output",
            Role::Precalc => "precalc",
            Role::Unit => "unit",
            Role::ErrorPlus => "error+",
            Role::ErrorMinus => "error-",
            Role::Error => "error",
            Role::Judge => "judge",
            Role::Gate => "gate",
            Role::Intermediate => "intermediate",
            Role::GradPlus => "grad+",
            Role::GradMinus => "grad-",
            Role::IncrementPlus => "increment+",
            Role::IncrementMinus => "increment-",
            Role::SnapshotPlus => "snapshot+",
            Role::SnapshotMinus => "snapshot-",
            Role::LearningRate => "learning-rate",
            Role::Clock => "clock",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.iter().copied().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered set of uniquely named species with one role each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpeciesRegistry {
    names: Vec<String>,
    roles: Vec<Role>,
    index: HashMap<String, SpeciesId>,
}

impl SpeciesRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a new species, failing if the name is taken or not an identifier.
    pub fn register(&mut self, name: &str, role: Role) -> Result<SpeciesId> {
        if !is_identifier(name) {
            return Err(Error::InvalidReaction(format!(
                "`{name}` is not a valid species identifier"
            )));
        }
        if self.index.contains_key(name) {
            return Err(Error::DuplicateSpecies(name.to_string()));
        }
        let id = SpeciesId(self.names.len());
        self.names.push(name.to_string());
        self.roles.push(role);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Returns the id of `name`, registering it with `role` when absent.
    pub fn get_or_register(&mut self, name: &str, role: Role) -> Result<SpeciesId> {
        match self.index.get(name) {
            Some(&id) => Ok(id),
            None => self.register(name, role),
        }
    }

    pub fn id(&self, name: &str) -> Result<SpeciesId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSpecies(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<SpeciesId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: SpeciesId) -> &str {
        &self.names[id.0]
    }

    pub fn role(&self, id: SpeciesId) -> Role {
        self.roles[id.0]
    }

    pub fn set_role(&mut self, id: SpeciesId, role: Role) {
        self.roles[id.0] = role;
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = SpeciesId> {
        (0..self.names.len()).map(SpeciesId)
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = SpeciesId> + '_ {
        self.ids().filter(move |&id| self.roles[id.0] == role)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Sparse nonnegative linear combination of species.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Complex {
    // sorted by species, no zero coefficients
    terms: Vec<(SpeciesId, u32)>,
}

impl Complex {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(terms: impl IntoIterator<Item = (SpeciesId, u32)>) -> Self {
        let mut out: Vec<(SpeciesId, u32)> = Vec::new();
        for (id, c) in terms {
            if c == 0 {
                continue;
            }
            match out.iter_mut().find(|(s, _)| *s == id) {
                Some((_, existing)) => *existing += c,
                None => out.push((id, c)),
            }
        }
        out.sort_by_key(|(s, _)| *s);
        Self { terms: out }
    }

    pub fn single(id: SpeciesId) -> Self {
        Self {
            terms: vec![(id, 1)],
        }
    }

    pub fn coefficient(&self, id: SpeciesId) -> u32 {
        self.terms
            .iter()
            .find(|(s, _)| *s == id)
            .map_or(0, |(_, c)| *c)
    }

    pub fn terms(&self) -> &[(SpeciesId, u32)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total molecularity.
    pub fn order(&self) -> u32 {
        self.terms.iter().map(|(_, c)| c).sum()
    }

    pub fn with_added(&self, id: SpeciesId, count: u32) -> Self {
        Self::new(self.terms.iter().copied().chain([(id, count)]))
    }
}

/// Tag naming the clock phase during which a reaction is active.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhaseTag(String);

impl PhaseTag {
    pub fn new(tag: impl Into<String>) -> Result<Self> {
        let tag = tag.into();
        if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::InvalidReaction(format!("invalid phase tag `{tag}`")));
        }
        Ok(Self(tag))
    }

    /// Tag `O<n>` of the n-th clock signal.
    pub fn clock(n: usize) -> Self {
        Self(format!("O{n}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate: f64,
    pub phase: Option<PhaseTag>,
}

impl Reaction {
    pub fn new(reactant: Complex, product: Complex, rate: f64) -> Result<Self> {
        if reactant == product {
            return Err(Error::InvalidReaction(
                "reactant and product complexes are identical".into(),
            ));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidReaction(format!(
                "rate constant must be positive and finite, got {rate}"
            )));
        }
        Ok(Self {
            reactant,
            product,
            rate,
            phase: None,
        })
    }

    pub fn in_phase(mut self, phase: PhaseTag) -> Self {
        self.phase = Some(phase);
        self
    }

    /// Net change of `id` when the reaction fires once.
    pub fn net(&self, id: SpeciesId) -> i64 {
        i64::from(self.product.coefficient(id)) - i64::from(self.reactant.coefficient(id))
    }

    /// Species touched by either side.
    pub fn species(&self) -> impl Iterator<Item = SpeciesId> + '_ {
        self.reactant
            .terms()
            .iter()
            .chain(self.product.terms())
            .map(|(s, _)| *s)
    }
}

/// Adds `species` as a catalyst on both sides of `reaction`.
///
/// The net stoichiometry is unchanged but the mass-action rate gains a factor
/// of the catalyst concentration, so the reaction is switched off whenever the
/// catalyst is absent.
pub fn add_catalyst(reaction: &Reaction, species: SpeciesId) -> Reaction {
    Reaction {
        reactant: reaction.reactant.with_added(species, 1),
        product: reaction.product.with_added(species, 1),
        rate: reaction.rate,
        phase: reaction.phase.clone(),
    }
}

/// Nonnegative concentration vector aligned with a registry.
#[derive(Debug, Clone, PartialEq)]
pub struct State(Vec<f64>);

impl State {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// Builds a state for `registry`; unnamed species get `default`.
    pub fn from_named(
        registry: &SpeciesRegistry,
        values: &[(&str, f64)],
        default: f64,
    ) -> Result<Self> {
        let mut s = Self::filled(registry.len(), default);
        for (name, v) in values {
            s[registry.id(name)?] = *v;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }

    pub fn get(&self, id: SpeciesId) -> f64 {
        self.0[id.0]
    }
}

impl Index<SpeciesId> for State {
    type Output = f64;
    fn index(&self, id: SpeciesId) -> &f64 {
        &self.0[id.0]
    }
}

impl IndexMut<SpeciesId> for State {
    fn index_mut(&mut self, id: SpeciesId) -> &mut f64 {
        &mut self.0[id.0]
    }
}

/// A reaction network: species registry plus reactions over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Crn {
    registry: SpeciesRegistry,
    reactions: Vec<Reaction>,
}

impl Crn {
    pub fn new(registry: SpeciesRegistry, reactions: Vec<Reaction>) -> Result<Self> {
        for (j, r) in reactions.iter().enumerate() {
            if let Some(s) = r.species().find(|s| s.0 >= registry.len()) {
                return Err(Error::InvalidReaction(format!(
                    "reaction {j} references unregistered species #{}",
                    s.0
                )));
            }
        }
        Ok(Self {
            registry,
            reactions,
        })
    }

    pub fn registry(&self) -> &SpeciesRegistry {
        &self.registry
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn species_count(&self) -> usize {
        self.registry.len()
    }

    pub fn id(&self, name: &str) -> Result<SpeciesId> {
        self.registry.id(name)
    }

    fn check_state(&self, state: &State) -> Result<()> {
        if state.len() != self.registry.len() {
            return Err(Error::Dimension {
                expected: self.registry.len(),
                got: state.len(),
            });
        }
        Ok(())
    }

    /// Mass-action rate `k_j · Π x_i^{v_ij}` of reaction `j`.
    pub fn reaction_rate(&self, state: &State, j: usize) -> Result<f64> {
        self.check_state(state)?;
        let r = self.reactions.get(j).ok_or(Error::ReactionIndex {
            index: j,
            len: self.reactions.len(),
        })?;
        Ok(kinetics::mass_action_rate(r, state.as_slice()))
    }

    /// Right-hand side `Γ · K(x)` of the mass-action ODE.
    pub fn rhs(&self, state: &State) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let mut out = vec![0.0; self.registry.len()];
        for r in &self.reactions {
            let rate = kinetics::mass_action_rate(r, state.as_slice());
            if rate == 0.0 {
                continue;
            }
            for (id, delta) in kinetics::net_terms(r) {
                out[id.0] += delta as f64 * rate;
            }
        }
        Ok(out)
    }

    /// Stoichiometric matrix, one row per species and one column per reaction.
    pub fn stoichiometric_matrix(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0_i64; self.reactions.len()]; self.registry.len()];
        for (j, r) in self.reactions.iter().enumerate() {
            for (id, delta) in kinetics::net_terms(r) {
                m[id.0][j] = delta;
            }
        }
        m
    }

    /// Basis of the left null space of the stoichiometric matrix.
    pub fn conservation_laws(&self) -> Vec<ConservationLaw> {
        conservation::left_null_space(&self.stoichiometric_matrix(), self.registry.len())
    }

    /// Distinct phase tags in order of first appearance.
    pub fn phase_order(&self) -> Vec<PhaseTag> {
        let mut out: Vec<PhaseTag> = Vec::new();
        for r in &self.reactions {
            if let Some(p) = &r.phase {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// Indices of reactions tagged with `phase`.
    pub fn reactions_in_phase(&self, phase: &PhaseTag) -> Vec<usize> {
        self.reactions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.phase.as_ref() == Some(phase))
            .map(|(j, _)| j)
            .collect()
    }

    /// Mass-action plan over every reaction.
    pub fn kinetics(&self) -> MassAction {
        MassAction::new(self, 0..self.reactions.len())
    }

    pub fn to_text(&self) -> String {
        text::print(self)
    }

    pub fn parse(src: &str) -> Result<Self> {
        text::parse(src)
    }
}

/// Incremental constructor for networks written by name.
#[derive(Debug, Default)]
pub struct CrnBuilder {
    registry: SpeciesRegistry,
    reactions: Vec<Reaction>,
}

impl CrnBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn species(&mut self, name: &str, role: Role) -> Result<SpeciesId> {
        self.registry.get_or_register(name, role)
    }

    pub fn registry(&self) -> &SpeciesRegistry {
        &self.registry
    }

    /// Adds `reactants -> products` with sides given as `(name, coefficient)`.
    /// Species are registered on first use with [`Role::Generic`].
    pub fn reaction(
        &mut self,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        rate: f64,
        phase: Option<&PhaseTag>,
    ) -> Result<usize> {
        let lhs = self.complex(reactants)?;
        let rhs = self.complex(products)?;
        let mut r = Reaction::new(lhs, rhs, rate)?;
        r.phase = phase.cloned();
        self.reactions.push(r);
        Ok(self.reactions.len() - 1)
    }

    pub fn push(&mut self, reaction: Reaction) -> usize {
        self.reactions.push(reaction);
        self.reactions.len() - 1
    }

    fn complex(&mut self, side: &[(&str, u32)]) -> Result<Complex> {
        let mut terms = Vec::with_capacity(side.len());
        for (name, c) in side {
            let id = self.registry.get_or_register(name, Role::Generic)?;
            terms.push((id, *c));
        }
        Ok(Complex::new(terms))
    }

    pub fn build(self) -> Result<Crn> {
        Crn::new(self.registry, self.reactions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(reactants: &[(&str, u32)], products: &[(&str, u32)], k: f64) -> Crn {
        let mut b = CrnBuilder::new();
        b.reaction(reactants, products, k, None).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn bimolecular_rate() {
        let crn = single(&[("A", 1), ("B", 1)], &[("C", 1)], 2.0);
        let x = State::from_vec(vec![3.0, 0.5, 0.0]);
        assert_eq!(crn.reaction_rate(&x, 0).unwrap(), 3.0);
    }

    #[test]
    fn zero_reactant_gives_zero_rate() {
        let crn = single(&[("A", 1)], &[("A", 2)], 1.0);
        assert_eq!(crn.reaction_rate(&State::zeros(1), 0).unwrap(), 0.0);
    }

    #[test]
    fn square_law() {
        let crn = single(&[("E", 2)], &[("E", 1), ("A", 1)], 1.0);
        let x = State::from_named(crn.registry(), &[("E", 3.5)], 0.0).unwrap();
        assert!((crn.reaction_rate(&x, 0).unwrap() - 12.25).abs() < 1e-15);
    }

    #[test]
    fn rate_index_out_of_range() {
        let crn = single(&[("A", 1)], &[], 1.0);
        assert!(matches!(
            crn.reaction_rate(&State::zeros(1), 3),
            Err(Error::ReactionIndex { index: 3, len: 1 })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let crn = single(&[("A", 1)], &[], 1.0);
        assert!(matches!(
            crn.rhs(&State::zeros(2)),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn addition_gadget_rhs() {
        let mut b = CrnBuilder::new();
        for s in ["A", "B", "C"] {
            b.species(s, Role::Generic).unwrap();
        }
        b.reaction(&[("A", 1)], &[("A", 1), ("C", 1)], 1.0, None).unwrap();
        b.reaction(&[("B", 1)], &[("B", 1), ("C", 1)], 1.0, None).unwrap();
        b.reaction(&[("C", 1)], &[], 1.0, None).unwrap();
        let crn = b.build().unwrap();
        let d = crn.rhs(&State::from_vec(vec![1.0, 2.0, 0.0])).unwrap();
        assert_eq!(d, vec![0.0, 0.0, 3.0]);
    }

    #[test]
    fn annihilation_rhs() {
        let crn = single(&[("Np", 1), ("Nm", 1)], &[], 1.0);
        let d = crn.rhs(&State::from_vec(vec![3.0, 1.0])).unwrap();
        assert_eq!(d, vec![-3.0, -3.0]);
    }

    #[test]
    fn stoichiometric_columns() {
        assert_eq!(
            single(&[("A", 1)], &[("A", 2)], 1.0).stoichiometric_matrix(),
            vec![vec![1]]
        );
        assert_eq!(
            single(&[("A", 1), ("B", 1)], &[("C", 1)], 1.0).stoichiometric_matrix(),
            vec![vec![-1], vec![-1], vec![1]]
        );
        assert_eq!(
            single(&[("W", 1), ("S", 1)], &[("W", 1), ("S", 1), ("N", 1)], 1.0)
                .stoichiometric_matrix(),
            vec![vec![0], vec![0], vec![1]]
        );
    }

    #[test]
    fn catalyst_gating() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("A", 1)], &[("B", 1)], 1.0, None).unwrap();
        let o1 = b.species("O1", Role::Clock).unwrap();
        let crn = b.build().unwrap();
        let gated = add_catalyst(&crn.reactions()[0], o1);
        let a = crn.id("A").unwrap();
        assert_eq!(gated.reactant.coefficient(o1), 1);
        assert_eq!(gated.product.coefficient(o1), 1);
        assert_eq!(gated.net(o1), 0);
        assert_eq!(gated.net(a), -1);

        let twice = add_catalyst(&gated, o1);
        for s in [a, crn.id("B").unwrap(), o1] {
            assert_eq!(twice.net(s), crn.reactions()[0].net(s));
        }

        let gated_crn = Crn::new(crn.registry().clone(), vec![gated]).unwrap();
        let x = State::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(gated_crn.rhs(&x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_degenerate_reactions() {
        let a = Complex::single(SpeciesId(0));
        assert!(Reaction::new(a.clone(), a.clone(), 1.0).is_err());
        assert!(Reaction::new(a, Complex::empty(), 0.0).is_err());
    }

    #[test]
    fn rejects_unregistered_species() {
        let r = Reaction::new(Complex::single(SpeciesId(4)), Complex::empty(), 1.0).unwrap();
        assert!(Crn::new(SpeciesRegistry::new(), vec![r]).is_err());
    }

    #[test]
    fn duplicate_species_rejected() {
        let mut reg = SpeciesRegistry::new();
        reg.register("A", Role::Generic).unwrap();
        assert!(matches!(
            reg.register("A", Role::Input),
            Err(Error::DuplicateSpecies(_))
        ));
        assert!(reg.register("2A", Role::Generic).is_err());
    }
}
