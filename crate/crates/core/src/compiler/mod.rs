//! Compiler from a network and training description to a phased reaction
//! program.
//!
//! Every reaction of a [`BfcnnProgram`] carries one phase tag `O1, O3, ..., O31`.
//! Running the phases in order once performs one training iteration on one
//! mini-batch: load inputs, feed forward, measure errors, judge, compute
//! gradients, update weights and clear scratch species.

pub mod names;
mod phases;

use std::collections::HashMap;
use std::io::Write;

use crate::analysis::bistable_equilibria;
use crate::crn::{Crn, CrnBuilder, PhaseTag, Role, SpeciesId, State};
use crate::error::{Error, Result};
use crate::oracle::Sample;
use crate::weights::{WeightSet, Weights};

pub use names::Rail;
pub use phases::{
    build_addition_gadget, build_assignment, build_clearout, build_judgment, build_lws,
    build_neggrad, build_precalc, build_preset_half, build_sigmoid, build_sign_resolution,
    build_update, build_weight_snapshot, rotation_map,
};

/// Layer widths. The activation is always the logistic sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetSpec {
    pub input_width: usize,
    pub hidden_width: usize,
    pub output_width: usize,
}

impl Default for NetSpec {
    fn default() -> Self {
        Self {
            input_width: 2,
            hidden_width: 2,
            output_width: 1,
        }
    }
}

impl NetSpec {
    pub fn new(input_width: usize, hidden_width: usize, output_width: usize) -> Self {
        Self {
            input_width,
            hidden_width,
            output_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 || self.hidden_width == 0 || self.output_width == 0 {
            return Err(Error::Config("layer widths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout { net: *self }
    }
}

/// Index bookkeeping between weight matrices, species and gradients.
///
/// First-layer weight `(i, j)` is `W_{(j-1)H+i}`, second-layer weight `(o, j)`
/// is `W_{IH+(j-1)O+o}`, hidden bias `i` is `B_i` and output bias `o` is
/// `B_{H+o}`. Gradient `k` belongs to `W_k` for `k <= #weights` and to
/// `B_{k-#weights}` after that.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub net: NetSpec,
}

/// Species family of one weight matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Weight(usize),
    Bias(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    /// 1 or 2.
    pub layer: usize,
    /// 0-based matrix position.
    pub row: usize,
    pub col: usize,
    pub param: Param,
    /// 1-based gradient index.
    pub grad: usize,
}

impl Layout {
    pub fn i(&self) -> usize {
        self.net.input_width
    }
    pub fn h(&self) -> usize {
        self.net.hidden_width
    }
    pub fn o(&self) -> usize {
        self.net.output_width
    }
    pub fn w1_index(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.h() + i
    }
    pub fn w2_index(&self, o: usize, j: usize) -> usize {
        self.i() * self.h() + (j - 1) * self.o() + o
    }
    pub fn weight_count(&self) -> usize {
        self.i() * self.h() + self.h() * self.o()
    }
    pub fn bias_count(&self) -> usize {
        self.h() + self.o()
    }
    pub fn param_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }
    pub fn grad_index(&self, p: Param) -> usize {
        match p {
            Param::Weight(k) => k,
            Param::Bias(j) => self.weight_count() + j,
        }
    }
    /// Output neuron `o` as a global neuron index.
    pub fn out_neuron(&self, o: usize) -> usize {
        self.h() + o
    }

    pub fn param_names(&self, p: Param, r: Rail) -> String {
        match p {
            Param::Weight(k) => names::weight(r, k),
            Param::Bias(j) => names::bias(r, j),
        }
    }

    /// Every weight-matrix entry in gradient order.
    pub fn entries(&self) -> Vec<Entry> {
        let mut out = Vec::with_capacity(self.param_count());
        for j in 1..=self.i() {
            for i in 1..=self.h() {
                let k = self.w1_index(i, j);
                out.push(Entry {
                    layer: 1,
                    row: i - 1,
                    col: j - 1,
                    param: Param::Weight(k),
                    grad: 0,
                });
            }
        }
        for j in 1..=self.h() {
            for o in 1..=self.o() {
                let k = self.w2_index(o, j);
                out.push(Entry {
                    layer: 2,
                    row: o - 1,
                    col: j - 1,
                    param: Param::Weight(k),
                    grad: 0,
                });
            }
        }
        for i in 1..=self.h() {
            out.push(Entry {
                layer: 1,
                row: i - 1,
                col: self.i(),
                param: Param::Bias(i),
                grad: 0,
            });
        }
        for o in 1..=self.o() {
            out.push(Entry {
                layer: 2,
                row: o - 1,
                col: self.h(),
                param: Param::Bias(self.h() + o),
                grad: 0,
            });
        }
        for e in out.iter_mut() {
            e.grad = self.grad_index(e.param);
        }
        out.sort_by_key(|e| e.grad);
        out
    }
}

/// Training data and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub samples: Vec<Sample>,
    pub batch_size: usize,
    pub eta: f64,
    pub threshold: f64,
    /// Bistable judgment rates `(k1, k2, k3, k4)`.
    pub judge_rates: [f64; 4],
    pub init_weights: WeightSet,
    pub default_conc: f64,
    /// Rate of the sign-resolution annihilations.
    pub annihilation_rate: f64,
}

impl TrainSpec {
    pub fn new(samples: Vec<Sample>, init_weights: WeightSet) -> Self {
        Self {
            samples,
            batch_size: 2,
            eta: 0.9,
            threshold: 0.5,
            judge_rates: [8.0, 1.0, 2.0, 0.4375],
            init_weights,
            default_conc: 1e-6,
            annihilation_rate: 1.0,
        }
    }

    pub fn blocks(&self) -> usize {
        self.samples.len() / self.batch_size.max(1)
    }

    pub fn validate(&self, net: &NetSpec) -> Result<()> {
        net.validate()?;
        let p = self.samples.len();
        if p == 0 {
            return Err(Error::Config("no training samples".into()));
        }
        if self.batch_size == 0 || p % self.batch_size != 0 {
            return Err(Error::Config(format!(
                "batch size {} does not divide {p} samples",
                self.batch_size
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.x.len() != net.input_width {
                return Err(Error::Config(format!(
                    "sample {} has {} inputs, expected {}",
                    i + 1,
                    s.x.len(),
                    net.input_width
                )));
            }
            if s.x.iter().chain([&s.d]).any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Config(format!(
                    "sample {} has a negative or non-finite entry",
                    i + 1
                )));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config("threshold must be positive".into()));
        }
        if !(self.default_conc > 0.0) || !(self.annihilation_rate > 0.0) {
            return Err(Error::Config(
                "default_conc and annihilation_rate must be positive".into(),
            ));
        }
        let [k1, k2, k3, k4] = self.judge_rates;
        if self.judge_rates.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::Config("judge rates must be positive".into()));
        }
        let d = k1 * k2 - 4.0 * k3 * k4;
        if d <= 0.0 {
            return Err(Error::Config(format!(
                "judge rates give k1*k2 - 4*k3*k4 = {d}, which is not bistable"
            )));
        }
        let eq = bistable_equilibria(k1, k2, k3, k4);
        let saddle = eq
            .iter()
            .find(|p| p.stability == crate::analysis::Stability::Unstable)
            .map(|p| p.e)
            .ok_or_else(|| Error::Config("judge rates have no unstable equilibrium".into()))?;
        if (saddle - self.threshold).abs() > 1e-9 * self.threshold.max(1.0) {
            return Err(Error::Config(format!(
                "unstable judgment point {saddle} differs from threshold {}",
                self.threshold
            )));
        }
        self.init_weights.validate()?;
        let w = &self.init_weights;
        if w.input_width() != net.input_width
            || w.hidden_width() != net.hidden_width
            || w.output_width() != net.output_width
        {
            return Err(Error::Config("initial weights do not match the layer widths".into()));
        }
        if net.output_width != 1 {
            return Err(Error::Config(
                "training programs support a single output neuron".into(),
            ));
        }
        Ok(())
    }
}

/// Execution order of the phases of a training program.
pub fn phase_sequence() -> Vec<PhaseTag> {
    (0..16).map(|k| PhaseTag::clock(2 * k + 1)).collect()
}

/// Phases of a feedforward-only program.
pub fn feedforward_phases() -> Vec<PhaseTag> {
    [7, 9, 11, 13, 15, 17, 19, 21]
        .into_iter()
        .map(PhaseTag::clock)
        .collect()
}

/// Which layer a feedforward builder acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Hidden,
    Output,
}

impl Layer {
    /// Phase tags of linear sum, sign resolution, preset and sigmoid.
    pub fn phases(self) -> [PhaseTag; 4] {
        let base = match self {
            Layer::Hidden => 7,
            Layer::Output => 15,
        };
        [0, 2, 4, 6].map(|d| PhaseTag::clock(base + d))
    }
}

/// Incremental construction of a program: species with roles, phase-tagged
/// reactions and initial values.
#[derive(Debug)]
pub struct ProgramBuilder {
    b: CrnBuilder,
    layout: Layout,
    batch: usize,
    samples: usize,
    phases: Vec<PhaseTag>,
    init: HashMap<String, f64>,
    catalyst: Option<String>,
}

impl ProgramBuilder {
    pub fn new(net: NetSpec, batch: usize, samples: usize) -> Self {
        Self {
            b: CrnBuilder::new(),
            layout: net.layout(),
            batch,
            samples,
            phases: Vec::new(),
            init: HashMap::new(),
            catalyst: None,
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Registers `name` with `role` (first registration wins).
    pub fn sp(&mut self, name: &str, role: Role) -> Result<()> {
        self.b.species(name, role).map(|_| ())
    }

    pub fn set_init(&mut self, name: &str, v: f64) {
        self.init.insert(name.to_string(), v);
    }

    /// Adds `species` as a catalyst to every reaction until cleared.
    pub fn set_gate(&mut self, species: Option<&str>) {
        self.catalyst = species.map(str::to_string);
    }

    fn note_phase(&mut self, p: &PhaseTag) {
        if !self.phases.contains(p) {
            self.phases.push(p.clone());
        }
    }

    pub fn react(
        &mut self,
        phase: &PhaseTag,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        k: f64,
    ) -> Result<()> {
        for (n, _) in reactants.iter().chain(products) {
            if self.b.registry().get(n).is_none() {
                return Err(Error::Structural(format!(
                    "species `{n}` used before it was declared"
                )));
            }
        }
        self.note_phase(phase);
        match self.catalyst.clone() {
            None => self.b.reaction(reactants, products, k, Some(phase))?,
            Some(c) => {
                let mut r: Vec<(&str, u32)> = reactants.to_vec();
                r.push((c.as_str(), 1));
                let mut p: Vec<(&str, u32)> = products.to_vec();
                p.push((c.as_str(), 1));
                self.b.reaction(&r, &p, k, Some(phase))?
            }
        };
        Ok(())
    }

    /// `cats -> cats + product`.
    pub fn produce(&mut self, phase: &PhaseTag, cats: &[&str], product: &str, k: f64) -> Result<()> {
        let lhs: Vec<(&str, u32)> = cats.iter().map(|c| (*c, 1)).collect();
        let mut rhs = lhs.clone();
        rhs.push((product, 1));
        self.react(phase, &lhs, &rhs, k)
    }

    /// `s -> 0`.
    pub fn decay(&mut self, phase: &PhaseTag, s: &str, k: f64) -> Result<()> {
        self.react(phase, &[(s, 1)], &[], k)
    }

    pub fn finish(self) -> Result<(BfcnnProgram, HashMap<String, f64>)> {
        let crn = self.b.build()?;
        let phases = self
            .phases
            .iter()
            .map(|p| (p.clone(), crn.reactions_in_phase(p)))
            .collect();
        let program = BfcnnProgram {
            crn,
            phases,
            layout: self.layout,
            batch: self.batch,
            samples: self.samples,
        };
        program.check_structure()?;
        Ok((program, self.init))
    }
}

/// A compiled phased reaction program.
#[derive(Debug, Clone, PartialEq)]
pub struct BfcnnProgram {
    pub crn: Crn,
    /// Phase tags in execution order with the indices of their reactions.
    pub phases: Vec<(PhaseTag, Vec<usize>)>,
    pub layout: Layout,
    pub batch: usize,
    pub samples: usize,
}

impl BfcnnProgram {
    pub fn crn(&self) -> &Crn {
        &self.crn
    }

    pub fn phase_tags(&self) -> Vec<PhaseTag> {
        self.phases.iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn id(&self, name: &str) -> Result<SpeciesId> {
        self.crn.id(name)
    }

    pub fn value(&self, x: &State, name: &str) -> Result<f64> {
        Ok(x[self.id(name)?])
    }

    pub fn check_structure(&self) -> Result<()> {
        for (p, idx) in &self.phases {
            if idx.is_empty() {
                return Err(Error::Structural(format!("phase {p} has no reactions")));
            }
        }
        if let Some(j) = self.crn.reactions().iter().position(|r| r.phase.is_none()) {
            return Err(Error::Structural(format!("reaction {j} has no phase tag")));
        }
        let reg = self.crn.registry();
        if let Some(id) = reg.ids().find(|&id| reg.role(id) == Role::Generic) {
            return Err(Error::Structural(format!(
                "species `{}` has no role",
                reg.name(id)
            )));
        }
        Ok(())
    }

    /// Builds the initial state, with unset species at `default`.
    pub fn state_from(&self, values: &HashMap<String, f64>, default: f64) -> Result<State> {
        let mut x = State::filled(self.crn.species_count(), default);
        for (name, v) in values {
            x[self.id(name)?] = *v;
        }
        Ok(x)
    }

    /// Dual-rail weights currently stored in `x`.
    pub fn weights(&self, x: &State) -> Result<WeightSet> {
        let l = self.layout;
        let mut ws = WeightSet {
            w1p: nalgebra::DMatrix::zeros(l.h(), l.i() + 1),
            w1m: nalgebra::DMatrix::zeros(l.h(), l.i() + 1),
            w2p: nalgebra::DMatrix::zeros(l.o(), l.h() + 1),
            w2m: nalgebra::DMatrix::zeros(l.o(), l.h() + 1),
        };
        for e in l.entries() {
            let p = self.value(x, &l.param_names(e.param, Rail::Plus))?;
            let m = self.value(x, &l.param_names(e.param, Rail::Minus))?;
            if e.layer == 1 {
                ws.w1p[(e.row, e.col)] = p;
                ws.w1m[(e.row, e.col)] = m;
            } else {
                ws.w2p[(e.row, e.col)] = p;
                ws.w2m[(e.row, e.col)] = m;
            }
        }
        Ok(ws)
    }

    /// Writes `ws` into the weight species of `x`.
    pub fn load_weights(&self, x: &mut State, ws: &WeightSet) -> Result<()> {
        for (name, v) in weight_values(&self.layout, ws) {
            let id = self.id(&name)?;
            x[id] = v;
        }
        Ok(())
    }

    /// Gradient rails `(par⁺, par⁻)` reshaped as weight matrices.
    pub fn gradients(&self, x: &State) -> Result<(Weights, Weights)> {
        let l = self.layout;
        let mut plus = Weights::zeros(l.i(), l.h(), l.o());
        let mut minus = Weights::zeros(l.i(), l.h(), l.o());
        for e in l.entries() {
            let p = self.value(x, &names::grad(Rail::Plus, e.grad))?;
            let m = self.value(x, &names::grad(Rail::Minus, e.grad))?;
            let (tp, tm) = if e.layer == 1 {
                (&mut plus.w1, &mut minus.w1)
            } else {
                (&mut plus.w2, &mut minus.w2)
            };
            tp[(e.row, e.col)] = p;
            tm[(e.row, e.col)] = m;
        }
        Ok((plus, minus))
    }

    /// Labels held by the last input slot of each batch position.
    pub fn labels(&self, x: &State) -> Result<Vec<f64>> {
        (1..=self.batch)
            .map(|l| self.value(x, &names::input(l, self.layout.i() + 1)))
            .collect()
    }

    /// Combined output `Y_{1,l}` for every batch position.
    pub fn outputs(&self, x: &State) -> Result<Vec<f64>> {
        (1..=self.batch)
            .map(|l| self.value(x, &names::output(1, l)))
            .collect()
    }

    /// Hidden activations `P_{i,l}`, indexed `[l][i]`.
    pub fn hidden(&self, x: &State) -> Result<Vec<Vec<f64>>> {
        (1..=self.batch)
            .map(|l| {
                (1..=self.layout.h())
                    .map(|i| self.value(x, &names::hidden(i, l)))
                    .collect()
            })
            .collect()
    }

    /// Decoded net input of neuron `n` at batch position `l`.
    pub fn net_input(&self, x: &State, n: usize, l: usize) -> Result<f64> {
        Ok(self.value(x, &names::net(Rail::Plus, n, l))?
            - self.value(x, &names::net(Rail::Minus, n, l))?)
    }

    /// Inputs currently held by the input slots, indexed `[l][q]`.
    pub fn inputs(&self, x: &State) -> Result<Vec<Vec<f64>>> {
        (1..=self.batch)
            .map(|l| {
                (1..=self.layout.i())
                    .map(|q| self.value(x, &names::input(l, q)))
                    .collect()
            })
            .collect()
    }

    /// Sidecar table `species,role,init`.
    pub fn write_roles_csv<W: Write>(&self, x0: &State, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["species", "role", "init"])?;
        let reg = self.crn.registry();
        for id in reg.ids() {
            wr.write_record([
                reg.name(id).to_string(),
                reg.role(id).to_string(),
                x0[id].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Static check that no species is read as a pure catalyst right after a
    /// phase that only degrades it. Returns offending `(species, phase)` pairs.
    pub fn phase_closure_violations(&self) -> Vec<(String, PhaseTag)> {
        let reg = self.crn.registry();
        let n = reg.len();
        let np = self.phases.len();
        // per phase: modified, produced, pure decay only, catalytic read
        let mut modified = vec![vec![false; n]; np];
        let mut produced = vec![vec![false; n]; np];
        let mut other_use = vec![vec![false; n]; np];
        let mut read = vec![vec![false; n]; np];
        for (pi, (_, idx)) in self.phases.iter().enumerate() {
            for &j in idx {
                let r = &self.crn.reactions()[j];
                let pure_decay = r.product.is_empty() && r.reactant.order() == 1;
                for s in r.species() {
                    let d = r.net(s);
                    if d != 0 {
                        modified[pi][s.0] = true;
                        if d > 0 {
                            produced[pi][s.0] = true;
                        }
                        if !pure_decay {
                            other_use[pi][s.0] = true;
                        }
                    } else {
                        read[pi][s.0] = true;
                    }
                }
            }
        }
        let mut out = Vec::new();
        for s in 0..n {
            for b in 0..np {
                if !read[b][s] || modified[b][s] {
                    continue;
                }
                let last = (1..=np).map(|d| (b + np - d) % np).find(|&a| modified[a][s]);
                if let Some(a) = last {
                    if !produced[a][s] && !other_use[a][s] {
                        out.push((reg.name(SpeciesId(s)).to_string(), self.phases[b].0.clone()));
                    }
                }
            }
        }
        out
    }
}

/// Species values encoding `ws`.
pub fn weight_values(layout: &Layout, ws: &WeightSet) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for e in layout.entries() {
        let (p, m) = if e.layer == 1 {
            (ws.w1p[(e.row, e.col)], ws.w1m[(e.row, e.col)])
        } else {
            (ws.w2p[(e.row, e.col)], ws.w2m[(e.row, e.col)])
        };
        out.push((layout.param_names(e.param, Rail::Plus), p));
        out.push((layout.param_names(e.param, Rail::Minus), m));
    }
    out
}

/// Compiles the full sixteen-phase training program and its initial state.
pub fn compile(net: &NetSpec, train: &TrainSpec) -> Result<(BfcnnProgram, State)> {
    train.validate(net)?;
    let p = train.samples.len();
    let pt = train.batch_size;
    let mut pb = ProgramBuilder::new(*net, pt, p);
    phases::declare_weights(&mut pb)?;

    build_assignment(&mut pb, &train.samples)?;
    build_lws(&mut pb, Layer::Hidden)?;
    build_weight_snapshot(&mut pb)?;
    build_sign_resolution(&mut pb, Layer::Hidden, train.annihilation_rate)?;
    build_preset_half(&mut pb, Layer::Hidden)?;
    build_sigmoid(&mut pb, Layer::Hidden)?;
    build_lws(&mut pb, Layer::Output)?;
    build_sign_resolution(&mut pb, Layer::Output, train.annihilation_rate)?;
    build_preset_half(&mut pb, Layer::Output)?;
    build_sigmoid(&mut pb, Layer::Output)?;
    build_precalc(&mut pb, train.judge_rates)?;
    build_judgment(&mut pb, train.judge_rates)?;
    pb.set_gate(Some(&names::gate()));
    build_neggrad(&mut pb)?;
    build_update(&mut pb, train.eta)?;
    pb.set_gate(None);
    build_clearout(&mut pb)?;

    for (name, v) in weight_values(&pb.layout(), &train.init_weights) {
        pb.set_init(&name, v);
    }
    let (program, init) = pb.finish()?;
    debug_assert_eq!(program.phase_tags(), phase_sequence());
    let x0 = program.state_from(&init, train.default_conc)?;
    Ok((program, x0))
}

/// Compiles only the feedforward phases `O7..O21` with `inputs` loaded
/// directly into the input slots; one batch position per input vector.
pub fn compile_feedforward(
    net: &NetSpec,
    weights: &WeightSet,
    inputs: &[Vec<f64>],
    default_conc: f64,
) -> Result<(BfcnnProgram, State)> {
    net.validate()?;
    weights.validate()?;
    if weights.input_width() != net.input_width
        || weights.hidden_width() != net.hidden_width
        || weights.output_width() != net.output_width
    {
        return Err(Error::Config("weights do not match the layer widths".into()));
    }
    if inputs.is_empty() {
        return Err(Error::Config("no inputs to evaluate".into()));
    }
    let mut pb = ProgramBuilder::new(*net, inputs.len(), 0);
    phases::declare_weights(&mut pb)?;
    for (l, x) in inputs.iter().enumerate() {
        if x.len() != net.input_width || x.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config(format!(
                "input {} must have {} nonnegative entries",
                l + 1,
                net.input_width
            )));
        }
        for (q, v) in x.iter().enumerate() {
            let name = names::input(l + 1, q + 1);
            pb.sp(&name, Role::Input)?;
            pb.set_init(&name, *v);
        }
    }
    build_lws(&mut pb, Layer::Hidden)?;
    build_sign_resolution(&mut pb, Layer::Hidden, 1.0)?;
    build_preset_half(&mut pb, Layer::Hidden)?;
    build_sigmoid(&mut pb, Layer::Hidden)?;
    build_lws(&mut pb, Layer::Output)?;
    build_sign_resolution(&mut pb, Layer::Output, 1.0)?;
    build_preset_half(&mut pb, Layer::Output)?;
    build_sigmoid(&mut pb, Layer::Output)?;
    for (name, v) in weight_values(&pb.layout(), weights) {
        pb.set_init(&name, v);
    }
    let (program, init) = pb.finish()?;
    let x0 = program.state_from(&init, default_conc)?;
    Ok((program, x0))
}

#[cfg(test)]
mod tests;
