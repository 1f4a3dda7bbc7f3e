//! Reaction builders for each phase of the training program.

use super::names::{self, Rail};
use super::{Layer, Param, ProgramBuilder};
use crate::crn::{PhaseTag, Role};
use crate::error::{Error, Result};
use crate::oracle::Sample;

fn rail_role(r: Rail, plus: Role, minus: Role) -> Role {
    match r {
        Rail::Plus => plus,
        Rail::Minus => minus,
    }
}

fn phase(n: usize) -> PhaseTag {
    PhaseTag::clock(n)
}

/// Registers every weight and bias species.
pub(super) fn declare_weights(pb: &mut ProgramBuilder) -> Result<()> {
    let l = pb.layout();
    for e in l.entries() {
        for r in Rail::BOTH {
            let role = match e.param {
                Param::Weight(_) => rail_role(r, Role::WeightPlus, Role::WeightMinus),
                Param::Bias(_) => rail_role(r, Role::BiasPlus, Role::BiasMinus),
            };
            pb.sp(&l.param_names(e.param, r), role)?;
        }
    }
    Ok(())
}

/// `out = Σ inputs`: each input catalyses production of `out`, which decays.
pub fn build_addition_gadget(
    pb: &mut ProgramBuilder,
    phase: &PhaseTag,
    inputs: &[&str],
    out: &str,
    role: Role,
) -> Result<()> {
    pb.sp(out, role)?;
    for s in inputs {
        pb.produce(phase, &[s], out, 1.0)?;
    }
    pb.decay(phase, out, 1.0)
}

/// `out = a·b` through `a + b -> a + b + out`, `out -> 0`.
fn product_block(pb: &mut ProgramBuilder, phase: &PhaseTag, a: &str, b: &str, out: &str) -> Result<()> {
    pb.sp(out, Role::Intermediate)?;
    pb.produce(phase, &[a, b], out, 1.0)?;
    pb.decay(phase, out, 1.0)
}

/// Sample-index rotation applied to the order rail of batch position `l`
/// after each iteration. Entry `i-1` holds the image of sample `i`.
///
/// Indices `l, l+p̃, ..., p-2p̃+l` move forward by `p̃`, the last one `p-p̃+l`
/// wraps around to `l` and all other indices stay put.
pub fn rotation_map(p: usize, pt: usize, l: usize) -> Result<Vec<usize>> {
    if pt == 0 || p % pt != 0 || l == 0 || l > pt {
        return Err(Error::Config(format!(
            "rotation needs 1 <= l <= batch and batch | samples (p={p}, batch={pt}, l={l})"
        )));
    }
    let mut map: Vec<usize> = (1..=p).collect();
    let blocks = p / pt;
    for k in 0..blocks.saturating_sub(1) {
        let i = l + k * pt;
        map[i - 1] = i + pt;
    }
    map[p - pt + l - 1] = l;
    Ok(map)
}

/// Phases O1, O3 and O5: load the current block into the input slots and
/// advance the sample order by one block.
pub fn build_assignment(pb: &mut ProgramBuilder, samples: &[Sample]) -> Result<()> {
    let (o1, o3, o5) = (phase(1), phase(3), phase(5));
    let p = samples.len();
    let pt = pb.batch();
    let width = pb.layout().i();
    for (i, s) in samples.iter().enumerate() {
        for (q, v) in s.x.iter().enumerate() {
            let n = names::sample(i + 1, q + 1);
            pb.sp(&n, Role::Sample)?;
            pb.set_init(&n, *v);
        }
        let n = names::label(i + 1);
        pb.sp(&n, Role::Label)?;
        pb.set_init(&n, s.d);
    }
    for l in 1..=pt {
        for q in 1..=width + 1 {
            pb.sp(&names::input(l, q), Role::Input)?;
        }
        for i in 1..=p {
            let c = names::order(l, i);
            let ct = names::aux_order(l, i);
            pb.sp(&c, Role::Order)?;
            pb.sp(&ct, Role::AuxOrder)?;
            pb.set_init(&c, if i == l { 1.0 } else { 0.0 });
            pb.set_init(&ct, 0.0);
        }
    }
    for l in 1..=pt {
        for i in 1..=p {
            let c = names::order(l, i);
            for q in 1..=width {
                pb.produce(&o1, &[&c, &names::sample(i, q)], &names::input(l, q), 1.0)?;
            }
            pb.produce(&o1, &[&c, &names::label(i)], &names::input(l, width + 1), 1.0)?;
        }
        for q in 1..=width + 1 {
            pb.decay(&o1, &names::input(l, q), 1.0)?;
        }
    }
    for l in 1..=pt {
        for i in 1..=p {
            pb.react(&o3, &[(&names::order(l, i), 1)], &[(&names::aux_order(l, i), 1)], 1.0)?;
        }
    }
    for l in 1..=pt {
        let map = rotation_map(p, pt, l)?;
        for (i, &to) in (1..=p).zip(&map) {
            pb.react(&o5, &[(&names::aux_order(l, i), 1)], &[(&names::order(l, to), 1)], 1.0)?;
        }
    }
    Ok(())
}

/// Net-input species of `layer` at batch position `l`, with the catalyst
/// pairs feeding them: `(neuron, [(weight, input)], bias)`.
fn layer_terms(pb: &ProgramBuilder, layer: Layer, l: usize, r: Rail) -> Vec<(usize, Vec<(String, String)>, String)> {
    let lay = pb.layout();
    let mut out = Vec::new();
    match layer {
        Layer::Hidden => {
            for i in 1..=lay.h() {
                let pairs = (1..=lay.i())
                    .map(|j| (names::weight(r, lay.w1_index(i, j)), names::input(l, j)))
                    .collect();
                out.push((i, pairs, names::bias(r, i)));
            }
        }
        Layer::Output => {
            for o in 1..=lay.o() {
                let pairs = (1..=lay.h())
                    .map(|j| (names::weight(r, lay.w2_index(o, j)), names::hidden(j, l)))
                    .collect();
                out.push((lay.out_neuron(o), pairs, names::bias(r, lay.out_neuron(o))));
            }
        }
    }
    out
}

fn neurons(pb: &ProgramBuilder, layer: Layer) -> Vec<(usize, usize)> {
    // (global neuron index, index inside its layer)
    let lay = pb.layout();
    match layer {
        Layer::Hidden => (1..=lay.h()).map(|i| (i, i)).collect(),
        Layer::Output => (1..=lay.o()).map(|o| (lay.out_neuron(o), o)).collect(),
    }
}

fn act_rail(layer: Layer, r: Rail, idx: usize, l: usize) -> (String, Role) {
    match layer {
        Layer::Hidden => (
            names::hidden_rail(r, idx, l),
            rail_role(r, Role::ActivationPlus, Role::ActivationMinus),
        ),
        Layer::Output => (
            names::output_rail(r, idx, l),
            rail_role(r, Role::OutputPlus, Role::OutputMinus),
        ),
    }
}

fn act(layer: Layer, idx: usize, l: usize) -> (String, Role) {
    match layer {
        Layer::Hidden => (names::hidden(idx, l), Role::Activation),
        Layer::Output => (names::output(idx, l), Role::Output),
    }
}

/// Linear weighted sum (O7 or O15): `n^r = Σ w^r s + b^r` on each rail.
pub fn build_lws(pb: &mut ProgramBuilder, layer: Layer) -> Result<()> {
    let ph = layer.phases()[0].clone();
    if layer == Layer::Output {
        for l in 1..=pb.batch() {
            for j in 1..=pb.layout().h() {
                let (n, role) = act(Layer::Hidden, j, l);
                pb.sp(&n, role)?;
            }
        }
    }
    for l in 1..=pb.batch() {
        for r in Rail::BOTH {
            for (n, pairs, bias) in layer_terms(pb, layer, l, r) {
                let target = names::net(r, n, l);
                pb.sp(&target, rail_role(r, Role::NetPlus, Role::NetMinus))?;
                for (w, s) in &pairs {
                    pb.produce(&ph, &[w, s], &target, 1.0)?;
                }
                pb.produce(&ph, &[&bias], &target, 1.0)?;
                pb.decay(&ph, &target, 1.0)?;
            }
        }
    }
    Ok(())
}

/// Copies every weight and bias into its snapshot species during O7.
pub fn build_weight_snapshot(pb: &mut ProgramBuilder) -> Result<()> {
    let ph = phase(7);
    let lay = pb.layout();
    for e in lay.entries() {
        for r in Rail::BOTH {
            let g = names::snapshot(r, e.grad);
            pb.sp(&g, rail_role(r, Role::SnapshotPlus, Role::SnapshotMinus))?;
            pb.produce(&ph, &[&lay.param_names(e.param, r)], &g, 1.0)?;
            pb.decay(&ph, &g, 1.0)?;
        }
    }
    Ok(())
}

/// O9 or O17: `N⁺ + N⁻ -> 0`.
pub fn build_sign_resolution(pb: &mut ProgramBuilder, layer: Layer, rate: f64) -> Result<()> {
    let ph = layer.phases()[1].clone();
    for l in 1..=pb.batch() {
        for (n, _) in neurons(pb, layer) {
            pb.react(
                &ph,
                &[(&names::net(Rail::Plus, n, l), 1), (&names::net(Rail::Minus, n, l), 1)],
                &[],
                rate,
            )?;
        }
    }
    Ok(())
}

/// O11 or O19: drive the activation rail of every nonzero net rail to
/// `Half = 0.5`.
pub fn build_preset_half(pb: &mut ProgramBuilder, layer: Layer) -> Result<()> {
    let ph = layer.phases()[2].clone();
    let half = names::half();
    pb.sp(&half, Role::Half)?;
    pb.set_init(&half, 0.5);
    for l in 1..=pb.batch() {
        for (n, idx) in neurons(pb, layer) {
            for r in Rail::BOTH {
                let net = names::net(r, n, l);
                let (a, role) = act_rail(layer, r, idx, l);
                pb.sp(&a, role)?;
                pb.produce(&ph, &[&net, &half], &a, 1.0)?;
                pb.react(&ph, &[(&net, 1), (&a, 1)], &[(&net, 1)], 1.0)?;
            }
        }
    }
    Ok(())
}

/// O13 or O21: logistic growth of the positive rail and logistic decay of the
/// negative rail, each driven by a decaying net species, then `P = P⁺ + P⁻`.
pub fn build_sigmoid(pb: &mut ProgramBuilder, layer: Layer) -> Result<()> {
    let ph = layer.phases()[3].clone();
    for l in 1..=pb.batch() {
        for (n, idx) in neurons(pb, layer) {
            let np = names::net(Rail::Plus, n, l);
            let nm = names::net(Rail::Minus, n, l);
            let (pp, _) = act_rail(layer, Rail::Plus, idx, l);
            let (pm, _) = act_rail(layer, Rail::Minus, idx, l);
            pb.react(&ph, &[(&np, 1), (&pp, 1)], &[(&pp, 2), (&np, 1)], 1.0)?;
            pb.react(&ph, &[(&pp, 2), (&np, 1)], &[(&pp, 1), (&np, 1)], 1.0)?;
            pb.decay(&ph, &np, 1.0)?;
            pb.react(&ph, &[(&nm, 1), (&pm, 2)], &[(&pm, 3), (&nm, 1)], 1.0)?;
            pb.react(&ph, &[(&nm, 1), (&pm, 1)], &[(&nm, 1)], 1.0)?;
            pb.decay(&ph, &nm, 1.0)?;
            let (p, role) = act(layer, idx, l);
            build_addition_gadget(pb, &ph, &[&pp, &pm], &p, role)?;
        }
    }
    Ok(())
}

/// O23: split output and hidden activations into working copies, form the
/// error rails `e = d - y`, the complements `1 - y` and `1 - p`, the error
/// magnitude and the judge species at its quasi-equilibrium `(k2/k1)e²`.
pub fn build_precalc(pb: &mut ProgramBuilder, judge_rates: [f64; 4]) -> Result<()> {
    let ph = phase(23);
    let lay = pb.layout();
    let [k1, k2, _, _] = judge_rates;
    let label_slot = lay.i() + 1;
    for l in 1..=pb.batch() {
        let y = names::output(1, l);
        let (ye, ys, yt) = (names::y_err(l), names::y_sub(l), names::y_keep(l));
        let (iy, sy) = (names::unit_y(l), names::one_minus_y(l));
        for s in [&ye, &ys, &yt, &sy] {
            pb.sp(s, Role::Precalc)?;
        }
        pb.sp(&iy, Role::Unit)?;
        pb.set_init(&iy, 1.0);
        let d = names::input(l, label_slot);
        pb.react(&ph, &[(&y, 1)], &[(&ye, 1), (&ys, 1), (&yt, 1)], 1.0)?;
        pb.react(&ph, &[(&ye, 1), (&d, 1)], &[], 1.0)?;
        pb.react(&ph, &[(&ys, 1), (&iy, 1)], &[], 1.0)?;
        for i in 1..=lay.h() {
            let p = names::hidden(i, l);
            let (pis, ptk) = (names::p_sub(i, l), names::p_keep(i, l));
            let (ip, sp) = (names::unit_p(i, l), names::one_minus_p(i, l));
            pb.sp(&pis, Role::Precalc)?;
            pb.sp(&ptk, Role::Precalc)?;
            pb.sp(&sp, Role::Precalc)?;
            pb.sp(&ip, Role::Unit)?;
            pb.set_init(&ip, 1.0);
            pb.react(&ph, &[(&p, 1)], &[(&pis, 1), (&ptk, 1)], 1.0)?;
            pb.react(&ph, &[(&pis, 1), (&ip, 1)], &[], 1.0)?;
            pb.produce(&ph, &[&ip], &sp, 1.0)?;
            pb.decay(&ph, &sp, 1.0)?;
        }
        let (ep, em) = (names::error_rail(Rail::Plus, l), names::error_rail(Rail::Minus, l));
        pb.sp(&ep, Role::ErrorPlus)?;
        pb.sp(&em, Role::ErrorMinus)?;
        pb.produce(&ph, &[&d], &ep, 1.0)?;
        pb.decay(&ph, &ep, 1.0)?;
        pb.produce(&ph, &[&ye], &em, 1.0)?;
        pb.decay(&ph, &em, 1.0)?;
        pb.produce(&ph, &[&iy], &sy, 1.0)?;
        pb.decay(&ph, &sy, 1.0)?;
        let e = names::error(l);
        build_addition_gadget(pb, &ph, &[&ep, &em], &e, Role::Error)?;
        let a = names::judge(l);
        pb.sp(&a, Role::Judge)?;
        pb.react(&ph, &[(&e, 2)], &[(&e, 2), (&a, 1)], k2)?;
        pb.decay(&ph, &a, k1)?;
    }
    Ok(())
}

/// O25: bistable switch on each error magnitude with unstable point at the
/// threshold, and the gate `Ca = Σ_l E_l`.
pub fn build_judgment(pb: &mut ProgramBuilder, judge_rates: [f64; 4]) -> Result<()> {
    let ph = phase(25);
    let [k1, k2, k3, k4] = judge_rates;
    let ca = names::gate();
    pb.sp(&ca, Role::Gate)?;
    for l in 1..=pb.batch() {
        let (e, a) = (names::error(l), names::judge(l));
        pb.react(&ph, &[(&a, 1)], &[(&e, 2)], k1)?;
        pb.react(&ph, &[(&e, 2)], &[(&e, 1), (&a, 1)], k2)?;
        pb.react(&ph, &[(&e, 1), (&a, 1)], &[(&a, 1)], k3)?;
        pb.decay(&ph, &e, k4)?;
        pb.produce(&ph, &[&e], &ca, 1.0)?;
    }
    pb.decay(&ph, &ca, 1.0)
}

/// O27: negative gradient of every weight and bias, expanded into signed
/// monomials whose rail is the product of the factor rails and summed per
/// rail into `Par⁺_k`, `Par⁻_k`.
pub fn build_neggrad(pb: &mut ProgramBuilder) -> Result<()> {
    let ph = phase(27);
    let lay = pb.layout();
    let (h, n_in, nw) = (lay.h(), lay.i(), lay.weight_count());
    // contributions[rail][k-1]
    let mut sums: [Vec<Vec<String>>; 2] = [vec![Vec::new(); lay.param_count()], vec![Vec::new(); lay.param_count()]];
    let slot = |r: Rail| if r == Rail::Plus { 0 } else { 1 };
    for l in 1..=pb.batch() {
        let my = names::m_y(l);
        product_block(pb, &ph, &names::y_keep(l), &names::one_minus_y(l), &my)?;
        for s in Rail::BOTH {
            let es = names::error_rail(s, l);
            let q = names::leaf1(nw + h + 1, s, l);
            product_block(pb, &ph, &es, &my, &q)?;
            sums[slot(s)][nw + h].push(q);
        }
        for a in 1..=h {
            let k_out = lay.w2_index(1, a);
            for s in Rail::BOTH {
                let me = names::m_err(s, a, l);
                product_block(pb, &ph, &names::error_rail(s, l), &names::p_keep(a, l), &me)?;
                let te = names::t_err(s, a, l);
                product_block(pb, &ph, &me, &my, &te)?;
                sums[slot(s)][k_out - 1].push(te);
            }
            for t in Rail::BOTH {
                let mw = names::m_w(t, a, l);
                product_block(pb, &ph, &names::one_minus_p(a, l), &names::weight(t, k_out), &mw)?;
                for b in 1..=n_in {
                    let tw = names::t_w(t, a, b, l);
                    product_block(pb, &ph, &mw, &names::input(l, b), &tw)?;
                }
            }
            for s in Rail::BOTH {
                let te = names::t_err(s, a, l);
                for t in Rail::BOTH {
                    let r = s.times(t);
                    for b in 1..=n_in {
                        let k = lay.w1_index(a, b);
                        let q = names::leaf(k, s, t, l);
                        product_block(pb, &ph, &te, &names::t_w(t, a, b, l), &q)?;
                        sums[slot(r)][k - 1].push(q);
                    }
                    let k = nw + a;
                    let q = names::leaf(k, s, t, l);
                    product_block(pb, &ph, &te, &names::m_w(t, a, l), &q)?;
                    sums[slot(r)][k - 1].push(q);
                }
            }
        }
    }
    for r in Rail::BOTH {
        for (k0, terms) in sums[slot(r)].iter().enumerate() {
            let refs: Vec<&str> = terms.iter().map(String::as_str).collect();
            build_addition_gadget(
                pb,
                &ph,
                &refs,
                &names::grad(r, k0 + 1),
                rail_role(r, Role::GradPlus, Role::GradMinus),
            )?;
        }
    }
    Ok(())
}

/// O29: `w = γ + η·par` on every rail of every weight and bias, where `γ` is
/// the snapshot taken in O7.
pub fn build_update(pb: &mut ProgramBuilder, eta: f64) -> Result<()> {
    let ph = phase(29);
    let lay = pb.layout();
    let lr = names::learning_rate();
    pb.sp(&lr, Role::LearningRate)?;
    pb.set_init(&lr, eta);
    for e in lay.entries() {
        for r in Rail::BOTH {
            let target = lay.param_names(e.param, r);
            let inc = match e.param {
                Param::Weight(k) => names::d_weight(r, k),
                Param::Bias(j) => names::d_bias(r, j),
            };
            pb.sp(&inc, rail_role(r, Role::IncrementPlus, Role::IncrementMinus))?;
            pb.produce(&ph, &[&names::grad(r, e.grad), &lr], &inc, 1.0)?;
            pb.react(&ph, &[(&inc, 1)], &[(&target, 1)], 1.0)?;
            pb.produce(&ph, &[&names::snapshot(r, e.grad)], &target, 1.0)?;
            pb.decay(&ph, &target, 1.0)?;
        }
    }
    Ok(())
}

/// O31: clear activation rails and working copies, and refill the unit
/// species consumed in O23.
pub fn build_clearout(pb: &mut ProgramBuilder) -> Result<()> {
    let ph = phase(31);
    let lay = pb.layout();
    let unit = names::unit();
    pb.sp(&unit, Role::Unit)?;
    pb.set_init(&unit, 1.0);
    for l in 1..=pb.batch() {
        let mut clear = Vec::new();
        for i in 1..=lay.h() {
            for r in Rail::BOTH {
                clear.push(names::hidden_rail(r, i, l));
            }
        }
        for o in 1..=lay.o() {
            for r in Rail::BOTH {
                clear.push(names::output_rail(r, o, l));
            }
        }
        clear.extend([names::y_sub(l), names::y_keep(l), names::y_err(l)]);
        for i in 1..=lay.h() {
            clear.push(names::p_keep(i, l));
            clear.push(names::p_sub(i, l));
        }
        for s in &clear {
            pb.decay(&ph, s, 1.0)?;
        }
        let iy = names::unit_y(l);
        pb.produce(&ph, &[&unit], &iy, 1.0)?;
        pb.decay(&ph, &iy, 1.0)?;
        for i in 1..=lay.h() {
            let ip = names::unit_p(i, l);
            pb.produce(&ph, &[&unit], &ip, 1.0)?;
            pb.decay(&ph, &ip, 1.0)?;
        }
    }
    Ok(())
}
