use chemnn::analysis::{bistable_equilibria, equilibrium_residual, Stability};
use chemnn::compiler::names::{self, Rail};
use chemnn::compiler::{build_addition_gadget, rotation_map, ProgramBuilder};
use chemnn::integrator::{integrate, integrate_to_equilibrium};
use chemnn::oracle::{self, Batch};
use chemnn::training::PhaseDriver;
use chemnn::{
    add_catalyst, compile, compile_feedforward, presets, Crn, CrnBuilder, IntegratorConfig, NetSpec, PhaseTag,
    Recording, Role, State, TrainSpec, WeightSet, Weights,
};
use num_traits::ToPrimitive;
use proptest::prelude::*;

const NAMES: [&str; 4] = ["A", "B", "C", "D"];

/// Up to four species, reactions of order at most two with coefficients up to 2.
fn arb_crn() -> impl Strategy<Value = Crn> {
    let complex = proptest::collection::vec((0usize..4, 1u32..=2), 0..=2);
    let reaction = (complex.clone(), complex, 0.1f64..3.0);
    proptest::collection::vec(reaction, 1..6).prop_filter_map("degenerate network", |rs| {
        let mut b = CrnBuilder::new();
        for n in NAMES {
            b.species(n, Role::Generic).ok()?;
        }
        let mut any = false;
        for (lhs, rhs, k) in rs {
            let side = |c: &[(usize, u32)]| {
                let mut v: Vec<(&str, u32)> = Vec::new();
                for &(i, n) in c {
                    match v.iter_mut().find(|(s, _)| *s == NAMES[i]) {
                        Some(e) => e.1 += n,
                        None => v.push((NAMES[i], n)),
                    }
                }
                v
            };
            let (l, r) = (side(&lhs), side(&rhs));
            if l.iter().map(|t| t.1).sum::<u32>() > 2 || l == r {
                continue;
            }
            if b.reaction(&l, &r, k, None).is_ok() {
                any = true;
            }
        }
        if any {
            b.build().ok()
        } else {
            None
        }
    })
}

fn arb_state(n: usize) -> impl Strategy<Value = State> {
    proptest::collection::vec(0.0f64..2.0, n).prop_map(State::from_vec)
}

fn endpoints() -> IntegratorConfig {
    IntegratorConfig::default().with_record(Recording::Endpoints)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn catalyst_keeps_net_change(crn in arb_crn(), s in 0usize..4) {
        let id = crn.id(NAMES[s]).unwrap();
        for r in crn.reactions() {
            let g = add_catalyst(r, id);
            for sp in 0..4 {
                let sid = crn.id(NAMES[sp]).unwrap();
                prop_assert_eq!(g.net(sid), r.net(sid));
            }
        }
    }

    #[test]
    fn rhs_is_rate_weighted_columns(crn in arb_crn(), x in arb_state(4)) {
        let rhs = crn.rhs(&x).unwrap();
        let m = crn.stoichiometric_matrix();
        for (i, v) in rhs.iter().enumerate() {
            let mut want = 0.0;
            for j in 0..crn.reactions().len() {
                want += m[i][j] as f64 * crn.reaction_rate(&x, j).unwrap();
            }
            prop_assert!((v - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} vs {}", v, want);
        }
    }

    #[test]
    fn text_round_trip(crn in arb_crn()) {
        let back = Crn::parse(&crn.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), crn.to_text());
        prop_assert_eq!(back, crn);
    }

    #[test]
    fn integration_stays_nonnegative_and_conserves(crn in arb_crn(), x in arb_state(4)) {
        let cfg = IntegratorConfig { max_steps: 200_000, ..IntegratorConfig::default() };
        // some random networks blow up; only finished runs are checked
        let Ok(tr) = integrate(&crn, &x, 2.0, &cfg) else { return Ok(()); };
        let laws = crn.conservation_laws();
        for s in &tr.states {
            prop_assert!(s.is_nonnegative());
            for law in &laws {
                let dot = |y: &State| -> f64 {
                    law.coefficients().iter().zip(y.as_slice()).map(|(c, v)| c.to_f64().unwrap() * v).sum()
                };
                let scale = law.coefficients().iter().map(|c| c.to_f64().unwrap().abs()).sum::<f64>();
                let tol = 10.0 * cfg.abs_tol * scale.max(1.0) + 1e-7 * dot(&x).abs();
                prop_assert!((dot(s) - dot(&x)).abs() <= tol, "{} vs {}", dot(s), dot(&x));
            }
        }
    }

    #[test]
    fn rotation_is_a_permutation_of_order_p_over_batch(blocks in 1usize..6, pt in 1usize..5, l0 in 0usize..5) {
        let p = blocks * pt;
        let l = l0 % pt + 1;
        let map = rotation_map(p, pt, l).unwrap();
        let mut seen = map.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (1..=p).collect::<Vec<_>>());
        let apply = |v: &[usize]| v.iter().map(|&i| map[i - 1]).collect::<Vec<_>>();
        let id: Vec<usize> = (1..=p).collect();
        let mut cur = id.clone();
        let mut order = 0;
        loop {
            cur = apply(&cur);
            order += 1;
            if cur == id { break; }
        }
        prop_assert_eq!(order, blocks);
    }

    #[test]
    fn dual_rail_split_is_exact(v in proptest::collection::vec(-5.0f64..5.0, 9)) {
        let w = Weights::from_rows(&[&v[0..3], &v[3..6]], &[&v[6..9]]);
        let ws = w.split();
        ws.validate().unwrap();
        prop_assert_eq!(ws.decode(), w);
    }

    #[test]
    fn forward_outputs_are_probabilities(v in proptest::collection::vec(-8.0f64..8.0, 9),
                                         x in proptest::collection::vec(0.0f64..1.0, 2)) {
        let w = Weights::from_rows(&[&v[0..3], &v[3..6]], &[&v[6..9]]);
        let y = oracle::predict(&w, &[x]).unwrap();
        prop_assert!(y[0] > 0.0 && y[0] < 1.0);
    }

    #[test]
    fn judge_equilibria_are_equilibria(k1 in 0.5f64..10.0, k2 in 0.5f64..4.0, k3 in 0.5f64..4.0, k4 in 0.01f64..1.0) {
        let eq = bistable_equilibria(k1, k2, k3, k4);
        prop_assert_eq!(eq[0].e, 0.0);
        for q in &eq {
            let mut b = CrnBuilder::new();
            b.species("E", Role::Generic).unwrap();
            b.species("A", Role::Generic).unwrap();
            b.reaction(&[("A", 1)], &[("E", 2)], k1, None).unwrap();
            b.reaction(&[("E", 2)], &[("E", 1), ("A", 1)], k2, None).unwrap();
            b.reaction(&[("E", 1), ("A", 1)], &[("A", 1)], k3, None).unwrap();
            b.reaction(&[("E", 1)], &[], k4, None).unwrap();
            let crn = b.build().unwrap();
            let r = equilibrium_residual(&crn, &State::from_vec(vec![q.e, q.a])).unwrap();
            prop_assert!(r < 1e-9 * (1.0 + q.e * q.e), "{:?}: {}", q, r);
        }
        if eq.len() == 3 {
            prop_assert_eq!(eq[1].stability, Stability::Unstable);
            prop_assert_eq!(eq[2].stability, Stability::Stable);
        }
    }
}

fn random_batch(v: &[f64], x: &[f64], d: &[f64]) -> (Weights, Batch) {
    let w = Weights::from_rows(&[&v[0..3], &v[3..6]], &[&v[6..9]]);
    let mut b = Batch::from_inputs(&[x[0..2].to_vec(), x[2..4].to_vec()]).unwrap();
    for (l, dl) in d.iter().enumerate() {
        b.delta[(0, l)] = *dl;
    }
    (w, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradients_match_finite_differences(v in proptest::collection::vec(-3.0f64..3.0, 9),
                                          x in proptest::collection::vec(0.0f64..1.0, 4),
                                          d in proptest::collection::vec(0.0f64..1.0, 2)) {
        let (w, b) = random_batch(&v, &x, &d);
        let g = oracle::gradients(&w, &b).unwrap();
        let f = |w: &Weights| oracle::loss(&oracle::forward(w, &b).unwrap().y, &b.delta);
        let h = 1e-5;
        for layer in 0..2 {
            let m = if layer == 0 { &w.w1 } else { &w.w2 };
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    let mut up = w.clone();
                    let mut dn = w.clone();
                    let (u, dd) = if layer == 0 { (&mut up.w1, &mut dn.w1) } else { (&mut up.w2, &mut dn.w2) };
                    u[(i, j)] += h;
                    dd[(i, j)] -= h;
                    let fd = -(f(&up) - f(&dn)) / (2.0 * h);
                    let an = if layer == 0 { g.w1[(i, j)] } else { g.w2[(i, j)] };
                    prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{} vs {}", fd, an);
                }
            }
        }
    }

    #[test]
    fn gradients_add_over_the_batch(v in proptest::collection::vec(-3.0f64..3.0, 9),
                                    x in proptest::collection::vec(0.0f64..1.0, 4),
                                    d in proptest::collection::vec(0.0f64..1.0, 2)) {
        let (w, b) = random_batch(&v, &x, &d);
        let g = oracle::gradients(&w, &b).unwrap();
        let single = |l: usize| {
            let mut s = Batch::from_inputs(&[x[2 * l..2 * l + 2].to_vec()]).unwrap();
            s.delta[(0, 0)] = d[l];
            oracle::gradients(&w, &s).unwrap()
        };
        let sum = single(0).add(&single(1));
        prop_assert!(g.max_abs_diff(&sum) < 1e-12);
    }
}

/// Feedforward program for one input with the net input written onto the rails.
fn one_neuron(np: f64, nm: f64) -> (PhaseDriver, State) {
    let net = NetSpec::new(1, 1, 1);
    let ws = WeightSet::from_rows(&[&[0.0, 0.0]], &[&[0.0, 0.0]], &[&[0.0, 0.0]], &[&[0.0, 0.0]]);
    let (p, mut x) = compile_feedforward(&net, &ws, &[vec![0.0]], 0.0).unwrap();
    x[p.id(&names::net(Rail::Plus, 1, 1)).unwrap()] = np;
    x[p.id(&names::net(Rail::Minus, 1, 1)).unwrap()] = nm;
    (PhaseDriver::new(p, 50.0, endpoints()).unwrap(), x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sign_resolution_leaves_one_rail(base in 0.0f64..4.0, n in 0.5f64..5.0, neg in any::<bool>()) {
        let (np, nm) = if neg { (base, base + n) } else { (base + n, base) };
        let (mut d, mut x) = one_neuron(np, nm);
        d.run_phase(&mut x, &PhaseTag::clock(9)).unwrap();
        let p = d.program.value(&x, &names::net(Rail::Plus, 1, 1)).unwrap();
        let m = d.program.value(&x, &names::net(Rail::Minus, 1, 1)).unwrap();
        prop_assert!(p.min(m) < 1e-8, "{} {}", p, m);
        prop_assert!((p - m - (np - nm)).abs() < 1e-8);
    }

    #[test]
    fn sigmoid_phase_consumes_the_net_input(n in 0.5f64..5.0, neg in any::<bool>()) {
        let v = if neg { -n } else { n };
        let (mut d, mut x) = one_neuron(v.max(0.0), (-v).max(0.0));
        for k in [9, 11, 13] {
            d.run_phase(&mut x, &PhaseTag::clock(k)).unwrap();
        }
        for r in Rail::BOTH {
            prop_assert!(d.program.value(&x, &names::net(r, 1, 1)).unwrap() < 1e-8);
        }
        let p = d.program.value(&x, &names::hidden(1, 1)).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
        prop_assert!((p - oracle::sigmoid(v)).abs() < 1e-6, "{} vs {}", p, oracle::sigmoid(v));
    }

    #[test]
    fn gadget_sums_its_inputs(a in 0.0f64..3.0, b in 0.0f64..3.0, c in 0.0f64..3.0) {
        let mut pb = ProgramBuilder::new(NetSpec::default(), 1, 1);
        let ph = PhaseTag::clock(1);
        for (n, v) in [("U", a), ("V", b), ("W", c)] {
            pb.sp(n, Role::Intermediate).unwrap();
            pb.set_init(n, v);
        }
        build_addition_gadget(&mut pb, &ph, &["U", "V", "W"], "S", Role::Intermediate).unwrap();
        let (p, init) = pb.finish().unwrap();
        let mut x = p.state_from(&init, 0.0).unwrap();
        let mut d = PhaseDriver::new(p, 50.0, endpoints()).unwrap();
        d.run_phase(&mut x, &ph).unwrap();
        let s = d.program.value(&x, "S").unwrap();
        prop_assert!((s - (a + b + c)).abs() < 1e-6 * (1.0 + a + b + c));
    }

    /// `Y1 -> Y2 + Y3`, `Y2 + Z -> 0` from random states of one compatibility
    /// class reaches `(0, max(d2, 0), d1, max(-d2, 0))`.
    #[test]
    fn replication_annihilation_reaches_class_equilibrium(
        class in prop_oneof![Just((1.0, 0.7)), Just((2.0, -0.4))],
        f in 0.0f64..1.0,
        z in 0.0f64..3.0,
    ) {
        let (d1, d2): (f64, f64) = class;
        let y1 = f * d1;
        let zt = z.max(y1 - d2);
        let y2 = d2 - y1 + zt;
        let mut b = CrnBuilder::new();
        for n in ["Y1", "Y2", "Y3", "Z"] {
            b.species(n, Role::Generic).unwrap();
        }
        b.reaction(&[("Y1", 1)], &[("Y2", 1), ("Y3", 1)], 1.0, None).unwrap();
        b.reaction(&[("Y2", 1), ("Z", 1)], &[], 1.0, None).unwrap();
        let crn = b.build().unwrap();
        let x0 = State::from_vec(vec![y1, y2.max(0.0), d1 - y1, zt]);
        let eq = integrate_to_equilibrium(&crn, &x0, 1e-12, 1e4, &IntegratorConfig { abs_tol: 1e-14, ..endpoints() }).unwrap();
        prop_assert!(eq.converged);
        let want = [0.0, d2.max(0.0), d1, (-d2).max(0.0)];
        for (g, w) in eq.state.as_slice().iter().zip(want) {
            prop_assert!((g - w).abs() < 1e-6, "{:?} vs {:?}", eq.state, want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn equilibrium_restart_is_immediate(crn in arb_crn(), x in arb_state(4)) {
        let cfg = IntegratorConfig { max_steps: 200_000, ..endpoints() };
        let Ok(eq) = integrate_to_equilibrium(&crn, &x, 1e-9, 200.0, &cfg) else { return Ok(()); };
        prop_assume!(eq.converged);
        let again = integrate_to_equilibrium(&crn, &eq.state, 1e-9, 200.0, &cfg).unwrap();
        prop_assert!(again.converged);
        prop_assert_eq!(again.elapsed, 0.0);
        prop_assert_eq!(again.state, eq.state);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Errors below the unstable point close the gate and freeze the weights.
    #[test]
    fn small_errors_block_learning(e in proptest::collection::vec(0.0f64..0.4, 2),
                                   neg in proptest::collection::vec(any::<bool>(), 2)) {
        let train = TrainSpec::new(presets::xor_samples(), presets::xor_initial_weights());
        let (p, mut x) = compile(&NetSpec::default(), &train).unwrap();
        let mut d = PhaseDriver::new(p, 50.0, IntegratorConfig::default()).unwrap();
        let upto: Vec<PhaseTag> = (0..12).map(|k| PhaseTag::clock(2 * k + 1)).collect();
        d.run_phases(&mut x, &upto).unwrap();
        let [k1, k2, _, _] = presets::JUDGE_RATES;
        for l in 1..=2 {
            let (on, off) = if neg[l - 1] { (Rail::Minus, Rail::Plus) } else { (Rail::Plus, Rail::Minus) };
            let v = e[l - 1];
            for (n, c) in [
                (names::error_rail(on, l), v),
                (names::error_rail(off, l), 0.0),
                (names::error(l), v),
                (names::judge(l), k2 / k1 * v * v),
            ] {
                x[d.program.id(&n).unwrap()] = c;
            }
        }
        let before = d.program.weights(&x).unwrap();
        d.run_phase(&mut x, &PhaseTag::clock(25)).unwrap();
        let gate = d.program.value(&x, &names::gate()).unwrap();
        prop_assert!(gate < 1e-6, "gate {:e}", gate);
        for k in [27, 29] {
            d.run_phase(&mut x, &PhaseTag::clock(k)).unwrap();
        }
        let dev = d.program.weights(&x).unwrap().max_abs_diff(&before);
        prop_assert!(dev < 1e-6, "weights moved by {:e}", dev);
    }
}
