use super::*;
use crate::presets;

fn xor_program() -> (BfcnnProgram, State) {
    let train = TrainSpec::new(presets::xor_samples(), presets::xor_initial_weights());
    compile(&NetSpec::default(), &train).unwrap()
}

#[test]
fn rotation_cycles_blocks() {
    assert_eq!(rotation_map(4, 2, 1).unwrap(), vec![3, 2, 1, 4]);
    assert_eq!(rotation_map(4, 2, 2).unwrap(), vec![1, 4, 3, 2]);
    assert_eq!(rotation_map(2, 2, 1).unwrap(), vec![1, 2]);
    assert_eq!(rotation_map(6, 2, 1).unwrap(), vec![3, 2, 5, 4, 1, 6]);
    assert!(rotation_map(5, 2, 1).is_err());
    assert!(rotation_map(4, 2, 3).is_err());
}

#[test]
fn sixteen_phases_in_order() {
    let (p, _) = xor_program();
    assert_eq!(p.phase_tags(), phase_sequence());
    assert_eq!(p.crn.phase_order(), phase_sequence());
}

#[test]
fn layout_indices() {
    let l = NetSpec::default().layout();
    assert_eq!(l.w1_index(1, 1), 1);
    assert_eq!(l.w1_index(2, 1), 2);
    assert_eq!(l.w1_index(1, 2), 3);
    assert_eq!(l.w2_index(1, 1), 5);
    assert_eq!(l.w2_index(1, 2), 6);
    assert_eq!(l.param_count(), 9);
    let grads: Vec<usize> = l.entries().iter().map(|e| e.grad).collect();
    assert_eq!(grads, (1..=9).collect::<Vec<_>>());
}

#[test]
fn initial_state_loads_weights_and_samples() {
    let (p, x) = xor_program();
    assert_eq!(p.weights(&x).unwrap(), presets::xor_initial_weights());
    assert_eq!(p.value(&x, "Half").unwrap(), 0.5);
    assert_eq!(p.value(&x, "L").unwrap(), 0.9);
    assert_eq!(p.value(&x, "C_1_1").unwrap(), 1.0);
    assert_eq!(p.value(&x, "C_1_3").unwrap(), 0.0);
    assert_eq!(p.value(&x, "Ct_2_2").unwrap(), 0.0);
    assert_eq!(p.value(&x, "D_1").unwrap(), 1.0);
    assert_eq!(p.value(&x, "X_3_2").unwrap(), 1.0);
    assert_eq!(p.value(&x, "Np_1_1").unwrap(), 1e-6);
}

#[test]
fn golden_counts() {
    let (p, _) = xor_program();
    let counts: Vec<usize> = p.phases.iter().map(|(_, r)| r.len()).collect();
    assert_eq!(p.crn.species_count(), GOLDEN_SPECIES);
    assert_eq!(counts, GOLDEN_PHASE_REACTIONS);
}

const GOLDEN_SPECIES: usize = 268;
const GOLDEN_PHASE_REACTIONS: [usize; 16] = [30, 8, 8, 68, 4, 16, 36, 16, 2, 8, 18, 44, 11, 266, 72, 38];

#[test]
fn every_species_has_a_role_and_no_closure_violation() {
    let (p, _) = xor_program();
    let reg = p.crn.registry();
    assert!(reg.ids().all(|id| reg.role(id) != Role::Generic));
    assert_eq!(p.phase_closure_violations(), vec![]);
}

#[test]
fn gate_catalyses_learning_phases_only() {
    let (p, _) = xor_program();
    let ca = p.id("Ca").unwrap();
    for (tag, idx) in &p.phases {
        let gated = tag.as_str() == "O27" || tag.as_str() == "O29";
        for &j in idx {
            let r = &p.crn.reactions()[j];
            let cat = r.reactant.coefficient(ca) > 0 && r.net(ca) == 0;
            if gated {
                assert!(cat, "{tag} reaction {j} ungated");
            }
        }
    }
}

#[test]
fn validation_rejects_bad_specs() {
    let net = NetSpec::default();
    let base = TrainSpec::new(presets::xor_samples(), presets::xor_initial_weights());
    let mut t = base.clone();
    t.batch_size = 3;
    assert!(matches!(compile(&net, &t), Err(Error::Config(_))));
    let mut t = base.clone();
    t.eta = 1.5;
    assert!(compile(&net, &t).is_err());
    let mut t = base.clone();
    t.judge_rates = [1.0, 1.0, 1.0, 1.0];
    assert!(compile(&net, &t).is_err());
    let mut t = base.clone();
    t.threshold = 0.6;
    assert!(compile(&net, &t).is_err());
    let mut t = base.clone();
    t.samples[0].x[0] = -1.0;
    assert!(compile(&net, &t).is_err());
    assert!(compile(&NetSpec::new(2, 2, 2), &base).is_err());
}

#[test]
fn roles_sidecar() {
    let (p, x) = xor_program();
    let mut buf = Vec::new();
    p.write_roles_csv(&x, &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("species,role,init\n"));
    assert!(s.contains("\nWp_1,weight+,3\n"));
    assert!(s.contains("\nCa,gate,"));
}

#[test]
fn feedforward_program_has_eight_phases() {
    let ws = presets::xor_initial_weights();
    let (p, x) = compile_feedforward(&NetSpec::default(), &ws, &[vec![1.0, 0.0]], 1e-6).unwrap();
    assert_eq!(p.phase_tags(), feedforward_phases());
    assert_eq!(p.inputs(&x).unwrap(), vec![vec![1.0, 0.0]]);
}
