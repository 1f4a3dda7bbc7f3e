//! Fixtures shared by the benchmarks.

use chemnn::{compile, presets, BfcnnProgram, NetSpec, State, TrainSpec};

/// The XOR training program with its initial state.
pub fn xor_program() -> (BfcnnProgram, State) {
    let train = TrainSpec::new(presets::xor_samples(), presets::xor_initial_weights());
    compile(&NetSpec::default(), &train).expect("preset compiles")
}
