//! OR and XOR logic-gate experiments: samples, starting weights, and the
//! reference weights and outputs they are expected to reach.

use crate::oracle::Sample;
use crate::weights::WeightSet;

pub const ETA: f64 = 0.9;
pub const BATCH_SIZE: usize = 2;
pub const THRESHOLD: f64 = 0.5;
pub const JUDGE_RATES: [f64; 4] = [8.0, 1.0, 2.0, 0.4375];
pub const K_O: f64 = 2.0;
pub const CLOCK_SPECIES: usize = 32;

pub const XOR_EXPECTED_ITERATIONS: usize = 12;
pub const OR_EXPECTED_ITERATIONS: usize = 5;
pub const XOR_REFERENCE_OUTPUTS: [f64; 4] = [0.5129, 0.4188, 0.4503, 0.5082];
pub const OR_REFERENCE_OUTPUTS: [f64; 4] = [0.6654, 0.3950, 0.6358, 0.5724];

fn samples(labels: [f64; 4]) -> Vec<Sample> {
    let xs = [[1.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    xs.iter()
        .zip(labels)
        .map(|(x, d)| Sample::new(x, d))
        .collect()
}

pub fn xor_samples() -> Vec<Sample> {
    samples([1.0, 0.0, 0.0, 1.0])
}

pub fn or_samples() -> Vec<Sample> {
    samples([1.0, 0.0, 1.0, 1.0])
}

/// Builds a weight set from 3×3 tables whose rows are
/// `[W1 W3 B1]`, `[W2 W4 B2]`, `[W5 W6 B3]`.
pub fn from_tables(plus: [[f64; 3]; 3], minus: [[f64; 3]; 3]) -> WeightSet {
    WeightSet::from_rows(
        &[&plus[0], &plus[1]],
        &[&minus[0], &minus[1]],
        &[&plus[2]],
        &[&minus[2]],
    )
}

pub fn xor_initial_weights() -> WeightSet {
    from_tables(
        [[3.0, 3.0, 2.5], [4.0, 3.0, 2.0], [2.0, 3.0, 2.5]],
        [[4.0, 4.0, 1.0], [3.0, 2.0, 2.5], [1.0, 2.0, 4.0]],
    )
}

pub fn xor_reference_final_weights() -> WeightSet {
    from_tables(
        [
            [3.2948, 3.2884, 3.0536],
            [4.3969, 3.3891, 2.8581],
            [2.4997, 3.4997, 3.2926],
        ],
        [
            [4.2736, 4.2709, 1.4894],
            [3.3467, 2.3475, 3.2918],
            [1.3883, 2.3819, 4.6351],
        ],
    )
}

pub fn or_initial_weights() -> WeightSet {
    from_tables(
        [
            [4.1968, 1.8964, 2.8458],
            [1.4442, 1.2924, 3.0160],
            [7.4030, 8.3528, 2.5640],
        ],
        [[2.0, 6.0, 6.0], [2.0, 2.0, 2.0], [6.0, 10.0, 2.0]],
    )
}

pub fn or_reference_final_weights() -> WeightSet {
    from_tables(
        [
            [4.6620, 1.9115, 3.4033],
            [2.5240, 2.2642, 5.3571],
            [7.4863, 8.7303, 3.3334],
        ],
        [
            [2.3766, 6.0094, 6.4861],
            [3.2772, 3.2779, 4.5249],
            [6.0113, 10.2436, 2.3547],
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let w = xor_initial_weights().decode();
        // W1 = w1(1,1), W2 = w1(2,1), W3 = w1(1,2)
        assert_eq!(w.w1[(0, 0)], -1.0);
        assert_eq!(w.w1[(1, 0)], 1.0);
        assert_eq!(w.w1[(0, 1)], -1.0);
        assert_eq!(w.w1[(1, 1)], 1.0);
        assert_eq!(w.w2[(0, 2)], -1.5);
    }
}
