use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::State;

/// Integer vector `w` with `wᵀΓ = 0`, scaled to coprime entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationLaw {
    coefficients: Vec<BigInt>,
}

impl ConservationLaw {
    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.coefficients.iter().map(|c| c.to_i64()).collect()
    }

    /// `wᵀx` for a concentration vector.
    pub fn dot(&self, state: &State) -> f64 {
        self.to_f64()
            .iter()
            .zip(state.as_slice())
            .map(|(w, x)| w * x)
            .sum()
    }

    /// `wᵀv` against an arbitrary integer column.
    pub fn dot_column(&self, column: &[i64]) -> BigInt {
        self.coefficients
            .iter()
            .zip(column)
            .map(|(w, c)| w * BigInt::from(*c))
            .sum()
    }
}

fn normalize(v: &mut [BigInt]) {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return;
    }
    for x in v.iter_mut() {
        *x = &*x / &g;
    }
    if let Some(first) = v.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in v.iter_mut() {
                *x = -&*x;
            }
        }
    }
}

/// Basis of `{ w : wᵀ Γ = 0 }` for `Γ` given as `n` rows of reaction columns.
pub(crate) fn left_null_space(gamma: &[Vec<i64>], n: usize) -> Vec<ConservationLaw> {
    let r = gamma.first().map_or(0, Vec::len);
    // rows of Γᵀ
    let mut a: Vec<Vec<BigInt>> = (0..r)
        .map(|j| (0..n).map(|i| BigInt::from(gamma[i][j])).collect())
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row >= a.len() {
            break;
        }
        let Some(p) = (row..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let piv = a[row][col].clone();
        for i in 0..a.len() {
            if i == row || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for c in 0..n {
                let v = &piv * &a[i][c] - &f * &a[row][c];
                a[i][c] = v;
            }
            normalize(&mut a[i]);
        }
        normalize(&mut a[row]);
        pivots.push((row, col));
        row += 1;
    }

    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut out = Vec::new();
    for free in (0..n).filter(|c| !pivot_cols.contains(c)) {
        let scale = pivots
            .iter()
            .fold(BigInt::one(), |acc, &(pr, pc)| acc.lcm(&a[pr][pc]));
        let mut v = vec![BigInt::zero(); n];
        v[free] = scale.clone();
        for &(pr, pc) in &pivots {
            v[pc] = -&a[pr][free] * (&scale / &a[pr][pc]);
        }
        normalize(&mut v);
        out.push(ConservationLaw { coefficients: v });
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::crn::{CrnBuilder, Role};

    fn laws(crn: &crate::crn::Crn) -> Vec<Vec<i64>> {
        crn.conservation_laws()
            .iter()
            .map(|l| l.to_i64().unwrap())
            .collect()
    }

    #[test]
    fn annihilation_difference() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("Np", 1), ("Nm", 1)], &[], 1.0, None).unwrap();
        assert_eq!(laws(&b.build().unwrap()), vec![vec![1, -1]]);
    }

    #[test]
    fn adder_catalysts_conserved() {
        let mut b = CrnBuilder::new();
        for s in ["A", "B", "C"] {
            b.species(s, Role::Generic).unwrap();
        }
        b.reaction(&[("A", 1)], &[("A", 1), ("C", 1)], 1.0, None).unwrap();
        b.reaction(&[("B", 1)], &[("B", 1), ("C", 1)], 1.0, None).unwrap();
        b.reaction(&[("C", 1)], &[], 1.0, None).unwrap();
        assert_eq!(laws(&b.build().unwrap()), vec![vec![1, 0, 0], vec![0, 1, 0]]);
    }

    #[test]
    fn no_laws_for_open_decay() {
        let mut b = CrnBuilder::new();
        b.reaction(&[("A", 1)], &[], 1.0, None).unwrap();
        assert!(laws(&b.build().unwrap()).is_empty());
    }

    #[test]
    fn weighted_law() {
        // 2A -> B conserves a + 2b
        let mut b = CrnBuilder::new();
        b.reaction(&[("A", 2)], &[("B", 1)], 1.0, None).unwrap();
        assert_eq!(laws(&b.build().unwrap()), vec![vec![1, 2]]);
    }
}
