use crate::dictionary::{Dictionary, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, CVector};
use crate::separation::binomial;

use super::{ProjectionConfig, ProjectionOutcome};

/// Exhaustive search over every `s`-subset of atoms for the smallest
/// projection residual. Ties keep the lexicographically smallest support.
pub fn project_oracle(dict: &Dictionary, w: &CVector, s: usize, config: &ProjectionConfig) -> Result<ProjectionOutcome> {
    let d = dict.d();
    if s > d {
        return Err(Error::Config(format!("sparsity {s} exceeds the number of atoms {d}")));
    }
    let count = binomial(d, s);
    if count > config.enumeration_cap as u128 {
        return Err(Error::EnumerationTooLarge { count, cap: config.enumeration_cap });
    }

    let mut combo: Vec<usize> = (0..s).collect();
    let mut best_support = combo.clone();
    let mut best_residual = f64::INFINITY;
    let mut visited = 0usize;
    loop {
        visited += 1;
        let fit = least_squares(&dict.columns(&combo), w);
        let residual = (w - &fit.fitted).norm();
        if residual < best_residual {
            best_residual = residual;
            best_support.clone_from(&combo);
        }
        if !next_combination(&mut combo, d) {
            break;
        }
    }
    let support = SupportSet::new(best_support, d)?;
    Ok(ProjectionOutcome::on_support(dict, w, support, s, visited, true))
}

/// Advances `combo` to the next `k`-subset of `0..d` in lexicographic order.
fn next_combination(combo: &mut [usize], d: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < d - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::next_combination;

    #[test]
    fn combinations_are_enumerated_in_order() {
        let mut combo = vec![0, 1];
        let mut seen = vec![combo.clone()];
        while next_combination(&mut combo, 4) {
            seen.push(combo.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut empty: Vec<usize> = vec![];
        assert!(!next_combination(&mut empty, 3));
    }
}
