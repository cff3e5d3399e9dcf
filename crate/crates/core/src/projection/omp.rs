use crate::dictionary::{Dictionary, SupportSet};
use crate::linalg::{argmax_excluding, CVector};

use super::{ProjectionConfig, ProjectionOutcome};

/// Orthogonal matching pursuit: greedily add the atom most correlated with
/// the residual, refit by least squares, stop at `s` atoms or once
/// `||r|| <= epsilon`.
pub fn project_omp(dict: &Dictionary, w: &CVector, s: usize, config: &ProjectionConfig) -> ProjectionOutcome {
    let s = s.min(dict.n()).min(dict.d());
    let mut selected: Vec<usize> = Vec::with_capacity(s);
    let mut chosen = vec![false; dict.d()];
    let mut outcome = ProjectionOutcome::on_support(dict, w, SupportSet::empty(dict.d()), s, 0, false);
    let mut iterations = 0;

    while selected.len() < s && outcome.residual_norm > config.epsilon {
        let residual = w - &outcome.projected;
        let correlations: Vec<f64> = dict.analyze(&residual).iter().map(|z| z.norm()).collect();
        let Some(next) = argmax_excluding(&correlations, &chosen) else {
            break;
        };
        selected.push(next);
        let support = SupportSet::new(selected.clone(), dict.d()).expect("distinct in-range indices");
        iterations += 1;
        let candidate = ProjectionOutcome::on_support(dict, w, support, s, iterations, false);
        if candidate.residual_norm >= outcome.residual_norm {
            // no progress: numerically dependent atom
            selected.pop();
            break;
        }
        chosen[next] = true;
        outcome = candidate;
    }
    outcome.iterations = iterations;
    outcome.converged = outcome.residual_norm <= config.epsilon;
    outcome
}
