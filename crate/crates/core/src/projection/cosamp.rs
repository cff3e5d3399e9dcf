use crate::dictionary::{Dictionary, SupportSet};
use crate::linalg::{least_squares, top_indices, CVector};

use super::{ProjectionConfig, ProjectionOutcome};

/// Classical CoSaMP with the dictionary as the sensing matrix: take the `2s`
/// largest proxy entries, merge with the current support, solve least
/// squares, prune to the `s` largest coefficients. Returns the best iterate.
pub fn project_cosamp(dict: &Dictionary, w: &CVector, s: usize, config: &ProjectionConfig) -> ProjectionOutcome {
    let d = dict.d();
    let s = s.min(d);
    let mut best = ProjectionOutcome::on_support(dict, w, SupportSet::empty(d), s, 0, false);
    if s == 0 || best.residual_norm <= config.epsilon {
        best.converged = true;
        return best;
    }
    let mut current = best.clone();
    let mut history: Vec<f64> = vec![best.residual_norm];
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=config.max_iterations {
        iterations = it;
        let residual = w - &current.projected;
        let proxy: Vec<f64> = dict.analyze(&residual).iter().map(|z| z.norm()).collect();
        let identified = top_indices(&proxy, (2 * s).min(d));
        let merged = SupportSet::new(identified, d)
            .expect("distinct in-range indices")
            .union(&current.support);

        let ls = least_squares(&dict.columns(merged.as_slice()), w);
        let magnitudes: Vec<f64> = ls.coefficients.iter().map(|z| z.norm()).collect();
        let kept: Vec<usize> = top_indices(&magnitudes, s)
            .into_iter()
            .map(|i| merged.as_slice()[i])
            .collect();
        let support = SupportSet::new(kept, d).expect("distinct in-range indices");
        current = ProjectionOutcome::on_support(dict, w, support, s, it, false);

        let norm = current.residual_norm;
        if norm < best.residual_norm {
            best = current.clone();
        }
        if norm <= config.epsilon {
            converged = true;
            break;
        }
        history.push(norm);
        let window = config.stall_window;
        if history.len() > window {
            let earlier = history[history.len() - 1 - window];
            if earlier - norm < config.stall_factor * earlier {
                converged = true;
                break;
            }
        }
    }
    best.iterations = iterations;
    best.converged = converged;
    best
}
