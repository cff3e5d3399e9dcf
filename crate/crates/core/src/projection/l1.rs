//! Basis pursuit `min ||z||_1 s.t. D z = w` by ADMM.
//!
//! The overcomplete DFT is a tight frame, `D D^* = (d / n) I`, so the
//! projection onto the affine feasible set is explicit:
//! `P(v) = v - (n / d) D^* (D v - w)`. The splitting alternates that
//! projection with complex soft thresholding.

use crate::dictionary::{Dictionary, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{top_indices, CVector, C64};

use super::{ProjectionConfig, ProjectionOutcome};

/// Threshold as a fraction of the largest entry of the minimum-norm solution.
const THRESHOLD_FRACTION: f64 = 0.5;
/// Over-relaxation of the primal update.
const RELAXATION: f64 = 1.6;
/// Residual balancing of the penalty: checked every `BALANCE_PERIOD`
/// iterations up to `BALANCE_UNTIL`, adjusting by a factor of two whenever
/// one residual exceeds the other by `BALANCE_RATIO`.
const BALANCE_PERIOD: usize = 10;
const BALANCE_UNTIL: usize = 5000;
const BALANCE_RATIO: f64 = 5.0;
/// Iterations between exact recomputations of the synthesized dual.
const RESYNC_PERIOD: usize = 64;

#[derive(Debug, Clone)]
pub struct BasisPursuit {
    pub coefficients: CVector,
    pub iterations: usize,
    /// `||D z - w|| / ||w||` at exit.
    pub feasibility: f64,
    pub converged: bool,
}

pub fn basis_pursuit(
    dict: &Dictionary,
    w: &CVector,
    tolerance: f64,
    change_tolerance: f64,
    max_iterations: usize,
) -> BasisPursuit {
    let d = dict.d();
    let w_norm = w.norm();
    if w_norm == 0.0 {
        return BasisPursuit {
            coefficients: CVector::zeros(d),
            iterations: 0,
            feasibility: 0.0,
            converged: true,
        };
    }
    let frame_scale = C64::new(dict.n() as f64 / d as f64, 0.0);
    let relax = C64::new(RELAXATION, 0.0);
    let keep = C64::new(1.0 - RELAXATION, 0.0);

    let least_norm = dict.analyze(w) * frame_scale;
    let peak = least_norm.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut threshold = THRESHOLD_FRACTION * peak;

    // synthesized copies of z and the dual, updated by linearity so each
    // iteration costs one analysis and one synthesis
    let mut z = least_norm;
    let mut z_synth = dict.synthesize(&z);
    let mut dual = CVector::zeros(d);
    let mut dual_synth = CVector::zeros(w.len());
    let mut feasibility = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;
        if iterations % RESYNC_PERIOD == 0 {
            dual_synth = dict.synthesize(&dual);
        }
        let misfit = &z_synth - &dual_synth - w;
        let correction = dict.analyze(&misfit);

        let mut change_sq = 0.0;
        let mut norm_sq = 0.0;
        let mut primal_sq = 0.0;
        for ((zi, ui), ci) in z.iter_mut().zip(dual.iter_mut()).zip(correction.iter()) {
            let x = *zi - *ui - ci * frame_scale;
            let shifted = x * relax + *zi * keep + *ui;
            let next = soft_threshold(shifted, threshold);
            *ui = shifted - next;
            primal_sq += (x - next).norm_sqr();
            change_sq += (next - *zi).norm_sqr();
            norm_sq += next.norm_sqr();
            *zi = next;
        }
        let next_synth = dict.synthesize(&z);
        for (((ds, zs), &wi), &ns) in dual_synth.iter_mut().zip(z_synth.iter()).zip(w.iter()).zip(next_synth.iter()) {
            *ds = wi * relax + *zs * keep + *ds - ns;
        }
        z_synth = next_synth;

        feasibility = (&z_synth - w).norm() / w_norm;

        if iterations % BALANCE_PERIOD == 0 && iterations <= BALANCE_UNTIL {
            // residual balancing; the penalty is 1 / threshold
            let primal = primal_sq.sqrt();
            let dual_residual = change_sq.sqrt() / threshold;
            let factor = if primal > BALANCE_RATIO * dual_residual {
                0.5
            } else if dual_residual > BALANCE_RATIO * primal {
                2.0
            } else {
                1.0
            };
            if factor != 1.0 {
                threshold *= factor;
                let rescale = C64::new(factor, 0.0);
                dual *= rescale;
                dual_synth *= rescale;
            }
        }
        if feasibility <= tolerance && change_sq.sqrt() <= change_tolerance * norm_sq.sqrt().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    BasisPursuit { coefficients: z, iterations, feasibility, converged }
}

fn soft_threshold(v: C64, threshold: f64) -> C64 {
    let magnitude_sq = v.norm_sqr();
    if magnitude_sq <= threshold * threshold {
        C64::new(0.0, 0.0)
    } else {
        let magnitude = magnitude_sq.sqrt();
        v * ((magnitude - threshold) / magnitude)
    }
}

/// The `s` largest nonzero entries of `coefficients` (ties to lower index).
pub(super) fn largest_support(coefficients: &CVector, s: usize, d: usize) -> SupportSet {
    let magnitudes: Vec<f64> = coefficients.iter().map(|z| z.norm()).collect();
    let picked: Vec<usize> = top_indices(&magnitudes, s).into_iter().filter(|&i| magnitudes[i] > 0.0).collect();
    SupportSet::new(picked, d).expect("distinct in-range indices")
}

/// Basis pursuit followed by truncation to the `s` largest coefficients.
pub fn project_l1(dict: &Dictionary, w: &CVector, s: usize, config: &ProjectionConfig) -> Result<ProjectionOutcome> {
    let solution = basis_pursuit(dict, w, config.l1_tolerance, config.l1_change_tolerance, config.l1_max_iterations);
    if !solution.converged {
        return Err(Error::SolverNonConvergence {
            iterations: solution.iterations,
            feasibility: solution.feasibility,
            last_iterate: solution.coefficients.iter().copied().collect(),
        });
    }
    let support = largest_support(&solution.coefficients, s, dict.d());
    Ok(ProjectionOutcome::on_support(dict, w, support, s, solution.iterations, true))
}
