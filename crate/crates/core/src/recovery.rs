//! Signal-space CoSaMP.
//!
//! Each outer iteration forms the proxy `A^* r`, identifies `2k` atoms with
//! the configured projection backend, merges them with the current support,
//! solves the range-constrained least-squares update and prunes back to `k`
//! atoms with the same backend.

use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, real_times_complex, real_times_complex_matrix, real_transpose_times_complex, CVector, RMatrix};
use crate::projection::{Backend, ProjectionConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    /// Target sparsity.
    pub k: usize,
    pub max_outer_iterations: usize,
    /// Stop once `||r|| <= residual_tolerance * ||y||`.
    pub residual_tolerance: f64,
    /// Stop when the best residual improves by less than `stall_factor`
    /// (relative) over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_factor: f64,
    pub backend: Backend,
    pub projection: ProjectionConfig,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            k: 1,
            max_outer_iterations: 50,
            residual_tolerance: 1e-10,
            stall_window: 5,
            stall_factor: 1e-6,
            backend: Backend::Omp,
            projection: ProjectionConfig::default(),
        }
    }
}

impl RecoveryConfig {
    pub fn new(k: usize, backend: Backend) -> Self {
        Self { k, backend, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.max_outer_iterations == 0 || self.stall_window == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        if !(self.residual_tolerance > 0.0) || !(self.stall_factor > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        self.projection.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIterations,
    Stalled,
}

/// Loop state. After [`recover`] returns it holds the best iterate seen.
#[derive(Debug, Clone, PartialEq)]
pub struct SSCoSaMPState {
    /// `y - A x`.
    pub residual: CVector,
    pub estimate: CVector,
    pub support: SupportSet,
    /// Outer iterations executed.
    pub iteration: usize,
    /// `||r||` after each iteration.
    pub residual_history: Vec<f64>,
    /// `||y - A w||` of the merged-support update at each iteration.
    pub update_history: Vec<f64>,
    /// Projections where the basis pursuit backend hit its iteration cap.
    pub projection_failures: usize,
    pub stop: StopReason,
}

impl SSCoSaMPState {
    fn initial(y: &CVector, n: usize, d: usize) -> Self {
        Self {
            residual: y.clone(),
            estimate: CVector::zeros(n),
            support: SupportSet::empty(d),
            iteration: 0,
            residual_history: Vec::new(),
            update_history: Vec::new(),
            projection_failures: 0,
            stop: StopReason::MaxIterations,
        }
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Orthogonal projection of `w` onto the span of the atoms in `support`.
pub fn project_onto_support(dict: &Dictionary, support: &SupportSet, w: &CVector) -> Result<CVector> {
    check_support(dict, support)?;
    if w.len() != dict.n() {
        return Err(Error::Dimension(format!("signal has length {}, expected n = {}", w.len(), dict.n())));
    }
    Ok(least_squares(&dict.columns(support.as_slice()), w).fitted)
}

/// `D_T beta` with `beta` the minimum-norm minimizer of `||y - A D_T beta||`.
pub fn constrained_least_squares(a: &RMatrix, dict: &Dictionary, support: &SupportSet, y: &CVector) -> Result<CVector> {
    check_support(dict, support)?;
    check_operator(a, dict, y)?;
    if support.is_empty() {
        return Ok(CVector::zeros(dict.n()));
    }
    let atoms = dict.columns(support.as_slice());
    let composed = real_times_complex_matrix(a, &atoms);
    let beta = least_squares(&composed, y).coefficients;
    Ok(atoms * beta)
}

/// Runs signal-space CoSaMP and returns the estimate with the smallest
/// residual together with its state.
pub fn recover(a: &RMatrix, dict: &Dictionary, y: &CVector, config: &RecoveryConfig) -> Result<(CVector, SSCoSaMPState)> {
    config.validate()?;
    check_operator(a, dict, y)?;
    if a.nrows() > dict.n() {
        return Err(Error::Dimension(format!("need m <= n, got m = {}, n = {}", a.nrows(), dict.n())));
    }
    if 2 * config.k > dict.n() {
        return Err(Error::Dimension(format!("2k = {} exceeds n = {}", 2 * config.k, dict.n())));
    }

    let target = config.residual_tolerance * y.norm();
    let mut state = SSCoSaMPState::initial(y, dict.n(), dict.d());
    let mut best = state.clone();
    let mut best_norm = y.norm();
    let mut last_improvement = 0;

    loop {
        let proxy = real_transpose_times_complex(a, &state.residual);
        let identified = config.backend.project_best_effort(dict, &proxy, 2 * config.k, &config.projection)?;
        state.projection_failures += usize::from(config.backend == Backend::L1 && !identified.converged);
        let merged = identified.support.union(&state.support);

        let update = constrained_least_squares(a, dict, &merged, y)?;
        state.update_history.push((y - real_times_complex(a, &update)).norm());

        let pruned = config.backend.project_best_effort(dict, &update, config.k, &config.projection)?;
        state.projection_failures += usize::from(config.backend == Backend::L1 && !pruned.converged);
        state.support = pruned.support;
        state.estimate = pruned.projected;
        state.residual = y - real_times_complex(a, &state.estimate);
        state.iteration += 1;
        let residual_norm = state.residual.norm();
        state.residual_history.push(residual_norm);

        if residual_norm < best_norm * (1.0 - config.stall_factor) {
            last_improvement = state.iteration;
        }
        if residual_norm < best_norm || state.iteration == 1 {
            best_norm = residual_norm.min(best_norm);
            best = state.clone();
        }

        let stop = if best_norm <= target {
            Some(StopReason::Tolerance)
        } else if state.iteration >= config.max_outer_iterations {
            Some(StopReason::MaxIterations)
        } else if state.iteration - last_improvement >= config.stall_window {
            Some(StopReason::Stalled)
        } else {
            None
        };
        if let Some(reason) = stop {
            best.iteration = state.iteration;
            best.residual_history = state.residual_history;
            best.update_history = state.update_history;
            best.projection_failures = state.projection_failures;
            best.stop = reason;
            return Ok((best.estimate.clone(), best));
        }
    }
}

fn check_support(dict: &Dictionary, support: &SupportSet) -> Result<()> {
    if support.modulus() != dict.d() {
        return Err(Error::Dimension(format!(
            "support is over {} atoms, dictionary has {}",
            support.modulus(),
            dict.d()
        )));
    }
    Ok(())
}

fn check_operator(a: &RMatrix, dict: &Dictionary, y: &CVector) -> Result<()> {
    if a.ncols() != dict.n() {
        return Err(Error::Dimension(format!("A has {} columns, expected n = {}", a.ncols(), dict.n())));
    }
    if y.len() != a.nrows() {
        return Err(Error::Dimension(format!("y has length {}, A has {} rows", y.len(), a.nrows())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CMatrix, C64};
    use crate::sensing::{
        gaussian_matrix, gen_separated, snr_db, CoefficientModel, InstanceParams, MeasurementKind, SensingInstance,
        SignalStructure,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(len: usize, rng: &mut ChaCha8Rng) -> CVector {
        CVector::from_fn(len, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn solve(mut m: CMatrix, mut b: CVector) -> CVector {
        // Gaussian elimination with partial pivoting
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm())).unwrap();
            m.swap_rows(col, pivot);
            b.swap_rows(col, pivot);
            for row in col + 1..n {
                let factor = m[(row, col)] / m[(col, col)];
                for c in col..n {
                    let v = m[(col, c)];
                    m[(row, c)] -= factor * v;
                }
                let v = b[col];
                b[row] -= factor * v;
            }
        }
        let mut x = CVector::zeros(n);
        for row in (0..n).rev() {
            let mut acc = b[row];
            for c in row + 1..n {
                acc -= m[(row, c)] * x[c];
            }
            x[row] = acc / m[(row, row)];
        }
        x
    }

    #[test]
    fn projection_examples() {
        let dict = Dictionary::build(8, 8).unwrap();
        let everything = SupportSet::new((0..8).collect(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_vector(8, &mut rng);
        assert!((project_onto_support(&dict, &everything, &w).unwrap() - &w).norm() < 1e-12);

        let dict = Dictionary::build(8, 16).unwrap();
        let support = SupportSet::new(vec![0, 8], 16).unwrap();
        let w = random_vector(8, &mut rng);
        let atoms = dict.columns(support.as_slice());
        let normal = atoms.adjoint() * &atoms;
        let beta = solve(normal, atoms.adjoint() * &w);
        let oracle = &atoms * beta;
        let projected = project_onto_support(&dict, &support, &w).unwrap();
        assert!((&projected - &oracle).norm() < 1e-10);

        let orthogonal = &w - &projected;
        assert!(project_onto_support(&dict, &support, &orthogonal).unwrap().norm() < 1e-10);
        assert_eq!(project_onto_support(&dict, &SupportSet::empty(16), &w).unwrap().norm(), 0.0);
        assert!(project_onto_support(&dict, &SupportSet::empty(8), &w).is_err());
    }

    #[test]
    fn constrained_least_squares_examples() {
        let dict = Dictionary::build(8, 16).unwrap();
        let a = gaussian_matrix(6, 8, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = random_vector(6, &mut rng);
        assert_eq!(constrained_least_squares(&a, &dict, &SupportSet::empty(16), &y).unwrap().norm(), 0.0);

        let support = SupportSet::new(vec![1, 5, 11], 16).unwrap();
        let atoms = dict.columns(support.as_slice());
        let composed = real_times_complex_matrix(&a, &atoms);
        let beta = solve(composed.adjoint() * &composed, composed.adjoint() * &y);
        let oracle = &atoms * beta;
        let w = constrained_least_squares(&a, &dict, &support, &y).unwrap();
        assert!((&w - &oracle).norm() < 1e-8);
        let residual = &y - real_times_complex(&a, &w);
        assert!((composed.adjoint() * residual).norm() < 1e-8);

        let consistent = real_times_complex(&a, &(&atoms * random_vector(3, &mut rng)));
        let fit = constrained_least_squares(&a, &dict, &support, &consistent).unwrap();
        assert!((&consistent - real_times_complex(&a, &fit)).norm() < 1e-10);
    }

    #[test]
    fn rank_deficient_update_is_minimum_norm() {
        let dict = Dictionary::build(8, 16).unwrap();
        let a = gaussian_matrix(3, 8, 5).unwrap();
        let support = SupportSet::new(vec![0, 3, 6, 9, 12], 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = random_vector(3, &mut rng);
        let w = constrained_least_squares(&a, &dict, &support, &y).unwrap();
        assert!((&y - real_times_complex(&a, &w)).norm() < 1e-10);
    }

    #[test]
    fn zero_measurements_give_zero_estimate() {
        let dict = Dictionary::build(32, 128).unwrap();
        let a = gaussian_matrix(16, 32, 1).unwrap();
        for backend in [Backend::Omp, Backend::Cosamp, Backend::L1] {
            let (x, state) = recover(&a, &dict, &CVector::zeros(16), &RecoveryConfig::new(2, backend)).unwrap();
            assert_eq!(x.norm(), 0.0);
            assert_eq!(state.iteration, 1);
            assert_eq!(state.stop, StopReason::Tolerance);
        }
    }

    #[test]
    fn identity_oracle_recovers_one_sparse_in_one_iteration() {
        let dict = Dictionary::build(8, 16).unwrap();
        let a = RMatrix::identity(8, 8);
        let mut alpha = CVector::zeros(16);
        alpha[5] = C64::new(0.3, -1.2);
        let x = dict.synthesize(&alpha);
        let (x_hat, state) = recover(&a, &dict, &x, &RecoveryConfig::new(1, Backend::Oracle)).unwrap();
        assert!((&x_hat - &x).norm() < 1e-12);
        assert_eq!(state.residual_history.len(), 1);
        assert_eq!(state.support.as_slice(), &[5]);
    }

    #[test]
    fn identity_oracle_recovers_separated_signals() {
        let dict = Dictionary::build(8, 16).unwrap();
        let a = RMatrix::identity(8, 8);
        for seed in 0..20 {
            let alpha = gen_separated(&dict, 2, 4, CoefficientModel::Gaussian, seed).unwrap();
            let x = alpha.synthesize(&dict);
            let (x_hat, _) = recover(&a, &dict, &x, &RecoveryConfig::new(2, Backend::Oracle)).unwrap();
            assert!(snr_db(&x, &x_hat).unwrap() > 100.0, "seed {seed}");
        }
    }

    #[test]
    fn state_invariants_hold_for_every_backend() {
        let dict = Dictionary::build(32, 128).unwrap();
        let params = InstanceParams {
            m: 24,
            k: 3,
            structure: SignalStructure::Separated { h_min: 8 },
            coefficients: CoefficientModel::Gaussian,
            measurement: MeasurementKind::Gaussian,
            epsilon: 1e-3,
        };
        for seed in 0..4 {
            let instance = SensingInstance::generate(&dict, &params, seed).unwrap();
            for backend in [Backend::Omp, Backend::Cosamp, Backend::L1] {
                let (x_hat, state) = recover(&instance.a, &dict, &instance.y, &RecoveryConfig::new(3, backend)).unwrap();
                assert_eq!(x_hat, state.estimate);
                assert!(state.support.len() <= 3);
                let r = &instance.y - real_times_complex(&instance.a, &x_hat);
                assert!((r - &state.residual).norm() < 1e-10);
                let again = project_onto_support(&dict, &state.support, &x_hat).unwrap();
                assert!((again - &x_hat).norm() < 1e-10);
                let best = state.residual_history.iter().copied().fold(f64::INFINITY, f64::min);
                assert_eq!(state.residual_norm(), best);
            }
        }
    }

    #[test]
    fn update_never_increases_the_residual() {
        let dict = Dictionary::build(32, 128).unwrap();
        let params = InstanceParams {
            m: 20,
            k: 4,
            structure: SignalStructure::Clustered,
            coefficients: CoefficientModel::Gaussian,
            measurement: MeasurementKind::Gaussian,
            epsilon: 0.0,
        };
        for seed in 0..5 {
            let instance = SensingInstance::generate(&dict, &params, seed).unwrap();
            for backend in [Backend::Omp, Backend::Cosamp] {
                let (_, state) = recover(&instance.a, &dict, &instance.y, &RecoveryConfig::new(4, backend)).unwrap();
                let mut previous = instance.y.norm();
                for (update, after) in state.update_history.iter().zip(&state.residual_history) {
                    assert!(*update <= previous * (1.0 + 1e-9) + 1e-12);
                    previous = *after;
                }
            }
        }
    }

    #[test]
    fn recovery_is_deterministic() {
        let dict = Dictionary::build(64, 256).unwrap();
        let params = InstanceParams {
            m: 40,
            k: 4,
            structure: SignalStructure::Separated { h_min: 16 },
            coefficients: CoefficientModel::Gaussian,
            measurement: MeasurementKind::Gaussian,
            epsilon: 0.0,
        };
        let instance = SensingInstance::generate(&dict, &params, 8).unwrap();
        let config = RecoveryConfig::new(4, Backend::Cosamp);
        let (_, first) = recover(&instance.a, &dict, &instance.y, &config).unwrap();
        let (_, second) = recover(&instance.a, &dict, &instance.y, &config).unwrap();
        assert_eq!(first.residual_history, second.residual_history);
    }

    #[test]
    fn rejects_bad_inputs() {
        let dict = Dictionary::build(8, 16).unwrap();
        let a = gaussian_matrix(4, 8, 1).unwrap();
        let y = CVector::zeros(5);
        assert!(matches!(recover(&a, &dict, &y, &RecoveryConfig::new(1, Backend::Omp)), Err(Error::Dimension(_))));
        let y = CVector::zeros(4);
        assert!(recover(&a, &dict, &y, &RecoveryConfig::new(5, Backend::Omp)).is_err());
        assert!(recover(&a, &dict, &y, &RecoveryConfig::new(0, Backend::Omp)).is_err());
    }
}
