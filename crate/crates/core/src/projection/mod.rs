//! Approximate `s`-sparse projections `S_D(w, s)` onto the dictionary.
//!
//! Every backend returns a [`ProjectionOutcome`]: the selected support and
//! the orthogonal projection of `w` onto the span of those atoms. The
//! projection itself is always recomputed by least squares on the final
//! support, so the outcome invariants (idempotence, residual orthogonality,
//! Pythagoras) do not depend on how the support was found.

mod cosamp;
mod l1;
mod omp;
mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, CVector};

pub use cosamp::project_cosamp;
pub use l1::{basis_pursuit, project_l1, BasisPursuit};
pub use omp::project_omp;
pub use oracle::project_oracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    /// OMP stops once `||r||_2 <= epsilon`.
    pub epsilon: f64,
    /// CoSaMP iteration cap.
    pub max_iterations: usize,
    /// CoSaMP stops when the residual drops by less than `stall_factor`
    /// (relative) over `stall_window` consecutive iterations.
    pub stall_window: usize,
    pub stall_factor: f64,
    /// Basis pursuit feasibility `||D z - w|| <= l1_tolerance * ||w||`.
    pub l1_tolerance: f64,
    /// Basis pursuit relative iterate change required alongside feasibility.
    pub l1_change_tolerance: f64,
    pub l1_max_iterations: usize,
    /// Cap on `C(d, s)` for the exhaustive oracle.
    pub enumeration_cap: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            max_iterations: 100,
            stall_window: 3,
            stall_factor: 1e-7,
            l1_tolerance: 1e-8,
            l1_change_tolerance: 1e-10,
            l1_max_iterations: 20_000,
            enumeration_cap: crate::separation::DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("stall_factor", self.stall_factor),
            ("l1_tolerance", self.l1_tolerance),
            ("l1_change_tolerance", self.l1_change_tolerance),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.max_iterations == 0 || self.l1_max_iterations == 0 || self.stall_window == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOutcome {
    pub support: SupportSet,
    /// `P_support w`.
    pub projected: CVector,
    /// Least-squares coefficients, in support order.
    pub coefficients: CVector,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Requested sparsity `s`.
    pub sparsity: usize,
    /// `||w||_2` of the projected input.
    pub input_norm: f64,
}

impl ProjectionOutcome {
    /// Least-squares projection of `w` onto the atoms in `support`.
    pub fn on_support(
        dict: &Dictionary,
        w: &CVector,
        support: SupportSet,
        sparsity: usize,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let ls = least_squares(&dict.columns(support.as_slice()), w);
        let residual_norm = (w - &ls.fitted).norm();
        Self {
            support,
            projected: ls.fitted,
            coefficients: ls.coefficients,
            residual_norm,
            iterations,
            converged,
            sparsity,
            input_norm: w.norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Omp,
    Cosamp,
    L1,
    Oracle,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::Omp, Backend::Cosamp, Backend::L1, Backend::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Omp => "omp",
            Backend::Cosamp => "cosamp",
            Backend::L1 => "l1",
            Backend::Oracle => "oracle",
        }
    }

    pub fn project(self, dict: &Dictionary, w: &CVector, s: usize, config: &ProjectionConfig) -> Result<ProjectionOutcome> {
        check_input(dict, w)?;
        match self {
            Backend::Omp => Ok(project_omp(dict, w, s, config)),
            Backend::Cosamp => Ok(project_cosamp(dict, w, s, config)),
            Backend::L1 => project_l1(dict, w, s, config),
            Backend::Oracle => project_oracle(dict, w, s, config),
        }
    }

    /// Like [`Backend::project`], but a basis pursuit run that hits its
    /// iteration cap still yields an outcome built from the last iterate,
    /// flagged `converged = false`.
    pub fn project_best_effort(
        self,
        dict: &Dictionary,
        w: &CVector,
        s: usize,
        config: &ProjectionConfig,
    ) -> Result<ProjectionOutcome> {
        match self.project(dict, w, s, config) {
            Err(Error::SolverNonConvergence { iterations, last_iterate, .. }) => {
                let iterate = CVector::from_vec(last_iterate);
                let support = l1::largest_support(&iterate, s, dict.d());
                Ok(ProjectionOutcome::on_support(dict, w, support, s, iterations, false))
            }
            other => other,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omp" => Ok(Backend::Omp),
            "cosamp" => Ok(Backend::Cosamp),
            "l1" | "bp" => Ok(Backend::L1),
            "oracle" => Ok(Backend::Oracle),
            other => Err(Error::Parse(format!("unknown backend `{other}`"))),
        }
    }
}

fn check_input(dict: &Dictionary, w: &CVector) -> Result<()> {
    if w.len() != dict.n() {
        return Err(Error::Dimension(format!("signal has length {}, expected n = {}", w.len(), dict.n())));
    }
    if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Config("signal contains non-finite entries".into()));
    }
    Ok(())
}

/// Empirical near-optimality ratios of `outcome` against the exhaustive
/// `oracle` for the same input:
/// `C = ||w - P_S w|| / ||w - P_opt w||` and `c = ||P_S w|| / ||P_opt w||`.
///
/// Residuals below `1e-10 * max(1, ||w||)` count as zero; `0 / 0` is 1 and
/// `x / 0` is `+inf`.
pub fn near_optimality_ratios(outcome: &ProjectionOutcome, oracle: &ProjectionOutcome) -> Result<(f64, f64)> {
    let scale = outcome.input_norm.max(oracle.input_norm).max(1.0);
    if outcome.sparsity != oracle.sparsity
        || outcome.projected.len() != oracle.projected.len()
        || (outcome.input_norm - oracle.input_norm).abs() > 1e-10 * scale
    {
        return Err(Error::MismatchedInputs);
    }
    let zero = 1e-10 * scale;
    let ratio = |num: f64, den: f64| -> f64 {
        let num_zero = num <= zero;
        let den_zero = den <= zero;
        match (num_zero, den_zero) {
            (true, true) => 1.0,
            (false, true) => f64::INFINITY,
            _ => num / den,
        }
    };
    let big_c = ratio(outcome.residual_norm, oracle.residual_norm);
    let small_c = ratio(outcome.projected.norm(), oracle.projected.norm());
    Ok((big_c, small_c))
}
