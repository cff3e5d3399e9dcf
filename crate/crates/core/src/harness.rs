//! Reproducible experiments: phase transitions, bound curves, verification
//! suites and oracle comparisons.
//!
//! An [`ExperimentSpec`] fully determines its [`ResultTable`]. Trials are
//! spread over a rayon pool and gathered in index order, so the table does
//! not depend on the number of workers. Every row carries the cell seed and
//! the trial range that produced it; trial `t` of a cell uses
//! `trial_seed(cell_seed, t)`. Within a cell all backends see the same
//! instances.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{CVector, RMatrix};
use crate::projection::{basis_pursuit, near_optimality_ratios, project_omp, project_oracle, Backend, ProjectionConfig};
use crate::recovery::{project_onto_support, recover, RecoveryConfig};
use crate::sensing::{
    add_noise, component_seed, gen_clustered, gen_separated, snr_db, trial_seed, CoefficientModel, Component,
    InstanceParams, InstanceRecord, MeasurementKind, RecoveryReport, SensingInstance, SignalStructure,
    SparseRepresentation,
};
use crate::separation::{
    binomial, eta_bound_with_cap, for_each_separated_support, gram_submatrix, omp_threshold, BoundMode,
};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "SSCOSAMP_WORKERS";
/// SNR values are clipped here before averaging so exact recoveries stay finite.
pub const SNR_CAP_DB: f64 = 300.0;
/// `||alpha_hat - alpha||_inf` below which basis pursuit counts as exact.
pub const L1_EXACT_TOLERANCE: f64 = 1e-6;
/// Slack allowed above the closed-form isometry bound.
pub const LEMMA_SLACK: f64 = 1e-10;
/// Allowed gap between the extremal-eigenvector deviation and `||G - I||_2`.
pub const EIGEN_GAP_TOLERANCE: f64 = 1e-8;
/// Tolerance for the projection contracts in oracle comparisons.
pub const CONTRACT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Phase,
    Bounds,
    Gram,
    VerifyTheorem,
    VerifyLemma,
    VerifyL1,
    OracleCompare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Phase,
        ExperimentKind::Bounds,
        ExperimentKind::Gram,
        ExperimentKind::VerifyTheorem,
        ExperimentKind::VerifyLemma,
        ExperimentKind::VerifyL1,
        ExperimentKind::OracleCompare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Phase => "phase",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Gram => "gram",
            ExperimentKind::VerifyTheorem => "verify-theorem",
            ExperimentKind::VerifyLemma => "verify-lemma",
            ExperimentKind::VerifyL1 => "verify-l1",
            ExperimentKind::OracleCompare => "oracle-compare",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|kind| kind.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind `{s}`")))
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n: usize,
    pub d: usize,
    pub k_grid: Vec<usize>,
    /// Measurement counts (phase only).
    pub m_grid: Vec<usize>,
    /// Separations for bounds and verification; offsets `h` for gram.
    pub h_min_grid: Vec<usize>,
    pub trials: usize,
    /// Noise bound `||e|| < epsilon`.
    pub epsilon: f64,
    pub backends: Vec<Backend>,
    pub modes: Vec<BoundMode>,
    pub structures: Vec<SignalStructure>,
    /// Coefficient magnitude as a multiple of the OMP threshold (verify-theorem).
    pub margin: f64,
    /// Enumerate every separated support instead of sampling (verify-lemma).
    pub exhaustive: bool,
    pub seed: u64,
    pub measurement: MeasurementKind,
    pub max_outer_iterations: usize,
    pub coefficients: CoefficientModel,
    pub projection: ProjectionConfig,
}

impl ExperimentSpec {
    /// Desk-scale defaults for `kind`.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            n: 256,
            d: 1024,
            k_grid: vec![8],
            m_grid: Vec::new(),
            h_min_grid: Vec::new(),
            trials: 100,
            epsilon: 0.0,
            backends: Vec::new(),
            modes: Vec::new(),
            structures: Vec::new(),
            margin: 1.01,
            exhaustive: false,
            seed: 2024,
            measurement: MeasurementKind::Gaussian,
            max_outer_iterations: RecoveryConfig::default().max_outer_iterations,
            coefficients: CoefficientModel::default(),
            projection: ProjectionConfig::default(),
        };
        match kind {
            ExperimentKind::Phase => Self {
                m_grid: (2..=16).map(|i| 16 * i).collect(),
                backends: vec![Backend::Omp, Backend::Cosamp, Backend::L1],
                structures: vec![SignalStructure::Clustered, SignalStructure::Separated { h_min: 16 }],
                coefficients: CoefficientModel::Gaussian,
                projection: ProjectionConfig { l1_max_iterations: 2000, ..ProjectionConfig::default() },
                ..base
            },
            ExperimentKind::Bounds => Self {
                k_grid: vec![4, 8, 16],
                h_min_grid: (1..=256).collect(),
                modes: vec![BoundMode::Exact, BoundMode::Envelope],
                epsilon: 1e-3,
                ..base
            },
            ExperimentKind::Gram => Self { h_min_grid: (0..=64).collect(), ..base },
            ExperimentKind::VerifyTheorem => Self {
                h_min_grid: vec![128],
                trials: 1000,
                epsilon: 1e-3,
                ..base
            },
            ExperimentKind::VerifyLemma => Self {
                k_grid: vec![4, 8, 16],
                h_min_grid: vec![8, 16, 32, 64, 128, 256],
                trials: 1000,
                coefficients: CoefficientModel::Gaussian,
                ..base
            },
            ExperimentKind::VerifyL1 => Self { h_min_grid: vec![16], ..base },
            ExperimentKind::OracleCompare => Self {
                n: 8,
                d: 16,
                k_grid: vec![1, 2],
                trials: 1000,
                epsilon: 0.3,
                backends: Backend::ALL.to_vec(),
                structures: vec![SignalStructure::Clustered, SignalStructure::Separated { h_min: 4 }],
                coefficients: CoefficientModel::Gaussian,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.n > self.d {
            return fail(format!("need 1 <= n <= d, got n = {}, d = {}", self.n, self.d));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return fail(format!("epsilon must be finite and nonnegative, got {}", self.epsilon));
        }
        if self.k_grid.contains(&0) {
            return fail("k must be at least 1".into());
        }
        let needs = |name: &str, empty: bool| if empty { fail(format!("{name} must not be empty")) } else { Ok(()) };
        match self.kind {
            ExperimentKind::Phase => {
                needs("k grid", self.k_grid.is_empty())?;
                needs("m grid", self.m_grid.is_empty())?;
                needs("backends", self.backends.is_empty())?;
                needs("structures", self.structures.is_empty())?;
                if let Some(&m) = self.m_grid.iter().find(|&&m| m == 0 || m > self.n) {
                    return fail(format!("need 1 <= m <= n, got m = {m}"));
                }
            }
            ExperimentKind::Bounds => {
                needs("k grid", self.k_grid.is_empty())?;
                needs("h_min grid", self.h_min_grid.is_empty())?;
                needs("modes", self.modes.is_empty())?;
            }
            ExperimentKind::Gram => needs("h grid", self.h_min_grid.is_empty())?,
            ExperimentKind::VerifyTheorem | ExperimentKind::VerifyLemma | ExperimentKind::VerifyL1 => {
                needs("k grid", self.k_grid.is_empty())?;
                needs("h_min grid", self.h_min_grid.is_empty())?;
            }
            ExperimentKind::OracleCompare => {
                needs("k grid", self.k_grid.is_empty())?;
                needs("backends", self.backends.is_empty())?;
                needs("structures", self.structures.is_empty())?;
            }
        }
        if self.kind != ExperimentKind::Gram && self.h_min_grid.contains(&0) {
            return fail("h_min must be at least 1".into());
        }
        if self.max_outer_iterations == 0 {
            return fail("max_outer_iterations must be at least 1".into());
        }
        self.projection.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    fn recovery_config(&self, k: usize, backend: Backend) -> RecoveryConfig {
        RecoveryConfig {
            k,
            backend,
            max_outer_iterations: self.max_outer_iterations,
            projection: self.projection.clone(),
            ..RecoveryConfig::default()
        }
    }

    fn cell_seed(&self, tags: &[u64]) -> u64 {
        tags.iter().fold(trial_seed(self.seed, self.kind.tag()), |seed, &tag| trial_seed(seed, tag))
    }
}

fn structure_tag(structure: SignalStructure) -> u64 {
    match structure {
        SignalStructure::Clustered => 0,
        SignalStructure::Separated { h_min } => h_min as u64 + 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub k: usize,
    pub m: usize,
    pub backend: Backend,
    pub structure: SignalStructure,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean of SNR clipped at [`SNR_CAP_DB`].
    pub mean_snr_db: f64,
    pub mean_iterations: f64,
    /// Basis pursuit calls that hit the iteration cap, summed over trials.
    pub projection_failures: usize,
    pub seed: u64,
    pub trial_start: usize,
    pub trial_end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Infeasible,
    TooLarge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub mode: BoundMode,
    pub h_min: usize,
    pub k: usize,
    pub status: CellStatus,
    pub eta: Option<f64>,
    pub eta_prime: Option<f64>,
    pub b_ratio: Option<f64>,
    pub delta_bound: Option<f64>,
    pub epsilon: f64,
    /// `2 epsilon / (1 - eta - eta')`, empty where `eta + eta' >= 1`.
    pub omp_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramRow {
    pub h: usize,
    pub gram: f64,
    pub majorant: f64,
    /// Empty at `h = 0`.
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub h_min: usize,
    pub k: usize,
    pub epsilon: f64,
    pub margin: f64,
    pub eta: f64,
    pub eta_prime: f64,
    pub b_ratio: f64,
    pub threshold: f64,
    pub magnitude: f64,
    pub trials: usize,
    pub exact: usize,
    pub rate: f64,
    /// `B < 1` and magnitudes at or above the threshold.
    pub hypotheses_hold: bool,
    pub seed: u64,
    pub trial_start: usize,
    pub trial_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub h_min: usize,
    pub k: usize,
    pub status: CellStatus,
    pub exhaustive: bool,
    pub supports: usize,
    pub eta_bound: Option<f64>,
    /// Largest `| ||D a||^2 - ||a||^2 | / ||a||^2` over random and extremal `a`.
    pub max_deviation: f64,
    /// Largest `||G - I||_2` over the supports.
    pub max_operator_norm: f64,
    /// Largest gap between the extremal-eigenvector deviation and `||G - I||_2`.
    pub max_eigen_gap: f64,
    pub within_bound: bool,
    pub seed: u64,
    pub trial_start: usize,
    pub trial_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Row {
    pub h_min: usize,
    pub k: usize,
    pub trials: usize,
    pub exact: usize,
    pub unconverged: usize,
    pub max_error: f64,
    pub max_feasibility: f64,
    /// `h_min >= 4 d / n`.
    pub condition_holds: bool,
    pub seed: u64,
    pub trial_start: usize,
    pub trial_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub backend: Backend,
    pub structure: SignalStructure,
    pub k: usize,
    pub trials: usize,
    pub median_residual_ratio: f64,
    pub max_residual_ratio: f64,
    pub median_energy_ratio: f64,
    pub min_energy_ratio: f64,
    /// Trials where the backend residual fell below the oracle residual.
    pub below_oracle: usize,
    pub max_idempotence_error: f64,
    pub max_orthogonality_error: f64,
    pub max_pythagoras_error: f64,
    pub seed: u64,
    pub trial_start: usize,
    pub trial_end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    Phase(Vec<PhaseRow>),
    Bounds(Vec<BoundsRow>),
    Gram(Vec<GramRow>),
    Theorem(Vec<TheoremRow>),
    Lemma(Vec<LemmaRow>),
    L1(Vec<L1Row>),
    Oracle(Vec<OracleRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Phase(r) => r.len(),
            Rows::Bounds(r) => r.len(),
            Rows::Gram(r) => r.len(),
            Rows::Theorem(r) => r.len(),
            Rows::Lemma(r) => r.len(),
            Rows::L1(r) => r.len(),
            Rows::Oracle(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A phase trial that missed perfect recovery, kept for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedTrial {
    pub backend: Backend,
    pub trial: usize,
    pub snr_db: f64,
    pub instance: InstanceRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub spec: ExperimentSpec,
    pub rows: Rows,
    /// Filled only when [`RunOptions::collect_failures`] is set; not part of
    /// the CSV.
    pub failures: Vec<FailedTrial>,
}

impl ResultTable {
    fn new(spec: &ExperimentSpec, rows: Rows) -> Self {
        Self { spec: spec.clone(), rows, failures: Vec::new() }
    }

    /// Violated claims of the verification kinds; empty for other kinds.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.rows {
            Rows::Theorem(rows) => {
                for r in rows.iter().filter(|r| r.hypotheses_hold && r.exact < r.trials) {
                    out.push(format!(
                        "h_min={} k={}: exact support recovery in {}/{} trials",
                        r.h_min, r.k, r.exact, r.trials
                    ));
                }
            }
            Rows::Lemma(rows) => {
                for r in rows.iter().filter(|r| r.status == CellStatus::Ok) {
                    if !r.within_bound {
                        out.push(format!(
                            "h_min={} k={}: deviation {:e} exceeds bound {:e}",
                            r.h_min,
                            r.k,
                            r.max_deviation,
                            r.eta_bound.unwrap_or(f64::NAN)
                        ));
                    }
                    if r.max_eigen_gap > EIGEN_GAP_TOLERANCE {
                        out.push(format!(
                            "h_min={} k={}: extremal deviation differs from ||G - I|| by {:e}",
                            r.h_min, r.k, r.max_eigen_gap
                        ));
                    }
                }
            }
            Rows::L1(rows) => {
                for r in rows.iter().filter(|r| r.condition_holds && r.exact < r.trials) {
                    out.push(format!("h_min={} k={}: exact in {}/{} trials", r.h_min, r.k, r.exact, r.trials));
                }
            }
            Rows::Oracle(rows) => {
                for r in rows {
                    if r.below_oracle > 0 {
                        out.push(format!(
                            "{} {} k={}: residual below the oracle in {} trials",
                            r.backend, r.structure, r.k, r.below_oracle
                        ));
                    }
                    let worst = r.max_idempotence_error.max(r.max_orthogonality_error).max(r.max_pythagoras_error);
                    if worst > CONTRACT_TOLERANCE {
                        out.push(format!(
                            "{} {} k={}: projection contract error {:e}",
                            r.backend, r.structure, r.k, worst
                        ));
                    }
                }
            }
            Rows::Phase(_) | Rows::Bounds(_) | Rows::Gram(_) => {}
        }
        out
    }

    /// CSV preceded by the spec as `# `-prefixed TOML.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for line in self.spec.to_toml()?.lines() {
            writeln!(out, "# {line}")?;
        }
        match &self.rows {
            Rows::Phase(r) => write_rows(&mut out, r),
            Rows::Bounds(r) => write_rows(&mut out, r),
            Rows::Gram(r) => write_rows(&mut out, r),
            Rows::Theorem(r) => write_rows(&mut out, r),
            Rows::Lemma(r) => write_rows(&mut out, r),
            Rows::L1(r) => write_rows(&mut out, r),
            Rows::Oracle(r) => write_rows(&mut out, r),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let header: String = text
            .lines()
            .take_while(|line| line.starts_with('#'))
            .map(|line| line.strip_prefix("# ").unwrap_or(line.trim_start_matches('#')))
            .collect::<Vec<_>>()
            .join("\n");
        let spec = ExperimentSpec::from_toml(&header)?;
        let body = text.as_bytes();
        let rows = match spec.kind {
            ExperimentKind::Phase => Rows::Phase(read_rows(body)?),
            ExperimentKind::Bounds => Rows::Bounds(read_rows(body)?),
            ExperimentKind::Gram => Rows::Gram(read_rows(body)?),
            ExperimentKind::VerifyTheorem => Rows::Theorem(read_rows(body)?),
            ExperimentKind::VerifyLemma => Rows::Lemma(read_rows(body)?),
            ExperimentKind::VerifyL1 => Rows::L1(read_rows(body)?),
            ExperimentKind::OracleCompare => Rows::Oracle(read_rows(body)?),
        };
        Ok(Self { spec, rows, failures: Vec::new() })
    }
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(body: &[u8]) -> Result<Vec<T>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(body)
        .deserialize()
        .map(|row| row.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` reads [`WORKERS_ENV`], falling back to the
    /// available parallelism.
    pub workers: Option<usize>,
    /// Keep the instances of failed phase trials.
    pub collect_failures: bool,
}

/// Worker count from [`WORKERS_ENV`] or the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(value) => match value.trim().parse::<usize>() {
            Ok(count) if count >= 1 => Ok(count),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{value}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Validates `spec` and runs it on a dedicated pool.
pub fn run(spec: &ExperimentSpec, options: &RunOptions) -> Result<ResultTable> {
    spec.validate()?;
    let workers = match options.workers {
        Some(count) => count.max(1),
        None => workers_from_env()?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match spec.kind {
        ExperimentKind::Phase => run_phase_collecting(spec, options.collect_failures),
        ExperimentKind::Bounds => run_bounds(spec),
        ExperimentKind::Gram => run_gram(spec),
        ExperimentKind::VerifyTheorem => run_verify_theorem(spec),
        ExperimentKind::VerifyLemma => run_verify_lemma(spec),
        ExperimentKind::VerifyL1 => run_verify_l1(spec),
        ExperimentKind::OracleCompare => run_oracle_compare(spec),
    })
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::Config(format!("expected a {kind} spec, got {}", spec.kind)));
    }
    spec.validate()
}

/// Runs `trial` for every index in parallel and returns results in index order.
fn par_trials<T: Send>(trials: usize, trial: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(trial).collect()
}

struct PhaseTrial {
    snr_db: f64,
    iterations: usize,
    projection_failures: usize,
}

/// Perfect-recovery rates of signal-space CoSaMP per `(k, m, structure,
/// backend)` cell.
pub fn run_phase(spec: &ExperimentSpec) -> Result<ResultTable> {
    expect_kind(spec, ExperimentKind::Phase)?;
    run_phase_collecting(spec, false)
}

fn run_phase_collecting(spec: &ExperimentSpec, collect_failures: bool) -> Result<ResultTable> {
    let dict = Dictionary::build(spec.n, spec.d)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &k in &spec.k_grid {
        for &m in &spec.m_grid {
            for &structure in &spec.structures {
                let params = InstanceParams {
                    m,
                    k,
                    structure,
                    coefficients: spec.coefficients,
                    measurement: spec.measurement,
                    epsilon: spec.epsilon,
                };
                let seed = spec.cell_seed(&[k as u64, m as u64, structure_tag(structure)]);
                let results = par_trials(spec.trials, |t| {
                    let instance = SensingInstance::generate(&dict, &params, trial_seed(seed, t as u64))?;
                    let outcomes = spec
                        .backends
                        .iter()
                        .map(|&backend| {
                            let (x_hat, state) = recover(&instance.a, &dict, &instance.y, &spec.recovery_config(k, backend))?;
                            Ok(PhaseTrial {
                                snr_db: snr_db(&instance.x_true, &x_hat)?,
                                iterations: state.iteration,
                                projection_failures: state.projection_failures,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let failed = collect_failures && outcomes.iter().any(|o| !RecoveryReport::is_perfect(o.snr_db));
                    let record = failed.then(|| InstanceRecord::from_instance(&dict, &instance));
                    Ok((outcomes, record))
                })?;
                for (b, &backend) in spec.backends.iter().enumerate() {
                    let mut successes = 0;
                    let mut snr_sum = 0.0;
                    let mut iteration_sum = 0;
                    let mut projection_failures = 0;
                    for (t, (outcomes, record)) in results.iter().enumerate() {
                        let o = &outcomes[b];
                        let perfect = RecoveryReport::is_perfect(o.snr_db);
                        successes += usize::from(perfect);
                        snr_sum += o.snr_db.min(SNR_CAP_DB);
                        iteration_sum += o.iterations;
                        projection_failures += o.projection_failures;
                        if let (false, Some(record)) = (perfect, record) {
                            failures.push(FailedTrial { backend, trial: t, snr_db: o.snr_db, instance: record.clone() });
                        }
                    }
                    let trials = spec.trials as f64;
                    rows.push(PhaseRow {
                        k,
                        m,
                        backend,
                        structure,
                        trials: spec.trials,
                        successes,
                        success_rate: successes as f64 / trials,
                        mean_snr_db: snr_sum / trials,
                        mean_iterations: iteration_sum as f64 / trials,
                        projection_failures,
                        seed,
                        trial_start: 0,
                        trial_end: spec.trials,
                    });
                }
            }
        }
    }
    let mut table = ResultTable::new(spec, Rows::Phase(rows));
    table.failures = failures;
    Ok(table)
}

/// Dominance factors, `B(h_min)`, isometry bounds and OMP thresholds over the
/// `(mode, k, h_min)` grid. Infeasible or oversized cells are flagged.
pub fn run_bounds(spec: &ExperimentSpec) -> Result<ResultTable> {
    expect_kind(spec, ExperimentKind::Bounds)?;
    let dict = Dictionary::build(spec.n, spec.d)?;
    let cells: Vec<(BoundMode, usize, usize)> = spec
        .modes
        .iter()
        .flat_map(|&mode| spec.k_grid.iter().flat_map(move |&k| spec.h_min_grid.iter().map(move |&h| (mode, k, h))))
        .collect();
    let rows = par_trials(cells.len(), |i| {
        let (mode, k, h_min) = cells[i];
        let blank = BoundsRow {
            mode,
            h_min,
            k,
            status: CellStatus::Ok,
            eta: None,
            eta_prime: None,
            b_ratio: None,
            delta_bound: None,
            epsilon: spec.epsilon,
            omp_threshold: None,
        };
        match eta_bound_with_cap(&dict, h_min, k, mode, spec.projection.enumeration_cap) {
            Ok(p) => Ok(BoundsRow {
                eta: Some(p.eta),
                eta_prime: Some(p.eta_prime),
                b_ratio: Some(p.b_ratio),
                delta_bound: Some(p.delta_bound),
                omp_threshold: omp_threshold(p.eta, p.eta_prime, spec.epsilon).ok().map(|t| t.threshold),
                ..blank
            }),
            Err(Error::InfeasibleSeparation { .. }) => Ok(BoundsRow { status: CellStatus::Infeasible, ..blank }),
            Err(Error::EnumerationTooLarge { .. }) => Ok(BoundsRow { status: CellStatus::TooLarge, ..blank }),
            Err(e) => Err(e),
        }
    })?;
    Ok(ResultTable::new(spec, Rows::Bounds(rows)))
}

/// Gram magnitude, its nonincreasing majorant and the coherence envelope at
/// each offset in `h_min_grid`.
pub fn run_gram(spec: &ExperimentSpec) -> Result<ResultTable> {
    expect_kind(spec, ExperimentKind::Gram)?;
    let dict = Dictionary::build(spec.n, spec.d)?;
    let rows = spec
        .h_min_grid
        .iter()
        .map(|&h| {
            Ok(GramRow {
                h,
                gram: dict.gram_magnitude(h)?,
                majorant: dict.gram_majorant(h),
                envelope: (h % spec.d != 0).then(|| dict.envelope_unchecked(h)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultTable::new(spec, Rows::Gram(rows)))
}

/// Exact support recovery by OMP on `w = D alpha + e` with separated
/// supports and coefficients at `margin` times the threshold. Every cell
/// must satisfy `B < 1` under the exact-gram bound.
pub fn run_verify_theorem(spec: &ExperimentSpec) -> Result<ResultTable> {
    expect_kind(spec, ExperimentKind::VerifyTheorem)?;
    let dict = Dictionary::build(spec.n, spec.d)?;
    let mut rows = Vec::new();
    for &k in &spec.k_grid {
        for &h_min in &spec.h_min_grid {
            let profile = eta_bound_with_cap(&dict, h_min, k, BoundMode::Exact, spec.projection.enumeration_cap)?;
            if !profile.guarantees_omp() {
                return Err(Error::HypothesisViolated { sum: profile.eta + profile.eta_prime });
            }
            let threshold = omp_threshold(profile.eta, profile.eta_prime, spec.epsilon)?.threshold;
            let magnitude = if spec.epsilon == 0.0 { 1.0 } else { spec.margin * threshold };
            let model = CoefficientModel::Phase { magnitude };
            let seed = spec.cell_seed(&[k as u64, h_min as u64]);
            let exact = par_trials(spec.trials, |t| {
                let trial = trial_seed(seed, t as u64);
                let alpha = gen_separated(&dict, k, h_min, model, component_seed(trial, Component::Signal))?;
                let noise = add_noise(spec.n, spec.epsilon, component_seed(trial, Component::Noise))?;
                let w = alpha.synthesize(&dict) + noise;
                let config = ProjectionConfig { epsilon: spec.epsilon.max(1e-10 * w.norm()), ..spec.projection.clone() };
                let outcome = project_omp(&dict, &w, 2 * k, &config);
                Ok(outcome.support == alpha.support)
            })?
            .into_iter()
            .filter(|&ok| ok)
            .count();
            rows.push(TheoremRow {
                h_min,
                k,
                epsilon: spec.epsilon,
                margin: spec.margin,
                eta: profile.eta,
                eta_prime: profile.eta_prime,
                b_ratio: profile.b_ratio,
                threshold,
                magnitude,
                trials: spec.trials,
                exact,
                rate: exact as f64 / spec.trials as f64,
                hypotheses_hold: spec.epsilon == 0.0 || spec.margin >= 1.0,
                seed,
                trial_start: 0,
                trial_end: spec.trials,
            });
        }
    }
    Ok(ResultTable::new(spec, Rows::Theorem(rows)))
}

#[derive(Default)]
struct LemmaStats {
    deviation: f64,
    operator_norm: f64,
    eigen_gap: f64,
}

impl LemmaStats {
    fn merge(self, other: LemmaStats) -> LemmaStats {
        LemmaStats {
            deviation: self.deviation.max(other.deviation),
            operator_norm: self.operator_norm.max(other.operator_norm),
            eigen_gap: self.eigen_gap.max(other.eigen_gap),
        }
    }
}

fn relative_deviation(dict: &Dictionary, support: &SupportSet, values: &CVector) -> f64 {
    let energy = values.norm_squared();
    (dict.synthesize_on(support, values).norm_squared() - energy).abs() / energy
}

/// Isometry statistics of one support: the extremal eigenvector of its gram
/// submatrix and, when given, one random coefficient draw.
fn lemma_support(dict: &Dictionary, support: &SupportSet, random: Option<&SparseRepresentation>) -> LemmaStats {
    let eigen = SymmetricEigen::new(gram_submatrix(dict, support));
    let (index, operator_norm) = eigen
        .eigenvalues
        .iter()
        .map(|l| (l - 1.0).abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let extremal = eigen.eigenvectors.column(index).into_owned();
    let at_extremal = relative_deviation(dict, support, &extremal);
    let at_random = random.map_or(0.0, |rep| {
        let values = CVector::from_iterator(rep.k(), rep.support.iter().map(|&i| rep.coefficients[i]));
        relative_deviation(dict, support, &values)
    });
    LemmaStats {
        deviation: at_extremal.max(at_random),
        operator_norm,
        eigen_gap: (at_extremal - operator_norm).abs(),
    }
}

/// Worst-case isometry deviation on separated supports against the
/// exact-gram bound, by sampling or by exhaustive enumeration.
pub fn run_verify_lemma(spec: &ExperimentSpec) -> Result<ResultTable> {
    expect_kind(spec, ExperimentKind::VerifyLemma)?;
    let dict = Dictionary::build(spec.n, spec.d)?;
    let mut rows = Vec::new();
    for &k in &spec.k_grid {
        for &h_min in &spec.h_min_grid {
            let seed = spec.cell_seed(&[k as u64, h_min as u64]);
            let cap = spec.projection.enumeration_cap;
            let bound = match eta_bound_with_cap(&dict, h_min, k, BoundMode::Exact, cap) {
                Ok(profile) => profile.eta,
                Err(Error::InfeasibleSeparation { .. }) => {
                    rows.push(LemmaRow {
                        h_min,
                        k,
                        status: CellStatus::Infeasible,
                        exhaustive: spec.exhaustive,
                        supports: 0,
                        eta_bound: None,
                        max_deviation: 0.0,
                        max_operator_norm: 0.0,
                        max_eigen_gap: 0.0,
                        within_bound: true,
                        seed,
                        trial_start: 0,
                        trial_end: 0,
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (supports, stats) = if spec.exhaustive {
                let count = binomial(spec.d, k);
                if count > cap as u128 {
                    return Err(Error::EnumerationTooLarge { count, cap });
                }
                let mut all = Vec::new();
                for_each_separated_support(spec.d, k, h_min, |s| all.push(s.to_vec()));
                let stats = all
                    .par_iter()
                    .map(|indices| {
                        let support = SupportSet::new(indices.clone(), spec.d)?;
                        Ok(lemma_support(&dict, &support, None))
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(LemmaStats::default(), LemmaStats::merge);
                (all.len(), stats)
            } else {
                let stats = par_trials(spec.trials, |t| {
                    let trial = trial_seed(seed, t as u64);
                    let rep = gen_separated(&dict, k, h_min, spec.coefficients, component_seed(trial, Component::Signal))?;
                    Ok(lemma_support(&dict, &rep.support, Some(&rep)))
                })?
                .into_iter()
                .fold(LemmaStats::default(), LemmaStats::merge);
                (spec.trials, stats)
            };
            rows.push(LemmaRow {
                h_min,
                k,
                status: CellStatus::Ok,
                exhaustive: spec.exhaustive,
                supports,
                eta_bound: Some(bound),
                max_deviation: stats.deviation,
                max_operator_norm: stats.operator_norm,
                max_eigen_gap: stats.eigen_gap,
                within_bound: stats.deviation <= bound + LEMMA_SLACK,
                seed,
                trial_start: 0,
                trial_end: if spec.exhaustive { 0 } else { spec.trials },
            });
        }
    }
    Ok(ResultTable::new(spec, Rows::Lemma(rows)))
}

/// Basis pursuit on noiseless `D alpha` with separated supports; exact when
/// `||alpha_hat - alpha||_inf <= 1e-6`.
pub fn run_verify_l1(spec: &ExperimentSpec) -> Result<ResultTable> {
    expect_kind(spec, ExperimentKind::VerifyL1)?;
    let dict = Dictionary::build(spec.n, spec.d)?;
    let mut rows = Vec::new();
    for &k in &spec.k_grid {
        for &h_min in &spec.h_min_grid {
            let seed = spec.cell_seed(&[k as u64, h_min as u64]);
            let results = par_trials(spec.trials, |t| {
                let trial = trial_seed(seed, t as u64);
                let alpha = gen_separated(&dict, k, h_min, spec.coefficients, component_seed(trial, Component::Signal))?;
                let w = alpha.synthesize(&dict);
                let p = &spec.projection;
                let solution =
                    basis_pursuit(&dict, &w, p.l1_tolerance, p.l1_change_tolerance, p.l1_max_iterations);
                let error = (&solution.coefficients - &alpha.coefficients).camax();
                Ok((error, solution.feasibility, solution.converged))
            })?;
            let exact = results.iter().filter(|(e, _, c)| *c && *e <= L1_EXACT_TOLERANCE).count();
            rows.push(L1Row {
                h_min,
                k,
                trials: spec.trials,
                exact,
                unconverged: results.iter().filter(|r| !r.2).count(),
                max_error: results.iter().map(|r| r.0).fold(0.0, f64::max),
                max_feasibility: results.iter().map(|r| r.1).fold(0.0, f64::max),
                condition_holds: k == 1 || h_min * spec.n >= 4 * spec.d,
                seed,
                trial_start: 0,
                trial_end: spec.trials,
            });
        }
    }
    Ok(ResultTable::new(spec, Rows::L1(rows)))
}

struct ContractCheck {
    residual_ratio: f64,
    energy_ratio: f64,
    below_oracle: bool,
    idempotence: f64,
    orthogonality: f64,
    pythagoras: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Near-optimality ratios and projection contracts of each backend against
/// the exhaustive oracle on `w = D alpha + e`.
pub fn run_oracle_compare(spec: &ExperimentSpec) -> Result<ResultTable> {
    expect_kind(spec, ExperimentKind::OracleCompare)?;
    let dict = Dictionary::build(spec.n, spec.d)?;
    let mut rows = Vec::new();
    for &k in &spec.k_grid {
        for &structure in &spec.structures {
            let seed = spec.cell_seed(&[k as u64, structure_tag(structure)]);
            let results = par_trials(spec.trials, |t| {
                let trial = trial_seed(seed, t as u64);
                let signal = component_seed(trial, Component::Signal);
                let alpha = match structure {
                    SignalStructure::Clustered => gen_clustered(&dict, k, spec.coefficients, signal)?,
                    SignalStructure::Separated { h_min } => gen_separated(&dict, k, h_min, spec.coefficients, signal)?,
                };
                let noise = add_noise(spec.n, spec.epsilon, component_seed(trial, Component::Noise))?;
                let w = alpha.synthesize(&dict) + noise;
                let oracle = project_oracle(&dict, &w, k, &spec.projection)?;
                let scale = w.norm().max(1.0);
                spec.backends
                    .iter()
                    .map(|&backend| {
                        let outcome = backend.project_best_effort(&dict, &w, k, &spec.projection)?;
                        let (residual_ratio, energy_ratio) = near_optimality_ratios(&outcome, &oracle)?;
                        let reprojected = project_onto_support(&dict, &outcome.support, &outcome.projected)?;
                        let residual = &w - &outcome.projected;
                        let atoms = dict.columns(outcome.support.as_slice());
                        let energy = w.norm_squared() - outcome.projected.norm_squared() - outcome.residual_norm.powi(2);
                        Ok(ContractCheck {
                            residual_ratio,
                            energy_ratio,
                            below_oracle: outcome.residual_norm < oracle.residual_norm - 1e-10 * scale,
                            idempotence: (reprojected - &outcome.projected).norm() / scale,
                            orthogonality: (atoms.adjoint() * residual).camax() / scale,
                            pythagoras: energy.abs() / (scale * scale),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            for (b, &backend) in spec.backends.iter().enumerate() {
                let checks: Vec<&ContractCheck> = results.iter().map(|r| &r[b]).collect();
                let max_of = |f: fn(&ContractCheck) -> f64| checks.iter().map(|c| f(c)).fold(0.0, f64::max);
                let mut residual_ratios: Vec<f64> = checks.iter().map(|c| c.residual_ratio).collect();
                let mut energy_ratios: Vec<f64> = checks.iter().map(|c| c.energy_ratio).collect();
                rows.push(OracleRow {
                    backend,
                    structure,
                    k,
                    trials: spec.trials,
                    median_residual_ratio: median(&mut residual_ratios),
                    max_residual_ratio: residual_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    median_energy_ratio: median(&mut energy_ratios),
                    min_energy_ratio: energy_ratios.iter().copied().fold(f64::INFINITY, f64::min),
                    below_oracle: checks.iter().filter(|c| c.below_oracle).count(),
                    max_idempotence_error: max_of(|c| c.idempotence),
                    max_orthogonality_error: max_of(|c| c.orthogonality),
                    max_pythagoras_error: max_of(|c| c.pythagoras),
                    seed,
                    trial_start: 0,
                    trial_end: spec.trials,
                });
            }
        }
    }
    Ok(ResultTable::new(spec, Rows::Oracle(rows)))
}

/// Reruns recovery on a recorded instance.
pub fn replay(record: &InstanceRecord, backend: Backend, config: Option<RecoveryConfig>) -> Result<ReplayOutcome> {
    let dict = Dictionary::build(record.n, record.d)?;
    let instance = record.to_instance(&dict)?;
    let config = config.unwrap_or_else(|| RecoveryConfig::new(record.k, backend));
    let (x_hat, state) = recover(&instance.a, &dict, &instance.y, &RecoveryConfig { backend, ..config })?;
    Ok(ReplayOutcome {
        snr_db: snr_db(&instance.x_true, &x_hat)?,
        support: state.support.as_slice().to_vec(),
        true_support: instance.alpha.support.as_slice().to_vec(),
        iterations: state.iteration,
        residual_history: state.residual_history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub snr_db: f64,
    pub support: Vec<usize>,
    pub true_support: Vec<usize>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Measurement matrix used by a phase cell's trial, for inspection.
pub fn phase_matrix(spec: &ExperimentSpec, k: usize, m: usize, structure: SignalStructure, trial: usize) -> Result<RMatrix> {
    let seed = trial_seed(spec.cell_seed(&[k as u64, m as u64, structure_tag(structure)]), trial as u64);
    crate::sensing::measurement_matrix(spec.measurement, m, spec.n, component_seed(seed, Component::Matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_phase() -> ExperimentSpec {
        ExperimentSpec {
            n: 32,
            d: 128,
            k_grid: vec![2],
            m_grid: vec![16, 32],
            trials: 6,
            backends: vec![Backend::Omp, Backend::Cosamp],
            structures: vec![SignalStructure::Clustered, SignalStructure::Separated { h_min: 16 }],
            ..ExperimentSpec::for_kind(ExperimentKind::Phase)
        }
    }

    #[test]
    fn default_specs_are_valid_and_round_trip() {
        for kind in ExperimentKind::ALL {
            let spec = ExperimentSpec::for_kind(kind);
            spec.validate().unwrap();
            assert_eq!(ExperimentSpec::from_toml(&spec.to_toml().unwrap()).unwrap(), spec);
            assert_eq!(kind.as_str().parse::<ExperimentKind>().unwrap(), kind);
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut spec = small_phase();
        spec.m_grid = vec![64];
        assert!(spec.validate().is_err());
        let mut spec = small_phase();
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = small_phase();
        spec.backends.clear();
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::for_kind(ExperimentKind::Bounds);
        spec.n = 2048;
        assert!(spec.validate().is_err());
        assert!(run_bounds(&small_phase()).is_err());
    }

    #[test]
    fn identity_oracle_phase_cell_succeeds() {
        let spec = ExperimentSpec {
            n: 8,
            d: 16,
            k_grid: vec![1],
            m_grid: vec![8],
            trials: 1,
            backends: vec![Backend::Oracle],
            structures: vec![SignalStructure::Separated { h_min: 1 }],
            measurement: MeasurementKind::Identity,
            ..ExperimentSpec::for_kind(ExperimentKind::Phase)
        };
        let table = run_phase(&spec).unwrap();
        let Rows::Phase(rows) = &table.rows else { panic!() };
        assert_eq!(rows[0].success_rate, 1.0);
    }

    #[test]
    fn phase_rows_cover_every_cell() {
        let table = run_phase(&small_phase()).unwrap();
        let Rows::Phase(rows) = &table.rows else { panic!() };
        assert_eq!(rows.len(), 2 * 2 * 2);
        for row in rows {
            assert!((0.0..=1.0).contains(&row.success_rate));
            assert_eq!(row.trial_end - row.trial_start, row.trials);
        }
    }

    #[test]
    fn csv_is_identical_across_worker_counts_and_round_trips() {
        let spec = small_phase();
        let one = run(&spec, &RunOptions { workers: Some(1), ..RunOptions::default() }).unwrap();
        let three = run(&spec, &RunOptions { workers: Some(3), ..RunOptions::default() }).unwrap();
        let text = one.to_csv_string().unwrap();
        assert_eq!(text, three.to_csv_string().unwrap());
        let back = ResultTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back.rows, one.rows);
    }

    #[test]
    fn bounds_rows_flag_infeasible_cells() {
        let spec = ExperimentSpec {
            n: 8,
            d: 16,
            k_grid: vec![1, 4],
            h_min_grid: vec![2, 5],
            modes: vec![BoundMode::Exact, BoundMode::BruteForce],
            ..ExperimentSpec::for_kind(ExperimentKind::Bounds)
        };
        let table = run_bounds(&spec).unwrap();
        let Rows::Bounds(rows) = &table.rows else { panic!() };
        assert_eq!(rows.len(), 8);
        let k1 = rows.iter().find(|r| r.k == 1 && r.mode == BoundMode::Exact).unwrap();
        assert_eq!(k1.eta, Some(0.0));
        assert_eq!(k1.b_ratio, k1.eta_prime);
        assert!(rows.iter().any(|r| r.k == 4 && r.h_min == 5 && r.status == CellStatus::Infeasible));
        let back = ResultTable::read_csv(table.to_csv_string().unwrap().as_bytes()).unwrap();
        assert_eq!(back.rows, table.rows);
    }

    #[test]
    fn threshold_is_finite_exactly_where_the_slack_is_positive() {
        let table = run_bounds(&ExperimentSpec {
            h_min_grid: vec![1, 16, 64, 128, 200, 256],
            ..ExperimentSpec::for_kind(ExperimentKind::Bounds)
        })
        .unwrap();
        let Rows::Bounds(rows) = &table.rows else { panic!() };
        for r in rows.iter().filter(|r| r.status == CellStatus::Ok) {
            let slack = 1.0 - r.eta.unwrap() - r.eta_prime.unwrap();
            assert_eq!(r.omp_threshold.is_some(), slack > 0.0, "{r:?}");
        }
    }

    #[test]
    fn noiseless_theorem_cell_is_exact() {
        let spec = ExperimentSpec {
            n: 64,
            d: 256,
            k_grid: vec![2],
            h_min_grid: vec![128],
            trials: 20,
            epsilon: 0.0,
            ..ExperimentSpec::for_kind(ExperimentKind::VerifyTheorem)
        };
        let table = run_verify_theorem(&spec).unwrap();
        let Rows::Theorem(rows) = &table.rows else { panic!() };
        assert_eq!(rows[0].rate, 1.0);
        assert!(table.violations().is_empty());
    }

    #[test]
    fn theorem_rejects_cells_outside_the_hypothesis() {
        let spec = ExperimentSpec { h_min_grid: vec![16], ..ExperimentSpec::for_kind(ExperimentKind::VerifyTheorem) };
        assert!(matches!(run_verify_theorem(&spec), Err(Error::HypothesisViolated { .. })));
    }

    #[test]
    fn orthonormal_lemma_is_parseval() {
        let spec = ExperimentSpec {
            n: 16,
            d: 16,
            k_grid: vec![3],
            h_min_grid: vec![2],
            trials: 50,
            ..ExperimentSpec::for_kind(ExperimentKind::VerifyLemma)
        };
        let table = run_verify_lemma(&spec).unwrap();
        let Rows::Lemma(rows) = &table.rows else { panic!() };
        assert!(rows[0].max_deviation <= 1e-10);
        assert!(table.violations().is_empty());
    }

    #[test]
    fn single_atom_l1_is_exact() {
        let spec = ExperimentSpec {
            n: 32,
            d: 128,
            k_grid: vec![1],
            h_min_grid: vec![1],
            trials: 5,
            ..ExperimentSpec::for_kind(ExperimentKind::VerifyL1)
        };
        let table = run_verify_l1(&spec).unwrap();
        let Rows::L1(rows) = &table.rows else { panic!() };
        assert_eq!(rows[0].exact, 5);
        assert!(rows[0].condition_holds);
    }

    #[test]
    fn oracle_backend_has_unit_ratios() {
        let spec = ExperimentSpec {
            trials: 40,
            backends: vec![Backend::Oracle, Backend::Omp],
            ..ExperimentSpec::for_kind(ExperimentKind::OracleCompare)
        };
        let table = run_oracle_compare(&spec).unwrap();
        let Rows::Oracle(rows) = &table.rows else { panic!() };
        for r in rows.iter().filter(|r| r.backend == Backend::Oracle) {
            assert_eq!(r.max_residual_ratio, 1.0);
            assert_eq!(r.min_energy_ratio, 1.0);
        }
        assert!(table.violations().is_empty(), "{:?}", table.violations());
    }

    #[test]
    fn failures_are_collected_for_replay() {
        let spec = ExperimentSpec {
            m_grid: vec![8],
            trials: 4,
            structures: vec![SignalStructure::Clustered],
            ..small_phase()
        };
        let table = run(&spec, &RunOptions { workers: Some(2), collect_failures: true }).unwrap();
        assert!(!table.failures.is_empty());
        let failure = &table.failures[0];
        let replayed = replay(&failure.instance, failure.backend, None).unwrap();
        assert_eq!(replayed.snr_db, failure.snr_db);
    }

    #[test]
    fn worker_env_is_parsed() {
        assert!(workers_from_env().unwrap() >= 1);
    }
}
