//! Measurement ensembles, structured sparse signals, bounded noise and
//! recovery metrics.
//!
//! Every generator is a pure function of its seed. Trial-level seeds are
//! derived from a master seed with [`trial_seed`], and each random component
//! of a trial draws from its own stream via [`component_seed`], so trials can
//! run in any order on any number of workers.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{real_times_complex, CVector, RMatrix, C64};

/// Perfect-recovery threshold in decibels.
pub const PERFECT_SNR_DB: f64 = 100.0;

/// Noise is scaled to `epsilon * NOISE_SHRINK` so that `||e|| < epsilon`.
pub const NOISE_SHRINK: f64 = 1.0 - 1e-9;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Matrix,
    Signal,
    Noise,
}

/// Independent sub-seed for one random component of a trial.
pub fn component_seed(trial: u64, component: Component) -> u64 {
    let tag = match component {
        Component::Matrix => 0x4d41_5452,
        Component::Signal => 0x5349_474e,
        Component::Noise => 0x4e4f_4953,
    };
    splitmix64(trial ^ splitmix64(tag))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m x n` matrix with i.i.d. `N(0, 1/m)` entries.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<RMatrix> {
    if m == 0 || m > n {
        return Err(Error::Dimension(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let mut rng = rng(seed);
    let scale = 1.0 / (m as f64).sqrt();
    Ok(RMatrix::from_fn(m, n, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        z * scale
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Gaussian,
    Identity,
}

pub fn measurement_matrix(kind: MeasurementKind, m: usize, n: usize, seed: u64) -> Result<RMatrix> {
    match kind {
        MeasurementKind::Gaussian => gaussian_matrix(m, n, seed),
        MeasurementKind::Identity if m == n => Ok(RMatrix::identity(n, n)),
        MeasurementKind::Identity => Err(Error::Dimension(format!("identity measurements need m = n, got m = {m}, n = {n}"))),
    }
}

/// How nonzero coefficient values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum CoefficientModel {
    /// Fixed magnitude, uniform random phase.
    Phase { magnitude: f64 },
    /// Standard complex Gaussian, `E|a|^2 = 1`.
    Gaussian,
}

impl Default for CoefficientModel {
    fn default() -> Self {
        CoefficientModel::Phase { magnitude: 1.0 }
    }
}

impl CoefficientModel {
    fn draw(&self, rng: &mut ChaCha8Rng) -> C64 {
        match *self {
            CoefficientModel::Phase { magnitude } => {
                let phase = rng.random::<f64>() * 2.0 * PI;
                C64::from_polar(magnitude, phase)
            }
            CoefficientModel::Gaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }
}

/// Serialized as `clustered` or `separated:<h_min>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SignalStructure {
    /// `k` cyclically consecutive atoms.
    Clustered,
    /// Minimum pairwise cyclic separation of at least `h_min`.
    Separated { h_min: usize },
}

impl SignalStructure {
    pub fn name(&self) -> &'static str {
        match self {
            SignalStructure::Clustered => "clustered",
            SignalStructure::Separated { .. } => "separated",
        }
    }

    pub fn h_min(&self) -> Option<usize> {
        match *self {
            SignalStructure::Clustered => None,
            SignalStructure::Separated { h_min } => Some(h_min),
        }
    }
}

impl fmt::Display for SignalStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalStructure::Clustered => f.write_str("clustered"),
            SignalStructure::Separated { h_min } => write!(f, "separated:{h_min}"),
        }
    }
}

impl From<SignalStructure> for String {
    fn from(structure: SignalStructure) -> String {
        structure.to_string()
    }
}

impl TryFrom<String> for SignalStructure {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for SignalStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "clustered" => Ok(SignalStructure::Clustered),
            Some(("separated", h)) => h
                .parse()
                .map(|h_min| SignalStructure::Separated { h_min })
                .map_err(|_| Error::Parse(format!("bad separation in `{s}`"))),
            _ => Err(Error::Parse(format!("unknown signal structure `{s}`"))),
        }
    }
}

/// Coefficient vector over all `d` atoms together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRepresentation {
    pub coefficients: CVector,
    pub support: SupportSet,
}

impl SparseRepresentation {
    pub fn new(coefficients: CVector, support: SupportSet) -> Result<Self> {
        if coefficients.len() != support.modulus() {
            return Err(Error::Dimension("coefficient length must equal d".into()));
        }
        let stray = coefficients
            .iter()
            .enumerate()
            .any(|(i, z)| !support.contains(i) && z.norm() != 0.0);
        if stray {
            return Err(Error::Config("coefficients must vanish off the support".into()));
        }
        Ok(Self { coefficients, support })
    }

    fn from_support(support: SupportSet, model: CoefficientModel, rng: &mut ChaCha8Rng) -> Self {
        let mut coefficients = CVector::zeros(support.modulus());
        for &i in support.iter() {
            coefficients[i] = model.draw(rng);
        }
        Self { coefficients, support }
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn synthesize(&self, dict: &Dictionary) -> CVector {
        let values = CVector::from_iterator(self.k(), self.support.iter().map(|&i| self.coefficients[i]));
        dict.synthesize_on(&self.support, &values)
    }

    pub fn min_magnitude(&self) -> f64 {
        self.support.iter().map(|&i| self.coefficients[i].norm()).fold(f64::INFINITY, f64::min)
    }
}

/// `k` consecutive atoms (cyclically) from a uniform random start.
pub fn gen_clustered(dict: &Dictionary, k: usize, model: CoefficientModel, seed: u64) -> Result<SparseRepresentation> {
    let d = dict.d();
    if k == 0 || k > d {
        return Err(Error::Config(format!("need 1 <= k <= d, got k = {k}")));
    }
    let mut rng = rng(seed);
    let start = rng.random_range(0..d);
    let support = SupportSet::new((0..k).map(|i| (start + i) % d).collect(), d)?;
    Ok(SparseRepresentation::from_support(support, model, &mut rng))
}

/// Equally spaced atoms from a random start, each jittered by at most
/// `(floor(d / k) - h_min) / 2` so the minimum cyclic separation stays at
/// least `h_min`.
pub fn gen_separated(
    dict: &Dictionary,
    k: usize,
    h_min: usize,
    model: CoefficientModel,
    seed: u64,
) -> Result<SparseRepresentation> {
    let d = dict.d();
    if k == 0 || k > d {
        return Err(Error::Config(format!("need 1 <= k <= d, got k = {k}")));
    }
    if k > 1 && k.saturating_mul(h_min) > d {
        return Err(Error::InfeasibleSeparation { h_min, k, d });
    }
    let mut rng = rng(seed);
    let start = rng.random_range(0..d);
    let spacing = d / k;
    let jitter = if k == 1 { d / 2 } else { (spacing - h_min.min(spacing)) / 2 };
    let indices: Vec<usize> = (0..k)
        .map(|i| {
            let offset = (i * d) / k;
            let shift = rng.random_range(0..=2 * jitter);
            (start + offset + d + shift - jitter) % d
        })
        .collect();
    let support = SupportSet::new(indices, d)?;
    if k > 1 && support.min_separation().unwrap_or(0) < h_min {
        return Err(Error::InfeasibleSeparation { h_min, k, d });
    }
    Ok(SparseRepresentation::from_support(support, model, &mut rng))
}

/// `20 log10(||x|| / ||x - x_hat||)`, `+inf` for an exact match.
pub fn snr_db(x: &CVector, x_hat: &CVector) -> Result<f64> {
    let signal = x.norm();
    if signal == 0.0 {
        return Err(Error::ZeroSignal);
    }
    if x.len() != x_hat.len() {
        return Err(Error::Dimension("signal and estimate lengths differ".into()));
    }
    let error = (x - x_hat).norm();
    if error == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (signal / error).log10())
}

/// Random complex Gaussian direction of length `len`, scaled to norm
/// `epsilon * (1 - 1e-9)`.
pub fn add_noise(len: usize, epsilon: f64, seed: u64) -> Result<CVector> {
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("noise bound must be nonnegative, got {epsilon}")));
    }
    if epsilon == 0.0 || len == 0 {
        return Ok(CVector::zeros(len));
    }
    let mut rng = rng(seed);
    let raw = CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let norm = raw.norm();
    Ok(raw * C64::new(epsilon * NOISE_SHRINK / norm, 0.0))
}

#[derive(Debug, Clone)]
pub struct SensingInstance {
    pub a: RMatrix,
    pub measurement: MeasurementKind,
    pub alpha: SparseRepresentation,
    pub structure: SignalStructure,
    pub x_true: CVector,
    pub noise: CVector,
    pub y: CVector,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub m: usize,
    pub k: usize,
    pub structure: SignalStructure,
    pub coefficients: CoefficientModel,
    pub measurement: MeasurementKind,
    pub epsilon: f64,
}

impl SensingInstance {
    pub fn generate(dict: &Dictionary, params: &InstanceParams, seed: u64) -> Result<Self> {
        let a = measurement_matrix(params.measurement, params.m, dict.n(), component_seed(seed, Component::Matrix))?;
        let signal_seed = component_seed(seed, Component::Signal);
        let alpha = match params.structure {
            SignalStructure::Clustered => gen_clustered(dict, params.k, params.coefficients, signal_seed)?,
            SignalStructure::Separated { h_min } => {
                gen_separated(dict, params.k, h_min, params.coefficients, signal_seed)?
            }
        };
        let noise = add_noise(params.m, params.epsilon, component_seed(seed, Component::Noise))?;
        Self::assemble(dict, a, params.measurement, alpha, params.structure, noise, params.epsilon, seed)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        dict: &Dictionary,
        a: RMatrix,
        measurement: MeasurementKind,
        alpha: SparseRepresentation,
        structure: SignalStructure,
        noise: CVector,
        epsilon: f64,
        seed: u64,
    ) -> Result<Self> {
        if a.ncols() != dict.n() || noise.len() != a.nrows() || alpha.coefficients.len() != dict.d() {
            return Err(Error::Dimension("instance components disagree on dimensions".into()));
        }
        let x_true = alpha.synthesize(dict);
        let y = real_times_complex(&a, &x_true) + &noise;
        let instance = Self { a, measurement, alpha, structure, x_true, noise, y, epsilon, seed };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise.norm() > self.epsilon + 1e-12 {
            return Err(Error::Config(format!(
                "noise norm {} exceeds epsilon {}",
                self.noise.norm(),
                self.epsilon
            )));
        }
        let expected = real_times_complex(&self.a, &self.x_true) + &self.noise;
        if (&expected - &self.y).norm() > 1e-12 * (1.0 + self.y.norm()) {
            return Err(Error::Config("y is inconsistent with A x + e".into()));
        }
        match self.structure {
            SignalStructure::Separated { h_min } => {
                if self.alpha.support.min_separation().is_some_and(|sep| sep < h_min) {
                    return Err(Error::Config(format!("support separation below {h_min}")));
                }
            }
            SignalStructure::Clustered => {
                let d = self.alpha.support.modulus();
                let k = self.alpha.k();
                // consecutive means exactly one cyclic gap larger than one
                let s = self.alpha.support.as_slice();
                let big_gaps = (0..k).filter(|&i| (s[(i + 1) % k] + d - s[i]) % d > 1).count();
                if k > 1 && k < d && big_gaps != 1 {
                    return Err(Error::Config("clustered support is not consecutive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }
}

/// Outcome of one recovery trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub snr_db: f64,
    pub perfect: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub support_recovered: Option<bool>,
    pub wall_time: Duration,
}

impl RecoveryReport {
    pub fn is_perfect(snr_db: f64) -> bool {
        snr_db > PERFECT_SNR_DB
    }
}

/// JSON-serializable form of a [`SensingInstance`]; the measurement matrix is
/// regenerated from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub structure: SignalStructure,
    pub measurement: MeasurementKind,
    pub epsilon: f64,
    /// Trial seed; the matrix uses `component_seed(seed, Matrix)`.
    pub seed: u64,
    pub support: Vec<usize>,
    /// Nonzero coefficients as `[re, im]`, in support order.
    pub coefficients: Vec<[f64; 2]>,
    pub noise: Vec<[f64; 2]>,
}

impl InstanceRecord {
    pub fn from_instance(dict: &Dictionary, instance: &SensingInstance) -> Self {
        let pair = |z: &C64| [z.re, z.im];
        Self {
            n: dict.n(),
            d: dict.d(),
            m: instance.m(),
            k: instance.alpha.k(),
            structure: instance.structure,
            measurement: instance.measurement,
            epsilon: instance.epsilon,
            seed: instance.seed,
            support: instance.alpha.support.as_slice().to_vec(),
            coefficients: instance.alpha.support.iter().map(|&i| pair(&instance.alpha.coefficients[i])).collect(),
            noise: instance.noise.iter().map(pair).collect(),
        }
    }

    pub fn to_instance(&self, dict: &Dictionary) -> Result<SensingInstance> {
        if dict.n() != self.n || dict.d() != self.d {
            return Err(Error::Dimension("record dimensions do not match the dictionary".into()));
        }
        if self.support.len() != self.coefficients.len() || self.noise.len() != self.m {
            return Err(Error::Parse("record lengths are inconsistent".into()));
        }
        let a = measurement_matrix(self.measurement, self.m, self.n, component_seed(self.seed, Component::Matrix))?;
        let support = SupportSet::new(self.support.clone(), self.d)?;
        let mut coefficients = CVector::zeros(self.d);
        for (&i, &[re, im]) in self.support.iter().zip(&self.coefficients) {
            coefficients[i] = C64::new(re, im);
        }
        let alpha = SparseRepresentation::new(coefficients, support)?;
        let noise = CVector::from_iterator(self.m, self.noise.iter().map(|&[re, im]| C64::new(re, im)));
        SensingInstance::assemble(dict, a, self.measurement, alpha, self.structure, noise, self.epsilon, self.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
