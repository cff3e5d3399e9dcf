//! Separation analysis: diagonal dominance of gram submatrices, dominance
//! factors over supports with a minimum cyclic separation, the Gershgorin
//! isometry bound, the OMP coefficient floor and the exact-recovery constant.
//!
//! Three ways of bounding the dominance factors are offered:
//!
//! * [`BoundMode::Envelope`] evaluates the closed-form csc envelope recipes
//!   (equally spaced worst case for `eta`, the neighbouring-column recipe for
//!   `eta'`).
//! * [`BoundMode::Exact`] uses the exact gram magnitudes through their
//!   nonincreasing majorant, which keeps the value a valid upper bound for
//!   every support with the requested separation.
//! * [`BoundMode::BruteForce`] enumerates every admissible support.

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::dictionary::{cyclic_distance_unchecked, Dictionary, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Default cap on `C(d, k)` for brute-force enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 2_000_000;

/// Eigenvalues below this are treated as a singular gram submatrix.
pub const SINGULAR_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    Exact,
    Envelope,
    #[serde(rename = "brute")]
    BruteForce,
}

impl BoundMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::Exact => "exact",
            BoundMode::Envelope => "envelope",
            BoundMode::BruteForce => "brute",
        }
    }
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-gram" => Ok(BoundMode::Exact),
            "envelope" => Ok(BoundMode::Envelope),
            "brute" | "brute-force" => Ok(BoundMode::BruteForce),
            other => Err(Error::Parse(format!("unknown bound mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationProfile {
    pub h_min: usize,
    pub k: usize,
    pub eta: f64,
    pub eta_prime: f64,
    pub mode: BoundMode,
    /// Bound on the restricted isometry constant; always equal to `eta`.
    pub delta_bound: f64,
    /// `eta' / (1 - eta)`, `+inf` when `eta >= 1`.
    pub b_ratio: f64,
    /// Whether `eta <= eta'` held for this evaluation.
    pub ordering_holds: bool,
}

impl SeparationProfile {
    fn new(h_min: usize, k: usize, eta: f64, eta_prime: f64, mode: BoundMode) -> Self {
        Self {
            h_min,
            k,
            eta,
            eta_prime,
            mode,
            delta_bound: eta,
            b_ratio: b_ratio(eta, eta_prime),
            ordering_holds: eta <= eta_prime,
        }
    }

    /// OMP recovery condition `B(h_min) < 1`.
    pub fn guarantees_omp(&self) -> bool {
        self.b_ratio < 1.0
    }

    pub fn guarantees_well_separated(&self) -> bool {
        self.eta < 1.0
    }
}

fn b_ratio(eta: f64, eta_prime: f64) -> f64 {
    if eta >= 1.0 {
        f64::INFINITY
    } else {
        eta_prime / (1.0 - eta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub support: SupportSet,
    /// `Delta_i = G_ii - sum_{j != i} |G_ij|` for each row of the gram submatrix.
    pub delta_per_row: Vec<f64>,
    pub well_separated: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub off_diag_max_row_sum: f64,
}

fn check_support(dict: &Dictionary, support: &SupportSet) -> Result<()> {
    if let Some(&last) = support.as_slice().last() {
        if last >= dict.d() {
            return Err(Error::OutOfRange { index: last, bound: dict.d() });
        }
    }
    Ok(())
}

/// `D_support^* D_support`.
pub fn gram_submatrix(dict: &Dictionary, support: &SupportSet) -> CMatrix {
    let cols = dict.columns(support.as_slice());
    cols.ad_mul(&cols)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(matrix: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Diagonal-dominance test of the gram submatrix on `support`.
pub fn well_separated(dict: &Dictionary, support: &SupportSet) -> Result<DominanceReport> {
    if support.is_empty() {
        return Err(Error::Config("support must be nonempty".into()));
    }
    check_support(dict, support)?;
    let gram = gram_submatrix(dict, support);
    let k = support.len();
    let mut delta_per_row = Vec::with_capacity(k);
    let mut max_row = 0.0f64;
    for i in 0..k {
        let off: f64 = (0..k).filter(|&j| j != i).map(|j| gram[(i, j)].norm()).sum();
        max_row = max_row.max(off);
        delta_per_row.push(gram[(i, i)].re - off);
    }
    let eigen = hermitian_eigenvalues(&gram);
    Ok(DominanceReport {
        support: support.clone(),
        well_separated: delta_per_row.iter().all(|&v| v > 0.0),
        delta_per_row,
        lambda_min: eigen[0],
        lambda_max: eigen[k - 1],
        off_diag_max_row_sum: max_row,
    })
}

fn check_feasible(dict: &Dictionary, h_min: usize, k: usize) -> Result<()> {
    if k == 0 || h_min == 0 {
        return Err(Error::Config(format!("need k >= 1 and h_min >= 1 (k = {k}, h_min = {h_min})")));
    }
    if h_min.saturating_mul(k) > dict.d() && k > 1 {
        return Err(Error::InfeasibleSeparation { h_min, k, d: dict.d() });
    }
    Ok(())
}

/// `eta_{h_min,k}` and `eta'_{h_min,k}` under the requested mode.
pub fn eta_bound(dict: &Dictionary, h_min: usize, k: usize, mode: BoundMode) -> Result<SeparationProfile> {
    eta_bound_with_cap(dict, h_min, k, mode, DEFAULT_ENUMERATION_CAP)
}

pub fn eta_bound_with_cap(
    dict: &Dictionary,
    h_min: usize,
    k: usize,
    mode: BoundMode,
    cap: u64,
) -> Result<SeparationProfile> {
    check_feasible(dict, h_min, k)?;
    let (eta, eta_prime) = match mode {
        BoundMode::Envelope => (envelope_eta(dict, h_min, k), envelope_eta_prime(dict, h_min, k)),
        BoundMode::Exact => (majorant_eta(dict, h_min, k), majorant_eta_prime(dict, h_min, k)),
        BoundMode::BruteForce => brute_force_etas(dict, h_min, k, cap)?,
    };
    Ok(SeparationProfile::new(h_min, k, eta, eta_prime, mode))
}

pub fn eta_prime_bound(dict: &Dictionary, h_min: usize, k: usize, mode: BoundMode) -> Result<f64> {
    Ok(eta_bound(dict, h_min, k, mode)?.eta_prime)
}

/// Restricted isometry bound `delta_k <= eta_{h_min,k}` for supports with
/// separation at least `h_min`.
pub fn rip_bound(dict: &Dictionary, h_min: usize, k: usize, mode: BoundMode) -> Result<SeparationProfile> {
    eta_bound(dict, h_min, k, mode)
}

/// `2 * sum_{j=1}^{ceil((k-1)/2)} f(j h_min)`.
fn envelope_eta(dict: &Dictionary, h_min: usize, k: usize) -> f64 {
    let terms = k / 2; // ceil((k - 1) / 2)
    2.0 * (1..=terms).map(|j| dict.envelope_unchecked(j * h_min)).sum::<f64>()
}

/// `f(1) + sum_{j=1}^{r} f(j h + 1) + f(j h - 1)` with `r = floor((k + 1) / 2)`.
fn envelope_eta_prime(dict: &Dictionary, h_min: usize, k: usize) -> f64 {
    let r = k.div_ceil(2);
    let tail: f64 = (1..=r)
        .map(|j| dict.envelope_unchecked(j * h_min + 1) + dict.envelope_unchecked(j * h_min - 1))
        .sum();
    dict.envelope_unchecked(1) + tail
}

/// With pairwise separation `h`, at most `2j - 2` other atoms lie within
/// cyclic distance `j h` of a support atom, so the `i`-th nearest neighbour is
/// at least `ceil(i / 2) h` away.
fn majorant_eta(dict: &Dictionary, h_min: usize, k: usize) -> f64 {
    (1..k).map(|i| dict.gram_majorant(i.div_ceil(2) * h_min)).sum()
}

/// For an outside column the nearest support atoms on either side sit at
/// offsets `a, b >= 1` with `a + b >= h_min`; further atoms on each side are
/// at least `h_min` apart. Maximize over `a` and over how many atoms fall on
/// each side.
fn majorant_eta_prime(dict: &Dictionary, h_min: usize, k: usize) -> f64 {
    let span = h_min.max(2);
    let side = |start: usize, count: usize| -> f64 {
        (0..count).map(|i| dict.gram_majorant(start + i * h_min)).sum()
    };
    let mut best = 0.0f64;
    for a in 1..span {
        let b = (span - a).max(1);
        for right in 0..=k {
            best = best.max(side(a, right) + side(b, k - right));
        }
    }
    best
}

/// `C(d, k)` saturating in `u128`.
pub fn binomial(d: usize, k: usize) -> u128 {
    if k > d {
        return 0;
    }
    let k = k.min(d - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((d - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Calls `visit` on every size-`k` support whose minimum pairwise cyclic
/// distance is at least `h_min`, in lexicographic order.
pub fn for_each_separated_support<F: FnMut(&[usize])>(d: usize, k: usize, h_min: usize, mut visit: F) {
    fn recurse<F: FnMut(&[usize])>(d: usize, k: usize, h: usize, current: &mut Vec<usize>, visit: &mut F) {
        if current.len() == k {
            visit(current);
            return;
        }
        let start = match current.last() {
            Some(&last) => last + h.max(1),
            None => 0,
        };
        for next in start..d {
            if let Some(&first) = current.first() {
                // wrap-around distance to the first atom
                if cyclic_distance_unchecked(first, next, d) < h {
                    continue;
                }
            }
            current.push(next);
            recurse(d, k, h, current, visit);
            current.pop();
        }
    }
    if k == 0 || k > d {
        return;
    }
    let mut current = Vec::with_capacity(k);
    recurse(d, k, h_min, &mut current, &mut visit);
}

fn brute_force_etas(dict: &Dictionary, h_min: usize, k: usize, cap: u64) -> Result<(f64, f64)> {
    let d = dict.d();
    let count = binomial(d, k);
    if count > cap as u128 {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let mut eta = 0.0f64;
    let mut eta_prime = 0.0f64;
    let mut any = false;
    for_each_separated_support(d, k, h_min, |support| {
        any = true;
        for &p in support {
            let row: f64 = support.iter().filter(|&&q| q != p).map(|&q| dict.gram_between(p, q)).sum();
            eta = eta.max(row);
        }
        for p in (0..d).filter(|p| !support.contains(p)) {
            let row: f64 = support.iter().map(|&q| dict.gram_between(p, q)).sum();
            eta_prime = eta_prime.max(row);
        }
    });
    if !any {
        return Err(Error::InfeasibleSeparation { h_min, k, d });
    }
    Ok((eta, eta_prime))
}

/// Coefficient floor for exact OMP support recovery under noise `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmpThreshold {
    /// `2 epsilon / (1 - eta - eta')`.
    pub threshold: f64,
    pub b_ratio: f64,
    pub hypothesis_holds: bool,
}

pub fn omp_threshold(eta: f64, eta_prime: f64, epsilon: f64) -> Result<OmpThreshold> {
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("noise bound must be nonnegative, got {epsilon}")));
    }
    let slack = 1.0 - eta - eta_prime;
    if !(slack > 0.0) {
        return Err(Error::HypothesisViolated { sum: eta + eta_prime });
    }
    let b = b_ratio(eta, eta_prime);
    Ok(OmpThreshold {
        threshold: 2.0 * epsilon / slack,
        b_ratio: b,
        hypothesis_holds: b < 1.0,
    })
}

/// `M = max_{i not in support} || D_support^+ phi_i ||_1`.
pub fn erc_constant(dict: &Dictionary, support: &SupportSet) -> Result<f64> {
    if support.is_empty() {
        return Ok(0.0);
    }
    check_support(dict, support)?;
    let gram = gram_submatrix(dict, support);
    let lambda_min = hermitian_eigenvalues(&gram)[0];
    if lambda_min <= SINGULAR_EIGENVALUE {
        return Err(Error::SingularSubmatrix { lambda_min });
    }
    let chol = gram.cholesky().ok_or(Error::SingularSubmatrix { lambda_min })?;
    // rows of D^* D restricted to the support: entry (a, i) = <phi_{s_a}, phi_i>
    let cols = dict.columns(support.as_slice());
    let cross = cols.ad_mul(dict.atoms());
    let coeffs = chol.solve(&cross);
    let mut best = 0.0f64;
    for i in (0..dict.d()).filter(|&i| !support.contains(i)) {
        let l1: f64 = coeffs.column(i).iter().map(|z: &C64| z.norm()).sum();
        best = best.max(l1);
    }
    Ok(best)
}
