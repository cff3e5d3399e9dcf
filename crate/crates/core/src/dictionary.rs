//! The `n x d` overcomplete DFT dictionary.
//!
//! Entry `(j, k)` is `exp(-2 pi i j k / d) / sqrt(n)`, so every atom has unit
//! norm and the gram matrix `D^* D` is circulant: `|(D^* D)_{p,q}|` only
//! depends on the cyclic offset `q - p mod d`. Products with `D` and `D^*`
//! go through a length-`d` FFT; the dense matrix is kept for column
//! extraction and as a reference path.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// Below this value of `sin(pi h / d)` two atoms are treated as identical.
const SIN_GUARD: f64 = 1e-15;

#[derive(Clone)]
pub struct Dictionary {
    n: usize,
    d: usize,
    atoms: CMatrix,
    gram_profile: Vec<f64>,
    gram_majorant: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dictionary")
            .field("n", &self.n)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

impl Dictionary {
    pub fn build(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Dimension(format!("n = {n} and d = {d} must be positive")));
        }
        if d < n {
            return Err(Error::Dimension(format!("d = {d} must be at least n = {n}")));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let atoms = CMatrix::from_fn(n, d, |j, k| {
            // reduce jk mod d first so the phase stays accurate for large products
            let phase = -2.0 * PI * ((j * k) % d) as f64 / d as f64;
            C64::from_polar(scale, phase)
        });
        // computed on 0..=d/2 and mirrored so g(h) == g(d - h) bit for bit
        let gram_profile: Vec<f64> = (0..d).map(|h| closed_form_gram(n, d, h.min(d - h))).collect();

        // nonincreasing majorant over cyclic distances 0..=d/2
        let half = d / 2;
        let mut gram_majorant = vec![0.0; half + 1];
        let mut running = 0.0f64;
        for h in (0..=half).rev() {
            running = running.max(gram_profile[h]);
            gram_majorant[h] = running;
        }

        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            d,
            atoms,
            gram_profile,
            gram_majorant,
            forward: planner.plan_fft_forward(d),
            inverse: planner.plan_fft_inverse(d),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Low-pass band edge `n / 2` of the frequencies the dictionary observes.
    pub fn f_lo(&self) -> f64 {
        self.n as f64 / 2.0
    }

    pub fn atoms(&self) -> &CMatrix {
        &self.atoms
    }

    pub fn column(&self, k: usize) -> CVector {
        self.atoms.column(k).into_owned()
    }

    /// Dense `n x |indices|` submatrix `D_indices`.
    pub fn columns(&self, indices: &[usize]) -> CMatrix {
        self.atoms.select_columns(indices)
    }

    /// `|(D^* D)_{p, p+h}|`.
    pub fn gram_magnitude(&self, h: usize) -> Result<f64> {
        if h >= self.d {
            return Err(Error::OutOfRange { index: h, bound: self.d });
        }
        Ok(self.gram_profile[h])
    }

    /// Gram magnitude between two atoms, by cyclic offset.
    pub fn gram_between(&self, p: usize, q: usize) -> f64 {
        self.gram_profile[(q + self.d - p % self.d) % self.d]
    }

    pub fn gram_profile(&self) -> &[f64] {
        &self.gram_profile
    }

    /// `max_{h <= h' <= d/2} |(D^* D)_{0,h'}|`, the smallest nonincreasing
    /// function of cyclic distance that dominates the gram magnitudes.
    /// Zero past `d / 2`, where no cyclic distance lives.
    pub fn gram_majorant(&self, h: usize) -> f64 {
        self.gram_majorant.get(h).copied().unwrap_or(0.0)
    }

    /// `1 / (n sin(pi h / d))`, the csc envelope of the gram magnitudes.
    pub fn coherence_envelope(&self, h: usize) -> Result<f64> {
        if h == 0 || h >= self.d {
            return Err(Error::OutOfRange { index: h, bound: self.d });
        }
        Ok(envelope(self.n, self.d, h as f64))
    }

    /// Envelope evaluated at an arbitrary offset; `+inf` at multiples of `d`.
    pub fn envelope_unchecked(&self, h: usize) -> f64 {
        envelope(self.n, self.d, h as f64)
    }

    /// `(D^* D)_{p,q}` as a complex number.
    pub fn gram_entry(&self, p: usize, q: usize) -> C64 {
        self.atoms.column(p).dotc(&self.atoms.column(q))
    }

    /// `D alpha` through the FFT.
    pub fn synthesize(&self, alpha: &CVector) -> CVector {
        assert_eq!(alpha.len(), self.d, "coefficient length must equal d");
        let mut buf: Vec<C64> = alpha.iter().copied().collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / (self.n as f64).sqrt();
        CVector::from_fn(self.n, |j, _| buf[j] * scale)
    }

    /// `D^* w` through the FFT.
    pub fn analyze(&self, w: &CVector) -> CVector {
        assert_eq!(w.len(), self.n, "signal length must equal n");
        let mut buf = vec![C64::new(0.0, 0.0); self.d];
        buf[..self.n].copy_from_slice(w.as_slice());
        self.inverse.process(&mut buf);
        let scale = 1.0 / (self.n as f64).sqrt();
        CVector::from_iterator(self.d, buf.into_iter().map(|z| z * scale))
    }

    /// Dense reference for [`Dictionary::synthesize`].
    pub fn synthesize_dense(&self, alpha: &CVector) -> CVector {
        &self.atoms * alpha
    }

    /// Dense reference for [`Dictionary::analyze`].
    pub fn analyze_dense(&self, w: &CVector) -> CVector {
        self.atoms.ad_mul(w)
    }

    /// `D_support beta` for coefficients listed in support order.
    pub fn synthesize_on(&self, support: &SupportSet, beta: &CVector) -> CVector {
        assert_eq!(support.len(), beta.len());
        let mut out = CVector::zeros(self.n);
        for (&k, &b) in support.iter().zip(beta.iter()) {
            out.axpy(b, &self.atoms.column(k), C64::new(1.0, 0.0));
        }
        out
    }
}

fn closed_form_gram(n: usize, d: usize, h: usize) -> f64 {
    let h = h % d;
    if h == 0 {
        return 1.0;
    }
    // nh/d integer: the geometric series sums to exactly zero
    if (n * h).is_multiple_of(d) {
        return 0.0;
    }
    let denom = (PI * h as f64 / d as f64).sin().abs();
    if denom < SIN_GUARD {
        return 1.0;
    }
    let num = (PI * ((n * h) % (2 * d)) as f64 / d as f64).sin().abs();
    num / (n as f64 * denom)
}

fn envelope(n: usize, d: usize, h: f64) -> f64 {
    let s = (PI * h / d as f64).sin().abs();
    if s < SIN_GUARD {
        f64::INFINITY
    } else {
        1.0 / (n as f64 * s)
    }
}

/// `min(|p - q|, d - |p - q|)`.
pub fn cyclic_distance(p: usize, q: usize, d: usize) -> Result<usize> {
    if p >= d {
        return Err(Error::OutOfRange { index: p, bound: d });
    }
    if q >= d {
        return Err(Error::OutOfRange { index: q, bound: d });
    }
    Ok(cyclic_distance_unchecked(p, q, d))
}

pub(crate) fn cyclic_distance_unchecked(p: usize, q: usize, d: usize) -> usize {
    let diff = p.abs_diff(q);
    diff.min(d - diff)
}

/// Sorted set of distinct atom indices in `[0, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
    d: usize,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, d: usize) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex(w[0]));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= d {
                return Err(Error::OutOfRange { index: last, bound: d });
            }
        }
        Ok(Self { indices, d })
    }

    pub fn empty(d: usize) -> Self {
        Self { indices: Vec::new(), d }
    }

    pub fn modulus(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.indices.iter()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut merged = self.indices.clone();
        merged.extend_from_slice(&other.indices);
        merged.sort_unstable();
        merged.dedup();
        SupportSet { indices: merged, d: self.d.max(other.d) }
    }

    /// Smallest pairwise cyclic distance, `None` for fewer than two atoms.
    pub fn min_separation(&self) -> Option<usize> {
        let k = self.indices.len();
        if k < 2 {
            return None;
        }
        // sorted indices: only neighbours (and the wrap-around pair) matter
        let mut best = usize::MAX;
        for i in 0..k {
            let p = self.indices[i];
            let q = self.indices[(i + 1) % k];
            best = best.min(cyclic_distance_unchecked(p, q, self.d));
        }
        Some(best)
    }
}

impl<'a> IntoIterator for &'a SupportSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct summation of `sum_{j<n} w^{jh}` (independent of the closed form).
    fn geometric_series_oracle(n: usize, d: usize, h: usize) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            acc += C64::from_polar(1.0, -2.0 * PI * (j * h) as f64 / d as f64);
        }
        acc.norm() / n as f64
    }

    #[test]
    fn build_rejects_bad_dimensions() {
        assert!(Dictionary::build(0, 4).is_err());
        assert!(Dictionary::build(4, 0).is_err());
        assert!(Dictionary::build(8, 4).is_err());
    }

    #[test]
    fn orthonormal_case_has_identity_gram() {
        let dict = Dictionary::build(4, 4).unwrap();
        let gram = dict.atoms().ad_mul(dict.atoms());
        for p in 0..4 {
            for q in 0..4 {
                let expected = if p == q { 1.0 } else { 0.0 };
                assert!((gram[(p, q)] - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn four_times_overcomplete_columns_are_unit_norm() {
        let dict = Dictionary::build(256, 1024).unwrap();
        for k in 0..dict.d() {
            assert!((dict.atoms().column(k).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entries_follow_the_definition() {
        let dict = Dictionary::build(8, 16).unwrap();
        let first = dict.column(0);
        for z in first.iter() {
            assert!((z - C64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-15);
        }
        for j in 0..8 {
            for k in 0..16 {
                let expected = C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / 16.0) / 8f64.sqrt();
                assert!((dict.atoms()[(j, k)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gram_magnitude_examples() {
        let dict = Dictionary::build(256, 1024).unwrap();
        assert_eq!(dict.gram_magnitude(0).unwrap(), 1.0);
        assert_eq!(dict.gram_magnitude(4).unwrap(), 0.0);
        // frozen from the geometric-series oracle
        assert!((dict.gram_magnitude(2).unwrap() - 0.636_623_767_126_763_3).abs() < 1e-12);
        assert!((dict.gram_magnitude(1).unwrap() - 0.900_317_728_513_106_7).abs() < 1e-12);
        assert!((geometric_series_oracle(256, 1024, 2) - 0.636_623_767_126_763_3).abs() < 1e-12);
        assert!(dict.gram_magnitude(1024).is_err());
    }

    #[test]
    fn gram_magnitude_matches_oracle_and_dense_entries() {
        for &(n, d) in &[(8, 16), (8, 12), (5, 13), (16, 64)] {
            let dict = Dictionary::build(n, d).unwrap();
            for h in 0..d {
                let g = dict.gram_magnitude(h).unwrap();
                assert!((g - geometric_series_oracle(n, d, h)).abs() < 1e-12, "n={n} d={d} h={h}");
                assert!((g - dict.gram_entry(3 % d, (3 + h) % d).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn envelope_examples() {
        let dict = Dictionary::build(256, 1024).unwrap();
        assert!((dict.coherence_envelope(512).unwrap() - 1.0 / 256.0).abs() < 1e-15);
        assert!((dict.coherence_envelope(2).unwrap() - 0.636_623_767_126_763_3).abs() < 1e-9);
        let f1 = dict.coherence_envelope(1).unwrap();
        assert!((f1 - 1.273_241_542_108_173_5).abs() < 1e-12);
        assert!(f1 > dict.gram_magnitude(1).unwrap());
        assert!(dict.coherence_envelope(0).is_err());
    }

    #[test]
    fn gram_properties_hold() {
        for &(n, d) in &[(8, 16), (7, 16), (256, 1024), (10, 10), (6, 9)] {
            let dict = Dictionary::build(n, d).unwrap();
            for h in 1..d {
                let g = dict.gram_magnitude(h).unwrap();
                assert!(g <= dict.coherence_envelope(h).unwrap() + 1e-12);
                assert!((g - dict.gram_magnitude(d - h).unwrap()).abs() < 1e-12);
                if n == d {
                    assert!(g.abs() < 1e-12);
                }
                if d % n == 0 {
                    let zero = h % (d / n) == 0;
                    assert_eq!(g == 0.0, zero, "n={n} d={d} h={h}");
                }
                let dist = cyclic_distance(0, h, d).unwrap();
                assert!(dict.gram_majorant(dist) >= g);
            }
        }
    }

    #[test]
    fn fft_paths_match_dense() {
        let dict = Dictionary::build(24, 80).unwrap();
        let alpha = CVector::from_fn(80, |i, _| C64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()));
        let w = CVector::from_fn(24, |i, _| C64::new((i as f64).cos(), 0.5 - i as f64 / 24.0));
        assert!((dict.synthesize(&alpha) - dict.synthesize_dense(&alpha)).norm() < 1e-10);
        assert!((dict.analyze(&w) - dict.analyze_dense(&w)).norm() < 1e-10);
    }

    #[test]
    fn cyclic_distance_examples() {
        assert_eq!(cyclic_distance(0, 1023, 1024).unwrap(), 1);
        assert_eq!(cyclic_distance(5, 5, 1024).unwrap(), 0);
        assert_eq!(cyclic_distance(10, 200, 1024).unwrap(), 190);
        assert!(cyclic_distance(1024, 0, 1024).is_err());
    }

    #[test]
    fn support_set_validation_and_separation() {
        assert!(SupportSet::new(vec![3, 3], 8).is_err());
        assert!(SupportSet::new(vec![8], 8).is_err());
        let s = SupportSet::new(vec![15, 0, 7], 16).unwrap();
        assert_eq!(s.as_slice(), &[0, 7, 15]);
        assert_eq!(s.min_separation(), Some(1));
        assert_eq!(SupportSet::new(vec![2], 16).unwrap().min_separation(), None);
        let u = s.union(&SupportSet::new(vec![7, 9], 16).unwrap());
        assert_eq!(u.as_slice(), &[0, 7, 9, 15]);
    }
}
