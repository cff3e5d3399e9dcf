//! Dense complex helpers shared by the projection and recovery code.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

/// Singular values below `RANK_CUTOFF * sigma_max` are discarded, which turns
/// the least-squares solve into the minimum-norm solution once the condition
/// number exceeds 1e12.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: CVector,
    pub fitted: CVector,
    pub rank: usize,
    pub condition: f64,
}

/// Minimum-norm least squares for `min ||rhs - matrix * beta||`.
pub fn least_squares(matrix: &CMatrix, rhs: &CVector) -> LeastSquares {
    let (rows, cols) = matrix.shape();
    if cols == 0 || rows == 0 {
        return LeastSquares {
            coefficients: CVector::zeros(cols),
            fitted: CVector::zeros(rows),
            rank: 0,
            condition: 1.0,
        };
    }
    let svd = matrix.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    let sigma_min = sigma.min();
    let condition = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    let cutoff = sigma_max * RANK_CUTOFF;

    let mut coefficients = CVector::zeros(cols);
    let mut fitted = CVector::zeros(rows);
    let mut rank = 0;
    if sigma_max > 0.0 {
        for (j, &s) in sigma.iter().enumerate() {
            if s <= cutoff {
                continue;
            }
            rank += 1;
            let u_j = u.column(j);
            let c = u_j.dotc(rhs);
            fitted.axpy(c, &u_j, C64::new(1.0, 0.0));
            let scale = c / s;
            // row j of v_t is v_j^*, so v_j = conj(row j)
            for (i, coef) in coefficients.iter_mut().enumerate() {
                *coef += scale * v_t[(j, i)].conj();
            }
        }
    }
    LeastSquares {
        coefficients,
        fitted,
        rank,
        condition,
    }
}

pub fn norm(v: &CVector) -> f64 {
    v.norm()
}

/// `a * x` for real `a` and complex `x`, applied to the real and imaginary
/// parts separately.
pub fn real_times_complex(a: &RMatrix, x: &CVector) -> CVector {
    assert_eq!(a.ncols(), x.len());
    let re = a * x.map(|z| z.re);
    let im = a * x.map(|z| z.im);
    CVector::from_fn(a.nrows(), |i, _| C64::new(re[i], im[i]))
}

/// `a^T * r` for real `a` and complex `r`.
pub fn real_transpose_times_complex(a: &RMatrix, r: &CVector) -> CVector {
    assert_eq!(a.nrows(), r.len());
    let re = a.tr_mul(&r.map(|z| z.re));
    let im = a.tr_mul(&r.map(|z| z.im));
    CVector::from_fn(a.ncols(), |i, _| C64::new(re[i], im[i]))
}

/// `a * b` for real `a` and complex `b`.
pub fn real_times_complex_matrix(a: &RMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows());
    let re = a * b.map(|z| z.re);
    let im = a * b.map(|z| z.im);
    CMatrix::from_fn(a.nrows(), b.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// Indices of the `count` largest entries of `values`; ties go to the lower
/// index. The result is in descending order of value.
pub fn top_indices(values: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Index of the largest entry, lowest index on ties. Entries flagged in
/// `exclude` are skipped.
pub fn argmax_excluding(values: &[f64], exclude: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if exclude.get(i).copied().unwrap_or(false) {
            continue;
        }
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}
