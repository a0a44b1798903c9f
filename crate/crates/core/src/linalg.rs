//! Numeric linear algebra on sampled values, backed by nalgebra.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-8;

pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

/// Minimum-norm least squares solution and the residual norm.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (max * 1e-11).max(f64::MIN_POSITIVE);
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let res = (a * &x - b).norm();
    (x, res)
}

/// Orthonormal basis of the null space, one vector per column.
pub fn kernel(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let sv = &svd.singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if max == 0.0 || s <= rel_tol * max {
            cols.push(vt.row(i).transpose());
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Reduced row echelon form with partial pivoting. Entries below `tol`
/// are cleared. Returns the pivot column of each nonzero row.
pub fn rref(m: &mut DMatrix<f64>, tol: f64) -> Vec<usize> {
    let (rows, cols) = m.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows).map(|i| (i, m[(i, c)].abs())).fold((r, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if val <= tol {
            for i in r..rows {
                m[(i, c)] = 0.0;
            }
            continue;
        }
        m.swap_rows(r, best);
        let p = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        let v = m[(r, j)];
                        m[(i, j)] -= f * v;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    for v in m.iter_mut() {
        if v.abs() <= tol {
            *v = 0.0;
        }
    }
    pivots
}

/// Best rational approximation with denominator at most `max_den`, accepted
/// only if it reproduces `v` to `tol` relative accuracy.
pub fn rationalize(v: f64, max_den: i64, tol: f64) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    let sign = if v < 0.0 { -1 } else { 1 };
    let a = v.abs();
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut x = a;
    for _ in 0..40 {
        let ai = x.floor();
        if ai > 1e12 {
            break;
        }
        let ai = ai as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let approx = h1 as f64 / k1 as f64;
        if (approx - a).abs() <= tol * a.max(1.0) {
            return Some(BigRational::new(BigInt::from(sign * h1), BigInt::from(k1)));
        }
        let f = x - ai as f64;
        if f < 1e-15 {
            break;
        }
        x = 1.0 / f;
    }
    if k1 > 0 && ((h1 as f64 / k1 as f64) - a).abs() <= tol * a.max(1.0) {
        return Some(BigRational::new(BigInt::from(sign * h1), BigInt::from(k1)));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_recovered() {
        assert_eq!(rationalize(0.75, 1000, 1e-9), Some(BigRational::new(3.into(), 4.into())));
        assert_eq!(rationalize(-2.0 / 3.0, 1000, 1e-9), Some(BigRational::new((-2).into(), 3.into())));
        assert_eq!(rationalize(0.0, 1000, 1e-9), Some(BigRational::new(0.into(), 1.into())));
        assert_eq!(rationalize(std::f64::consts::PI, 1000, 1e-9), None);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[2.0, 1.0, 0.0]);
        let k = kernel(&m, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert!((m * k).norm() < 1e-12);
    }

    #[test]
    fn rref_pivots() {
        let mut m = DMatrix::from_row_slice(2, 3, &[0.0, 2.0, 4.0, 1.0, 1.0, 1.0]);
        let p = rref(&mut m, 1e-12);
        assert_eq!(p, vec![0, 1]);
        assert!((m[(0, 2)] + 1.0).abs() < 1e-12);
        assert!((m[(1, 2)] - 2.0).abs() < 1e-12);
    }
}
