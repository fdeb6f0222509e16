//! Verified singular value decomposition.
//!
//! nalgebra's default SVD occasionally converges to a wrong factorization on
//! exactly rank-deficient input (e.g. a real rank-one 4x4 matrix). Every
//! decomposition here is checked by recomposition and retried with explicit
//! convergence tolerances when the check fails.

use nalgebra::{ComplexField, DMatrix, SVD};
use nalgebra::Dyn;

/// Accepted relative recomposition error `||U S V^* - A|| / ||A||`.
const RECOMPOSE_TOLERANCE: f64 = 1e-11;

const RETRY_EPS: [f64; 4] = [1e-15, 4e-16, 1e-14, 1e-13];
const RETRY_MAX_ITER: usize = 100_000;

fn accurate<T: ComplexField<RealField = f64>>(svd: &SVD<T, Dyn, Dyn>, m: &DMatrix<T>, scale: f64) -> bool {
    svd.singular_values.iter().all(|s| s.is_finite())
        && svd.clone().recompose().is_ok_and(|r| (r - m).norm() <= RECOMPOSE_TOLERANCE * scale)
}

/// Full SVD of `m` with both singular-vector sets, verified to reproduce `m`.
pub(crate) fn svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> SVD<T, Dyn, Dyn> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let first = m.clone().svd(true, true);
    if accurate(&first, m, scale) {
        return first;
    }
    for eps in RETRY_EPS {
        if let Some(s) = m.clone().try_svd(true, true, eps, RETRY_MAX_ITER) {
            if accurate(&s, m, scale) {
                return s;
            }
        }
    }
    log::warn!("SVD of a {}x{} matrix did not pass the recomposition check", m.nrows(), m.ncols());
    first
}

/// Singular values of `m` in descending order.
pub(crate) fn singular_values<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Vec<f64> {
    let mut s: Vec<f64> = svd(m).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// Rank-one input on which the unchecked decomposition is wrong.
    fn rank_one() -> DMatrix<f64> {
        let d = [
            0.7727380608399995, 0.8776989400033965, 0.6779013709485979, 1.7553028350365134,
            0.8776989400033965, 0.9969166375028357, 0.7699805986800261, 1.9937253200932836,
            0.6779013709485979, 0.7699805986800261, 0.5947038097676054, 1.539877817080355,
            1.7553028350365134, 1.9937253200932836, 1.539877817080355, 3.987234742052086,
        ];
        DMatrix::from_row_slice(4, 4, &d)
    }

    #[test]
    fn rank_one_matrix_recomposes() {
        let m = rank_one();
        let s = svd(&m);
        assert!((s.recompose().unwrap() - &m).norm() < 1e-12 * m.norm());
        let trace: f64 = m.diagonal().sum();
        let sv = singular_values(&m);
        assert!((sv[0] - trace).abs() < 1e-12 * trace, "{sv:?}");
        assert!(sv[1] < 1e-12 * trace);
    }

    #[test]
    fn complex_rank_one_matrix_recomposes() {
        let m = rank_one().map(Complex64::from);
        let s = svd(&m);
        assert!((s.recompose().unwrap() - &m).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn values_are_descending() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let sv = singular_values(&m);
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    }
}
