//! Residues by linear least squares on the sample grid.
//!
//! The design matrix `A[n, j] = 1/(xi_j - z_n)` is Cauchy-like and can be
//! badly conditioned, so the fit uses an orthogonal factorization. Rows are
//! generated on the fly and folded into a running triangular factor in
//! blocks, which keeps memory independent of the grid size.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::{SampleSet, SampleValues};

const BLOCK_ROWS: usize = 2048;
/// Condition estimates above this are reported as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum Residues {
    Scalar(Vec<Complex64>),
    Matrix(Vec<DMatrix<Complex64>>),
}

impl Residues {
    pub fn len(&self) -> usize {
        match self {
            Residues::Scalar(v) => v.len(),
            Residues::Matrix(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueFit {
    pub residues: Residues,
    /// `||A x - b||` (Frobenius norm over all right-hand sides).
    pub residual_norm: f64,
    /// 2-norm condition estimate of the column-equilibrated design matrix.
    pub condition: f64,
}

/// Least squares `min ||A X - B||` with the rows of `[A | B]` arriving in blocks.
struct StreamingQr<T: ComplexField<RealField = f64>> {
    ncols: usize,
    nrhs: usize,
    r: DMatrix<T>,
    qtb: DMatrix<T>,
    residual_sq: f64,
}

impl<T: ComplexField<RealField = f64>> StreamingQr<T> {
    fn new(ncols: usize, nrhs: usize) -> Self {
        Self {
            ncols,
            nrhs,
            r: DMatrix::zeros(0, ncols),
            qtb: DMatrix::zeros(0, nrhs),
            residual_sq: 0.0,
        }
    }

    fn push(&mut self, a: &DMatrix<T>, b: &DMatrix<T>) {
        let top = self.r.nrows();
        let rows = top + a.nrows();
        let mut stacked = DMatrix::zeros(rows, self.ncols);
        stacked.rows_mut(0, top).copy_from(&self.r);
        stacked.rows_mut(top, a.nrows()).copy_from(a);
        let mut rhs = DMatrix::zeros(rows, self.nrhs);
        rhs.rows_mut(0, top).copy_from(&self.qtb);
        rhs.rows_mut(top, b.nrows()).copy_from(b);

        let qr = stacked.qr();
        qr.q_tr_mul(&mut rhs);
        let r = qr.r();
        let k = r.nrows();
        self.residual_sq += rhs.rows(k, rows - k).iter().map(|x| x.clone().modulus_squared()).sum::<f64>();
        self.qtb = rhs.rows(0, k).into_owned();
        self.r = r;
    }

    /// Returns the solution, residual norm and condition estimate of `R`.
    fn solve(self) -> Result<(DMatrix<T>, f64, f64)> {
        if self.r.nrows() < self.ncols {
            return Err(Error::RankDeficient { condition: f64::INFINITY });
        }
        let s = linalg::singular_values(&self.r);
        let (smax, smin) = s.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &x| (hi.max(x), lo.min(x)));
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::RankDeficient { condition });
        }
        let x = self
            .r
            .solve_upper_triangular(&self.qtb)
            .ok_or(Error::RankDeficient { condition: f64::INFINITY })?;
        Ok((x, self.residual_sq.sqrt(), condition))
    }
}

/// Grid points with finite z (the random-access node at infinity carries no
/// information: its design row and its value are both zero).
fn finite_points(samples: &SampleSet) -> Vec<usize> {
    (0..samples.len()).filter(|&n| samples.points_z[n].is_finite()).collect()
}

fn check_inputs(poles: &[Complex64], samples: &SampleSet) -> Result<()> {
    for (i, p) in poles.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::InvalidParameter(format!("pole {i} is not finite")));
        }
        if poles[..i].contains(p) {
            return Err(Error::RankDeficient { condition: f64::INFINITY });
        }
    }
    if let Some(z) = samples.points_z.iter().find(|z| poles.contains(z)) {
        return Err(Error::Domain(format!("sample point {z} coincides with a pole")));
    }
    Ok(())
}

fn column_scales(poles: &[Complex64], samples: &SampleSet, points: &[usize]) -> Vec<f64> {
    let mut sq = vec![0.0f64; poles.len()];
    for &n in points {
        let z = samples.points_z[n];
        for (s, &xi) in sq.iter_mut().zip(poles) {
            *s += (xi - z).norm_sqr().recip();
        }
    }
    sq.into_iter().map(|s| if s > 0.0 { s.sqrt().recip() } else { 1.0 }).collect()
}

/// Fits residues for `poles` against `samples`. `real_mode` constrains the
/// residues to be real by stacking real and imaginary parts into one real
/// system.
pub fn fit_residues(poles: &[Complex64], samples: &SampleSet, real_mode: bool) -> Result<ResidueFit> {
    let entries = samples.values.entries();
    let empty = || match samples.values {
        SampleValues::Scalar(_) => Residues::Scalar(Vec::new()),
        SampleValues::Matrix { .. } => Residues::Matrix(Vec::new()),
    };
    if poles.is_empty() {
        let norm = (0..samples.len())
            .flat_map(|n| samples.values.point(n).iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        return Ok(ResidueFit { residues: empty(), residual_norm: norm, condition: 1.0 });
    }
    check_inputs(poles, samples)?;
    let points = finite_points(samples);
    let scales = column_scales(poles, samples, &points);
    let np = poles.len();

    let (x, residual_norm, condition) = if real_mode {
        let mut qr = StreamingQr::<f64>::new(np, entries);
        for block in points.chunks(BLOCK_ROWS) {
            let mut a = DMatrix::zeros(2 * block.len(), np);
            let mut b = DMatrix::zeros(2 * block.len(), entries);
            for (i, &n) in block.iter().enumerate() {
                let z = samples.points_z[n];
                for j in 0..np {
                    let v = scales[j] / (poles[j] - z);
                    a[(2 * i, j)] = v.re;
                    a[(2 * i + 1, j)] = v.im;
                }
                for (e, v) in samples.values.point(n).iter().enumerate() {
                    b[(2 * i, e)] = v.re;
                    b[(2 * i + 1, e)] = v.im;
                }
            }
            qr.push(&a, &b);
        }
        let (x, res, cond) = qr.solve()?;
        (x.map(|v| Complex64::new(v, 0.0)), res, cond)
    } else {
        let mut qr = StreamingQr::<Complex64>::new(np, entries);
        for block in points.chunks(BLOCK_ROWS) {
            let a = DMatrix::from_fn(block.len(), np, |i, j| scales[j] / (poles[j] - samples.points_z[block[i]]));
            let b = DMatrix::from_fn(block.len(), entries, |i, e| samples.values.point(block[i])[e]);
            qr.push(&a, &b);
        }
        qr.solve()?
    };

    let row = |j: usize| x.row(j).iter().map(|v| v * scales[j]).collect::<Vec<_>>();
    let residues = match samples.values {
        SampleValues::Scalar(_) => Residues::Scalar((0..np).map(|j| row(j)[0]).collect()),
        SampleValues::Matrix { nb, .. } => {
            Residues::Matrix((0..np).map(|j| DMatrix::from_row_slice(nb, nb, &row(j))).collect())
        }
    };
    Ok(ResidueFit { residues, residual_norm, condition })
}

/// Scalar residues `r = argmin ||A x - b||`.
pub fn solve_residues(poles: &[Complex64], samples: &SampleSet) -> Result<ResidueFit> {
    if samples.values.nb().is_some() {
        return Err(Error::SampleMismatch("scalar residue fit on matrix samples".into()));
    }
    fit_residues(poles, samples, false)
}

/// Matrix residues from `min ||A X - B||` with `B` rows `rv(G(z_n))`.
pub fn solve_residues_matrix(poles: &[Complex64], samples: &SampleSet) -> Result<ResidueFit> {
    if samples.values.nb().is_none() {
        return Err(Error::SampleMismatch("matrix residue fit on scalar samples".into()));
    }
    fit_residues(poles, samples, false)
}

/// Rank-one factor `v` with `v v^* ≈ R`, from the leading eigenpair of the
/// Hermitian part of `R`. Returns `(v, |lambda_2| / |lambda_1|)` with the
/// eigenvalues ordered by magnitude; the largest-magnitude entry of `v` is
/// real and positive.
pub fn rank1_extract(r: &DMatrix<Complex64>) -> Result<(DVector<Complex64>, f64)> {
    if !r.is_square() {
        return Err(Error::InvalidParameter(format!("rank-one extraction needs a square matrix, got {:?}", r.shape())));
    }
    let n = r.nrows();
    if r.iter().all(|x| x.norm() == 0.0) {
        return Ok((DVector::zeros(n), 0.0));
    }
    let h = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let lambda = &eig.eigenvalues;
    let top = lambda.imax();
    let mut magnitudes: Vec<f64> = lambda.iter().map(|l| l.abs()).collect();
    magnitudes.sort_by(|a, b| b.total_cmp(a));
    let quality = match magnitudes.as_slice() {
        [m1, m2, ..] if *m1 > 0.0 => m2 / m1,
        _ => 0.0,
    };
    let mut v: DVector<Complex64> =
        eig.eigenvectors.column(top).into_owned() * Complex64::new(lambda[top].max(0.0).sqrt(), 0.0);
    let pivot = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let phase = v[pivot].norm();
    if phase > 0.0 {
        let rot = v[pivot].conj() / phase;
        v *= rot;
        v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
    }
    Ok((v, quality))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::DiskPairConfig;
    use crate::model::{MatrixPoleModel, Model, NoiseSpec, PoleModel};
    use crate::sampling::{sample, Access, Statistics};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> DiskPairConfig {
        DiskPairConfig::new(1.0, 100.0).unwrap()
    }

    fn samples_of(model: Model, n_s: usize) -> SampleSet {
        sample(&model, &cfg(), Access::RandomAccess { n_s }, &NoiseSpec::noiseless()).unwrap()
    }

    fn scalar(fit: &ResidueFit) -> &[Complex64] {
        match &fit.residues {
            Residues::Scalar(v) => v,
            Residues::Matrix(_) => panic!("expected scalar residues"),
        }
    }

    #[test]
    fn single_pole_exact() {
        let s = samples_of(Model::Scalar(PoleModel::new(vec![c(5.0, 0.0)], vec![c(2.0, 0.0)]).unwrap()), 256);
        let fit = solve_residues(&[c(5.0, 0.0)], &s).unwrap();
        assert!((scalar(&fit)[0] - c(2.0, 0.0)).norm() < 1e-12);
        assert!(fit.residual_norm < 1e-12);
    }

    #[test]
    fn zero_samples_give_zero_residues() {
        let s = samples_of(Model::Scalar(PoleModel::new(vec![c(5.0, 0.0)], vec![c(0.0, 0.0)]).unwrap()), 64);
        let fit = solve_residues(&[c(5.0, 1.0), c(-20.0, 3.0)], &s).unwrap();
        assert!(scalar(&fit).iter().all(|r| r.norm() == 0.0));
    }

    #[test]
    fn exact_multi_pole_fit_across_many_blocks() {
        let truth = PoleModel::new(
            vec![c(3.0, 2.0), c(40.0, -10.0), c(-7.0, 0.5), c(-60.0, 20.0)],
            vec![c(1.0, 0.5), c(-0.7, 1.2), c(2.0, 0.0), c(0.5, -0.5)],
        )
        .unwrap();
        let s = samples_of(Model::Scalar(truth.clone()), 8192);
        let fit = solve_residues(&truth.poles, &s).unwrap();
        for (got, want) in scalar(&fit).iter().zip(&truth.residues) {
            assert!((got - want).norm() <= 1e-10 * want.norm());
        }
        let SampleValues::Scalar(b) = &s.values else { panic!() };
        let bnorm = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!(fit.residual_norm <= 1e-10 * bnorm);
        assert!(fit.condition >= 1.0 && fit.condition.is_finite());
    }

    #[test]
    fn matches_dense_reference_on_matsubara_grid() {
        let truth = PoleModel::new(vec![c(2.0, 1.0), c(-4.0, -1.0)], vec![c(1.0, 0.0), c(0.3, 0.2)]).unwrap();
        let access = Access::Matsubara { n_m: 3000, beta: 10.0 * std::f64::consts::PI, statistics: Statistics::Fermion };
        let s = sample(&Model::Scalar(truth.clone()), &cfg(), access, &NoiseSpec::new(1e-2, 4).unwrap()).unwrap();
        let fit = solve_residues(&truth.poles, &s).unwrap();
        // Dense SVD-based least squares as the reference.
        let a = DMatrix::from_fn(s.len(), 2, |n, j| c(1.0, 0.0) / (truth.poles[j] - s.points_z[n]));
        let SampleValues::Scalar(b) = &s.values else { panic!() };
        let b = DVector::from_column_slice(b);
        let x = crate::linalg::svd(&a).solve(&b, 1e-14).unwrap();
        for (got, want) in scalar(&fit).iter().zip(x.iter()) {
            assert!((got - want).norm() < 1e-12, "{got} vs {want}");
        }
        let resid = (a * x - b).norm();
        assert!((fit.residual_norm - resid).abs() <= 1e-10 * resid);
    }

    #[test]
    fn scaling_samples_scales_residues() {
        let truth = PoleModel::new(vec![c(3.0, 2.0), c(-9.0, 1.0)], vec![c(1.0, 0.5), c(-0.7, 1.2)]).unwrap();
        let s = samples_of(Model::Scalar(truth.clone()), 512);
        let alpha = c(-2.5, 0.75);
        let a = solve_residues(&truth.poles, &s).unwrap();
        let b = solve_residues(&truth.poles, &s.scaled(alpha)).unwrap();
        for (x, y) in scalar(&a).iter().zip(scalar(&b)) {
            assert!((x * alpha - y).norm() <= 1e-12 * y.norm().max(1.0));
        }
    }

    #[test]
    fn duplicate_poles_are_rank_deficient() {
        let s = samples_of(Model::Scalar(PoleModel::new(vec![c(5.0, 0.0)], vec![c(1.0, 0.0)]).unwrap()), 64);
        assert!(matches!(solve_residues(&[c(5.0, 0.0), c(5.0, 0.0)], &s), Err(Error::RankDeficient { .. })));
        let err = solve_residues(&[c(5.0, 0.0), c(5.0, 1e-13)], &s).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { condition } if condition > MAX_CONDITION));
    }

    #[test]
    fn real_mode_returns_real_residues() {
        let truth = PoleModel::new(vec![c(5.0, 0.0), c(-30.0, 0.0)], vec![c(1.5, 0.0), c(0.6, 0.0)]).unwrap();
        let s = sample(&Model::Scalar(truth.clone()), &cfg(), Access::RandomAccess { n_s: 256 }, &NoiseSpec::new(1e-3, 2).unwrap())
            .unwrap();
        let fit = fit_residues(&truth.poles, &s, true).unwrap();
        for (got, want) in scalar(&fit).iter().zip(&truth.residues) {
            assert_eq!(got.im, 0.0);
            assert!((got - want).norm() < 1e-2);
        }
        let exact = samples_of(Model::Scalar(truth.clone()), 256);
        let free = solve_residues(&truth.poles, &exact).unwrap();
        assert!(scalar(&free).iter().all(|r| r.im.abs() <= 1e-8));
    }

    #[test]
    fn matrix_fit_reduces_to_scalar_for_nb_one() {
        let truth = PoleModel::new(vec![c(3.0, 2.0), c(-9.0, 1.0)], vec![c(1.0, 0.5), c(-0.7, 1.2)]).unwrap();
        let as_matrix = MatrixPoleModel::new(
            1,
            truth.poles.clone(),
            truth.residues.iter().map(|&r| DMatrix::from_element(1, 1, r)).collect(),
        )
        .unwrap();
        let s1 = samples_of(Model::Scalar(truth.clone()), 128);
        let s2 = samples_of(Model::Matrix(as_matrix), 128);
        let a = solve_residues(&truth.poles, &s1).unwrap();
        let b = solve_residues_matrix(&truth.poles, &s2).unwrap();
        let Residues::Matrix(m) = &b.residues else { panic!() };
        for (x, y) in scalar(&a).iter().zip(m) {
            assert_eq!(*x, y[(0, 0)]);
        }
        assert!(solve_residues(&truth.poles, &s2).is_err());
        assert!(solve_residues_matrix(&truth.poles, &s1).is_err());
    }

    #[test]
    fn exact_rank_one_matrix_fit() {
        let factors = vec![
            DVector::from_vec(vec![c(1.0, 0.0), c(0.5, -1.0)]),
            DVector::from_vec(vec![c(-0.3, 0.2), c(2.0, 0.0)]),
        ];
        let truth = MatrixPoleModel::from_factors(vec![c(4.0, 0.0), c(-12.0, 3.0)], factors).unwrap();
        let s = samples_of(Model::Matrix(truth.clone()), 512);
        let fit = solve_residues_matrix(&truth.poles, &s).unwrap();
        let Residues::Matrix(m) = &fit.residues else { panic!() };
        for (got, want) in m.iter().zip(&truth.residues) {
            assert!((got - want).iter().all(|d| d.norm() < 1e-10));
        }
    }

    #[test]
    fn rank1_examples() {
        let e1 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let (v, q) = rank1_extract(&(&e1 * e1.adjoint())).unwrap();
        assert!((v - e1).norm() < 1e-15);
        assert!(q < 1e-15);

        let (_, q) = rank1_extract(&DMatrix::identity(2, 2)).unwrap();
        assert!((q - 1.0).abs() < 1e-15);

        let (v, q) = rank1_extract(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(v.norm(), 0.0);
        assert_eq!(q, 0.0);
        assert!(rank1_extract(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn rank1_is_stable_under_small_perturbation() {
        let v = DVector::from_vec(vec![c(1.0, 0.5), c(-0.4, 0.9), c(0.2, 0.0)]);
        let r = &v * v.adjoint();
        let e = DMatrix::from_fn(3, 3, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, (i as f64) - (j as f64)));
        let scale = 1e-3 * r.norm() / e.norm();
        let e = e * Complex64::new(scale, 0.0);
        let (vh, _) = rank1_extract(&(&r + e)).unwrap();
        assert!((&vh * vh.adjoint() - &r).norm() <= 5e-3 * r.norm());
    }

    #[test]
    fn rank1_is_idempotent_up_to_phase() {
        let v = DVector::from_vec(vec![c(0.3, -0.2), c(-1.0, 0.7), c(0.2, 0.1), c(0.5, 0.5)]);
        let (v1, _) = rank1_extract(&(&v * v.adjoint())).unwrap();
        let (v2, _) = rank1_extract(&(&v1 * v1.adjoint())).unwrap();
        assert!((&v1 - &v2).norm() < 1e-12);
        let pivot = v1.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(v1.iter().any(|x| x.im == 0.0 && x.re == pivot));
    }

    #[test]
    fn rank1_extract_exact_real_rank_one() {
        // Input on which a plain SVD of the Hermitian part goes wrong.
        let v = DVector::from_vec(vec![c(-0.8791, 0.0), c(-0.9985, 0.0), c(-0.7712, 0.0), c(-1.9968, 0.0)]);
        let r = &v * v.adjoint();
        let (f, quality) = rank1_extract(&r).unwrap();
        assert!((&f * f.adjoint() - &r).norm() < 1e-12 * r.norm());
        assert!(quality < 1e-12);
        assert!(f.iter().all(|x| x.re > 0.0));
    }
}
