//! One-sided Prony analysis of the Fourier coefficients.
//!
//! For the inside poles the sequence `g_hat_{-1}, g_hat_{-2}, ...` equals
//! `-sum_j w_j tau_j^m`, a sum of geometric sequences. The polynomial
//! `prod (t - tau_j)` annihilates it under the shift operator, so its
//! coefficients span the null space of the Hankel matrix of the sequence.
//! The outside side works identically on `g_hat_1, g_hat_2, ...` whose ratios
//! are `1/tau_j`.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mobius::Side;
use crate::spectral::FourierCoeffs;

/// Relative imaginary part below which a real-mode root is treated as real.
pub const REAL_ROOT_TOLERANCE: f64 = 1e-6;
/// Trailing polynomial coefficients below this fraction of the norm are dropped.
pub const LEADING_TRIM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyConfig {
    pub d_max: usize,
    pub l: usize,
    pub eps: f64,
    pub real_mode: bool,
}

impl PronyConfig {
    pub const DEFAULT_D_MAX: usize = 12;

    /// `l = d_max` and `eps = max(10 sigma, 1e-12)`.
    pub fn for_noise(d_max: usize, sigma: f64, real_mode: bool) -> Self {
        Self { d_max, l: d_max, eps: default_eps(sigma), real_mode }
    }

    /// Largest Fourier order the rank test consumes: `d_max + l - 1`.
    pub fn k_max(&self) -> usize {
        self.d_max + self.l - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_max == 0 || self.l < self.d_max {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= d_max <= l, got d_max={}, l={}",
                self.d_max, self.l
            )));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

pub fn default_eps(sigma: f64) -> f64 {
    (10.0 * sigma).max(1e-12)
}

/// `l x (d+1)` Hankel matrix of one side's coefficients; for matrix-valued
/// data each entry is the column-stacked `nb^2` vector, giving `l nb^2` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelSystem {
    pub side: Side,
    pub d: usize,
    pub l: usize,
    pub entries: DMatrix<Complex64>,
}

impl HankelSystem {
    pub fn real_part(&self) -> DMatrix<f64> {
        self.entries.map(|x| x.re)
    }
}

pub fn build_hankel(coeffs: &FourierCoeffs, side: Side, d: usize, l: usize) -> Result<HankelSystem> {
    if d == 0 || l == 0 {
        return Err(Error::InvalidParameter("Hankel dimensions must be positive".into()));
    }
    if d + l > coeffs.k_max() {
        return Err(Error::InsufficientCoefficients { needed: d + l, available: coeffs.k_max() });
    }
    let block = coeffs.nb() * coeffs.nb();
    let mut entries = DMatrix::zeros(l * block, d + 1);
    for j in 0..=d {
        for i in 0..l {
            let g = coeffs.side(side, i + j + 1).expect("order checked above");
            for (e, &v) in g.iter().enumerate() {
                entries[(i * block + e, j)] = v;
            }
        }
    }
    Ok(HankelSystem { side, d, l, entries })
}

/// Outcome of the numerical rank test on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDecision {
    /// Descending singular values of the `l x d_max` Hankel matrix.
    pub singular_values: Vec<f64>,
    pub chosen_d: usize,
    pub eps: f64,
    /// No ratio fell below `eps`; `chosen_d` was capped at `d_max`.
    pub saturated: bool,
}

/// Smallest `d` with `s_{d+1}/s_1 < eps`; `d_max` (saturated) when none.
pub fn rank_from_singular_values(singular_values: Vec<f64>, d_max: usize, eps: f64) -> RankDecision {
    let s1 = singular_values.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return RankDecision { singular_values, chosen_d: 0, eps, saturated: false };
    }
    let found = singular_values.iter().take(d_max).position(|&s| s / s1 < eps);
    RankDecision {
        chosen_d: found.unwrap_or(d_max),
        saturated: found.is_none(),
        singular_values,
        eps,
    }
}

pub fn estimate_rank(
    coeffs: &FourierCoeffs,
    side: Side,
    d_max: usize,
    l: usize,
    eps: f64,
    real_mode: bool,
) -> Result<RankDecision> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if d_max == 0 {
        return Err(Error::InvalidParameter("d_max must be positive".into()));
    }
    let h = build_hankel(coeffs, side, d_max - 1, l)?;
    let s = if real_mode {
        linalg::singular_values(&h.real_part())
    } else {
        linalg::singular_values(&h.entries)
    };
    Ok(rank_from_singular_values(s, d_max, eps))
}

/// Coefficients `p_0..p_d` of `p(t) = sum p_i t^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronyPolynomial {
    pub coefficients: Vec<Complex64>,
    pub side: Side,
}

/// Right singular vector of the smallest singular value. Wide matrices are
/// padded with zero rows so the full right basis is available.
fn min_right_singular_vector<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> DVector<T> {
    let (rows, cols) = m.shape();
    let padded = if rows < cols { m.clone().resize_vertically(cols, T::zero()) } else { m.clone() };
    let svd = linalg::svd(&padded);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let idx = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty matrix");
    v_t.row(idx).adjoint()
}

/// Null vector of the `l x (d+1)` Hankel matrix of one side.
pub fn prony_polynomial(
    coeffs: &FourierCoeffs,
    side: Side,
    d: usize,
    l: usize,
    real_mode: bool,
) -> Result<PronyPolynomial> {
    let h = build_hankel(coeffs, side, d, l)?;
    let coefficients = if real_mode {
        min_right_singular_vector(&h.real_part())
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect()
    } else {
        min_right_singular_vector(&h.entries).iter().copied().collect()
    };
    Ok(PronyPolynomial { coefficients, side })
}

/// Roots of `p` as eigenvalues of the companion matrix of the monic
/// polynomial, after dropping numerically zero leading coefficients.
pub fn roots_of(p: &PronyPolynomial) -> Result<Vec<Complex64>> {
    roots_of_coefficients(&p.coefficients)
}

pub fn roots_of_coefficients(coefficients: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if coefficients.iter().all(|c| c.norm() < 1e-300) {
        return Err(Error::DegeneratePolynomial);
    }
    let degree = coefficients
        .iter()
        .rposition(|c| c.norm() >= LEADING_TRIM * norm)
        .expect("nonzero coefficient exists");
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coefficients[degree];
    if degree == 1 {
        return Ok(vec![-coefficients[0] / lead]);
    }
    let mut companion = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coefficients[i] / lead;
    }
    let schur = companion
        .try_schur(f64::EPSILON, 100 * degree.max(10))
        .ok_or_else(|| Error::InvalidParameter("companion eigenvalue iteration did not converge".into()))?;
    let (_, triangular) = schur.unpack();
    Ok(triangular.diagonal().iter().copied().collect())
}

/// Everything learned about one side of the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideRecovery {
    pub side: Side,
    pub rank: RankDecision,
    /// Degree actually used for the polynomial (may be below a saturated rank).
    pub degree: usize,
    pub polynomial: Option<PronyPolynomial>,
    /// Accepted polynomial roots, all inside the unit disk. For the outside
    /// side these are `1/tau`.
    pub roots: Vec<Complex64>,
    /// t-plane poles `tau`.
    pub poles_t: Vec<Complex64>,
    /// Roots rejected for lying on the wrong side or, in real mode, off the real axis.
    pub spurious: Vec<Complex64>,
}

pub fn recover_side(coeffs: &FourierCoeffs, side: Side, config: &PronyConfig) -> Result<SideRecovery> {
    config.validate()?;
    let rank = estimate_rank(coeffs, side, config.d_max, config.l, config.eps, config.real_mode)?;
    // A saturated rank can exceed what the available orders support.
    let degree = rank.chosen_d.min(coeffs.k_max().saturating_sub(config.l));
    let mut out = SideRecovery {
        side,
        rank,
        degree,
        polynomial: None,
        roots: Vec::new(),
        poles_t: Vec::new(),
        spurious: Vec::new(),
    };
    if degree == 0 {
        return Ok(out);
    }
    let poly = prony_polynomial(coeffs, side, degree, config.l, config.real_mode)?;
    for root in roots_of(&poly)? {
        let root = if config.real_mode {
            if root.im.abs() / (1.0 + root.norm()) < REAL_ROOT_TOLERANCE {
                Complex64::new(root.re, 0.0)
            } else {
                log::debug!("{side:?}: discarding complex root {root} in real mode");
                out.spurious.push(root);
                continue;
            }
        } else {
            root
        };
        if root.norm() < 1.0 {
            out.roots.push(root);
            out.poles_t.push(match side {
                Side::Inside => root,
                Side::Outside => root.inv(),
            });
        } else {
            log::debug!("{side:?}: discarding root {root} outside the unit disk");
            out.spurious.push(root);
        }
    }
    out.polynomial = Some(poly);
    Ok(out)
}
