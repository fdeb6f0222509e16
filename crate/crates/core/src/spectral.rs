//! Two-sided Fourier coefficients of `g(t)` on the unit circle.
//!
//! `g_hat_k = (1/2 pi i) ∮ g(t) t^{-k-1} dt`. Negative orders carry the
//! poles inside the unit disk, positive orders the poles outside of it.
//! The constant term `k = 0` is never used.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::mobius::{DiskPairConfig, Side};
use crate::sampling::{Access, SampleSet, SampleValues};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fourier coefficients for `1 <= |k| <= k_max`, each an `nb x nb` matrix
/// (`1 x 1` for scalar data).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    k_max: usize,
    nb: usize,
    matrix_valued: bool,
    /// `negative[m-1]` holds `g_hat_{-m}`.
    negative: Vec<DMatrix<Complex64>>,
    /// `positive[m-1]` holds `g_hat_{m}`.
    positive: Vec<DMatrix<Complex64>>,
    pub source: Access,
}

impl FourierCoeffs {
    /// Scalar coefficients from explicit sequences `neg[m-1] = g_hat_{-m}`, `pos[m-1] = g_hat_m`.
    pub fn from_scalars(neg: &[Complex64], pos: &[Complex64], source: Access) -> Result<Self> {
        let wrap = |v: &[Complex64]| v.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect::<Vec<_>>();
        Self::from_matrices(1, false, wrap(neg), wrap(pos), source)
    }

    pub fn from_matrices(
        nb: usize,
        matrix_valued: bool,
        negative: Vec<DMatrix<Complex64>>,
        positive: Vec<DMatrix<Complex64>>,
        source: Access,
    ) -> Result<Self> {
        if negative.len() != positive.len() || negative.is_empty() {
            return Err(Error::InvalidParameter("coefficient sequences must be nonempty and equally long".into()));
        }
        if negative.iter().chain(&positive).any(|m| m.shape() != (nb, nb)) {
            return Err(Error::InvalidParameter(format!("coefficients must all be {nb}x{nb}")));
        }
        Ok(Self { k_max: negative.len(), nb, matrix_valued, negative, positive, source })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn is_matrix_valued(&self) -> bool {
        self.matrix_valued
    }

    /// `g_hat_k`; `None` for `k = 0` or `|k| > k_max`.
    pub fn get(&self, k: i64) -> Option<&DMatrix<Complex64>> {
        let m = k.unsigned_abs() as usize;
        if m == 0 || m > self.k_max {
            return None;
        }
        if k < 0 {
            self.negative.get(m - 1)
        } else {
            self.positive.get(m - 1)
        }
    }

    pub fn scalar(&self, k: i64) -> Option<Complex64> {
        self.get(k).map(|m| m[(0, 0)])
    }

    /// `g_hat_{-m}` (inside) or `g_hat_m` (outside) for `m >= 1`.
    pub fn side(&self, side: Side, m: usize) -> Option<&DMatrix<Complex64>> {
        match side {
            Side::Inside => self.get(-(m as i64)),
            Side::Outside => self.get(m as i64),
        }
    }

    /// Coefficientwise `self + other` (same orders and shapes).
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.k_max != other.k_max || self.nb != other.nb {
            return Err(Error::InvalidParameter("coefficient sets differ in shape".into()));
        }
        let sum = |a: &[DMatrix<Complex64>], b: &[DMatrix<Complex64>]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(Self {
            negative: sum(&self.negative, &other.negative),
            positive: sum(&self.positive, &other.positive),
            ..self.clone()
        })
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let s = |v: &[DMatrix<Complex64>]| v.iter().map(|x| x * alpha).collect();
        Self { negative: s(&self.negative), positive: s(&self.positive), ..self.clone() }
    }
}

fn split_entries(
    k_max: usize,
    nb: usize,
    matrix_valued: bool,
    per_entry: Vec<(Vec<Complex64>, Vec<Complex64>)>,
    source: Access,
) -> FourierCoeffs {
    let build = |pick: &dyn Fn(&(Vec<Complex64>, Vec<Complex64>)) -> &Vec<Complex64>, m: usize| {
        DMatrix::from_row_iterator(nb, nb, per_entry.iter().map(|e| pick(e)[m]))
    };
    let negative = (0..k_max).map(|m| build(&|e| &e.0, m)).collect();
    let positive = (0..k_max).map(|m| build(&|e| &e.1, m)).collect();
    FourierCoeffs { k_max, nb, matrix_valued, negative, positive, source }
}

fn shape_of(values: &SampleValues) -> (usize, bool) {
    match values.nb() {
        Some(nb) => (nb, true),
        None => (1, false),
    }
}

/// Trapezoid rule on the unit circle, evaluated with one length-`N_s` FFT
/// per matrix entry: `g_hat_k = (1/N_s) sum_n g(t_n) exp(-2 pi i k n / N_s)`.
pub fn fourier_from_circle(samples: &SampleSet, k_max: usize) -> Result<FourierCoeffs> {
    let Access::RandomAccess { n_s } = samples.access else {
        return Err(Error::SampleMismatch("circle quadrature needs random-access samples".into()));
    };
    if k_max == 0 || n_s < 2 * (k_max + 1) {
        return Err(Error::InvalidParameter(format!("K = {k_max} needs N_s >= {}, have {n_s}", 2 * (k_max + 1))));
    }
    let (nb, matrix_valued) = shape_of(&samples.values);
    let entries = nb * nb;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_s);
    let scale = 1.0 / n_s as f64;
    let per_entry = (0..entries)
        .map(|e| {
            let mut buf: Vec<Complex64> = (0..n_s).map(|n| samples.values.point(n)[e]).collect();
            fft.process(&mut buf);
            let neg = (1..=k_max).map(|m| buf[n_s - m] * scale).collect();
            let pos = (1..=k_max).map(|m| buf[m] * scale).collect();
            (neg, pos)
        })
        .collect();
    Ok(split_entries(k_max, nb, matrix_valued, per_entry, samples.access))
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

impl CompensatedSum {
    fn add(&mut self, x: Complex64) {
        fn step(acc: &mut (f64, f64), x: f64) {
            let t = acc.0 + x;
            if acc.0.abs() >= x.abs() {
                acc.1 += (acc.0 - t) + x;
            } else {
                acc.1 += (x - t) + acc.0;
            }
            acc.0 = t;
        }
        step(&mut self.re, x.re);
        step(&mut self.im, x.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// Whether the Matsubara spacing resolves the pole disks (`a >> pi/beta`).
pub fn matsubara_resolves(cfg: &DiskPairConfig, beta: f64) -> bool {
    cfg.a() >= 5.0 * std::f64::consts::PI / beta
}

/// Quadrature weights `-(1/beta) t(z)^{-(k+1)} 2c/(z+c)^2` for
/// `k = -1..=-k_max` (first half) and `k = 1..=k_max` (second half).
fn matsubara_weights(z: Complex64, c: f64, beta: f64, k_max: usize, out: &mut [Complex64]) {
    let zp = z + c;
    let t = (z - c) / zp;
    let t_inv = zp / (z - c);
    let jac = -(2.0 * c) / (zp * zp * beta);
    // k = -m uses t^{m-1}.
    let mut pow = Complex64::new(1.0, 0.0);
    for m in 0..k_max {
        out[m] = jac * pow;
        pow *= t;
    }
    // k = m uses (1/t)^{m+1}.
    let mut pow = t_inv * t_inv;
    for m in 0..k_max {
        out[k_max + m] = jac * pow;
        pow *= t_inv;
    }
}

/// Trapezoid rule on the Matsubara grid in the z variable:
/// `g_hat_k ≈ -(1/beta) sum_n g(z_n) t(z_n)^{-(k+1)} 2c/(z_n + c)^2`,
/// accumulated in ascending grid order with compensated summation.
pub fn fourier_from_matsubara(samples: &SampleSet, cfg: &DiskPairConfig, k_max: usize) -> Result<FourierCoeffs> {
    let Access::Matsubara { beta, .. } = samples.access else {
        return Err(Error::SampleMismatch("Matsubara quadrature needs Matsubara samples".into()));
    };
    if k_max == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if !matsubara_resolves(cfg, beta) {
        log::warn!("a = {} is not large against pi/beta = {}; quadrature may be inaccurate", cfg.a(), std::f64::consts::PI / beta);
    }
    if let Some(z) = samples.points_z.iter().find(|z| (**z + cfg.c()).norm() == 0.0) {
        return Err(Error::Domain(format!("grid point {z} is the pole of the map")));
    }
    let (nb, matrix_valued) = shape_of(&samples.values);
    let entries = nb * nb;
    let c = cfg.c();

    let accumulate = |entry_range: std::ops::Range<usize>| {
        let width = entry_range.len();
        let mut acc = vec![CompensatedSum::default(); width * 2 * k_max];
        let mut w = vec![ZERO; 2 * k_max];
        for (n, &z) in samples.points_z.iter().enumerate() {
            matsubara_weights(z, c, beta, k_max, &mut w);
            let values = &samples.values.point(n)[entry_range.clone()];
            for (e, &g) in values.iter().enumerate() {
                if g == ZERO {
                    continue;
                }
                let slot = &mut acc[e * 2 * k_max..(e + 1) * 2 * k_max];
                for (a, &wk) in slot.iter_mut().zip(&w) {
                    a.add(g * wk);
                }
            }
        }
        acc.chunks_exact(2 * k_max)
            .map(|s| {
                let neg = s[..k_max].iter().map(CompensatedSum::value).collect();
                let pos = s[k_max..].iter().map(CompensatedSum::value).collect();
                (neg, pos)
            })
            .collect::<Vec<_>>()
    };

    // Each entry is reduced sequentially in grid order, so the parallel split
    // over entries does not change the result.
    let per_entry: Vec<_> = if entries == 1 {
        accumulate(0..1)
    } else {
        (0..entries).into_par_iter().flat_map_iter(|e| accumulate(e..e + 1)).collect()
    };
    Ok(split_entries(k_max, nb, matrix_valued, per_entry, samples.access))
}

/// Dispatches on the access model of `samples`.
pub fn fourier_coefficients(samples: &SampleSet, cfg: &DiskPairConfig, k_max: usize) -> Result<FourierCoeffs> {
    match samples.access {
        Access::RandomAccess { .. } => fourier_from_circle(samples, k_max),
        Access::Matsubara { .. } => fourier_from_matsubara(samples, cfg, k_max),
    }
}
