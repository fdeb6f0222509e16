//! Evaluation grids for the two access models and noisy sample sets.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::DiskPairConfig;
use crate::model::{Model, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl std::str::FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" => Ok(Statistics::Boson),
            "fermion" => Ok(Statistics::Fermion),
            other => Err(Error::InvalidParameter(format!("unknown statistics {other:?}"))),
        }
    }
}

/// How the function may be probed on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Access {
    /// Samples at the images of the `n_s`-th roots of unity.
    RandomAccess { n_s: usize },
    /// Samples on the truncated Matsubara grid.
    Matsubara { n_m: usize, beta: f64, statistics: Statistics },
}

/// Sample values, one scalar or one `nb x nb` matrix per grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleValues {
    Scalar(Vec<Complex64>),
    /// Row-major `nb x nb` blocks, one per point.
    Matrix { nb: usize, data: Vec<Complex64> },
}

impl SampleValues {
    pub fn len(&self) -> usize {
        match self {
            SampleValues::Scalar(v) => v.len(),
            SampleValues::Matrix { nb, data } => data.len() / (nb * nb),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of scalar entries per point (1 or `nb^2`).
    pub fn entries(&self) -> usize {
        match self {
            SampleValues::Scalar(_) => 1,
            SampleValues::Matrix { nb, .. } => nb * nb,
        }
    }

    pub fn nb(&self) -> Option<usize> {
        match self {
            SampleValues::Scalar(_) => None,
            SampleValues::Matrix { nb, .. } => Some(*nb),
        }
    }

    /// Row-major entries of point `n`.
    pub fn point(&self, n: usize) -> &[Complex64] {
        match self {
            SampleValues::Scalar(v) => std::slice::from_ref(&v[n]),
            SampleValues::Matrix { nb, data } => &data[n * nb * nb..(n + 1) * nb * nb],
        }
    }

    pub fn matrix(&self, n: usize) -> DMatrix<Complex64> {
        let nb = self.nb().unwrap_or(1);
        DMatrix::from_row_slice(nb, nb, self.point(n))
    }

    /// Multiplies every value by `alpha`.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        match self {
            SampleValues::Scalar(v) => SampleValues::Scalar(v.iter().map(|x| x * alpha).collect()),
            SampleValues::Matrix { nb, data } => {
                SampleValues::Matrix { nb: *nb, data: data.iter().map(|x| x * alpha).collect() }
            }
        }
    }
}

/// Points on the imaginary axis (and, for random access, on the unit circle)
/// together with the function values sampled there.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub access: Access,
    /// z-plane points. For random access entry 0 is the image of `t = 1`,
    /// i.e. `z = infinity`, stored as a non-finite value.
    pub points_z: Vec<Complex64>,
    /// Unit-circle nodes (random access only).
    pub points_t: Option<Vec<Complex64>>,
    pub values: SampleValues,
}

impl SampleSet {
    /// Wraps externally obtained values on the random-access grid.
    pub fn random_access(cfg: &DiskPairConfig, n_s: usize, values: SampleValues) -> Result<Self> {
        let (t, z) = random_access_grid(n_s, cfg)?;
        check_len(&values, n_s)?;
        Ok(Self { access: Access::RandomAccess { n_s }, points_z: z, points_t: Some(t), values })
    }

    /// Wraps externally obtained values on a Matsubara grid.
    pub fn matsubara(n_m: usize, beta: f64, statistics: Statistics, values: SampleValues) -> Result<Self> {
        let z = matsubara_grid(n_m, beta, statistics)?;
        check_len(&values, z.len())?;
        Ok(Self { access: Access::Matsubara { n_m, beta, statistics }, points_z: z, points_t: None, values })
    }

    pub fn len(&self) -> usize {
        self.points_z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points_z.is_empty()
    }

    /// Same grid with values multiplied by `alpha`.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self { values: self.values.scaled(alpha), ..self.clone() }
    }
}

fn check_len(values: &SampleValues, expected: usize) -> Result<()> {
    if let SampleValues::Matrix { nb, data } = values {
        if *nb == 0 || data.len() % (nb * nb) != 0 {
            return Err(Error::SampleMismatch(format!(
                "{} matrix entries do not split into {nb}x{nb} blocks",
                data.len()
            )));
        }
    }
    if values.len() != expected {
        return Err(Error::SampleMismatch(format!("{} values for {expected} grid points", values.len())));
    }
    Ok(())
}

/// `t_n = exp(2 pi i n / n_s)` and `z_n = -c (t_n + 1)/(t_n - 1) = i c cot(pi n / n_s)`.
///
/// `z_0` is infinite. Quarter-circle nodes are placed exactly.
pub fn random_access_grid(n_s: usize, cfg: &DiskPairConfig) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if n_s < 4 || n_s % 2 != 0 {
        return Err(Error::InvalidParameter(format!("N_s must be even and >= 4, got {n_s}")));
    }
    let mut t: Vec<Complex64> = Vec::with_capacity(n_s);
    let mut z: Vec<Complex64> = Vec::with_capacity(n_s);
    for n in 0..n_s {
        // Upper half nodes mirror the lower half so conjugate pairs are exact.
        if 2 * n > n_s {
            let (tm, zm) = (t[n_s - n], z[n_s - n]);
            t.push(tm.conj());
            z.push(-zm);
            continue;
        }
        let node = match (4 * n) % n_s {
            0 => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0)][4 * n / n_s],
            _ => Complex64::from_polar(1.0, 2.0 * PI * n as f64 / n_s as f64),
        };
        t.push(node);
        let y = if n == 0 {
            f64::INFINITY
        } else if 2 * n == n_s {
            0.0
        } else {
            cfg.c() / (PI * n as f64 / n_s as f64).tan()
        };
        z.push(Complex64::new(0.0, y));
    }
    Ok((t, z))
}

/// Truncated Matsubara frequencies: `2n pi i / beta` for `n = -n_m..=n_m` (bosons),
/// `(2n+1) pi i / beta` for `n = -n_m..n_m` (fermions).
pub fn matsubara_grid(n_m: usize, beta: f64, statistics: Statistics) -> Result<Vec<Complex64>> {
    if n_m == 0 || !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("need N_m >= 1 and beta > 0, got {n_m}, {beta}")));
    }
    let n_m = n_m as i64;
    let step = PI / beta;
    let grid = match statistics {
        Statistics::Boson => (-n_m..=n_m).map(|n| Complex64::new(0.0, (2 * n) as f64 * step)).collect(),
        Statistics::Fermion => (-n_m..n_m).map(|n| Complex64::new(0.0, (2 * n + 1) as f64 * step)).collect(),
    };
    Ok(grid)
}

/// Samples `model` on the grid described by `access`, adding noise in grid order.
///
/// On the random-access grid the node `t_0 = 1` (z = infinity) receives the
/// limit value 0.
pub fn sample(model: &Model, cfg: &DiskPairConfig, access: Access, noise: &NoiseSpec) -> Result<SampleSet> {
    let (points_z, points_t) = match access {
        Access::RandomAccess { n_s } => {
            let (t, z) = random_access_grid(n_s, cfg)?;
            (z, Some(t))
        }
        Access::Matsubara { n_m, beta, statistics } => (matsubara_grid(n_m, beta, statistics)?, None),
    };
    let mut stream = noise.stream();
    let values = match model {
        Model::Scalar(m) => {
            let mut out = Vec::with_capacity(points_z.len());
            for &z in &points_z {
                let exact = if z.is_finite() { m.evaluate(z)? } else { Complex64::new(0.0, 0.0) };
                out.push(stream.add_noise(exact));
            }
            SampleValues::Scalar(out)
        }
        Model::Matrix(m) => {
            let nb2 = m.nb() * m.nb();
            let mut data = vec![Complex64::new(0.0, 0.0); points_z.len() * nb2];
            for (block, &z) in data.chunks_exact_mut(nb2).zip(&points_z) {
                if z.is_finite() {
                    m.evaluate_row_major(z, block)?;
                }
                stream.add_noise_slice(block);
            }
            SampleValues::Matrix { nb: m.nb(), data }
        }
    };
    Ok(SampleSet { access, points_z, points_t, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MatrixPoleModel, PoleModel};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> DiskPairConfig {
        DiskPairConfig::new(1.0, 100.0).unwrap()
    }

    #[test]
    fn random_grid_rejects_bad_sizes() {
        assert!(random_access_grid(2, &cfg()).is_err());
        assert!(random_access_grid(7, &cfg()).is_err());
    }

    #[test]
    fn four_point_grid() {
        let (t, z) = random_access_grid(4, &cfg()).unwrap();
        assert_eq!(t, vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]);
        assert!(!z[0].is_finite());
        assert!((z[1] - c(0.0, 10.0)).norm() < 1e-14);
        assert_eq!(z[2], c(0.0, 0.0));
        assert!((z[3] - c(0.0, -10.0)).norm() < 1e-14);
    }

    #[test]
    fn grid_points_match_the_mobius_map() {
        let cfg = cfg();
        let (t, z) = random_access_grid(64, &cfg).unwrap();
        for n in 1..64 {
            assert!((t[n].norm() - 1.0).abs() < 1e-14);
            let via_map = cfg.t_to_z(t[n]).unwrap();
            assert!((via_map - z[n]).norm() <= 1e-12 * (1.0 + z[n].norm()));
            assert_eq!(z[n].re, 0.0);
            assert_eq!(z[n], -z[64 - n]);
            assert_eq!(t[n], t[64 - n].conj());
        }
        let product = t.iter().fold(c(1.0, 0.0), |acc, x| acc * x);
        assert!((product - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn matsubara_examples() {
        let beta = 10.0 * PI;
        let bos = matsubara_grid(3, beta, Statistics::Boson).unwrap();
        assert_eq!(bos.len(), 7);
        assert_eq!(bos[3], c(0.0, 0.0));
        let fer = matsubara_grid(3, beta, Statistics::Fermion).unwrap();
        assert_eq!(fer.len(), 6);
        assert!((fer[3] - c(0.0, 0.1)).norm() < 1e-15);
        for (i, z) in fer.iter().enumerate() {
            assert_eq!(z.re, 0.0);
            assert_eq!(*z, -fer[fer.len() - 1 - i]);
        }
        assert!(matsubara_grid(0, beta, Statistics::Boson).is_err());
        assert!(matsubara_grid(1, -1.0, Statistics::Boson).is_err());
    }

    #[test]
    fn noiseless_samples_are_exact() {
        let cfg = cfg();
        let pm = PoleModel::new(vec![c(5.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        let model = Model::Scalar(pm.clone());
        let set = sample(
            &model,
            &cfg,
            Access::Matsubara { n_m: 4, beta: 10.0 * PI, statistics: Statistics::Boson },
            &NoiseSpec::noiseless(),
        )
        .unwrap();
        let SampleValues::Scalar(v) = &set.values else { panic!() };
        assert_eq!(v[4], c(0.2, 0.0));
        for (z, value) in set.points_z.iter().zip(v) {
            assert_eq!(*value, pm.evaluate(*z).unwrap());
        }

        let ra = sample(&model, &cfg, Access::RandomAccess { n_s: 16 }, &NoiseSpec::noiseless()).unwrap();
        let SampleValues::Scalar(v) = &ra.values else { panic!() };
        assert_eq!(v[0], c(0.0, 0.0));
    }

    #[test]
    fn real_models_give_conjugate_paired_samples() {
        let cfg = cfg();
        let pm = PoleModel::new(vec![c(5.0, 0.0), c(-30.0, 0.0)], vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let set = sample(&Model::Scalar(pm), &cfg, Access::RandomAccess { n_s: 32 }, &NoiseSpec::noiseless()).unwrap();
        let SampleValues::Scalar(v) = &set.values else { panic!() };
        for n in 1..32 {
            assert!((v[n] - v[32 - n].conj()).norm() <= 1e-13 * v[n].norm().max(1e-300));
        }
    }

    #[test]
    fn matrix_samples_have_per_entry_noise() {
        let cfg = cfg();
        let eye = DMatrix::<Complex64>::identity(4, 4);
        let m = MatrixPoleModel::new(4, vec![c(5.0, 0.0)], vec![eye]).unwrap();
        let set = sample(
            &Model::Matrix(m.clone()),
            &cfg,
            Access::RandomAccess { n_s: 8 },
            &NoiseSpec::new(1e-3, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(set.values.entries(), 16);
        let g = set.values.matrix(2);
        let exact = m.evaluate(c(0.0, 0.0)).unwrap();
        assert!((g[(0, 0)] - exact[(0, 0)]).norm() > 0.0);
        assert!(g[(0, 0)] != g[(1, 1)]);
        assert_eq!(g[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn external_values_are_length_checked() {
        let cfg = cfg();
        assert!(SampleSet::random_access(&cfg, 8, SampleValues::Scalar(vec![c(0.0, 0.0); 7])).is_err());
        assert!(SampleSet::matsubara(2, 1.0, Statistics::Fermion, SampleValues::Scalar(vec![c(0.0, 0.0); 4])).is_ok());
        let bad = SampleValues::Matrix { nb: 2, data: vec![c(0.0, 0.0); 6] };
        assert!(SampleSet::matsubara(2, 1.0, Statistics::Fermion, bad).is_err());
    }
}
