//! Pole/residue models of scalar and matrix-valued functions, multiplicative
//! noise, and the synthetic test scenarios.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{DiskPairConfig, Side};

/// `g(z) = sum_j r_j / (xi_j - z)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoleModel {
    pub poles: Vec<Complex64>,
    pub residues: Vec<Complex64>,
}

impl PoleModel {
    pub fn new(poles: Vec<Complex64>, residues: Vec<Complex64>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::InvalidParameter(format!(
                "{} poles but {} residues",
                poles.len(),
                residues.len()
            )));
        }
        Ok(Self { poles, residues })
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Checks the conditions a ground-truth model must satisfy: at least one
    /// pole, pairwise distinct poles, every pole inside a disk of `cfg`.
    pub fn validate_ground_truth(&self, cfg: &DiskPairConfig) -> Result<()> {
        validate_poles(&self.poles, cfg)
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        check_off_poles(&self.poles, z)?;
        Ok(self
            .poles
            .iter()
            .zip(&self.residues)
            .map(|(&xi, &r)| r / (xi - z))
            .sum())
    }

    pub fn is_real(&self) -> bool {
        self.poles.iter().chain(&self.residues).all(|v| v.im == 0.0)
    }
}

/// `G(z) = sum_j R_j / (xi_j - z)` with `nb x nb` residue matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPoleModel {
    pub poles: Vec<Complex64>,
    pub residues: Vec<DMatrix<Complex64>>,
    nb: usize,
    /// Rank-one factors `v_j` with `R_j = v_j v_j^*`, when the model was built from them.
    pub factors: Option<Vec<DVector<Complex64>>>,
}

impl MatrixPoleModel {
    pub fn new(nb: usize, poles: Vec<Complex64>, residues: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if nb == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be at least 1".into()));
        }
        if poles.len() != residues.len() {
            return Err(Error::InvalidParameter(format!(
                "{} poles but {} residue matrices",
                poles.len(),
                residues.len()
            )));
        }
        if let Some(bad) = residues.iter().position(|r| r.shape() != (nb, nb)) {
            return Err(Error::InvalidParameter(format!(
                "residue {bad} has shape {:?}, expected {nb}x{nb}",
                residues[bad].shape()
            )));
        }
        Ok(Self { poles, residues, nb, factors: None })
    }

    /// Builds the rank-one model `R_j = v_j v_j^*`.
    pub fn from_factors(poles: Vec<Complex64>, factors: Vec<DVector<Complex64>>) -> Result<Self> {
        let nb = factors.first().map_or(0, |v| v.len());
        if factors.iter().any(|v| v.len() != nb) {
            return Err(Error::InvalidParameter("rank-one factors differ in length".into()));
        }
        let residues = factors.iter().map(|v| v * v.adjoint()).collect();
        let mut model = Self::new(nb.max(1), poles, residues)?;
        model.factors = Some(factors);
        Ok(model)
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn validate_ground_truth(&self, cfg: &DiskPairConfig) -> Result<()> {
        validate_poles(&self.poles, cfg)
    }

    pub fn evaluate(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        check_off_poles(&self.poles, z)?;
        let mut out = DMatrix::zeros(self.nb, self.nb);
        for (&xi, r) in self.poles.iter().zip(&self.residues) {
            out += r * (Complex64::new(1.0, 0.0) / (xi - z));
        }
        Ok(out)
    }

    /// Evaluates into a row-major buffer of length `nb * nb`.
    pub(crate) fn evaluate_row_major(&self, z: Complex64, out: &mut [Complex64]) -> Result<()> {
        check_off_poles(&self.poles, z)?;
        out.fill(Complex64::new(0.0, 0.0));
        let nb = self.nb;
        for (&xi, r) in self.poles.iter().zip(&self.residues) {
            let w = Complex64::new(1.0, 0.0) / (xi - z);
            for i in 0..nb {
                for j in 0..nb {
                    out[i * nb + j] += r[(i, j)] * w;
                }
            }
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.poles.iter().all(|p| p.im == 0.0)
            && self.residues.iter().all(|r| r.iter().all(|v| v.im == 0.0))
    }
}

/// Either kind of model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Scalar(PoleModel),
    Matrix(MatrixPoleModel),
}

impl Model {
    pub fn poles(&self) -> &[Complex64] {
        match self {
            Model::Scalar(m) => &m.poles,
            Model::Matrix(m) => &m.poles,
        }
    }

    pub fn validate_ground_truth(&self, cfg: &DiskPairConfig) -> Result<()> {
        validate_poles(self.poles(), cfg)
    }
}

fn check_off_poles(poles: &[Complex64], z: Complex64) -> Result<()> {
    if poles.iter().any(|&xi| xi == z) {
        return Err(Error::Domain(format!("evaluation point {z} coincides with a pole")));
    }
    Ok(())
}

fn validate_poles(poles: &[Complex64], cfg: &DiskPairConfig) -> Result<()> {
    if poles.is_empty() {
        return Err(Error::InvalidParameter("ground-truth model has no poles".into()));
    }
    for (i, &p) in poles.iter().enumerate() {
        if p.re == 0.0 || !cfg.contains(p) {
            return Err(Error::InvalidParameter(format!("pole {i} = {p} lies outside both disks")));
        }
        if poles[..i].contains(&p) {
            return Err(Error::InvalidParameter(format!("pole {i} = {p} is repeated")));
        }
    }
    Ok(())
}

/// Multiplicative complex Gaussian noise `value * (1 + sigma * eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }

    pub fn noiseless() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }

    pub fn stream(&self) -> NoiseStream {
        NoiseStream { sigma: self.sigma, rng: ChaCha8Rng::seed_from_u64(self.seed) }
    }
}

/// Random stream for one sampling run. Draws happen in call order.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    sigma: f64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Standard complex normal `(X + iY)/sqrt(2)`, so that `E|eta|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let x: f64 = self.rng.sample(StandardNormal);
        let y: f64 = self.rng.sample(StandardNormal);
        Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn add_noise(&mut self, value: Complex64) -> Complex64 {
        if self.sigma == 0.0 {
            return value;
        }
        let eta = self.complex_normal();
        value * (1.0 + self.sigma * eta)
    }

    /// Entrywise noise, drawn in row-major order.
    pub fn add_noise_matrix(&mut self, value: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = value.clone();
        if self.sigma == 0.0 {
            return out;
        }
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[(i, j)] = self.add_noise(out[(i, j)]);
            }
        }
        out
    }

    /// Row-major buffer version of [`add_noise_matrix`](Self::add_noise_matrix).
    pub(crate) fn add_noise_slice(&mut self, values: &mut [Complex64]) {
        if self.sigma == 0.0 {
            return;
        }
        for v in values {
            *v = self.add_noise(*v);
        }
    }
}

/// The synthetic scenarios: four poles in each disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Complex poles drawn uniformly in each disk, complex residues.
    Complex8,
    /// Real poles on the real diameter of each disk, positive residues.
    Real8,
    /// Real poles with `4x4` rank-one residues `v v^*`.
    Matrix8,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Complex8, ScenarioKind::Real8, ScenarioKind::Matrix8];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Complex8 => "complex8",
            ScenarioKind::Real8 => "real8",
            ScenarioKind::Matrix8 => "matrix8",
        }
    }

    pub fn has_real_poles(self) -> bool {
        !matches!(self, ScenarioKind::Complex8)
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario kind {s:?}")))
    }
}

pub const POLES_PER_DISK: usize = 4;
pub const SCENARIO_NB: usize = 4;
const RESIDUE_MAGNITUDE: (f64, f64) = (0.5, 2.0);

/// Draws a scenario of the given kind. Poles keep a separation of at least
/// `0.05 (b - a)` from each other and stay `1e-3` of a radius from the disk
/// boundary.
pub fn generate_scenario(kind: ScenarioKind, cfg: &DiskPairConfig, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_sep = 0.05 * (cfg.b() - cfg.a());
    let radius = cfg.disk_radius() * (1.0 - 1e-3);

    let mut poles = Vec::with_capacity(2 * POLES_PER_DISK);
    for side in Side::BOTH {
        let center = cfg.disk_center(side);
        let mut placed = 0;
        while placed < POLES_PER_DISK {
            let candidate = if kind.has_real_poles() {
                Complex64::new(center + radius * rng.random_range(-1.0..1.0), 0.0)
            } else {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = rng.random_range(0.0..2.0 * PI);
                center + Complex64::from_polar(r, phi)
            };
            if poles.iter().all(|&p: &Complex64| (p - candidate).norm() >= min_sep) {
                poles.push(candidate);
                placed += 1;
            }
        }
    }

    let magnitude = |rng: &mut ChaCha8Rng| rng.random_range(RESIDUE_MAGNITUDE.0..=RESIDUE_MAGNITUDE.1);
    match kind {
        ScenarioKind::Complex8 => {
            let residues = poles
                .iter()
                .map(|_| {
                    let m = magnitude(&mut rng);
                    Complex64::from_polar(m, rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            Model::Scalar(PoleModel { poles, residues })
        }
        ScenarioKind::Real8 => {
            let residues = poles.iter().map(|_| Complex64::new(magnitude(&mut rng), 0.0)).collect();
            Model::Scalar(PoleModel { poles, residues })
        }
        ScenarioKind::Matrix8 => {
            let factors = poles
                .iter()
                .map(|_| {
                    DVector::from_fn(SCENARIO_NB, |_, _| {
                        let m = magnitude(&mut rng);
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        Complex64::new(sign * m, 0.0)
                    })
                })
                .collect();
            Model::Matrix(MatrixPoleModel::from_factors(poles, factors).expect("consistent factors"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> DiskPairConfig {
        DiskPairConfig::new(1.0, 100.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let m = PoleModel::new(vec![c(5.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        assert!((m.evaluate(c(0.0, 0.0)).unwrap() - c(0.2, 0.0)).norm() < 1e-16);

        let sym = PoleModel::new(vec![c(5.0, 0.0), c(-5.0, 0.0)], vec![c(1.0, 0.0); 2]).unwrap();
        assert_eq!(sym.evaluate(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));

        let m2 = PoleModel::new(vec![c(5.0, 0.0)], vec![c(2.0, 0.0)]).unwrap();
        let v = m2.evaluate(c(0.0, 10.0)).unwrap();
        assert!((v - c(10.0 / 125.0, 20.0 / 125.0)).norm() < 1e-16);

        assert!(matches!(m.evaluate(c(5.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(PoleModel::new(vec![c(1.0, 0.0)], vec![]).is_err());
        let eye = DMatrix::<Complex64>::identity(2, 2);
        assert!(MatrixPoleModel::new(3, vec![c(1.0, 0.0)], vec![eye]).is_err());
    }

    #[test]
    fn matrix_evaluate_examples() {
        let eye = DMatrix::<Complex64>::identity(2, 2);
        let m = MatrixPoleModel::new(2, vec![c(5.0, 0.0)], vec![eye.clone()]).unwrap();
        let v = m.evaluate(c(0.0, 0.0)).unwrap();
        assert!((v - eye * c(0.2, 0.0)).norm() < 1e-16);

        let f = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let m = MatrixPoleModel::from_factors(vec![c(5.0, 0.0)], vec![f]).unwrap();
        let v = m.evaluate(c(0.0, 0.0)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(1.0, 0.0)]) * c(0.2, 0.0);
        assert!((v - expected).norm() < 1e-16);

        let scalar = PoleModel::new(vec![c(3.0, 1.0), c(-4.0, 2.0)], vec![c(1.0, -1.0), c(0.5, 0.0)]).unwrap();
        let as_matrix = MatrixPoleModel::new(
            1,
            scalar.poles.clone(),
            scalar.residues.iter().map(|&r| DMatrix::from_element(1, 1, r)).collect(),
        )
        .unwrap();
        let z = c(0.0, 2.5);
        assert_eq!(as_matrix.evaluate(z).unwrap()[(0, 0)], scalar.evaluate(z).unwrap());
    }

    #[test]
    fn real_model_is_conjugate_symmetric() {
        let m = PoleModel::new(vec![c(3.0, 0.0), c(-7.0, 0.0)], vec![c(1.5, 0.0), c(0.7, 0.0)]).unwrap();
        for y in [-50.0, -1.0, 0.3, 8.0] {
            let z = c(0.2, y);
            let lhs = m.evaluate(z.conj()).unwrap();
            let rhs = m.evaluate(z).unwrap().conj();
            assert!((lhs - rhs).norm() <= 1e-13 * rhs.norm());
        }
    }

    #[test]
    fn evaluation_is_linear_in_models() {
        let m1 = PoleModel::new(vec![c(3.0, 1.0)], vec![c(1.0, 2.0)]).unwrap();
        let m2 = PoleModel::new(vec![c(-6.0, -2.0), c(40.0, 0.0)], vec![c(0.5, 0.0), c(-1.0, 1.0)]).unwrap();
        let union = PoleModel::new(
            [m1.poles.clone(), m2.poles.clone()].concat(),
            [m1.residues.clone(), m2.residues.clone()].concat(),
        )
        .unwrap();
        let z = c(0.0, 3.3);
        let sum = m1.evaluate(z).unwrap() + m2.evaluate(z).unwrap();
        assert!((union.evaluate(z).unwrap() - sum).norm() <= 1e-13 * sum.norm());
    }

    #[test]
    fn zero_sigma_is_bitwise_identity() {
        let mut s = NoiseSpec::new(0.0, 9).unwrap().stream();
        let v = c(0.1234567, -9.87654321);
        assert_eq!(s.add_noise(v).re.to_bits(), v.re.to_bits());
        assert_eq!(s.add_noise(v).im.to_bits(), v.im.to_bits());
        assert!(NoiseSpec::new(-1.0, 0).is_err());
    }

    #[test]
    fn noise_preserves_zero_and_is_reproducible() {
        let spec = NoiseSpec::new(0.3, 42).unwrap();
        let mut s = spec.stream();
        assert_eq!(s.add_noise(c(0.0, 0.0)), c(0.0, 0.0));
        let a: Vec<_> = {
            let mut s = spec.stream();
            (0..10).map(|_| s.add_noise(c(1.0, 1.0))).collect()
        };
        let b: Vec<_> = {
            let mut s = spec.stream();
            (0..10).map(|_| s.add_noise(c(1.0, 1.0))).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn noise_magnitude_matches_monte_carlo() {
        // E|eta| for a standard complex normal is sqrt(pi)/2.
        let sigma = 1e-6;
        let mut s = NoiseSpec::new(sigma, 7).unwrap().stream();
        let draws = 200_000;
        let v = Complex64::from_polar(1.0, 0.7);
        let mean: f64 = (0..draws).map(|_| (s.add_noise(v) - v).norm()).sum::<f64>() / draws as f64;
        let expected = sigma * PI.sqrt() / 2.0;
        assert!((mean - expected).abs() <= 0.05 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn unit_variance_normalisation() {
        let mut s = NoiseSpec::new(1.0, 3).unwrap().stream();
        let n = 100_000;
        let m2: f64 = (0..n).map(|_| s.complex_normal().norm_sqr()).sum::<f64>() / n as f64;
        assert!((m2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn scenarios_satisfy_their_contracts() {
        let cfg = cfg();
        for seed in 0..20 {
            for kind in ScenarioKind::ALL {
                let model = generate_scenario(kind, &cfg, seed);
                model.validate_ground_truth(&cfg).unwrap();
                let poles = model.poles();
                assert_eq!(poles.len(), 8);
                assert_eq!(poles.iter().filter(|p| p.re > 0.0).count(), 4);
                for (i, p) in poles.iter().enumerate() {
                    assert!(cfg.disk_margin(*p) >= 1e-6);
                    for q in &poles[..i] {
                        assert!((p - q).norm() >= 0.05 * 99.0);
                    }
                }
                match (&kind, &model) {
                    (ScenarioKind::Complex8, Model::Scalar(m)) => {
                        assert!(m.residues.iter().all(|r| (0.5..=2.0).contains(&r.norm())));
                    }
                    (ScenarioKind::Real8, Model::Scalar(m)) => {
                        assert!(m.is_real());
                        assert!(m.poles.iter().all(|p| p.re.abs() > 1.0 && p.re.abs() < 100.0));
                    }
                    (ScenarioKind::Matrix8, Model::Matrix(m)) => {
                        assert_eq!(m.nb(), 4);
                        for r in &m.residues {
                            let s = crate::linalg::singular_values(r);
                            assert!(s[1] / s[0] < 1e-12);
                        }
                    }
                    _ => panic!("wrong model type for {kind:?}"),
                }
            }
        }
    }

    #[test]
    fn rank_one_factors_reproduce_residues() {
        let cfg = cfg();
        let Model::Matrix(m) = generate_scenario(ScenarioKind::Matrix8, &cfg, 5) else { panic!() };
        for (r, v) in m.residues.iter().zip(m.factors.as_ref().unwrap()) {
            assert!((r - v * v.adjoint()).norm() <= 1e-12);
        }
    }
}
