//! End-to-end recovery and comparison against ground truth.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mobius::{DiskPairConfig, Side};
use crate::model::{MatrixPoleModel, Model, PoleModel};
use crate::prony::{recover_side, PronyConfig, SideRecovery};
use crate::residues::{fit_residues, rank1_extract, Residues};
use crate::sampling::{Access, SampleSet};
use crate::spectral::{fourier_coefficients, matsubara_resolves, FourierCoeffs};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub cfg: DiskPairConfig,
    pub access: Access,
    pub prony: PronyConfig,
    /// Extract rank-one factors of matrix residues.
    pub rank1: bool,
    /// Keep the Fourier coefficients in the diagnostics.
    pub keep_coefficients: bool,
}

impl RecoveryConfig {
    pub fn new(cfg: DiskPairConfig, access: Access, prony: PronyConfig) -> Self {
        Self { cfg, access, prony, rank1: false, keep_coefficients: false }
    }

    /// Checks the parameters and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.prony.validate()?;
        let mut warnings = Vec::new();
        match self.access {
            Access::RandomAccess { n_s } => {
                let needed = 2 * (self.prony.d_max + self.prony.l);
                if n_s % 2 != 0 || n_s < needed {
                    return Err(Error::InvalidParameter(format!("N_s must be even and >= {needed}, got {n_s}")));
                }
                let resolution = 10.0 * (self.cfg.b() / self.cfg.a()).sqrt();
                if (n_s as f64) <= resolution {
                    warnings.push(format!("N_s = {n_s} is not large against sqrt(b/a); circle quadrature may be inaccurate"));
                }
            }
            Access::Matsubara { beta, .. } => {
                if !matsubara_resolves(&self.cfg, beta) {
                    warnings.push(format!("a = {} is not large against pi/beta; Matsubara quadrature may be inaccurate", self.cfg.a()));
                }
            }
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOneFactor {
    pub vector: DVector<Complex64>,
    /// `|lambda_2| / |lambda_1|` of the symmetrized residue.
    pub quality: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub inside: Option<SideRecovery>,
    pub outside: Option<SideRecovery>,
    /// Recovered roots whose z-plane image fell on the wrong side of the axis.
    pub rejected_poles: Vec<Complex64>,
    pub fit_residual: Option<f64>,
    pub condition: Option<f64>,
    pub warnings: Vec<String>,
    pub coefficients: Option<FourierCoeffs>,
}

/// Wall-clock seconds spent per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub spectral: f64,
    pub prony: f64,
    pub residues: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// z-plane poles: inside (right half-plane) first, then outside.
    pub poles: Vec<Complex64>,
    pub residues: Residues,
    pub factors: Option<Vec<RankOneFactor>>,
    pub diagnostics: Diagnostics,
    pub timing: Timing,
}

impl RecoveryResult {
    pub fn inside_count(&self) -> usize {
        self.poles.iter().filter(|p| p.re > 0.0).count()
    }

    pub fn outside_count(&self) -> usize {
        self.poles.iter().filter(|p| p.re < 0.0).count()
    }

    /// Recovered scalar model, if the data were scalar.
    pub fn scalar_model(&self) -> Option<PoleModel> {
        match &self.residues {
            Residues::Scalar(r) => Some(PoleModel { poles: self.poles.clone(), residues: r.clone() }),
            Residues::Matrix(_) => None,
        }
    }

    pub fn matrix_model(&self) -> Option<MatrixPoleModel> {
        match &self.residues {
            Residues::Matrix(r) => {
                let nb = r.first().map_or(1, |m| m.nrows());
                MatrixPoleModel::new(nb, self.poles.clone(), r.clone()).ok()
            }
            Residues::Scalar(_) => None,
        }
    }
}

/// A stage failed; whatever was computed before the failure is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryFailure {
    pub error: Error,
    pub diagnostics: Diagnostics,
}

impl std::fmt::Display for RecoveryFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "recovery failed: {}", self.error)
    }
}

impl std::error::Error for RecoveryFailure {}

fn fail(error: Error, diagnostics: Diagnostics) -> RecoveryFailure {
    RecoveryFailure { error, diagnostics }
}

/// Runs Fourier analysis, Prony on both sides, the Möbius map back to the
/// z-plane and the residue fit.
pub fn recover(samples: &SampleSet, config: &RecoveryConfig) -> std::result::Result<RecoveryResult, RecoveryFailure> {
    let start = Instant::now();
    let mut diag = Diagnostics::default();
    let mut timing = Timing::default();

    match config.validate() {
        Ok(w) => diag.warnings = w,
        Err(e) => return Err(fail(e, diag)),
    }
    if samples.access != config.access {
        return Err(fail(
            Error::SampleMismatch(format!("samples use {:?} but config expects {:?}", samples.access, config.access)),
            diag,
        ));
    }

    let t0 = Instant::now();
    let coeffs = match fourier_coefficients(samples, &config.cfg, config.prony.k_max()) {
        Ok(c) => c,
        Err(e) => return Err(fail(e, diag)),
    };
    timing.spectral = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let (inside, outside) = rayon::join(
        || recover_side(&coeffs, Side::Inside, &config.prony),
        || recover_side(&coeffs, Side::Outside, &config.prony),
    );
    if config.keep_coefficients {
        diag.coefficients = Some(coeffs);
    }
    let (inside, outside) = match (inside, outside) {
        (Ok(i), Ok(o)) => (i, o),
        (Err(e), _) | (_, Err(e)) => return Err(fail(e, diag)),
    };

    let mut poles = Vec::with_capacity(inside.roots.len() + outside.roots.len());
    for (side, rec) in [(Side::Inside, &inside), (Side::Outside, &outside)] {
        let mut mapped: Vec<Complex64> = Vec::new();
        for &root in &rec.roots {
            let z = match side {
                Side::Inside => config.cfg.t_to_z(root),
                Side::Outside => config.cfg.reciprocal_t_to_z(root),
            };
            match z {
                Ok(z) if z.is_finite() && (side == Side::Inside) == (z.re > 0.0) && z.re != 0.0 => mapped.push(z),
                Ok(z) => diag.rejected_poles.push(z),
                Err(_) => diag.rejected_poles.push(Complex64::new(f64::NAN, f64::NAN)),
            }
        }
        mapped.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        poles.extend(mapped);
    }
    diag.inside = Some(inside);
    diag.outside = Some(outside);
    timing.prony = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let fit = match fit_residues(&poles, samples, config.prony.real_mode) {
        Ok(f) => f,
        Err(e) => return Err(fail(e, diag)),
    };
    diag.fit_residual = Some(fit.residual_norm);
    diag.condition = Some(fit.condition);

    let factors = match (&fit.residues, config.rank1) {
        (Residues::Matrix(r), true) => {
            let mut out = Vec::with_capacity(r.len());
            for m in r {
                match rank1_extract(m) {
                    Ok((vector, quality)) => out.push(RankOneFactor { vector, quality }),
                    Err(e) => return Err(fail(e, diag)),
                }
            }
            Some(out)
        }
        _ => None,
    };
    timing.residues = t0.elapsed().as_secs_f64();
    timing.total = start.elapsed().as_secs_f64();

    Ok(RecoveryResult { poles, residues: fit.residues, factors, diagnostics: diag, timing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub truth: usize,
    pub recovered: usize,
    pub distance: f64,
    /// `|r_hat - r|` (scalar) or `||R_hat - R||_F` (matrix).
    pub residue_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_true: Vec<usize>,
    pub unmatched_recovered: Vec<usize>,
    pub max_error: Option<f64>,
    pub mean_error: Option<f64>,
    pub max_residue_error: Option<f64>,
    pub cap: f64,
}

impl MatchReport {
    pub fn all_matched(&self) -> bool {
        self.unmatched_true.is_empty() && self.unmatched_recovered.is_empty()
    }

    /// Distance at which true pole `i` was matched, if it was.
    pub fn distance_of(&self, truth: usize) -> Option<f64> {
        self.pairs.iter().find(|p| p.truth == truth).map(|p| p.distance)
    }
}

/// Minimum-cost perfect assignment on a square cost matrix. Returns
/// `assignment[row] = column`.
pub fn hungarian(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square cost matrix");
    // Potentials formulation with 1-based sentinels.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Optimal one-to-one matching of `truth` against `recovered` where any pair
/// farther apart than `cap` counts as unmatched.
pub fn match_pole_sets(truth: &[Complex64], recovered: &[Complex64], cap: f64) -> MatchReport {
    let n = truth.len().max(recovered.len());
    let mut report = MatchReport { cap, ..Default::default() };
    if n > 0 {
        let cost = DMatrix::from_fn(n, n, |i, j| match (truth.get(i), recovered.get(j)) {
            (Some(a), Some(b)) => (a - b).norm().min(cap),
            _ => cap,
        });
        let assignment = hungarian(&cost);
        let mut recovered_used = vec![false; recovered.len()];
        for (i, &j) in assignment.iter().enumerate() {
            if i >= truth.len() || j >= recovered.len() {
                continue;
            }
            let d = (truth[i] - recovered[j]).norm();
            if d <= cap {
                report.pairs.push(MatchedPair { truth: i, recovered: j, distance: d, residue_error: None });
                recovered_used[j] = true;
            }
        }
        report.unmatched_true = (0..truth.len()).filter(|i| report.pairs.iter().all(|p| p.truth != *i)).collect();
        report.unmatched_recovered = (0..recovered.len()).filter(|&j| !recovered_used[j]).collect();
    }
    if !report.pairs.is_empty() {
        let d: Vec<f64> = report.pairs.iter().map(|p| p.distance).collect();
        report.max_error = Some(d.iter().copied().fold(0.0, f64::max));
        report.mean_error = Some(d.iter().sum::<f64>() / d.len() as f64);
    }
    report
}

/// Default unmatched distance cap `(b - a)/4`.
pub fn default_match_cap(cfg: &DiskPairConfig) -> f64 {
    0.25 * (cfg.b() - cfg.a())
}

fn finish_residue_errors(report: &mut MatchReport, errors: impl Fn(usize, usize) -> Option<f64>) {
    for p in &mut report.pairs {
        p.residue_error = errors(p.truth, p.recovered);
    }
    report.max_residue_error = report.pairs.iter().filter_map(|p| p.residue_error).reduce(f64::max);
}

pub fn match_poles(truth: &PoleModel, result: &RecoveryResult, cap: f64) -> MatchReport {
    let mut report = match_pole_sets(&truth.poles, &result.poles, cap);
    if let Residues::Scalar(r) = &result.residues {
        finish_residue_errors(&mut report, |i, j| Some((truth.residues[i] - r[j]).norm()));
    }
    report
}

pub fn match_matrix_poles(truth: &MatrixPoleModel, result: &RecoveryResult, cap: f64) -> MatchReport {
    let mut report = match_pole_sets(&truth.poles, &result.poles, cap);
    if let Residues::Matrix(r) = &result.residues {
        finish_residue_errors(&mut report, |i, j| Some((&truth.residues[i] - &r[j]).norm()));
    }
    report
}

pub fn match_model(truth: &Model, result: &RecoveryResult, cap: f64) -> MatchReport {
    match truth {
        Model::Scalar(m) => match_poles(m, result, cap),
        Model::Matrix(m) => match_matrix_poles(m, result, cap),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_scenario, NoiseSpec, ScenarioKind};
    use crate::sampling::{sample, SampleValues};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> DiskPairConfig {
        DiskPairConfig::new(1.0, 100.0).unwrap()
    }

    fn brute_force_assignment(cost: &DMatrix<f64>) -> f64 {
        fn go(cost: &DMatrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.nrows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.ncols() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[(row, j)] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost.ncols()])
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            for _ in 0..20 {
                let cost = DMatrix::from_fn(n, n, |_, _| next());
                let a = hungarian(&cost);
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
                assert!((total - brute_force_assignment(&cost)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let p = vec![c(1.0, 2.0), c(-3.0, 0.0), c(40.0, -5.0)];
        let r = match_pole_sets(&p, &p, 10.0);
        assert!(r.all_matched());
        assert_eq!(r.max_error, Some(0.0));
    }

    #[test]
    fn missing_poles_are_reported() {
        let truth: Vec<_> = (0..8).map(|i| c(10.0 * i as f64 + 2.0, 1.0)).collect();
        let rec = truth[..6].to_vec();
        let r = match_pole_sets(&truth, &rec, 5.0);
        assert_eq!(r.unmatched_true, vec![6, 7]);
        assert!(r.unmatched_recovered.is_empty());
    }

    #[test]
    fn uniform_shift_gives_shift_error() {
        let truth = vec![c(1.0, 2.0), c(-30.0, 0.0), c(40.0, -5.0)];
        let delta = c(0.03, -0.04);
        let rec: Vec<_> = truth.iter().rev().map(|p| p + delta).collect();
        let r = match_pole_sets(&truth, &rec, 10.0);
        assert!((r.max_error.unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(r.pairs.len(), 3);
    }

    #[test]
    fn far_poles_are_unmatched() {
        let r = match_pole_sets(&[c(0.0, 0.0)], &[c(100.0, 0.0)], 24.75);
        assert_eq!(r.unmatched_true, vec![0]);
        assert_eq!(r.unmatched_recovered, vec![0]);
        assert!(r.max_error.is_none());
    }

    #[test]
    fn zero_function_recovers_nothing() {
        let cfg = cfg();
        let samples = SampleSet::random_access(&cfg, 1024, SampleValues::Scalar(vec![c(0.0, 0.0); 1024])).unwrap();
        let config = RecoveryConfig::new(cfg, samples.access, PronyConfig::for_noise(12, 0.0, false));
        let res = recover(&samples, &config).unwrap();
        assert!(res.poles.is_empty());
        assert!(res.residues.is_empty());
    }

    #[test]
    fn config_checks() {
        let cfg = cfg();
        let prony = PronyConfig::for_noise(12, 0.0, false);
        assert!(RecoveryConfig::new(cfg, Access::RandomAccess { n_s: 40 }, prony).validate().is_err());
        assert!(RecoveryConfig::new(cfg, Access::RandomAccess { n_s: 49 }, prony).validate().is_err());
        let w = RecoveryConfig::new(cfg, Access::RandomAccess { n_s: 64 }, prony).validate().unwrap();
        assert_eq!(w.len(), 1);
        assert!(RecoveryConfig::new(cfg, Access::RandomAccess { n_s: 1024 }, prony).validate().unwrap().is_empty());
    }

    #[test]
    fn noiseless_complex_scenario_is_exact() {
        let cfg = cfg();
        let Model::Scalar(truth) = generate_scenario(ScenarioKind::Complex8, &cfg, 0) else { panic!() };
        let access = Access::RandomAccess { n_s: 1024 };
        let s = sample(&Model::Scalar(truth.clone()), &cfg, access, &NoiseSpec::noiseless()).unwrap();
        let res = recover(&s, &RecoveryConfig::new(cfg, access, PronyConfig::for_noise(12, 0.0, false))).unwrap();
        assert_eq!(res.inside_count(), 4);
        assert_eq!(res.outside_count(), 4);
        let report = match_poles(&truth, &res, default_match_cap(&cfg));
        assert!(report.all_matched());
        assert!(report.max_error.unwrap() < 1e-8, "{report:?}");
        assert!(report.max_residue_error.unwrap() < 1e-8);
    }

    #[test]
    fn stage_failure_keeps_diagnostics() {
        let cfg = cfg();
        let samples = SampleSet::random_access(&cfg, 64, SampleValues::Scalar(vec![c(0.0, 0.0); 64])).unwrap();
        let config = RecoveryConfig::new(cfg, Access::RandomAccess { n_s: 1024 }, PronyConfig::for_noise(12, 0.0, false));
        let err = recover(&samples, &config).unwrap_err();
        assert!(matches!(err.error, Error::SampleMismatch(_)));
    }
}
