//! Command-line front end: scenario files, recovery runs and noise sweeps.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::mobius::DiskPairConfig;
use crate::model::{generate_scenario, MatrixPoleModel, Model, NoiseSpec, PoleModel, ScenarioKind};
use crate::pipeline::{default_match_cap, match_model, recover, Diagnostics, MatchReport, RecoveryConfig, RecoveryResult};
use crate::prony::{default_eps, PronyConfig, SideRecovery};
use crate::residues::Residues;
use crate::sampling::{sample, Access, SampleSet, SampleValues, Statistics};
use crate::spectral::FourierCoeffs;

/// Grid size of generated random-access scenarios.
pub const DEFAULT_N_S: usize = 1024;
/// Matsubara cutoff used when switching a scenario to that grid.
pub const DEFAULT_N_M: usize = 1_000_000;
/// Inverse temperature used when switching a scenario to the Matsubara grid.
pub const DEFAULT_BETA: f64 = 10.0 * PI;

type Row = Vec<Complex64>;

/// Failure of a command, mapped to an exit code by [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

// ---------------------------------------------------------------------------
// Files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub a: f64,
    pub b: f64,
    pub model: ModelSpec,
    pub access: AccessSpec,
    pub noise: NoiseFileSpec,
    pub recovery: RecoverySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub poles: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residues: Option<Vec<Complex64>>,
    /// Row-major `nb x nb` matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residue_matrices: Option<Vec<Vec<Row>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nb: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AccessSpec {
    Random { n_s: usize },
    Matsubara { n_m: usize, beta: f64, statistics: Statistics },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFileSpec {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySpec {
    pub d_max: usize,
    pub l: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub real_mode: bool,
}

impl From<AccessSpec> for Access {
    fn from(a: AccessSpec) -> Self {
        match a {
            AccessSpec::Random { n_s } => Access::RandomAccess { n_s },
            AccessSpec::Matsubara { n_m, beta, statistics } => Access::Matsubara { n_m, beta, statistics },
        }
    }
}

impl From<Access> for AccessSpec {
    fn from(a: Access) -> Self {
        match a {
            Access::RandomAccess { n_s } => AccessSpec::Random { n_s },
            Access::Matsubara { n_m, beta, statistics } => AccessSpec::Matsubara { n_m, beta, statistics },
        }
    }
}

/// Sample values on a grid, for replaying externally produced data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub a: f64,
    pub b: f64,
    pub access: AccessSpec,
    /// Scalar values, one per grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Complex64>>,
    /// Row-major matrices, one per grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_values: Option<Vec<Vec<Row>>>,
}

fn matrix_to_rows(m: &DMatrix<Complex64>) -> Vec<Row> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_to_matrix(rows: &[Row], nb: usize, field: &str) -> CliResult<DMatrix<Complex64>> {
    if rows.len() != nb || rows.iter().any(|r| r.len() != nb) {
        return Err(CliError::Input(format!("{field}: expected a {nb}x{nb} matrix")));
    }
    Ok(DMatrix::from_fn(nb, nb, |i, j| rows[i][j]))
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a Complex64>, field: &str) -> CliResult<()> {
    if values.into_iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Input(format!("{field}: non-finite value")))
    }
}

/// Parses JSON, reporting the path of the offending field on failure.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "document".to_string() } else { path };
        CliError::Input(format!("{field}: {}", e.inner()))
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    parse_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(input(path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

impl ScenarioFile {
    pub fn config(&self) -> CliResult<DiskPairConfig> {
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(CliError::Input("a, b: non-finite value".into()));
        }
        DiskPairConfig::new(self.a, self.b).map_err(input("a, b"))
    }

    /// Ground-truth model, checked against the disks.
    pub fn model(&self) -> CliResult<Model> {
        let cfg = self.config()?;
        let spec = &self.model;
        check_finite(&spec.poles, "model.poles")?;
        let model = match (&spec.residues, &spec.residue_matrices) {
            (Some(r), None) => {
                check_finite(r, "model.residues")?;
                Model::Scalar(PoleModel::new(spec.poles.clone(), r.clone()).map_err(input("model.residues"))?)
            }
            (None, Some(ms)) => {
                let nb = spec.nb.or_else(|| ms.first().map(Vec::len)).unwrap_or(1);
                let mut mats = Vec::with_capacity(ms.len());
                for (j, m) in ms.iter().enumerate() {
                    let field = format!("model.residue_matrices[{j}]");
                    m.iter().try_for_each(|row| check_finite(row, &field))?;
                    mats.push(rows_to_matrix(m, nb, &field)?);
                }
                Model::Matrix(
                    MatrixPoleModel::new(nb, spec.poles.clone(), mats).map_err(input("model.residue_matrices"))?,
                )
            }
            _ => return Err(CliError::Input("model: exactly one of residues, residue_matrices is required".into())),
        };
        model.validate_ground_truth(&cfg).map_err(input("model.poles"))?;
        Ok(model)
    }

    pub fn noise(&self) -> CliResult<NoiseSpec> {
        NoiseSpec::new(self.noise.sigma, self.noise.seed).map_err(input("noise.sigma"))
    }

    pub fn prony(&self) -> PronyConfig {
        let r = &self.recovery;
        PronyConfig {
            d_max: r.d_max,
            l: r.l,
            eps: r.eps.unwrap_or_else(|| default_eps(self.noise.sigma)),
            real_mode: r.real_mode,
        }
    }

    /// Checks every field that parsing alone does not.
    pub fn validate(&self) -> CliResult<()> {
        self.model()?;
        self.noise()?;
        if let AccessSpec::Matsubara { beta, .. } = self.access {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(CliError::Input(format!("access.beta: must be positive, got {beta}")));
            }
        }
        if let Some(eps) = self.recovery.eps {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(CliError::Input(format!("recovery.eps: must be positive, got {eps}")));
            }
        }
        self.prony().validate().map_err(input("recovery"))
    }
}

/// Scenario file for one of the built-in test problems.
pub fn scenario_template(kind: ScenarioKind, seed: u64) -> ScenarioFile {
    let cfg = DiskPairConfig::new(1.0, 100.0).expect("valid disks");
    let model = match generate_scenario(kind, &cfg, seed) {
        Model::Scalar(m) => ModelSpec { poles: m.poles, residues: Some(m.residues), residue_matrices: None, nb: None },
        Model::Matrix(m) => ModelSpec {
            nb: Some(m.nb()),
            residue_matrices: Some(m.residues.iter().map(matrix_to_rows).collect()),
            poles: m.poles,
            residues: None,
        },
    };
    ScenarioFile {
        a: cfg.a(),
        b: cfg.b(),
        model,
        access: AccessSpec::Random { n_s: DEFAULT_N_S },
        noise: NoiseFileSpec { sigma: 0.0, seed: 0 },
        recovery: RecoverySpec {
            d_max: PronyConfig::DEFAULT_D_MAX,
            l: PronyConfig::DEFAULT_D_MAX,
            eps: None,
            real_mode: kind.has_real_poles(),
        },
    }
}

// ---------------------------------------------------------------------------
// Overrides

/// Command-line overrides of scenario fields.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Overrides {
    /// Switch to the random-access grid with this many samples.
    #[arg(long = "n-s")]
    pub n_s: Option<usize>,
    /// Switch to the Matsubara grid with this cutoff.
    #[arg(long = "n-m")]
    pub n_m: Option<usize>,
    /// Inverse temperature of the Matsubara grid.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Matsubara statistics: boson or fermion.
    #[arg(long)]
    pub statistics: Option<Statistics>,
    #[arg(long = "d-max")]
    pub d_max: Option<usize>,
    /// Hankel rows (defaults to max(l, d_max)).
    #[arg(long)]
    pub l: Option<usize>,
    /// Rank threshold (defaults to max(10 sigma, 1e-12)).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Constrain poles to the real axis.
    #[arg(long = "real-mode", num_args = 0..=1, default_missing_value = "true")]
    pub real_mode: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, s: &mut ScenarioFile) {
        let matsubara = self.n_m.is_some() || self.beta.is_some() || self.statistics.is_some();
        if let Some(n_s) = self.n_s {
            s.access = AccessSpec::Random { n_s };
        } else if matsubara {
            let (n_m, beta, statistics) = match s.access {
                AccessSpec::Matsubara { n_m, beta, statistics } => (n_m, beta, statistics),
                AccessSpec::Random { .. } => (DEFAULT_N_M, DEFAULT_BETA, Statistics::Boson),
            };
            s.access = AccessSpec::Matsubara {
                n_m: self.n_m.unwrap_or(n_m),
                beta: self.beta.unwrap_or(beta),
                statistics: self.statistics.unwrap_or(statistics),
            };
        }
        if let Some(d) = self.d_max {
            s.recovery.d_max = d;
            s.recovery.l = s.recovery.l.max(d);
        }
        if let Some(l) = self.l {
            s.recovery.l = l;
        }
        if let Some(eps) = self.eps {
            s.recovery.eps = Some(eps);
        }
        if let Some(r) = self.real_mode {
            s.recovery.real_mode = r;
        }
    }
}

// ---------------------------------------------------------------------------
// Result document

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ResidueOutput {
    Scalar(Vec<Complex64>),
    Matrix(Vec<Vec<Row>>),
}

impl From<&Residues> for ResidueOutput {
    fn from(r: &Residues) -> Self {
        match r {
            Residues::Scalar(v) => ResidueOutput::Scalar(v.clone()),
            Residues::Matrix(m) => ResidueOutput::Matrix(m.iter().map(matrix_to_rows).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorOutput {
    pub vector: Vec<Complex64>,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsOutput {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub inside: Option<SideRecovery>,
    pub outside: Option<SideRecovery>,
    pub rejected_poles: Vec<Complex64>,
    pub fit_residual: Option<f64>,
    pub condition: Option<f64>,
    pub warnings: Vec<String>,
}

impl DiagnosticsOutput {
    fn new(d: &Diagnostics, error: Option<&Error>) -> Self {
        Self {
            status: if error.is_some() { "failed" } else { "ok" }.into(),
            error: error.map(ToString::to_string),
            inside: d.inside.clone(),
            outside: d.outside.clone(),
            rejected_poles: d.rejected_poles.clone(),
            fit_residual: d.fit_residual,
            condition: d.condition,
            warnings: d.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutput {
    pub truth: usize,
    pub recovered: usize,
    pub true_pole: Complex64,
    pub recovered_pole: Complex64,
    pub distance: f64,
    pub residue_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchOutput {
    pub cap: f64,
    pub pairs: Vec<PairOutput>,
    pub unmatched_true: Vec<Complex64>,
    pub unmatched_recovered: Vec<Complex64>,
    pub max_error: Option<f64>,
    pub mean_error: Option<f64>,
    pub max_residue_error: Option<f64>,
}

impl MatchOutput {
    fn new(report: &MatchReport, truth: &[Complex64], recovered: &[Complex64]) -> Self {
        Self {
            cap: report.cap,
            pairs: report
                .pairs
                .iter()
                .map(|p| PairOutput {
                    truth: p.truth,
                    recovered: p.recovered,
                    true_pole: truth[p.truth],
                    recovered_pole: recovered[p.recovered],
                    distance: p.distance,
                    residue_error: p.residue_error,
                })
                .collect(),
            unmatched_true: report.unmatched_true.iter().map(|&i| truth[i]).collect(),
            unmatched_recovered: report.unmatched_recovered.iter().map(|&j| recovered[j]).collect(),
            max_error: report.max_error,
            mean_error: report.mean_error,
            max_residue_error: report.max_residue_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingOutput {
    pub spectral: f64,
    pub prony: f64,
    pub residues: f64,
    pub total: f64,
}

/// Coefficient table: `negative[m-1] = g_hat_{-m}`, `positive[k-1] = g_hat_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub k_max: usize,
    pub negative: Vec<Vec<Row>>,
    pub positive: Vec<Vec<Row>>,
}

impl From<&FourierCoeffs> for CoefficientTable {
    fn from(c: &FourierCoeffs) -> Self {
        let k = c.k_max() as i64;
        let table = |sign: i64| {
            (1..=k).map(|m| matrix_to_rows(c.get(sign * m).expect("order in range"))).collect()
        };
        Self { k_max: c.k_max(), negative: table(-1), positive: table(1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub recovered_poles: Vec<Complex64>,
    pub residues: Option<ResidueOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank1_factors: Option<Vec<FactorOutput>>,
    pub diagnostics: DiagnosticsOutput,
    pub match_report: Option<MatchOutput>,
    pub timing: Option<TimingOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientTable>,
}

// ---------------------------------------------------------------------------
// Commands

/// Everything needed to run one recovery.
struct Prepared {
    cfg: DiskPairConfig,
    truth: Model,
    config: RecoveryConfig,
}

fn prepare(scenario: &ScenarioFile) -> CliResult<Prepared> {
    scenario.validate()?;
    let cfg = scenario.config()?;
    let truth = scenario.model()?;
    let mut config = RecoveryConfig::new(cfg, scenario.access.into(), scenario.prony());
    config.rank1 = matches!(truth, Model::Matrix(_));
    config.validate().map_err(input("recovery"))?;
    Ok(Prepared { cfg, truth, config })
}

fn draw(p: &Prepared, noise: &NoiseSpec) -> CliResult<SampleSet> {
    sample(&p.truth, &p.cfg, p.config.access, noise).map_err(|e| CliError::Input(format!("sampling: {e}")))
}

/// Writes a built-in scenario to `out`.
pub fn cmd_generate(kind: ScenarioKind, seed: u64, out: &Path) -> CliResult<ScenarioFile> {
    let scenario = scenario_template(kind, seed);
    write_text(out, &to_json(&scenario))?;
    Ok(scenario)
}

/// Options of [`cmd_run`] besides the scenario overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub dump_coeffs: bool,
    pub timing: bool,
    /// Replay these samples instead of drawing them from the model.
    pub samples: Option<PathBuf>,
    /// Also write the samples used.
    pub dump_samples: Option<PathBuf>,
}

fn sample_file(scenario: &ScenarioFile, s: &SampleSet) -> SampleFile {
    let (values, matrix_values) = match &s.values {
        SampleValues::Scalar(v) => (Some(v.clone()), None),
        SampleValues::Matrix { .. } => (None, Some((0..s.len()).map(|n| matrix_to_rows(&s.values.matrix(n))).collect())),
    };
    SampleFile { a: scenario.a, b: scenario.b, access: s.access.into(), values, matrix_values }
}

fn load_samples(path: &Path, p: &Prepared) -> CliResult<SampleSet> {
    let file: SampleFile = read_json(path)?;
    if file.a != p.cfg.a() || file.b != p.cfg.b() {
        return Err(CliError::Input(format!("{}: a, b differ from the scenario", path.display())));
    }
    let values = match (file.values, file.matrix_values) {
        (Some(v), None) => {
            check_finite(&v, "values")?;
            SampleValues::Scalar(v)
        }
        (None, Some(ms)) => {
            let nb = ms.first().map_or(1, Vec::len);
            let mut data = Vec::with_capacity(ms.len() * nb * nb);
            for (n, m) in ms.iter().enumerate() {
                let field = format!("matrix_values[{n}]");
                for row in rows_to_matrix(m, nb, &field)?.row_iter() {
                    data.extend(row.iter());
                }
            }
            check_finite(&data, "matrix_values")?;
            SampleValues::Matrix { nb, data }
        }
        _ => return Err(CliError::Input("exactly one of values, matrix_values is required".into())),
    };
    let set = match file.access {
        AccessSpec::Random { n_s } => SampleSet::random_access(&p.cfg, n_s, values),
        AccessSpec::Matsubara { n_m, beta, statistics } => SampleSet::matsubara(n_m, beta, statistics, values),
    };
    set.map_err(input(path.display()))
}

fn run_output(p: &Prepared, outcome: &Result<RecoveryResult, crate::pipeline::RecoveryFailure>, timing: bool) -> RunOutput {
    match outcome {
        Ok(res) => {
            let report = match_model(&p.truth, res, default_match_cap(&p.cfg));
            RunOutput {
                recovered_poles: res.poles.clone(),
                residues: Some((&res.residues).into()),
                rank1_factors: res.factors.as_ref().map(|fs| {
                    fs.iter().map(|f| FactorOutput { vector: f.vector.iter().copied().collect(), quality: f.quality }).collect()
                }),
                diagnostics: DiagnosticsOutput::new(&res.diagnostics, None),
                match_report: Some(MatchOutput::new(&report, p.truth.poles(), &res.poles)),
                timing: timing.then(|| TimingOutput {
                    spectral: res.timing.spectral,
                    prony: res.timing.prony,
                    residues: res.timing.residues,
                    total: res.timing.total,
                }),
                coefficients: res.diagnostics.coefficients.as_ref().map(Into::into),
            }
        }
        Err(fail) => RunOutput {
            recovered_poles: Vec::new(),
            residues: None,
            rank1_factors: None,
            diagnostics: DiagnosticsOutput::new(&fail.diagnostics, Some(&fail.error)),
            match_report: None,
            timing: None,
            coefficients: fail.diagnostics.coefficients.as_ref().map(Into::into),
        },
    }
}

/// Samples the scenario (or replays samples), recovers and compares against
/// the ground truth. The result is written even when recovery fails.
pub fn cmd_run(scenario_path: &Path, out: &Path, overrides: &Overrides, opts: &RunOptions) -> CliResult<RunOutput> {
    let mut scenario: ScenarioFile = read_json(scenario_path)?;
    overrides.apply(&mut scenario);
    if let Some(sigma) = opts.sigma {
        scenario.noise.sigma = sigma;
    }
    if let Some(seed) = opts.seed {
        scenario.noise.seed = seed;
    }
    let mut p = prepare(&scenario)?;
    p.config.keep_coefficients = opts.dump_coeffs;
    let samples = match &opts.samples {
        Some(path) => {
            let s = load_samples(path, &p)?;
            p.config.access = s.access;
            s
        }
        None => draw(&p, &scenario.noise()?)?,
    };
    if let Some(path) = &opts.dump_samples {
        write_text(path, &to_json(&sample_file(&scenario, &samples)))?;
    }
    let outcome = recover(&samples, &p.config);
    let output = run_output(&p, &outcome, opts.timing);
    write_text(out, &to_json(&output))?;
    match outcome {
        Ok(_) => Ok(output),
        Err(fail) => Err(CliError::Numerical(fail.to_string())),
    }
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub seed: u64,
    pub n_recovered: usize,
    pub max_matched_error: Option<f64>,
    pub mean_matched_error: Option<f64>,
    pub unmatched_true: usize,
    pub unmatched_recovered: usize,
    pub fit_residual: Option<f64>,
    pub status: String,
}

/// One point of the pole scatter table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub sigma: f64,
    pub seed: u64,
    pub set: &'static str,
    pub re: f64,
    pub im: f64,
}

/// Path of the scatter table written next to a sweep table.
pub fn scatter_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_poles.csv"))
}

fn sweep_cell(p: &Prepared, sigma: f64, seed: u64) -> (SweepRow, Vec<ScatterRow>) {
    let mut row = SweepRow {
        sigma,
        seed,
        n_recovered: 0,
        max_matched_error: None,
        mean_matched_error: None,
        unmatched_true: p.truth.poles().len(),
        unmatched_recovered: 0,
        fit_residual: None,
        status: "ok".into(),
    };
    let point = |set, z: &Complex64| ScatterRow { sigma, seed, set, re: z.re, im: z.im };
    let mut scatter: Vec<ScatterRow> = p.truth.poles().iter().map(|z| point("true", z)).collect();
    let outcome = NoiseSpec::new(sigma, seed)
        .map_err(|e| e.to_string())
        .and_then(|noise| sample(&p.truth, &p.cfg, p.config.access, &noise).map_err(|e| e.to_string()))
        .and_then(|s| recover(&s, &p.config).map_err(|f| f.to_string()));
    match outcome {
        Ok(res) => {
            let report = match_model(&p.truth, &res, default_match_cap(&p.cfg));
            row.n_recovered = res.poles.len();
            row.max_matched_error = report.max_error;
            row.mean_matched_error = report.mean_error;
            row.unmatched_true = report.unmatched_true.len();
            row.unmatched_recovered = report.unmatched_recovered.len();
            row.fit_residual = res.diagnostics.fit_residual;
            scatter.extend(res.poles.iter().map(|z| point("recovered", z)));
        }
        Err(e) => row.status = format!("failed: {e}"),
    }
    (row, scatter)
}

fn csv_text<T: Serialize>(rows: &[T], header: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub const SWEEP_HEADER: [&str; 9] = [
    "sigma",
    "seed",
    "n_recovered",
    "max_matched_error",
    "mean_matched_error",
    "unmatched_true",
    "unmatched_recovered",
    "fit_residual",
    "status",
];

pub const SCATTER_HEADER: [&str; 5] = ["sigma", "seed", "set", "re", "im"];

/// Runs every `(sigma, seed)` cell in parallel and writes the sweep table to
/// `out` and the pole scatter to [`scatter_path`]. Rows are ordered by
/// `(sigma, seed)` in the order given.
pub fn cmd_sweep(
    scenario_path: &Path,
    sigmas: &[f64],
    seeds: &[u64],
    out: &Path,
    overrides: &Overrides,
) -> CliResult<Vec<SweepRow>> {
    let mut scenario: ScenarioFile = read_json(scenario_path)?;
    overrides.apply(&mut scenario);
    if let Some(&bad) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(CliError::Input(format!("--sigma: must be finite and non-negative, got {bad}")));
    }
    let p = prepare(&scenario)?;
    let cells: Vec<(f64, u64)> = sigmas.iter().flat_map(|&s| seeds.iter().map(move |&k| (s, k))).collect();
    let results: Vec<(SweepRow, Vec<ScatterRow>)> = cells
        .par_iter()
        .map(|&(sigma, seed)| {
            let mut p = Prepared { cfg: p.cfg, truth: p.truth.clone(), config: p.config.clone() };
            if scenario.recovery.eps.is_none() {
                p.config.prony.eps = default_eps(sigma);
            }
            sweep_cell(&p, sigma, seed)
        })
        .collect();
    let (rows, scatter): (Vec<SweepRow>, Vec<Vec<ScatterRow>>) = results.into_iter().unzip();
    let scatter: Vec<ScatterRow> = scatter.into_iter().flatten().collect();
    write_text(out, &csv_text(&rows, &SWEEP_HEADER))?;
    write_text(&scatter_path(out), &csv_text(&scatter, &SCATTER_HEADER))?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Argument parsing

#[derive(Debug, Parser)]
#[command(name = "pole-recovery", version, about = "Recover poles and residues from samples on the imaginary axis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a built-in scenario file.
    Generate {
        /// Scenario kind: complex8, real8 or matrix8.
        #[arg(long)]
        scenario: ScenarioKind,
        /// Seed of the pole/residue draw.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample, recover and compare against the ground truth.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Noise level override.
        #[arg(long)]
        sigma: Option<f64>,
        /// Noise seed override.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
        /// Include the Fourier coefficient table in the result.
        #[arg(long = "dump-coeffs")]
        dump_coeffs: bool,
        /// Include wall-clock stage timings (makes the output nondeterministic).
        #[arg(long)]
        timing: bool,
        /// Replay samples from a sample file instead of drawing them.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Write the samples used to a sample file.
        #[arg(long = "dump-samples")]
        dump_samples: Option<PathBuf>,
    },
    /// Run a grid of noise levels and seeds.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Sweep table; the pole scatter goes to `<stem>_poles.csv` beside it.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated noise levels.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        sigma: Vec<f64>,
        /// Comma-separated noise seeds.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seed: Vec<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate { scenario, seed, out } => cmd_generate(scenario, seed, &out).map(drop),
        Command::Run { scenario, out, sigma, seed, overrides, dump_coeffs, timing, samples, dump_samples } => {
            let opts = RunOptions { sigma, seed, dump_coeffs, timing, samples, dump_samples };
            cmd_run(&scenario, &out, &overrides, &opts).map(drop)
        }
        Command::Sweep { scenario, out, sigma, seed, overrides } => {
            cmd_sweep(&scenario, &sigma, &seed, &out, &overrides).map(drop)
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are input errors; help and version are not errors.
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
