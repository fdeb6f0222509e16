// Recovery from a truncated bosonic Matsubara grid.
//
// The truncated sum converges slowly in the cutoff; a short grid leaves
// spurious poles next to the true ones.

use std::f64::consts::PI;

use pole_recovery::mobius::DiskPairConfig;
use pole_recovery::model::{generate_scenario, NoiseSpec, ScenarioKind};
use pole_recovery::pipeline::{default_match_cap, match_model, recover, RecoveryConfig};
use pole_recovery::prony::PronyConfig;
use pole_recovery::sampling::{sample, Access, Statistics};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DiskPairConfig::new(1.0, 100.0)?;
    let truth = generate_scenario(ScenarioKind::Complex8, &cfg, 0);

    for n_m in [10_000, 100_000] {
        let access = Access::Matsubara { n_m, beta: 10.0 * PI, statistics: Statistics::Boson };
        let samples = sample(&truth, &cfg, access, &NoiseSpec::noiseless())?;
        let config = RecoveryConfig::new(cfg, access, PronyConfig::for_noise(12, 0.0, false));
        let result = recover(&samples, &config)?;
        let report = match_model(&truth, &result, default_match_cap(&cfg));
        println!(
            "N_m = {n_m:>7}: {} poles ({} spurious), max error {:.2e}, mean error {:.2e}",
            result.poles.len(),
            report.unmatched_recovered.len(),
            report.max_error.unwrap_or(f64::NAN),
            report.mean_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
