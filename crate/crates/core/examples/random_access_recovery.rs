// End-to-end recovery of eight complex poles from the random-access grid.

use pole_recovery::mobius::DiskPairConfig;
use pole_recovery::model::{generate_scenario, NoiseSpec, ScenarioKind};
use pole_recovery::pipeline::{default_match_cap, match_model, recover, RecoveryConfig};
use pole_recovery::prony::PronyConfig;
use pole_recovery::sampling::{sample, Access};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DiskPairConfig::new(1.0, 100.0)?;
    let truth = generate_scenario(ScenarioKind::Complex8, &cfg, 0);
    let access = Access::RandomAccess { n_s: 1024 };

    for sigma in [0.0, 1e-6, 1e-4] {
        let samples = sample(&truth, &cfg, access, &NoiseSpec::new(sigma, 0)?)?;
        let config = RecoveryConfig::new(cfg, access, PronyConfig::for_noise(12, sigma, false));
        let result = recover(&samples, &config)?;
        let report = match_model(&truth, &result, default_match_cap(&cfg));
        println!("sigma = {sigma:.0e}: {} poles recovered", result.poles.len());
        for (i, xi) in truth.poles().iter().enumerate() {
            match report.distance_of(i) {
                Some(d) => println!("  {xi:>24.3}  error {d:.1e}"),
                None => println!("  {xi:>24.3}  not recovered"),
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
