// Real poles recovered with and without the real-axis constraint.

use pole_recovery::mobius::DiskPairConfig;
use pole_recovery::model::{generate_scenario, NoiseSpec, ScenarioKind};
use pole_recovery::pipeline::{default_match_cap, match_model, recover, RecoveryConfig};
use pole_recovery::prony::PronyConfig;
use pole_recovery::sampling::{sample, Access};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DiskPairConfig::new(1.0, 100.0)?;
    let truth = generate_scenario(ScenarioKind::Real8, &cfg, 0);
    let access = Access::RandomAccess { n_s: 1024 };
    let sigma = 1e-5;
    let samples = sample(&truth, &cfg, access, &NoiseSpec::new(sigma, 0)?)?;

    for real_mode in [false, true] {
        let config = RecoveryConfig::new(cfg, access, PronyConfig::for_noise(12, sigma, real_mode));
        let result = recover(&samples, &config)?;
        let report = match_model(&truth, &result, default_match_cap(&cfg));
        println!("real_mode = {real_mode}: {} poles", result.poles.len());
        for (i, xi) in truth.poles().iter().enumerate() {
            let err = report.distance_of(i).map_or("not recovered".into(), |d| format!("error {d:.1e}"));
            println!("  {:>8.3}  {err}", xi.re);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
