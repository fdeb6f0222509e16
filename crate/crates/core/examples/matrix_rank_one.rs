// Matrix-valued recovery with rank-one residues `R_j = v_j v_j^*`.

use pole_recovery::mobius::DiskPairConfig;
use pole_recovery::model::{generate_scenario, Model, NoiseSpec, ScenarioKind};
use pole_recovery::pipeline::{default_match_cap, match_model, recover, RecoveryConfig};
use pole_recovery::prony::PronyConfig;
use pole_recovery::sampling::{sample, Access};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DiskPairConfig::new(1.0, 100.0)?;
    let truth = generate_scenario(ScenarioKind::Matrix8, &cfg, 0);
    let Model::Matrix(m) = &truth else { unreachable!() };
    let access = Access::RandomAccess { n_s: 1024 };

    for sigma in [0.0, 1e-4] {
        let samples = sample(&truth, &cfg, access, &NoiseSpec::new(sigma, 0)?)?;
        let mut config = RecoveryConfig::new(cfg, access, PronyConfig::for_noise(12, sigma, true));
        config.rank1 = true;
        let result = recover(&samples, &config)?;
        let report = match_model(&truth, &result, default_match_cap(&cfg));
        let factors = result.factors.as_ref().expect("rank-one factors requested");
        println!("sigma = {sigma:.0e}: {} poles ({}x{} residues)", result.poles.len(), m.nb(), m.nb());
        for pair in &report.pairs {
            let r = &m.residues[pair.truth];
            let f = &factors[pair.recovered];
            let rel = (&f.vector * f.vector.adjoint() - r).norm() / r.norm();
            println!(
                "  {:>8.3}: pole error {:.1e}, ||v v* - R|| / ||R|| = {rel:.1e}, s2/s1 = {:.1e}",
                m.poles[pair.truth].re, pair.distance, f.quality
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
