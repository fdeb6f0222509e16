// Least-squares residues for known poles.

use num_complex::Complex64;
use pole_recovery::mobius::DiskPairConfig;
use pole_recovery::model::{Model, NoiseSpec, PoleModel};
use pole_recovery::residues::{fit_residues, Residues};
use pole_recovery::sampling::{sample, Access};

pub fn run_example() -> pole_recovery::Result<()> {
    let cfg = DiskPairConfig::new(1.0, 100.0)?;
    let poles = vec![Complex64::new(5.0, 3.0), Complex64::new(40.0, -10.0), Complex64::new(-12.0, 6.0)];
    let residues = vec![Complex64::new(1.0, 0.5), Complex64::new(-0.8, 1.2), Complex64::new(1.5, -0.3)];
    let model = Model::Scalar(PoleModel::new(poles.clone(), residues.clone())?);

    for sigma in [0.0, 1e-6, 1e-3] {
        let samples = sample(&model, &cfg, Access::RandomAccess { n_s: 1024 }, &NoiseSpec::new(sigma, 7)?)?;
        let fit = fit_residues(&poles, &samples, false)?;
        let Residues::Scalar(r) = &fit.residues else { unreachable!() };
        let err = r.iter().zip(&residues).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        println!(
            "sigma = {sigma:.0e}: max residue error {err:.2e}, residual {:.2e}, condition {:.1}",
            fit.residual_norm, fit.condition
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pole_recovery::Result<()> {
    run_example()
}
