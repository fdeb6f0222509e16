// Fourier coefficients of `g(t)` from samples on the random-access grid.
//
// A single pole per side has geometric coefficients whose ratio is the
// t-plane pole.

use num_complex::Complex64;
use pole_recovery::mobius::DiskPairConfig;
use pole_recovery::model::{Model, NoiseSpec, PoleModel};
use pole_recovery::sampling::{sample, Access};
use pole_recovery::spectral::fourier_from_circle;

pub fn run_example() -> pole_recovery::Result<()> {
    let cfg = DiskPairConfig::new(1.0, 100.0)?;
    let inside = Complex64::new(20.0, 5.0);
    let outside = Complex64::new(-15.0, -8.0);
    let model = Model::Scalar(PoleModel::new(vec![inside, outside], vec![Complex64::new(1.0, 0.0); 2])?);

    let samples = sample(&model, &cfg, Access::RandomAccess { n_s: 256 }, &NoiseSpec::noiseless())?;
    let coeffs = fourier_from_circle(&samples, 8)?;

    let tau_in = cfg.z_to_t(inside)?;
    let tau_out = cfg.z_to_t(outside)?;
    println!("tau_in = {tau_in:.8}, tau_out = {tau_out:.8}");
    for k in 1..=4i64 {
        let neg = coeffs.scalar(-k - 1).unwrap() / coeffs.scalar(-k).unwrap();
        let pos = coeffs.scalar(k).unwrap() / coeffs.scalar(k + 1).unwrap();
        println!("k = {k}: g(-k-1)/g(-k) = {neg:.8}   g(k)/g(k+1) = {pos:.8}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pole_recovery::Result<()> {
    run_example()
}
