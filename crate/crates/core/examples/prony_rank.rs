// Rank detection and Prony roots on an exact t-plane sequence.

use num_complex::Complex64;
use pole_recovery::mobius::Side;
use pole_recovery::prony::{estimate_rank, recover_side, PronyConfig};
use pole_recovery::sampling::Access;
use pole_recovery::spectral::FourierCoeffs;

pub fn run_example() -> pole_recovery::Result<()> {
    let taus = [Complex64::new(0.5, 0.2), Complex64::new(-0.3, 0.6), Complex64::new(0.1, -0.7)];
    let weights = [Complex64::new(1.0, 0.0), Complex64::new(0.5, -0.5), Complex64::new(-0.2, 0.9)];
    let config = PronyConfig::for_noise(PronyConfig::DEFAULT_D_MAX, 0.0, false);
    let k_max = config.k_max();

    // g_hat_{-m} = -sum_j w_j tau_j^{m-1}; nothing outside.
    let neg: Vec<Complex64> = (1..=k_max)
        .map(|m| -taus.iter().zip(&weights).map(|(t, w)| w * t.powi(m as i32 - 1)).sum::<Complex64>())
        .collect();
    let pos = vec![Complex64::new(0.0, 0.0); k_max];
    let coeffs = FourierCoeffs::from_scalars(&neg, &pos, Access::RandomAccess { n_s: 1024 })?;

    let rank = estimate_rank(&coeffs, Side::Inside, config.d_max, config.l, config.eps, false)?;
    let s1 = rank.singular_values[0];
    let ratios: Vec<String> = rank.singular_values.iter().take(5).map(|s| format!("{:.1e}", s / s1)).collect();
    println!("s_i / s_1 = {ratios:?} -> rank {}", rank.chosen_d);

    let side = recover_side(&coeffs, Side::Inside, &config)?;
    for tau in &side.poles_t {
        let err = taus.iter().map(|t| (t - tau).norm()).fold(f64::INFINITY, f64::min);
        println!("root {tau:.10}  error {err:.1e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pole_recovery::Result<()> {
    run_example()
}
