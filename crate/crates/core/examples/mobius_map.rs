// The Möbius map between the imaginary axis and the unit circle.
//
// Poles in the disk over `[a, b]` land inside the unit circle, poles in the
// mirrored disk over `[-b, -a]` outside of it.

use num_complex::Complex64;
use pole_recovery::mobius::{DiskPairConfig, Side};

pub fn run_example() -> pole_recovery::Result<()> {
    let cfg = DiskPairConfig::new(1.0, 100.0)?;
    println!("c = {}, rho_in = {:.6}, rho_out = {:.6}", cfg.c(), cfg.rho_in(), cfg.rho_out());

    for z in [Complex64::new(0.0, 0.0), Complex64::new(0.0, 10.0), Complex64::new(30.0, 5.0), Complex64::new(-30.0, 5.0)] {
        let t = cfg.z_to_t(z)?;
        let back = cfg.t_to_z(t)?;
        println!("z = {z:>12} -> t = {t:.6} (|t| = {:.4}) -> z = {back:.6}", t.norm());
    }

    // Boundary points of each disk map onto circles of the image radii.
    for side in Side::BOTH {
        let centre = cfg.disk_center(side);
        let edge = Complex64::new(centre, cfg.disk_radius());
        println!(
            "{side:?} disk edge {edge} -> |t| = {:.6} (radius {:.6})",
            cfg.z_to_t(edge)?.norm(),
            cfg.circle_image_radius(side)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pole_recovery::Result<()> {
    run_example()
}
