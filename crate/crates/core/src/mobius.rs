//! Möbius map between the z-plane and the t-plane.
//!
//! The map `t = (z - c)/(z + c)` with `c = sqrt(ab)` sends the imaginary axis
//! to the unit circle, the right half-plane into the unit disk and the left
//! half-plane outside of it. The two pole disks (centers `±(a+b)/2`, radius
//! `(b-a)/2`) become the circles of radius `rho_in` and `rho_out = 1/rho_in`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which half of the problem a pole belongs to.
///
/// `Inside` poles live in the right half of the z-plane and inside the unit
/// disk of the t-plane; `Outside` poles are their left-half-plane mirror.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Inside,
    Outside,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Inside, Side::Outside];
}

/// Geometry constants of the two pole disks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPairConfig {
    a: f64,
    b: f64,
    c: f64,
    rho_in: f64,
}

impl DiskPairConfig {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && a < b) {
            return Err(Error::InvalidParameter(format!(
                "disk constants must satisfy 0 < a < b, got a={a}, b={b}"
            )));
        }
        let (sa, sb) = (a.sqrt(), b.sqrt());
        Ok(Self {
            a,
            b,
            c: (a * b).sqrt(),
            rho_in: (sb - sa) / (sb + sa),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Map constant `sqrt(ab)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rho_in(&self) -> f64 {
        self.rho_in
    }

    pub fn rho_out(&self) -> f64 {
        1.0 / self.rho_in
    }

    /// Center of the disk on the given side (`+(a+b)/2` for `Inside`).
    pub fn disk_center(&self, side: Side) -> f64 {
        let m = 0.5 * (self.a + self.b);
        match side {
            Side::Inside => m,
            Side::Outside => -m,
        }
    }

    pub fn disk_radius(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    /// Signed distance from `z` to the boundary of the nearest pole disk;
    /// positive when `z` lies strictly inside one of them.
    pub fn disk_margin(&self, z: Complex64) -> f64 {
        let side = if z.re >= 0.0 { Side::Inside } else { Side::Outside };
        self.disk_radius() - (z - self.disk_center(side)).norm()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.disk_margin(z) > 0.0
    }

    pub fn z_to_t(&self, z: Complex64) -> Result<Complex64> {
        let den = z + self.c;
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain(format!("z = -c = {} is the pole of the map", -self.c)));
        }
        Ok((z - self.c) / den)
    }

    pub fn t_to_z(&self, t: Complex64) -> Result<Complex64> {
        let den = t - 1.0;
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("t = 1 is the image of z = infinity".into()));
        }
        Ok(-self.c * (t + 1.0) / den)
    }

    /// z-plane point whose t-plane image is `1/rho`.
    ///
    /// Outside poles are recovered as reciprocals `rho = 1/tau`; mapping `rho`
    /// directly keeps `rho = 0` (the image of `z = -c`) finite.
    pub fn reciprocal_t_to_z(&self, rho: Complex64) -> Result<Complex64> {
        let den = 1.0 - rho;
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("1/t = 1 is the image of z = infinity".into()));
        }
        Ok(-self.c * (1.0 + rho) / den)
    }

    /// Radius of the image circle of the pole disk on `side`.
    pub fn circle_image_radius(&self, side: Side) -> f64 {
        match side {
            Side::Inside => self.rho_in(),
            Side::Outside => self.rho_out(),
        }
    }
}
