//! Slow brute-force references for the spectral stage.
//!
//! Nothing here shares code with `spectral`: coefficients come from a dense
//! trapezoid rule evaluated through `t_to_z` and the model directly, and the
//! t-plane weights from small-circle contour integrals.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::mobius::DiskPairConfig;
use crate::model::{MatrixPoleModel, PoleModel};

/// Smallest accepted number of quadrature nodes.
pub const MIN_QUAD: usize = 8192;

/// Nodes used for each small-circle residue integral.
pub const RESIDUE_QUAD: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Half-offset nodes `exp(2 pi i (n + 1/2) / n_quad)`, which never hit `t = 1`.
fn circle_nodes(n_quad: usize) -> impl Iterator<Item = Complex64> {
    (0..n_quad).map(move |n| Complex64::from_polar(1.0, 2.0 * PI * (n as f64 + 0.5) / n_quad as f64))
}

/// `(1/2 pi i) ∮ g(t) t^{-k-1} dt` over the unit circle by an `n_quad`-point
/// trapezoid rule.
///
/// # Panics
/// If `n_quad < MIN_QUAD` or a node lands on a pole.
pub fn contour_coeff_oracle(model: &PoleModel, cfg: &DiskPairConfig, k: i64, n_quad: usize) -> Complex64 {
    assert!(n_quad >= MIN_QUAD, "n_quad must be at least {MIN_QUAD}");
    let mut acc = ZERO;
    for t in circle_nodes(n_quad) {
        let z = cfg.t_to_z(t).expect("node is off t = 1");
        acc += model.evaluate(z).expect("node is off the poles") * t.powi(-k as i32);
    }
    acc / n_quad as f64
}

/// Matrix-valued [`contour_coeff_oracle`].
pub fn contour_coeff_oracle_matrix(
    model: &MatrixPoleModel,
    cfg: &DiskPairConfig,
    k: i64,
    n_quad: usize,
) -> DMatrix<Complex64> {
    assert!(n_quad >= MIN_QUAD, "n_quad must be at least {MIN_QUAD}");
    let nb = model.nb();
    let mut acc = DMatrix::from_element(nb, nb, ZERO);
    for t in circle_nodes(n_quad) {
        let z = cfg.t_to_z(t).expect("node is off t = 1");
        acc += model.evaluate(z).expect("node is off the poles") * t.powi(-k as i32);
    }
    acc / Complex64::from(n_quad as f64)
}

/// Pole representation `g(t) = sum_j w_j / (tau_j - t) + const` in the t-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TPlaneModel {
    pub poles: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl TPlaneModel {
    /// Coefficient of order `k != 0` from the geometric-series expansion:
    /// `-sum_in w tau^{|k|-1}` for `k < 0`, `sum_out w tau^{-(k+1)}` for `k > 0`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        assert!(k != 0, "the constant term is not determined by the poles");
        self.poles
            .iter()
            .zip(&self.weights)
            .map(|(&tau, &w)| match (k < 0, tau.norm() < 1.0) {
                (true, true) => -w * tau.powi((-k - 1) as i32),
                (false, false) => w * tau.powi(-(k + 1) as i32),
                _ => ZERO,
            })
            .sum()
    }
}

/// Maps every pole to the t-plane and measures its weight numerically.
///
/// `w_j = -(1/2 pi i) ∮ g(z(t)) dt` over a circle around `tau_j` whose radius is
/// half the distance to the nearest other `tau` or to the unit circle.
pub fn tplane_model_oracle(model: &PoleModel, cfg: &DiskPairConfig) -> TPlaneModel {
    let poles: Vec<Complex64> =
        model.poles.iter().map(|&xi| cfg.z_to_t(xi).expect("pole is off z = -c")).collect();
    let weights = poles
        .iter()
        .enumerate()
        .map(|(j, &tau)| {
            let nearest = poles
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &other)| (other - tau).norm())
                .fold((tau.norm() - 1.0).abs(), f64::min);
            let radius = 0.5 * nearest;
            let mut acc = ZERO;
            for n in 0..RESIDUE_QUAD {
                let e = Complex64::from_polar(1.0, 2.0 * PI * n as f64 / RESIDUE_QUAD as f64);
                let z = cfg.t_to_z(tau + radius * e).expect("circle avoids t = 1");
                acc += model.evaluate(z).expect("circle avoids the poles") * radius * e;
            }
            -acc / RESIDUE_QUAD as f64
        })
        .collect();
    TPlaneModel { poles, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> DiskPairConfig {
        DiskPairConfig::new(1.0, 100.0).unwrap()
    }

    #[test]
    fn single_inside_pole_matches_closed_form() {
        let cfg = cfg();
        let (xi, r) = (c(20.0, 5.0), c(1.0, -0.5));
        let model = PoleModel::new(vec![xi], vec![r]).unwrap();
        let tau = cfg.z_to_t(xi).unwrap();
        let w = r * 2.0 * cfg.c() / ((xi + cfg.c()) * (xi + cfg.c()));
        for k in 1..=23 {
            let got = contour_coeff_oracle(&model, &cfg, -k, 16384);
            let want = -w * tau.powi(k as i32 - 1);
            assert!((got - want).norm() < 1e-12, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn constant_function_has_mean_value() {
        let cfg = cfg();
        let zero = PoleModel::new(vec![], vec![]).unwrap();
        assert_eq!(contour_coeff_oracle(&zero, &cfg, 0, MIN_QUAD), ZERO);
        // r / (c - z) = -r / (2 c t) + r / (2 c): its mean is the constant part.
        let centre = PoleModel::new(vec![c(10.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        let mean = contour_coeff_oracle(&centre, &cfg, 0, MIN_QUAD);
        assert!((mean - 1.0 / (2.0 * cfg.c())).norm() < 1e-14, "{mean}");
    }

    #[test]
    fn centre_pole_maps_to_origin() {
        let cfg = cfg();
        let model = PoleModel::new(vec![c(10.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        let tp = tplane_model_oracle(&model, &cfg);
        assert_eq!(tp.poles[0], ZERO);
    }

    #[test]
    fn single_pole_weight_matches_first_coefficient() {
        let cfg = cfg();
        let model = PoleModel::new(vec![c(30.0, -12.0)], vec![c(0.7, 1.1)]).unwrap();
        let tp = tplane_model_oracle(&model, &cfg);
        let g1 = contour_coeff_oracle(&model, &cfg, -1, 16384);
        assert!((g1 + tp.weights[0]).norm() < 1e-10);
    }

    #[test]
    fn real_pole_has_real_weight() {
        let cfg = cfg();
        let model = PoleModel::new(vec![c(-40.0, 0.0)], vec![c(1.3, 0.0)]).unwrap();
        let tp = tplane_model_oracle(&model, &cfg);
        assert_eq!(tp.poles[0].im, 0.0);
        assert!(tp.weights[0].im.abs() < 1e-10);
    }

    #[test]
    fn closed_form_reproduces_quadrature() {
        let cfg = cfg();
        let model = PoleModel::new(
            vec![c(5.0, 3.0), c(60.0, -20.0), c(-8.0, -2.0), c(-50.0, 30.0)],
            vec![c(1.0, 0.0), c(-0.5, 1.5), c(0.8, -0.8), c(2.0, 0.3)],
        )
        .unwrap();
        let tp = tplane_model_oracle(&model, &cfg);
        for k in (-23..=23).filter(|&k| k != 0) {
            let got = tp.coefficient(k);
            let want = contour_coeff_oracle(&model, &cfg, k, 16384);
            assert!((got - want).norm() < 1e-10, "k={k}: {got} vs {want}");
        }
    }
}
