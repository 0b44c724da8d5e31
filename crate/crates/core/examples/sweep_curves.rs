//! Print the displacement-sweep projection curves for the four analyzer
//! settings of interest as plot-ready CSV.
//!
//! ```sh
//! cargo run --release -p oamsim-core --example sweep_curves > curves.csv
//! ```

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use oamsim_core::oam_optics::{sweep_profile, DiffractionOrder};
use oamsim_core::Quadrature64;

fn main() {
    let waist = 0.8; // mm
    let quad = Quadrature64::default();
    let x0s: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.05 * waist).collect();

    let thetas = [0.0, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4];
    let curves: Vec<Vec<f64>> = thetas
        .iter()
        .map(|&theta| {
            sweep_profile(theta, waist, DiffractionOrder::Minus, &x0s, &quad)
                .expect("default quadrature is valid")
        })
        .collect();

    println!("x0_mm,theta_0,theta_pi_2,theta_pi_4,theta_minus_pi_4");
    for (i, x0) in x0s.iter().enumerate() {
        println!(
            "{x0:.4},{:.6},{:.6},{:.6},{:.6}",
            curves[0][i], curves[1][i], curves[2][i], curves[3][i]
        );
    }
}
