//! Standalone checks printed as CSV.

use std::fmt::Write as _;

use bsgni::jacobi::{QuadratureRule, WeightExponent};
use bsgni::model::{pde_residual, ExactSolution};
use bsgni::time::{amplification_defect, dispersion_error, dispersion_slope, SdirkScheme};

use crate::runner::sci;

/// Residual above which a traveling wave is rejected.
pub const RESIDUAL_GATE: f64 = 1e-8;

/// `j,node,weight` for the Gauss-Lobatto-Jacobi rule.
pub fn quadrature_csv(mu: WeightExponent, n: usize) -> Result<String, bsgni::jacobi::JacobiError> {
    let rule = QuadratureRule::gauss_lobatto_jacobi(mu, n)?;
    let mut out = String::from("j,node,weight\n");
    for (j, (x, w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
        let _ = writeln!(out, "{j},{},{}", sci(*x), sci(*w));
    }
    Ok(out)
}

/// `y,phase_error,amplification_defect` on `[-10, 10]` in steps of 0.1, and the
/// small-`y` slope of the phase error.
pub fn dispersion_csv(scheme: &SdirkScheme) -> (String, f64) {
    let mut out = String::from("y,phase_error,amplification_defect\n");
    for i in 0..=200 {
        let y = -10.0 + 0.1 * i as f64;
        let _ = writeln!(
            out,
            "{},{},{}",
            sci(y),
            sci(dispersion_error(scheme, y)),
            sci(amplification_defect(scheme, y))
        );
    }
    (out, dispersion_slope(scheme))
}

/// `t,r_eta,r_u` on 2001 points within 40 of the wave centre, and the worst value.
pub fn residual_csv(wave: &ExactSolution) -> (String, f64) {
    let mut out = String::from("t,r_eta,r_u\n");
    let mut worst = 0.0f64;
    for t in [0.0, 0.5, 1.0] {
        let centre = wave.offset() + wave.speed() * t;
        let grid: Vec<f64> = (0..=2000).map(|i| centre - 40.0 + 80.0 * i as f64 / 2000.0).collect();
        let (r_eta, r_u) = pde_residual(wave, &wave.params(), &grid, t);
        worst = worst.max(r_eta).max(r_u);
        let _ = writeln!(out, "{},{},{}", sci(t), sci(r_eta), sci(r_u));
    }
    (out, worst)
}
