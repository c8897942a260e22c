//! The `density` subcommand: tabulated posterior-confidence densities.

use std::fmt::Write as _;

use dssl_core::gaussmix::{p_theta_density, p_theta_joint, theta_mass, GaussianMixture1D};

use crate::error::{HarnessError, Result};

/// CSV of `p(θ)` and its per-class parts on `θ_i = (i+1)/(n+1)`, headed by
/// a `# normalization=<z>` comment line.
pub fn density_csv(mix: &GaussianMixture1D, grid: usize) -> Result<String> {
    if grid == 0 {
        return Err(HarnessError::config("grid", "must be positive"));
    }
    let mut out = String::new();
    let _ = writeln!(out, "# normalization={}", theta_mass(mix, 0.0, 1.0));
    out.push_str("theta,p_theta,p_theta_y0,p_theta_y1\n");
    for i in 0..grid {
        let theta = (i + 1) as f64 / (grid + 1) as f64;
        let _ = writeln!(
            out,
            "{theta},{},{},{}",
            p_theta_density(theta, mix)?,
            p_theta_joint(theta, 0, mix)?,
            p_theta_joint(theta, 1, mix)?
        );
    }
    Ok(out)
}
