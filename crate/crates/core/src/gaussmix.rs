//! Two-class, shared-variance 1-D Gaussian mixture and the density it induces
//! on the posterior parameter `θ = p(y = 1 | x)`.
//!
//! With `L = logit θ`, `Δ = μ1 − μ0`, `ρ = log(π1/π0)` and `m = (μ0 + μ1)/2`
//! the map inverts to `x = (σ²/Δ)(L − ρ) + m`, and the change of variables
//! `p(θ) = |dx/dθ| p(x(θ))` collapses to
//!
//! ```text
//! p(θ, y=k) = P · π_k · exp(a L² + b_k L + c_k),   P = σ / (√(2π) |Δ| θ (1−θ))
//! a   = −σ² / (2Δ²)
//! b_k = (μ_k − m)/Δ + σ² ρ / Δ²          (= ±½ + σ²ρ/Δ²)
//! c_k = −Δ² b_k² / (2σ²)
//! ```

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::seeded_rng;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1D {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    /// Prior of class 1; class 0 has `1 − pi1`.
    pub pi1: f64,
}

impl GaussianMixture1D {
    pub fn new(mu0: f64, mu1: f64, sigma: f64, pi1: f64) -> Result<Self> {
        let mix = Self { mu0, mu1, sigma, pi1 };
        mix.validate()?;
        Ok(mix)
    }

    /// `μ0 = −1, μ1 = 1, σ = 1, π1 = ½`.
    pub fn symmetric() -> Self {
        Self {
            mu0: -1.0,
            mu1: 1.0,
            sigma: 1.0,
            pi1: 0.5,
        }
    }

    /// Symmetric means at `±separation·σ/2`, unit σ, equal priors.
    pub fn with_separation(separation: f64) -> Result<Self> {
        Self::new(-0.5 * separation, 0.5 * separation, 1.0, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.mu0 == self.mu1 || !self.mu0.is_finite() || !self.mu1.is_finite() {
            return Err(Error::Parameter("class means must be finite and distinct".into()));
        }
        if !(self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(Error::Parameter(format!("pi1 must lie in (0, 1), got {}", self.pi1)));
        }
        Ok(())
    }

    pub fn pi0(&self) -> f64 {
        1.0 - self.pi1
    }

    fn prior(&self, class: usize) -> f64 {
        if class == 1 {
            self.pi1
        } else {
            self.pi0()
        }
    }

    fn mean(&self, class: usize) -> f64 {
        if class == 1 {
            self.mu1
        } else {
            self.mu0
        }
    }

    fn log_prior_ratio(&self) -> f64 {
        (self.pi1 / self.pi0()).ln()
    }

    /// Posterior log-odds `log p(y=1|x) / p(y=0|x)`, affine in `x`.
    pub fn log_odds(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.log_prior_ratio() + (self.mu1 - self.mu0) / s2 * x - 0.5 * (self.mu1 * self.mu1 - self.mu0 * self.mu0) / s2
    }

    pub fn coefficients(&self) -> ThetaDensityCoeffs {
        let delta = self.mu1 - self.mu0;
        let s2 = self.sigma * self.sigma;
        let mid = 0.5 * (self.mu0 + self.mu1);
        let shift = s2 * self.log_prior_ratio() / (delta * delta);
        let b0 = (self.mu0 - mid) / delta + shift;
        let b1 = (self.mu1 - mid) / delta + shift;
        let c = |b: f64| -delta * delta * b * b / (2.0 * s2);
        ThetaDensityCoeffs {
            a: -s2 / (2.0 * delta * delta),
            b0,
            b1,
            c0: c(b0),
            c1: c(b1),
            prefactor: self.sigma * INV_SQRT_2PI / delta.abs(),
        }
    }
}

/// Coefficients of the closed-form `θ` density; see the module docs.
///
/// `prefactor` excludes the `1/(θ(1−θ))` factor, which depends on `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaDensityCoeffs {
    pub a: f64,
    pub b0: f64,
    pub b1: f64,
    pub c0: f64,
    pub c1: f64,
    pub prefactor: f64,
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(theta: f64) -> f64 {
    theta.ln() - (-theta).ln_1p()
}

fn check_open_unit(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")))
    }
}

fn normal_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    INV_SQRT_2PI / sigma * (-0.5 * z * z).exp()
}

/// `p(y = 1 | x)`.
pub fn theta_of_x(x: f64, mix: &GaussianMixture1D) -> f64 {
    logistic(mix.log_odds(x))
}

/// Inverse of [`theta_of_x`].
pub fn x_of_theta(theta: f64, mix: &GaussianMixture1D) -> Result<f64> {
    check_open_unit(theta)?;
    Ok(x_of_logit(logit(theta), mix))
}

fn x_of_logit(l: f64, mix: &GaussianMixture1D) -> f64 {
    let s2 = mix.sigma * mix.sigma;
    s2 / (mix.mu1 - mix.mu0) * (l - mix.log_prior_ratio()) + 0.5 * (mix.mu0 + mix.mu1)
}

/// `dθ/dx` at the `x` that maps to `theta`.
pub fn dtheta_dx(theta: f64, mix: &GaussianMixture1D) -> f64 {
    theta * (1.0 - theta) * (mix.mu1 - mix.mu0) / (mix.sigma * mix.sigma)
}

/// Mixture density `Σ_k π_k N(x; μ_k, σ²)`.
pub fn p_x_density(x: f64, mix: &GaussianMixture1D) -> f64 {
    mix.pi0() * normal_pdf(x, mix.mu0, mix.sigma) + mix.pi1 * normal_pdf(x, mix.mu1, mix.sigma)
}

/// Joint density `p(θ, y = class)` in closed form.
pub fn p_theta_joint(theta: f64, class: usize, mix: &GaussianMixture1D) -> Result<f64> {
    check_open_unit(theta)?;
    if class > 1 {
        return Err(Error::Domain(format!("class must be 0 or 1, got {class}")));
    }
    let co = mix.coefficients();
    Ok(joint_from_coeffs(theta, class, mix, &co))
}

fn joint_from_coeffs(theta: f64, class: usize, mix: &GaussianMixture1D, co: &ThetaDensityCoeffs) -> f64 {
    let l = logit(theta);
    let (b, c) = if class == 1 { (co.b1, co.c1) } else { (co.b0, co.c0) };
    co.prefactor / (theta * (1.0 - theta)) * mix.prior(class) * (co.a * l * l + b * l + c).exp()
}

/// Closed-form density of `θ = p(y=1|x)` for `x ~ p(x)`.
pub fn p_theta_density(theta: f64, mix: &GaussianMixture1D) -> Result<f64> {
    check_open_unit(theta)?;
    let co = mix.coefficients();
    Ok(joint_from_coeffs(theta, 0, mix, &co) + joint_from_coeffs(theta, 1, mix, &co))
}

/// Numeric change of variables `p(x(θ)) |dx/dθ|`, the ground truth for
/// [`p_theta_density`].
pub fn p_theta_oracle(theta: f64, mix: &GaussianMixture1D) -> Result<f64> {
    let x = x_of_theta(theta, mix)?;
    Ok(p_x_density(x, mix) / dtheta_dx(theta, mix).abs())
}

/// `∫_a^b p(θ) dθ`, integrated over `L = logit θ` where the density is a
/// two-component Gaussian in `L`; mass with `θ` within rounding of 0 or 1
/// is still counted.
pub fn theta_mass(mix: &GaussianMixture1D, a: f64, b: f64) -> f64 {
    let a = a.clamp(0.0, 1.0);
    let b = b.clamp(0.0, 1.0);
    if b <= a {
        return 0.0;
    }
    let co = mix.coefficients();
    let sd = (-0.5 / co.a).sqrt();
    let centres = [-co.b0 / (2.0 * co.a), -co.b1 / (2.0 * co.a)];
    let reach = 40.0 * sd;
    let lo = logit(a).max(centres[0].min(centres[1]) - reach);
    let hi = logit(b).min(centres[0].max(centres[1]) + reach);
    if hi <= lo {
        return 0.0;
    }
    let density = |l: f64| {
        co.prefactor
            * (mix.prior(0) * (co.a * l * l + co.b0 * l + co.c0).exp()
                + mix.prior(1) * (co.a * l * l + co.b1 * l + co.c1).exp())
    };
    let mut breaks = Vec::new();
    for c in centres {
        for j in -8..=8 {
            breaks.push(c + j as f64 * sd);
        }
    }
    quad::integrate_with_breaks(density, lo, hi, &breaks, 1e-6)
}

/// Draw `n` labelled points: `y ~ Bernoulli(π1)`, `x ~ N(μ_y, σ²)`.
pub fn sample(mix: &GaussianMixture1D, n: usize, seed: u64) -> Result<Vec<(f64, usize)>> {
    mix.validate()?;
    if n == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed);
    Ok((0..n)
        .map(|_| {
            // inverse CDF of the Bernoulli class draw
            let y = usize::from(rng.random::<f64>() < mix.pi1);
            let z: f64 = rng.sample(StandardNormal);
            (mix.mean(y) + mix.sigma * z, y)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_of_x_examples() {
        let mix = GaussianMixture1D::symmetric();
        assert!((theta_of_x(0.0, &mix) - 0.5).abs() < 1e-15);
        assert!((theta_of_x(1.0, &mix) - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(theta_of_x(1e6, &mix), 1.0);
        let reversed = GaussianMixture1D::new(1.0, -1.0, 1.0, 0.5).unwrap();
        assert!(theta_of_x(1.0, &reversed) < 0.5);
    }

    #[test]
    fn x_of_theta_examples() {
        let mix = GaussianMixture1D::symmetric();
        assert!(x_of_theta(0.5, &mix).unwrap().abs() < 1e-15);
        let t = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((x_of_theta(t, &mix).unwrap() - 1.0).abs() < 1e-12);
        assert!(x_of_theta(0.0, &mix).is_err());
        assert!(x_of_theta(1.0, &mix).is_err());
    }

    #[test]
    fn round_trip() {
        let mix = GaussianMixture1D::new(-0.3, 1.7, 0.8, 0.3).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-6.0..6.0);
            let back = x_of_theta(theta_of_x(x, &mix), &mix).unwrap();
            assert!((back - x).abs() < 1e-9, "{x} -> {back}");
        }
    }

    #[test]
    fn mixture_density_examples() {
        let mix = GaussianMixture1D::symmetric();
        let expected = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((p_x_density(0.0, &mix) - expected).abs() < 1e-15);
        let total = quad::integrate(|x| p_x_density(x, &mix), -12.0, 12.0, 1e-10);
        assert!((total - 1.0).abs() < 1e-6);
        // pi1 → 1 degenerates to a single Gaussian
        let single = GaussianMixture1D { pi1: 1.0, ..mix };
        for x in [-2.0, 0.0, 0.7, 3.0] {
            assert!((p_x_density(x, &single) - normal_pdf(x, 1.0, 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_density_at_half() {
        let mix = GaussianMixture1D::symmetric();
        // |dx/dθ| = 1 / 0.5 = 2 at θ = ½, p(x = 0) = e^{-1/2}/√(2π)
        let oracle = 2.0 * (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let p = p_theta_density(0.5, &mix).unwrap();
        assert!((p - oracle).abs() < 1e-14);
        assert!((p - 0.48394).abs() < 1e-5);
        assert!(p_theta_density(0.0, &mix).is_err());
    }

    #[test]
    fn closed_form_matches_oracle() {
        let mixes = [
            GaussianMixture1D::symmetric(),
            GaussianMixture1D::new(0.5, -2.0, 0.7, 0.2).unwrap(),
            GaussianMixture1D::new(3.0, 4.0, 2.0, 0.9).unwrap(),
        ];
        for mix in &mixes {
            for i in 1..200 {
                let t = i as f64 / 200.0;
                let closed = p_theta_density(t, mix).unwrap();
                let oracle = p_theta_oracle(t, mix).unwrap();
                assert!(((closed - oracle) / oracle).abs() < 1e-10, "{mix:?} θ={t}");
            }
        }
    }

    #[test]
    fn components_sum_and_symmetry() {
        let mix = GaussianMixture1D::symmetric();
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let total = p_theta_density(t, &mix).unwrap();
            let parts = p_theta_joint(t, 0, &mix).unwrap() + p_theta_joint(t, 1, &mix).unwrap();
            assert!((total - parts).abs() <= 1e-14 * total);
            let mirror = p_theta_density(1.0 - t, &mix).unwrap();
            assert!((total - mirror).abs() < 1e-12);
        }
    }

    #[test]
    fn normalisation() {
        for sep in [0.5, 1.0, 2.0, 4.0, 6.0] {
            let mix = GaussianMixture1D::with_separation(sep).unwrap();
            let mass = theta_mass(&mix, 0.0, 1.0);
            assert!((mass - 1.0).abs() < 1e-3, "separation {sep}: {mass}");
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let mix = GaussianMixture1D::symmetric();
        assert_eq!(sample(&mix, 100, 9).unwrap(), sample(&mix, 100, 9).unwrap());
        assert_ne!(sample(&mix, 100, 9).unwrap(), sample(&mix, 100, 10).unwrap());
        assert!(sample(&mix, 0, 9).is_err());
    }
}
