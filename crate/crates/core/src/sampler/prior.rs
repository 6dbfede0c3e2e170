use serde::{Deserialize, Serialize};

use crate::dists::{sample_phi_reference, RngStream};
use crate::error::{Error, Result};
use crate::model::sigma0_beta;

use super::SamplerState;

/// How the first shape of the beta prior on R² is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ARMode {
    /// Two-point hyperprior on `{a_r_low, a_r_high}`.
    #[default]
    Hyperprior,
    FixedLow,
    FixedHigh,
}

/// Hyperparameters of every prior in the model plus the auxiliary prior
/// used to build the AR-block proposal.
///
/// Defaults are the values used in the simulation study and the empirical
/// application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub mu0_alpha_y: f64,
    pub sigma0_alpha_y: f64,
    pub mu0_psi: f64,
    pub sigma0_psi: f64,
    /// Prior mean of the stationary mean of `x`. `None` uses the sample mean
    /// of `x_0..x_T` of the data being analysed.
    pub mu0_mu_x: Option<f64>,
    /// Prior variance of the stationary mean of `x`.
    pub s0_mu_x: f64,
    pub nu_x: f64,
    pub s0_x: f64,
    pub nu_y: f64,
    pub s0_y: f64,
    pub mu0_beta: f64,
    pub b0_r: f64,
    pub a_r_low: f64,
    pub a_r_high: f64,
    /// Prior probability of `a_r_high`.
    pub p_a_r: f64,
    pub a_r_mode: ARMode,
    /// Mean of the auxiliary Gaussian prior on `(alpha_x, phi)`.
    pub aux_b0: [f64; 2],
    /// Diagonal of the auxiliary prior scale matrix (multiplied by the
    /// conditional predictor variance).
    pub aux_big_b0: [f64; 2],
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            mu0_alpha_y: 0.0,
            sigma0_alpha_y: 10.0,
            mu0_psi: 0.0,
            sigma0_psi: 10.0,
            mu0_mu_x: None,
            s0_mu_x: 0.2,
            nu_x: 4.0,
            s0_x: 0.06,
            nu_y: 2.5,
            s0_y: 0.03,
            mu0_beta: 0.0,
            b0_r: 1.0,
            a_r_low: 0.1,
            a_r_high: 0.5,
            p_a_r: 0.5,
            a_r_mode: ARMode::Hyperprior,
            aux_b0: [0.0, 0.0],
            aux_big_b0: [1e12, 1e8],
        }
    }
}

impl PriorConfig {
    /// Every violated constraint, so configuration errors can list them all.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive and finite (got {v})"));
            }
        };
        positive("sigma0_alpha_y", self.sigma0_alpha_y);
        positive("sigma0_psi", self.sigma0_psi);
        positive("s0_mu_x", self.s0_mu_x);
        positive("nu_x", self.nu_x);
        positive("s0_x", self.s0_x);
        positive("nu_y", self.nu_y);
        positive("s0_y", self.s0_y);
        positive("b0_r", self.b0_r);
        positive("a_r_low", self.a_r_low);
        positive("a_r_high", self.a_r_high);
        positive("aux_big_b0[0]", self.aux_big_b0[0]);
        positive("aux_big_b0[1]", self.aux_big_b0[1]);
        let finite = [
            ("mu0_alpha_y", self.mu0_alpha_y),
            ("mu0_psi", self.mu0_psi),
            ("mu0_beta", self.mu0_beta),
            ("aux_b0[0]", self.aux_b0[0]),
            ("aux_b0[1]", self.aux_b0[1]),
            ("mu0_mu_x", self.mu0_mu_x.unwrap_or(0.0)),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                bad.push(format!("{name} must be finite (got {v})"));
            }
        }
        if !(self.p_a_r > 0.0 && self.p_a_r < 1.0) {
            bad.push(format!("p_a_r must lie in (0, 1) (got {})", self.p_a_r));
        }
        bad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.violations();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// Stationary-mean prior mean for a dataset whose `x_0..x_T` average is
    /// `data_mean`.
    pub fn resolve_mu0_mu_x(&self, data_mean: f64) -> f64 {
        self.mu0_mu_x.unwrap_or(data_mean)
    }

    pub fn a_r_initial(&self) -> f64 {
        match self.a_r_mode {
            ARMode::FixedLow => self.a_r_low,
            ARMode::Hyperprior | ARMode::FixedHigh => self.a_r_high,
        }
    }

    pub fn sample_a_r(&self, rng: &mut RngStream) -> f64 {
        match self.a_r_mode {
            ARMode::FixedLow => self.a_r_low,
            ARMode::FixedHigh => self.a_r_high,
            ARMode::Hyperprior => {
                if rng.bernoulli(self.p_a_r) {
                    self.a_r_high
                } else {
                    self.a_r_low
                }
            }
        }
    }

    /// Log prior mass of a support point of `a_r` (zero in the fixed modes).
    pub fn log_prior_a_r(&self, a: f64) -> f64 {
        match self.a_r_mode {
            ARMode::Hyperprior if a == self.a_r_high => self.p_a_r.ln(),
            ARMode::Hyperprior => (-self.p_a_r).ln_1p(),
            _ => 0.0,
        }
    }
}

/// One draw of every parameter from the joint prior.
///
/// `Sigma_beta` is drawn through its gamma-mixture representation
/// (`Z ~ Gamma(a, 1)`, `Sigma_beta | Z ~ InvGamma(b, Z)`) which is the
/// beta-prime law; `alpha_x` is drawn as `mu (1 - phi)` with the stationary
/// mean `mu` Gaussian.
pub fn sample_prior(prior: &PriorConfig, mu0_mu_x: f64, rng: &mut RngStream) -> SamplerState {
    let a0r = prior.sample_a_r(rng);
    let z_beta = rng.gamma(a0r);
    let sigma_beta = rng.inverse_gamma(prior.b0_r, z_beta);
    let phi = sample_phi_reference(rng);
    let mu = rng.normal(mu0_mu_x, prior.s0_mu_x);
    let psi = rng.normal(prior.mu0_psi, prior.sigma0_psi);
    let sigma_x2 = rng.inverse_gamma(prior.nu_x, prior.s0_x);
    let sigma_y2_tilde = rng.inverse_gamma(prior.nu_y, prior.s0_y);
    let alpha_y = rng.normal(prior.mu0_alpha_y, prior.sigma0_alpha_y);
    let g = sigma0_beta(phi, psi, sigma_x2, sigma_y2_tilde, sigma_beta);
    let beta = rng.normal(prior.mu0_beta, g);
    SamplerState {
        alpha_x: mu * (1.0 - phi),
        alpha_y,
        phi,
        beta,
        sigma_x2,
        psi,
        sigma_y2_tilde,
        sigma_beta,
        z_beta,
        a0r,
    }
}

/// Draw of the prior variance `g` of `beta` alone, marginal over
/// `(a_r, Sigma_beta, phi, psi, sigma_x2, sigma_y2_tilde)`.
pub fn sample_prior_variance_beta(prior: &PriorConfig, rng: &mut RngStream) -> f64 {
    let a0r = prior.sample_a_r(rng);
    let sigma_beta = rng.gamma(a0r) / rng.gamma(prior.b0_r);
    let phi = sample_phi_reference(rng);
    let psi = rng.normal(prior.mu0_psi, prior.sigma0_psi);
    let sigma_x2 = rng.inverse_gamma(prior.nu_x, prior.s0_x);
    let sigma_y2_tilde = rng.inverse_gamma(prior.nu_y, prior.s0_y);
    sigma0_beta(phi, psi, sigma_x2, sigma_y2_tilde, sigma_beta)
}
