//! Metropolis-within-Gibbs sampler for the control-function form of the
//! predictive system under the R²-shrinkage prior on `beta`.
//!
//! One sweep updates, in order: `(alpha_y, beta)`, `(alpha_x, phi)`, `psi`,
//! `sigma_x2`, `sigma_y2_tilde`, `(Z_beta, Sigma_beta)` and `a0R`. Steps 2-5
//! are Metropolis-Hastings updates whose proposals are the conjugate
//! conditionals that ignore the dependence of the `beta` prior variance on
//! the parameter being updated; the acceptance ratio restores it.

mod chain;
mod prior;
mod steps;

use serde::{Deserialize, Serialize};

pub use chain::{run_chain, run_chain_from, Acceptance, ChainRecord, Counter, Schedule, COLUMNS};
pub use prior::{sample_prior, sample_prior_variance_beta, ARMode, PriorConfig};
pub use steps::{log_accept_a0r, Gaussian2, Gibbs, ReturnDraw};

use crate::error::{Error, Result};
use crate::freq::ols_fit;
use crate::model::{sigma0_beta, ControlFormParams, Dataset};

/// How the `(alpha_y, beta)` block is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnStep {
    /// Regress `y_t` on `(1, x_{t-1})` with the marginal return variance
    /// `sigma_y2 = sigma_y2_tilde + sigma_x2 psi^2`.
    #[default]
    Marginal,
    /// Regress `y_t - psi eps_x_t` on `(1, x_{t-1})` with variance
    /// `sigma_y2_tilde`, the exact full conditional.
    Conditional,
}

/// Proposal used for `sigma_x2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceStep {
    /// Inverse gamma including the stationary `x0` term.
    #[default]
    Exact,
    /// Inverse gamma from the transition densities only; the `x0` density
    /// ratio enters the acceptance probability instead.
    TransitionsOnly,
}

/// Prior variance of `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaPrior {
    /// `Sigma_beta (sigma_y2_tilde / sigma_x2 + psi^2) (1 - phi^2)` with the
    /// beta-prime hierarchy on `Sigma_beta`.
    #[default]
    Shrinkage,
    /// A constant variance; `Sigma_beta`, `Z_beta` and `a0R` stay put.
    Fixed(f64),
}

/// Blocks held at their current value instead of being updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Frozen {
    pub return_coeffs: bool,
    pub ar_coeffs: bool,
    pub psi: bool,
    pub sigma_x2: bool,
    pub sigma_y2_tilde: bool,
    pub shrinkage: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub return_step: ReturnStep,
    pub sigma_x2_step: VarianceStep,
    pub beta_prior: BetaPrior,
    /// Include the stationary density of `x0` in the likelihood.
    pub include_initial: bool,
    pub frozen: Frozen,
}

impl SamplerOptions {
    /// Default configuration: exact likelihood, marginal-variance return step.
    pub fn new() -> Self {
        Self { include_initial: true, ..Default::default() }
    }

    /// Every update an exact full conditional or an exact MH step.
    pub fn exact() -> Self {
        Self { return_step: ReturnStep::Conditional, ..Self::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if let BetaPrior::Fixed(v) = self.beta_prior {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(vec![format!(
                    "fixed beta prior variance must be positive (got {v})"
                )]));
            }
        }
        Ok(())
    }
}

/// Current value of every sampled quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub phi: f64,
    pub beta: f64,
    pub sigma_x2: f64,
    pub psi: f64,
    pub sigma_y2_tilde: f64,
    pub sigma_beta: f64,
    pub z_beta: f64,
    pub a0r: f64,
}

impl SamplerState {
    /// Starting values from equation-by-equation OLS, with `phi` clipped
    /// into `[0, 0.999]` and the shrinkage block at `Sigma_beta = Z_beta = 1`.
    pub fn initial(d: &Dataset, prior: &PriorConfig) -> Result<Self> {
        let fit = ols_fit(d)?;
        let s = fit.sigma_hat;
        let phi = fit.phi_hat.clamp(0.0, 0.999);
        let mean_x = d.mean_x_with_initial();
        let psi = s.sigma_xy / s.sigma_x2;
        let mut sigma_y2_tilde = s.sigma_y2 - s.sigma_xy * s.sigma_xy / s.sigma_x2;
        if !(sigma_y2_tilde > 0.0) {
            sigma_y2_tilde = 1e-3 * s.sigma_y2.max(f64::MIN_POSITIVE);
        }
        let state = Self {
            alpha_x: mean_x * (1.0 - phi),
            alpha_y: fit.alpha_y_hat,
            phi,
            beta: fit.beta_hat,
            sigma_x2: s.sigma_x2,
            psi,
            sigma_y2_tilde,
            sigma_beta: 1.0,
            z_beta: 1.0,
            a0r: prior.a_r_initial(),
        };
        state.check()?;
        Ok(state)
    }

    pub fn control_form(&self) -> ControlFormParams {
        ControlFormParams {
            alpha_x: self.alpha_x,
            alpha_y: self.alpha_y,
            phi: self.phi,
            beta: self.beta,
            sigma_x2: self.sigma_x2,
            psi: self.psi,
            sigma_y2_tilde: self.sigma_y2_tilde,
        }
    }

    pub fn sigma_y2(&self) -> f64 {
        self.sigma_y2_tilde + self.sigma_x2 * self.psi * self.psi
    }

    /// `R² = Sigma_beta / (1 + Sigma_beta)`.
    pub fn r2(&self) -> f64 {
        self.sigma_beta / (1.0 + self.sigma_beta)
    }

    /// Prior variance of `beta` under the shrinkage prior.
    pub fn shrinkage_variance(&self) -> f64 {
        sigma0_beta(self.phi, self.psi, self.sigma_x2, self.sigma_y2_tilde, self.sigma_beta)
    }

    pub fn check(&self) -> Result<()> {
        let vals = [
            self.alpha_x,
            self.alpha_y,
            self.phi,
            self.beta,
            self.sigma_x2,
            self.psi,
            self.sigma_y2_tilde,
            self.sigma_beta,
            self.z_beta,
            self.a0r,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite state {self:?}")));
        }
        if !(0.0..1.0).contains(&self.phi) {
            return Err(Error::NumericalFailure(format!("phi = {} left [0, 1)", self.phi)));
        }
        if !(self.sigma_x2 > 0.0
            && self.sigma_y2_tilde > 0.0
            && self.sigma_beta > 0.0
            && self.z_beta > 0.0
            && self.a0r > 0.0)
        {
            return Err(Error::NumericalFailure(format!("non-positive scale in {self:?}")));
        }
        Ok(())
    }

    pub(crate) fn as_row(&self) -> [f64; 10] {
        [
            self.alpha_x,
            self.alpha_y,
            self.phi,
            self.beta,
            self.sigma_x2,
            self.psi,
            self.sigma_y2_tilde,
            self.sigma_beta,
            self.z_beta,
            self.a0r,
        ]
    }

    pub(crate) fn from_row(r: &[f64]) -> Self {
        Self {
            alpha_x: r[0],
            alpha_y: r[1],
            phi: r[2],
            beta: r[3],
            sigma_x2: r[4],
            psi: r[5],
            sigma_y2_tilde: r[6],
            sigma_beta: r[7],
            z_beta: r[8],
            a0r: r[9],
        }
    }
}
