//! Frequentist baselines: equation-by-equation OLS, the Kendall and
//! Stambaugh bias approximations, the Amihud–Hurvich reduced-bias
//! estimator, and two-sided t-tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::model::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreqMethod {
    Ols,
    Rbe,
}

/// Estimated residual covariance `(sigma_x2, sigma_y2, sigma_xy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCov {
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub sigma_xy: f64,
}

impl ResidualCov {
    pub fn correlation(&self) -> f64 {
        self.sigma_xy / (self.sigma_x2 * self.sigma_y2).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqFit {
    pub method: FreqMethod,
    pub alpha_x_hat: f64,
    pub phi_hat: f64,
    pub alpha_y_hat: f64,
    pub beta_hat: f64,
    pub se_phi: f64,
    pub se_beta: f64,
    /// Residual degrees of freedom of the return regression.
    pub dof_beta: usize,
    pub sigma_hat: ResidualCov,
}

/// Which Amihud–Hurvich correction of the AR coefficient to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbeCorrection {
    /// `phi + (1 + 3 phi) / T + 3 (1 + 3 phi) / T^2`.
    #[default]
    Full,
    /// Drops the `1 / T^2` term.
    FirstOrder,
}

fn lag_design(d: &Dataset) -> Vec<Vec<f64>> {
    d.lagged_x().map(|xl| vec![1.0, xl]).collect()
}

fn singular(what: &str) -> Error {
    Error::SingularDesign(format!("{what}: lagged predictor has no variation"))
}

/// OLS of `x_t` and `y_t` on `(1, x_{t-1})` with conventional standard
/// errors (`T - 2` denominator).
pub fn ols_fit(d: &Dataset) -> Result<FreqFit> {
    let t = d.len();
    if t < 3 {
        return Err(Error::InsufficientData(format!("OLS needs T >= 3, got {t}")));
    }
    let design = lag_design(d);
    let fx = least_squares(&design, d.x()).ok_or_else(|| singular("predictor equation"))?;
    let fy = least_squares(&design, d.y()).ok_or_else(|| singular("return equation"))?;
    let dof = (t - 2) as f64;
    let s2x = fx.rss / dof;
    let s2y = fy.rss / dof;
    let sxy = fx.residuals.iter().zip(&fy.residuals).map(|(a, b)| a * b).sum::<f64>() / dof;
    Ok(FreqFit {
        method: FreqMethod::Ols,
        alpha_x_hat: fx.coef[0],
        phi_hat: fx.coef[1],
        alpha_y_hat: fy.coef[0],
        beta_hat: fy.coef[1],
        se_phi: (s2x * fx.xtx_inv[3]).sqrt(),
        se_beta: (s2y * fy.xtx_inv[3]).sqrt(),
        dof_beta: t - 2,
        sigma_hat: ResidualCov { sigma_x2: s2x, sigma_y2: s2y, sigma_xy: sxy },
    })
}

/// Kendall's approximation to the OLS bias of an AR(1) coefficient.
pub fn kendall_bias(phi: f64, t: usize) -> f64 {
    -(1.0 + 3.0 * phi) / t as f64
}

/// Bias of the OLS predictive coefficient implied by a given AR bias.
pub fn stambaugh_bias(sigma_xy: f64, sigma_x2: f64, phi_bias: f64) -> f64 {
    sigma_xy / sigma_x2 * phi_bias
}

/// Reduced-bias AR coefficient from the OLS estimate.
pub fn rbe_phi(phi_ols: f64, t: usize, correction: RbeCorrection) -> f64 {
    let t = t as f64;
    let k = 1.0 + 3.0 * phi_ols;
    match correction {
        RbeCorrection::Full => phi_ols + k / t + 3.0 * k / (t * t),
        RbeCorrection::FirstOrder => phi_ols + k / t,
    }
}

/// Standard error reported for the reduced-bias `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbeStdError {
    /// Amihud–Hurvich: `sqrt(c^2 se_c(phi)^2 + se_aug^2)` where `c` is the
    /// coefficient on the predictor residual and `se_c(phi)` the OLS
    /// standard error of `phi` scaled by the derivative of the correction.
    #[default]
    AmihudHurvich,
    /// Conventional OLS standard error from the augmented regression.
    Augmented,
}

pub fn rbe_fit(d: &Dataset) -> Result<FreqFit> {
    rbe_fit_with(d, RbeCorrection::Full, RbeStdError::AmihudHurvich)
}

/// Reduced-bias fit: corrected AR coefficient, intercept re-centred so the
/// predictor residuals have mean zero, then OLS of `y_t` on
/// `(1, x_{t-1}, eps_x_t)` using those residuals.
///
/// The augmented regression treats the estimated residuals as data; the
/// Amihud–Hurvich standard error adds the variability they inherit from the
/// corrected `phi`.
pub fn rbe_fit_with(d: &Dataset, correction: RbeCorrection, se: RbeStdError) -> Result<FreqFit> {
    let ols = ols_fit(d)?;
    let t = d.len();
    if t < 4 {
        return Err(Error::InsufficientData(format!("reduced-bias fit needs T >= 4, got {t}")));
    }
    let phi = rbe_phi(ols.phi_hat, t, correction);
    let n = t as f64;
    let mean_x = d.x().iter().sum::<f64>() / n;
    let mean_lag = d.lagged_x().sum::<f64>() / n;
    let alpha_x = mean_x - phi * mean_lag;
    let eps_x: Vec<f64> = d.lagged_x().zip(d.x()).map(|(xl, &xt)| xt - alpha_x - phi * xl).collect();
    let design: Vec<Vec<f64>> = d.lagged_x().zip(&eps_x).map(|(xl, &e)| vec![1.0, xl, e]).collect();
    let fy = least_squares(&design, d.y())
        .ok_or_else(|| Error::SingularDesign("augmented return regression is singular".into()))?;
    let dof = t - 3;
    let s2 = fy.rss / dof as f64;
    let (alpha_y, beta, c) = (fy.coef[0], fy.coef[1], fy.coef[2]);
    let n2 = n * n;
    let scale = match correction {
        RbeCorrection::Full => 1.0 + 3.0 / n + 9.0 / n2,
        RbeCorrection::FirstOrder => 1.0 + 3.0 / n,
    };
    let se_phi = scale * ols.se_phi;
    let se_aug2 = s2 * fy.xtx_inv[4];
    let se_beta = match se {
        RbeStdError::AmihudHurvich => (c * c * se_phi * se_phi + se_aug2).sqrt(),
        RbeStdError::Augmented => se_aug2.sqrt(),
    };
    let eps_y: Vec<f64> = d.lagged_x().zip(d.y()).map(|(xl, &yt)| yt - alpha_y - beta * xl).collect();
    let denom = (t - 2) as f64;
    let sigma_hat = ResidualCov {
        sigma_x2: eps_x.iter().map(|e| e * e).sum::<f64>() / denom,
        sigma_y2: eps_y.iter().map(|e| e * e).sum::<f64>() / denom,
        sigma_xy: eps_x.iter().zip(&eps_y).map(|(a, b)| a * b).sum::<f64>() / denom,
    };
    Ok(FreqFit {
        method: FreqMethod::Rbe,
        alpha_x_hat: alpha_x,
        phi_hat: phi,
        alpha_y_hat: alpha_y,
        beta_hat: beta,
        se_phi,
        se_beta,
        dof_beta: dof,
        sigma_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Two-sided Student-t test of a zero coefficient.
pub fn t_test(estimate: f64, se: f64, dof: usize, level: f64) -> Result<TTest> {
    if !(se > 0.0) {
        return Err(Error::ParameterDomain(format!("standard error must be positive, got {se}")));
    }
    if dof < 1 {
        return Err(Error::ParameterDomain("t-test needs at least one degree of freedom".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::ParameterDomain(format!("level must lie in (0, 1), got {level}")));
    }
    let statistic = estimate / se;
    let dist = StudentsT::new(0.0, 1.0, dof as f64)
        .map_err(|e| Error::ParameterDomain(e.to_string()))?;
    let p_value = (2.0 * dist.sf(statistic.abs())).min(1.0);
    Ok(TTest { statistic, p_value, reject: p_value < level })
}

impl FreqFit {
    pub fn beta_test(&self, level: f64) -> Result<TTest> {
        t_test(self.beta_hat, self.se_beta, self.dof_beta, level)
    }
}
