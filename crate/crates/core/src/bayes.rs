//! Savage–Dickey Bayes factor for `beta = 0` with median estimators of the
//! prior and posterior ordinates, and posterior summaries.

use serde::{Deserialize, Serialize};

use crate::dists::{normal_logpdf, RngStream};
use crate::error::{Error, Result};
use crate::sampler::{sample_prior_variance_beta, ChainRecord, PriorConfig, COLUMNS};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfResult {
    pub bf01: f64,
    pub prior_ordinate: f64,
    pub posterior_ordinate: f64,
    pub decision: Decision,
    #[serde(rename = "M_used")]
    pub m_used: usize,
}

impl BfResult {
    /// Builds the result from log ordinates. `H0` is chosen only when
    /// `bf01 > 1` strictly.
    pub fn from_log_ordinates(log_posterior: f64, log_prior: f64, m_used: usize) -> Result<Self> {
        let prior_ordinate = log_prior.exp();
        if !(prior_ordinate > 0.0 && prior_ordinate.is_finite()) {
            return Err(Error::DegeneratePrior(format!("prior ordinate at zero is {prior_ordinate}")));
        }
        if log_posterior.is_nan() {
            return Err(Error::NumericalFailure("posterior ordinate is NaN".into()));
        }
        let bf01 = (log_posterior - log_prior).exp();
        Ok(Self {
            bf01,
            prior_ordinate,
            posterior_ordinate: log_posterior.exp(),
            decision: if bf01 > 1.0 { Decision::H0 } else { Decision::H1 },
            m_used,
        })
    }
}

/// Log of the median of the Gaussian densities `N(0; mean_i, var_i)`.
pub fn log_median_ordinate(means: &[f64], variances: &[f64]) -> f64 {
    let logs: Vec<f64> = means.iter().zip(variances).map(|(&m, &v)| normal_logpdf(0.0, m, v)).collect();
    stats::log_median_exp(&logs)
}

/// Log of the median prior ordinate of `beta` at zero over `m` fresh prior
/// draws of its variance.
pub fn log_prior_ordinate_beta(prior: &PriorConfig, m: usize, rng: &mut RngStream) -> Result<f64> {
    if m < 100 {
        return Err(Error::InsufficientDraws(format!("prior ordinate needs at least 100 draws, got {m}")));
    }
    let variances: Vec<f64> = (0..m).map(|_| sample_prior_variance_beta(prior, rng)).collect();
    Ok(log_median_ordinate(&vec![prior.mu0_beta; m], &variances))
}

pub fn prior_ordinate_beta(prior: &PriorConfig, m: usize, rng: &mut RngStream) -> Result<f64> {
    log_prior_ordinate_beta(prior, m, rng).map(f64::exp)
}

pub fn log_posterior_ordinate_beta(rec: &ChainRecord) -> Result<f64> {
    if rec.b_t.is_empty() {
        return Err(Error::InsufficientDraws("chain record has no kept draws".into()));
    }
    Ok(log_median_ordinate(&rec.b_t, &rec.big_b_t))
}

/// Median over kept iterations of the step-1 conditional density of `beta`
/// at zero.
pub fn posterior_ordinate_beta(rec: &ChainRecord) -> Result<f64> {
    log_posterior_ordinate_beta(rec).map(f64::exp)
}

pub fn bayes_factor_01(rec: &ChainRecord, prior: &PriorConfig, m_prior: usize, rng: &mut RngStream) -> Result<BfResult> {
    let log_post = log_posterior_ordinate_beta(rec)?;
    let log_prior = log_prior_ordinate_beta(prior, m_prior, rng)?;
    BfResult::from_log_ordinates(log_post, log_prior, rec.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl ParamSummary {
    pub fn from_draws(name: &str, xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::InsufficientDraws(format!("no draws for {name}")));
        }
        let sorted = stats::sorted(xs);
        Ok(Self {
            name: name.to_string(),
            mean: stats::mean(xs),
            sd: if xs.len() > 1 { stats::std_dev(xs) } else { 0.0 },
            q05: stats::quantile_sorted(&sorted, 0.05),
            q50: stats::quantile_sorted(&sorted, 0.5),
            q95: stats::quantile_sorted(&sorted, 0.95),
        })
    }
}

/// Mean, sd and 5/50/95% quantiles of every recorded parameter and of `R²`.
pub fn posterior_summary(rec: &ChainRecord) -> Result<Vec<ParamSummary>> {
    COLUMNS[..10]
        .iter()
        .copied()
        .chain(["r2"])
        .map(|name| ParamSummary::from_draws(name, &rec.column(name).unwrap_or_default()))
        .collect()
}
