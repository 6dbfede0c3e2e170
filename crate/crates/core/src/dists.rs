//! Samplers and log-densities for the distributions used by the model and
//! its priors, the truncated reference prior for the AR coefficient, and a
//! Gaussian kernel density estimator for figure data.
//!
//! Parameterizations follow the usual conventions: `Gamma{shape, rate}` has
//! mean `shape / rate`, `InverseGamma{shape, scale}` is the law of
//! `scale / G` with `G ~ Gamma(shape, 1)`, and `BetaPrime{a, b}` is the law
//! of `G_a / G_b` (equivalently `R / (1 - R)` for `R ~ Beta(a, b)`).

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Reproducible random stream identified by a `(seed, stream)` pair.
///
/// Distinct stream ids under the same seed select disjoint ChaCha streams,
/// so parallel workers can each own one without coordination.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `(0, 1]`; safe to take logs of.
    pub fn uniform_pos(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    pub fn std_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, variance: f64) -> f64 {
        mean + variance.sqrt() * self.std_normal()
    }

    /// `Gamma(shape, 1)` variate; `shape` must be positive.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        gamma_unit(shape, self)
    }

    pub fn inverse_gamma(&mut self, shape: f64, scale: f64) -> f64 {
        scale / self.gamma(shape)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Marsaglia–Tsang squeeze/rejection sampler, with the `U^{1/a}` boost for
/// shapes below one.
fn gamma_unit(shape: f64, rng: &mut RngStream) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        loop {
            let g = gamma_unit(shape + 1.0, rng);
            let log_x = g.ln() + rng.uniform_pos().ln() / shape;
            let x = log_x.exp();
            // Underflow to zero has probability below 1e-30 for shape >= 0.1.
            if x > 0.0 {
                return x;
            }
        }
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z = rng.std_normal();
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform_pos();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 {
            return d * v;
        }
        if u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log density of `N(mean, variance)` without parameter checks.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + variance.ln()) - 0.5 * d * d / variance
}

/// Log density of `InverseGamma(shape, scale)` without parameter checks.
#[inline]
pub fn inverse_gamma_logpdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Log density of `BetaPrime(a, b)` without parameter checks.
#[inline]
pub fn beta_prime_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() - (a + b) * x.ln_1p() - ln_beta(a, b)
}

/// A fully parameterized univariate distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Dist {
    Normal { mean: f64, variance: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
    BetaPrime { a: f64, b: f64 },
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Dist::Normal { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::ParameterDomain(format!("normal mean must be finite, got {mean}")));
                }
                check_positive("normal variance", variance)
            }
            Dist::Gamma { shape, rate } => {
                check_positive("gamma shape", shape)?;
                check_positive("gamma rate", rate)
            }
            Dist::InverseGamma { shape, scale } => {
                check_positive("inverse gamma shape", shape)?;
                check_positive("inverse gamma scale", scale)
            }
            Dist::Beta { a, b } | Dist::BetaPrime { a, b } => {
                check_positive("beta shape a", a)?;
                check_positive("beta shape b", b)
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Dist::Normal { mean, variance } => rng.normal(mean, variance),
            Dist::Gamma { shape, rate } => rng.gamma(shape) / rate,
            Dist::InverseGamma { shape, scale } => rng.inverse_gamma(shape, scale),
            Dist::Beta { a, b } => loop {
                let x = rng.gamma(a);
                let y = rng.gamma(b);
                let r = x / (x + y);
                if r > 0.0 && r < 1.0 {
                    break r;
                }
            },
            Dist::BetaPrime { a, b } => rng.gamma(a) / rng.gamma(b),
        })
    }

    /// Natural-log density; `-inf` outside the support.
    pub fn logpdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Dist::Normal { mean, variance } => normal_logpdf(x, mean, variance),
            Dist::Gamma { shape, rate } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
                }
            }
            Dist::InverseGamma { shape, scale } => inverse_gamma_logpdf(x, shape, scale),
            Dist::Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
                }
            }
            Dist::BetaPrime { a, b } => beta_prime_logpdf(x, a, b),
        })
    }

    /// Analytic mean, when finite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Dist::Normal { mean, .. } => Some(mean),
            Dist::Gamma { shape, rate } => Some(shape / rate),
            Dist::InverseGamma { shape, scale } => (shape > 1.0).then(|| scale / (shape - 1.0)),
            Dist::Beta { a, b } => Some(a / (a + b)),
            Dist::BetaPrime { a, b } => (b > 1.0).then(|| a / (b - 1.0)),
        }
    }

    /// Analytic variance, when finite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            Dist::Normal { variance, .. } => Some(variance),
            Dist::Gamma { shape, rate } => Some(shape / (rate * rate)),
            Dist::InverseGamma { shape, scale } => (shape > 2.0)
                .then(|| scale * scale / ((shape - 1.0).powi(2) * (shape - 2.0))),
            Dist::Beta { a, b } => Some(a * b / ((a + b).powi(2) * (a + b + 1.0))),
            Dist::BetaPrime { a, b } => {
                (b > 2.0).then(|| a * (a + b - 1.0) / ((b - 2.0) * (b - 1.0).powi(2)))
            }
        }
    }
}

/// Inverse CDF of the reference prior `2 / (pi sqrt(1 - phi^2))` on `[0, 1)`.
pub fn phi_reference_quantile(u: f64) -> f64 {
    (FRAC_PI_2 * u).sin()
}

/// CDF of the truncated reference prior, `(2 / pi) asin(phi)`.
pub fn phi_reference_cdf(phi: f64) -> f64 {
    if phi <= 0.0 {
        0.0
    } else if phi >= 1.0 {
        1.0
    } else {
        phi.asin() / FRAC_PI_2
    }
}

/// Draw from the truncated reference prior by inverse CDF.
pub fn sample_phi_reference(rng: &mut RngStream) -> f64 {
    loop {
        let phi = phi_reference_quantile(rng.uniform());
        // sin rounds to exactly 1.0 for u within ~1e-8 of one
        if phi < 1.0 {
            return phi;
        }
    }
}

pub fn logpdf_phi_reference(phi: f64) -> f64 {
    if (0.0..1.0).contains(&phi) {
        LN_2 - PI.ln() - 0.5 * (-phi * phi).ln_1p()
    } else {
        f64::NEG_INFINITY
    }
}

/// Rule-of-thumb bandwidth `0.9 min(sd, IQR / 1.34) n^{-1/5}`.
pub fn kde_bandwidth(draws: &[f64]) -> Result<f64> {
    if draws.len() < 2 {
        return Err(Error::DegenerateSample("kernel density needs at least two draws".into()));
    }
    let sd = stats::std_dev(draws);
    let sorted = stats::sorted(draws);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let mut lo = sd.min(iqr / 1.34);
    if !(lo > 0.0) {
        lo = sd;
    }
    if !(lo > 0.0) || !lo.is_finite() {
        return Err(Error::DegenerateSample("all draws are identical".into()));
    }
    Ok(0.9 * lo * (draws.len() as f64).powf(-0.2))
}

/// Gaussian kernel density estimate of `draws` evaluated on `grid`.
pub fn kde(draws: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::ParameterDomain("kernel density grid is empty".into()));
    }
    let h = kde_bandwidth(draws)?;
    let norm = 1.0 / (draws.len() as f64 * h * (2.0 * PI).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            norm * draws
                .iter()
                .map(|&x| {
                    let z = (g - x) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect())
}
