//! The predictive system
//!
//! ```text
//! x_t = alpha_x + phi  x_{t-1} + eps_x_t
//! y_t = alpha_y + beta x_{t-1} + eps_y_t,   (eps_x, eps_y) ~ N(0, Sigma)
//! ```
//!
//! in its reduced form and in the control-function form, where
//! `eps_y_t = psi eps_x_t + eps_y_tilde_t` with independent innovations.
//! The initial observation `x0` is treated as a draw from the stationary
//! distribution of the AR(1), so the likelihood here is the exact
//! (unconditional) one.

use serde::{Deserialize, Serialize};

use crate::dists::{normal_logpdf, RngStream};
use crate::error::{Error, Result};

/// Observed series `{x0, x_1..x_T, y_1..y_T}`. `y_t` pairs with `x_{t-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x0: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x0: f64, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InsufficientData(format!(
                "x has {} observations but y has {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData(format!("need T >= 2 observations, got {}", x.len())));
        }
        if !x0.is_finite() || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InsufficientData("series contain non-finite values".into()));
        }
        Ok(Self { x0, x, y })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `x_1..x_T`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `y_1..y_T`.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Number of (x_t, y_t) pairs, `T`.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `x_{t-1}` for `t = 1..T`, i.e. `x0, x_1, .., x_{T-1}`.
    pub fn lagged_x(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.x0).chain(self.x[..self.x.len() - 1].iter().copied())
    }

    /// `(1 / (T + 1)) sum_{t=0}^{T} x_t`.
    pub fn mean_x_with_initial(&self) -> f64 {
        (self.x0 + self.x.iter().sum::<f64>()) / (self.x.len() + 1) as f64
    }
}

/// Parameters of the reduced-form system with innovation covariance
/// `[[sigma_x2, sigma_xy], [sigma_xy, sigma_y2]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedFormParams {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub phi: f64,
    pub beta: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub sigma_xy: f64,
}

/// Control-function parameters: `sigma_xy = psi sigma_x2` and
/// `sigma_y2 = sigma_y2_tilde + sigma_x2 psi^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlFormParams {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub phi: f64,
    pub beta: f64,
    pub sigma_x2: f64,
    pub psi: f64,
    pub sigma_y2_tilde: f64,
}

impl ReducedFormParams {
    /// Data-generating process of the simulation study with the given `beta`
    /// (`0` for no predictability, `0.1` for weak predictability).
    pub fn simulation_dgp(beta: f64) -> Self {
        Self {
            alpha_x: -0.15,
            alpha_y: 0.6,
            phi: 0.95,
            beta,
            sigma_x2: 0.02,
            sigma_y2: 0.04,
            sigma_xy: -0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha_x,
            self.alpha_y,
            self.phi,
            self.beta,
            self.sigma_x2,
            self.sigma_y2,
            self.sigma_xy,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterDomain("parameters must be finite".into()));
        }
        if self.phi.abs() >= 1.0 {
            return Err(Error::Nonstationary(self.phi.abs()));
        }
        if !(self.sigma_x2 > 0.0 && self.sigma_y2 > 0.0)
            || self.sigma_xy * self.sigma_xy >= self.sigma_x2 * self.sigma_y2
        {
            return Err(Error::InvalidCovariance(format!(
                "sigma_x2 = {}, sigma_y2 = {}, sigma_xy = {}",
                self.sigma_x2, self.sigma_y2, self.sigma_xy
            )));
        }
        Ok(())
    }

    pub fn correlation(&self) -> f64 {
        self.sigma_xy / (self.sigma_x2 * self.sigma_y2).sqrt()
    }

    pub fn to_control_form(&self) -> Result<ControlFormParams> {
        self.validate()?;
        let psi = self.sigma_xy / self.sigma_x2;
        let sigma_y2_tilde = self.sigma_y2 - self.sigma_xy * self.sigma_xy / self.sigma_x2;
        if !(sigma_y2_tilde > 0.0) {
            return Err(Error::InvalidCovariance(format!(
                "conditional return variance {sigma_y2_tilde} is not positive"
            )));
        }
        Ok(ControlFormParams {
            alpha_x: self.alpha_x,
            alpha_y: self.alpha_y,
            phi: self.phi,
            beta: self.beta,
            sigma_x2: self.sigma_x2,
            psi,
            sigma_y2_tilde,
        })
    }
}

impl ControlFormParams {
    pub fn validate(&self) -> Result<()> {
        if self.phi.abs() >= 1.0 {
            return Err(Error::Nonstationary(self.phi.abs()));
        }
        if !(self.sigma_x2 > 0.0 && self.sigma_y2_tilde > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "variances must be positive: sigma_x2 = {}, sigma_y2_tilde = {}",
                self.sigma_x2, self.sigma_y2_tilde
            )));
        }
        Ok(())
    }

    pub fn to_reduced_form(&self) -> ReducedFormParams {
        ReducedFormParams {
            alpha_x: self.alpha_x,
            alpha_y: self.alpha_y,
            phi: self.phi,
            beta: self.beta,
            sigma_x2: self.sigma_x2,
            sigma_y2: self.sigma_y2_tilde + self.sigma_x2 * self.psi * self.psi,
            sigma_xy: self.psi * self.sigma_x2,
        }
    }

    /// Stationary mean `alpha_x / (1 - phi)`.
    pub fn stationary_mean(&self) -> f64 {
        self.alpha_x / (1.0 - self.phi)
    }
}

/// Per-period innovations implied by a parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub eps_x: Vec<f64>,
    pub eps_y: Vec<f64>,
    pub eps_y_tilde: Vec<f64>,
    /// `(sigma_xy / sigma_y2) eps_y`, the part of `eps_x` predicted by `eps_y`.
    pub u_tilde: Vec<f64>,
    /// `sigma_x2 - sigma_xy^2 / sigma_y2`.
    pub sigma_x2_tilde: f64,
}

impl Residuals {
    pub fn compute(p: &ControlFormParams, d: &Dataset) -> Self {
        let sigma_y2 = p.sigma_y2_tilde + p.sigma_x2 * p.psi * p.psi;
        let k = p.sigma_x2 * p.psi / sigma_y2;
        let n = d.len();
        let mut r = Residuals {
            eps_x: Vec::with_capacity(n),
            eps_y: Vec::with_capacity(n),
            eps_y_tilde: Vec::with_capacity(n),
            u_tilde: Vec::with_capacity(n),
            sigma_x2_tilde: p.sigma_x2 * p.sigma_y2_tilde / sigma_y2,
        };
        for ((xl, &xt), &yt) in d.lagged_x().zip(d.x()).zip(d.y()) {
            let ex = xt - p.alpha_x - p.phi * xl;
            let ey = yt - p.alpha_y - p.beta * xl;
            r.eps_x.push(ex);
            r.eps_y.push(ey);
            r.eps_y_tilde.push(ey - p.psi * ex);
            r.u_tilde.push(k * ey);
        }
        r
    }
}

/// Prior variance of `beta`:
/// `Sigma_beta (sigma_y2_tilde / sigma_x2 + psi^2) (1 - phi^2)`, which equals
/// `Sigma_beta sigma_y2 (1 - phi^2) / sigma_x2`.
#[inline]
pub fn sigma0_beta(phi: f64, psi: f64, sigma_x2: f64, sigma_y2_tilde: f64, sigma_beta: f64) -> f64 {
    sigma_beta * (sigma_y2_tilde / sigma_x2 + psi * psi) * (1.0 - phi * phi)
}

/// Log density of `x0` under the stationary law of the AR(1).
#[inline]
pub fn initial_logpdf(x0: f64, alpha_x: f64, phi: f64, sigma_x2: f64) -> f64 {
    normal_logpdf(x0, alpha_x / (1.0 - phi), sigma_x2 / (1.0 - phi * phi))
}

/// Exact log-likelihood: return equation given `eps_x`, the AR(1) transition
/// densities, and the stationary density of `x0`.
pub fn exact_loglik(p: &ControlFormParams, d: &Dataset) -> f64 {
    let mut ll = initial_logpdf(d.x0(), p.alpha_x, p.phi, p.sigma_x2);
    for ((xl, &xt), &yt) in d.lagged_x().zip(d.x()).zip(d.y()) {
        let ex = xt - p.alpha_x - p.phi * xl;
        ll += normal_logpdf(ex, 0.0, p.sigma_x2);
        ll += normal_logpdf(yt, p.alpha_y + p.beta * xl + p.psi * ex, p.sigma_y2_tilde);
    }
    ll
}

/// Simulate `T` periods with `x0` drawn from the stationary distribution.
pub fn simulate_dataset(p: &ReducedFormParams, t: usize, rng: &mut RngStream) -> Result<Dataset> {
    p.validate()?;
    if t < 2 {
        return Err(Error::ParameterDomain(format!("need T >= 2, got {t}")));
    }
    let cf = p.to_control_form()?;
    let sx = p.sigma_x2.sqrt();
    let s_tilde = cf.sigma_y2_tilde.sqrt();
    let x0 = cf.stationary_mean() + (p.sigma_x2 / (1.0 - p.phi * p.phi)).sqrt() * rng.std_normal();
    let mut x = Vec::with_capacity(t);
    let mut y = Vec::with_capacity(t);
    let mut prev = x0;
    for _ in 0..t {
        let ex = sx * rng.std_normal();
        let ey = cf.psi * ex + s_tilde * rng.std_normal();
        let xt = p.alpha_x + p.phi * prev + ex;
        y.push(p.alpha_y + p.beta * prev + ey);
        x.push(xt);
        prev = xt;
    }
    Dataset::new(x0, x, y)
}

/// Cross-product matrix `sum_t z_t z_t'` of `z_t = (1, x_{t-1}, x_t, y_t)`.
///
/// Every residual the sampler needs is linear in `z_t`, so sums of squares
/// and cross products of residuals reduce to quadratic forms in this 4x4
/// matrix and each sweep is O(1) in `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossProducts {
    s: [[f64; 4]; 4],
}

/// Index of each component of `z_t`.
pub mod z {
    pub const ONE: usize = 0;
    pub const XLAG: usize = 1;
    pub const X: usize = 2;
    pub const Y: usize = 3;
}

impl CrossProducts {
    pub fn new(d: &Dataset) -> Self {
        let mut s = [[0.0; 4]; 4];
        for ((xl, &xt), &yt) in d.lagged_x().zip(d.x()).zip(d.y()) {
            let zt = [1.0, xl, xt, yt];
            for i in 0..4 {
                for j in i..4 {
                    s[i][j] += zt[i] * zt[j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..i {
                s[i][j] = s[j][i];
            }
        }
        Self { s }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[i][j]
    }

    /// `sum_t (c'z_t)(d'z_t)`.
    #[inline]
    pub fn cross(&self, c: &[f64; 4], d: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            let mut row = 0.0;
            for j in 0..4 {
                row += self.s[i][j] * d[j];
            }
            acc += c[i] * row;
        }
        acc
    }

    /// `sum_t (c'z_t)^2`.
    #[inline]
    pub fn quad(&self, c: &[f64; 4]) -> f64 {
        self.cross(c, c)
    }

    /// `(sum_t c'z_t, sum_t x_{t-1} c'z_t)`, i.e. `X'r` for the regressor
    /// matrix `X = [1, x_{t-1}]`.
    #[inline]
    pub fn x_cross(&self, c: &[f64; 4]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            for j in 0..4 {
                *o += self.s[k][j] * c[j];
            }
        }
        out
    }

    /// `X'X` for `X = [1, x_{t-1}]`.
    #[inline]
    pub fn xtx(&self) -> [[f64; 2]; 2] {
        [[self.s[0][0], self.s[0][1]], [self.s[1][0], self.s[1][1]]]
    }
}

/// Residual coefficient vectors in the `z_t` basis.
#[inline]
pub fn eps_x_coef(alpha_x: f64, phi: f64) -> [f64; 4] {
    [-alpha_x, -phi, 1.0, 0.0]
}

#[inline]
pub fn eps_y_coef(alpha_y: f64, beta: f64) -> [f64; 4] {
    [-alpha_y, -beta, 0.0, 1.0]
}
