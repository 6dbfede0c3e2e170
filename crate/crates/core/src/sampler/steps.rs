use crate::dists::{ln_gamma, logpdf_phi_reference, normal_logpdf, RngStream};
use crate::error::{Error, Result};
use crate::model::{eps_x_coef, eps_y_coef, initial_logpdf, CrossProducts, Dataset};

use super::{BetaPrior, Counter, PriorConfig, ReturnStep, SamplerOptions, SamplerState, VarianceStep};
use super::{ARMode, Acceptance};

/// Bivariate Gaussian stored through its precision matrix, which keeps the
/// draws stable when one prior variance is huge or tiny.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    prec: [[f64; 2]; 2],
}

impl Gaussian2 {
    /// `N(P^{-1} r, P^{-1})`.
    pub fn from_precision(p: [[f64; 2]; 2], r: [f64; 2]) -> Result<Self> {
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        if !(p[0][0] > 0.0 && p[1][1] > 0.0 && det > 0.0 && det.is_finite()) {
            return Err(Error::NumericalFailure(format!("precision matrix {p:?} is not positive definite")));
        }
        let cov = [[p[1][1] / det, -p[0][1] / det], [-p[1][0] / det, p[0][0] / det]];
        let mean = [
            cov[0][0] * r[0] + cov[0][1] * r[1],
            cov[1][0] * r[0] + cov[1][1] * r[1],
        ];
        if !(mean[0].is_finite() && mean[1].is_finite()) {
            return Err(Error::NumericalFailure("non-finite conditional mean".into()));
        }
        Ok(Self { mean, cov, prec: p })
    }

    /// Draws the second coordinate from its marginal, then the first given it.
    pub fn sample(&self, rng: &mut RngStream) -> [f64; 2] {
        let x1 = self.mean[1] + self.cov[1][1].sqrt() * rng.std_normal();
        let slope = -self.prec[0][1] / self.prec[0][0];
        let x0 = self.mean[0] + slope * (x1 - self.mean[1]) + (1.0 / self.prec[0][0]).sqrt() * rng.std_normal();
        [x0, x1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnDraw {
    pub alpha_y: f64,
    pub beta: f64,
    /// Conditional posterior mean of `beta`.
    pub b_t: f64,
    /// Conditional posterior variance of `beta`.
    pub big_b_t: f64,
}

/// MH accept/reject on the log scale. Always consumes one uniform.
fn mh_accept(log_a: f64, rng: &mut RngStream) -> bool {
    let u = rng.uniform_pos();
    !log_a.is_nan() && u.ln() <= log_a
}

/// Log acceptance ratio of the move `a_old -> a_new` for the first shape of
/// the beta-prime prior on `Sigma_beta` (second shape `b`).
pub fn log_accept_a0r(a_old: f64, a_new: f64, sigma_beta: f64, b: f64) -> f64 {
    (a_new - a_old) * (sigma_beta.ln() - sigma_beta.ln_1p()) + ln_gamma(a_old) - ln_gamma(a_old + b)
        + ln_gamma(a_new + b)
        - ln_gamma(a_new)
}

/// Full conditionals and MH kernels for one dataset.
#[derive(Debug, Clone)]
pub struct Gibbs<'a> {
    data: &'a Dataset,
    cp: CrossProducts,
    prior: PriorConfig,
    mu0_mu_x: f64,
    opts: SamplerOptions,
    t: f64,
}

impl<'a> Gibbs<'a> {
    pub fn new(data: &'a Dataset, prior: &PriorConfig, opts: &SamplerOptions) -> Result<Self> {
        prior.validate()?;
        opts.validate()?;
        Ok(Self {
            data,
            cp: CrossProducts::new(data),
            mu0_mu_x: prior.resolve_mu0_mu_x(data.mean_x_with_initial()),
            prior: prior.clone(),
            opts: *opts,
            t: data.len() as f64,
        })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    pub fn options(&self) -> &SamplerOptions {
        &self.opts
    }

    /// Resolved prior mean of the stationary mean of `x`.
    pub fn mu0_mu_x(&self) -> f64 {
        self.mu0_mu_x
    }

    fn hierarchical(&self) -> bool {
        matches!(self.opts.beta_prior, BetaPrior::Shrinkage)
    }

    /// Prior variance `g` of `beta` at the given state.
    pub fn prior_variance_beta(&self, s: &SamplerState) -> f64 {
        match self.opts.beta_prior {
            BetaPrior::Shrinkage => s.shrinkage_variance(),
            BetaPrior::Fixed(v) => v,
        }
    }

    pub fn log_beta_prior(&self, s: &SamplerState) -> f64 {
        normal_logpdf(s.beta, self.prior.mu0_beta, self.prior_variance_beta(s))
    }

    fn log_beta_prior_ratio(&self, new: &SamplerState, old: &SamplerState) -> f64 {
        if self.hierarchical() {
            self.log_beta_prior(new) - self.log_beta_prior(old)
        } else {
            0.0
        }
    }

    fn log_initial(&self, s: &SamplerState) -> f64 {
        initial_logpdf(self.data.x0(), s.alpha_x, s.phi, s.sigma_x2)
    }

    /// Conditional posterior of `(alpha_y, beta)`.
    pub fn return_coeff_posterior(&self, s: &SamplerState) -> Result<Gaussian2> {
        let g = self.prior_variance_beta(s);
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::NumericalFailure(format!("beta prior variance {g} is degenerate")));
        }
        let (coef, var) = match self.opts.return_step {
            ReturnStep::Marginal => ([0.0, 0.0, 0.0, 1.0], s.sigma_y2()),
            ReturnStep::Conditional => {
                ([s.psi * s.alpha_x, s.psi * s.phi, -s.psi, 1.0], s.sigma_y2_tilde)
            }
        };
        let xtx = self.cp.xtx();
        let xr = self.cp.x_cross(&coef);
        let p = &self.prior;
        let prec = [
            [xtx[0][0] / var + 1.0 / p.sigma0_alpha_y, xtx[0][1] / var],
            [xtx[1][0] / var, xtx[1][1] / var + 1.0 / g],
        ];
        let rhs = [xr[0] / var + p.mu0_alpha_y / p.sigma0_alpha_y, xr[1] / var + p.mu0_beta / g];
        Gaussian2::from_precision(prec, rhs)
    }

    /// Step 1. Updates `(alpha_y, beta)` unless frozen and returns the
    /// conditional moments of `beta` used by the Bayes factor.
    pub fn step_return_coeffs(&self, s: &mut SamplerState, rng: &mut RngStream) -> Result<ReturnDraw> {
        let post = self.return_coeff_posterior(s)?;
        if !self.opts.frozen.return_coeffs {
            let [a, b] = post.sample(rng);
            s.alpha_y = a;
            s.beta = b;
        }
        Ok(ReturnDraw { alpha_y: s.alpha_y, beta: s.beta, b_t: post.mean[1], big_b_t: post.cov[1][1] })
    }

    /// `(sigma_x2_tilde, k)` with `u_tilde_t = k eps_y_t`.
    fn predictor_given_return(s: &SamplerState) -> (f64, f64) {
        let sy2 = s.sigma_y2();
        (s.sigma_x2 * s.sigma_y2_tilde / sy2, s.sigma_x2 * s.psi / sy2)
    }

    /// Independence proposal for `(alpha_x, phi)`: the posterior of the
    /// regression of `x_t - u_tilde_t` on `(1, x_{t-1})` under the auxiliary
    /// conjugate prior.
    pub fn ar_proposal(&self, s: &SamplerState) -> Result<Gaussian2> {
        let (sx2t, k) = Self::predictor_given_return(s);
        let coef = [k * s.alpha_y, k * s.beta, 1.0, -k];
        let xtx = self.cp.xtx();
        let xr = self.cp.x_cross(&coef);
        let b0 = self.prior.aux_b0;
        let bb0 = self.prior.aux_big_b0;
        let prec = [
            [(xtx[0][0] + 1.0 / bb0[0]) / sx2t, xtx[0][1] / sx2t],
            [xtx[1][0] / sx2t, (xtx[1][1] + 1.0 / bb0[1]) / sx2t],
        ];
        let rhs = [(xr[0] + b0[0] / bb0[0]) / sx2t, (xr[1] + b0[1] / bb0[1]) / sx2t];
        Gaussian2::from_precision(prec, rhs)
    }

    /// Log prior of `(alpha_x, phi)`: conditional Gaussian for `alpha_x`
    /// given `phi` times the truncated reference prior.
    pub fn log_ar_prior(&self, alpha_x: f64, phi: f64) -> f64 {
        let one_m = 1.0 - phi;
        normal_logpdf(alpha_x, self.mu0_mu_x * one_m, self.prior.s0_mu_x * one_m * one_m)
            + logpdf_phi_reference(phi)
    }

    fn log_aux_prior(&self, s: &SamplerState, alpha_x: f64, phi: f64) -> f64 {
        let (sx2t, _) = Self::predictor_given_return(s);
        let b0 = self.prior.aux_b0;
        let bb0 = self.prior.aux_big_b0;
        normal_logpdf(alpha_x, b0[0], sx2t * bb0[0]) + normal_logpdf(phi, b0[1], sx2t * bb0[1])
    }

    /// Log MH ratio for moving `(alpha_x, phi)` to the proposed pair.
    /// `-inf` outside the support `phi in [0, 1)`.
    pub fn log_accept_ar(&self, s: &SamplerState, alpha_x: f64, phi: f64) -> f64 {
        if !(0.0..1.0).contains(&phi) || !alpha_x.is_finite() {
            return f64::NEG_INFINITY;
        }
        let new = SamplerState { alpha_x, phi, ..*s };
        let mut log_a = self.log_beta_prior_ratio(&new, s);
        if self.opts.include_initial {
            log_a += self.log_initial(&new) - self.log_initial(s);
        }
        log_a += self.log_ar_prior(alpha_x, phi) - self.log_ar_prior(s.alpha_x, s.phi);
        log_a -= self.log_aux_prior(s, alpha_x, phi) - self.log_aux_prior(s, s.alpha_x, s.phi);
        log_a
    }

    /// Step 2.
    pub fn step_ar_coeffs(&self, s: &mut SamplerState, rng: &mut RngStream) -> Result<bool> {
        let [alpha_x, phi] = self.ar_proposal(s)?.sample(rng);
        let accept = mh_accept(self.log_accept_ar(s, alpha_x, phi), rng);
        if accept {
            s.alpha_x = alpha_x;
            s.phi = phi;
        }
        Ok(accept)
    }

    /// Mean and variance of the Gaussian proposal for `psi`.
    pub fn psi_proposal(&self, s: &SamplerState) -> (f64, f64) {
        let ex = eps_x_coef(s.alpha_x, s.phi);
        let ey = eps_y_coef(s.alpha_y, s.beta);
        let sxx = self.cp.quad(&ex).max(0.0);
        let sxy = self.cp.cross(&ex, &ey);
        let p = &self.prior;
        let var = 1.0 / (1.0 / p.sigma0_psi + sxx / s.sigma_y2_tilde);
        (var * (p.mu0_psi / p.sigma0_psi + sxy / s.sigma_y2_tilde), var)
    }

    pub fn log_accept_psi(&self, s: &SamplerState, psi: f64) -> f64 {
        self.log_beta_prior_ratio(&SamplerState { psi, ..*s }, s)
    }

    /// Step 3.
    pub fn step_psi(&self, s: &mut SamplerState, rng: &mut RngStream) -> bool {
        let (m, v) = self.psi_proposal(s);
        let psi = rng.normal(m, v);
        let accept = mh_accept(self.log_accept_psi(s, psi), rng);
        if accept {
            s.psi = psi;
        }
        accept
    }

    /// Shape and scale of the inverse-gamma proposal for `sigma_x2`.
    pub fn sigma_x2_proposal(&self, s: &SamplerState) -> (f64, f64) {
        let sxx = self.cp.quad(&eps_x_coef(s.alpha_x, s.phi)).max(0.0);
        let mut shape = self.prior.nu_x + 0.5 * self.t;
        let mut scale = self.prior.s0_x + 0.5 * sxx;
        if self.opts.include_initial && self.opts.sigma_x2_step == VarianceStep::Exact {
            let dev = self.data.x0() - s.alpha_x / (1.0 - s.phi);
            shape += 0.5;
            scale += 0.5 * (1.0 - s.phi * s.phi) * dev * dev;
        }
        (shape, scale)
    }

    pub fn log_accept_sigma_x2(&self, s: &SamplerState, sigma_x2: f64) -> f64 {
        let new = SamplerState { sigma_x2, ..*s };
        let mut log_a = self.log_beta_prior_ratio(&new, s);
        if self.opts.include_initial && self.opts.sigma_x2_step == VarianceStep::TransitionsOnly {
            log_a += self.log_initial(&new) - self.log_initial(s);
        }
        log_a
    }

    /// Step 4.
    pub fn step_sigma_x2(&self, s: &mut SamplerState, rng: &mut RngStream) -> bool {
        let (shape, scale) = self.sigma_x2_proposal(s);
        let v = rng.inverse_gamma(shape, scale);
        let accept = mh_accept(self.log_accept_sigma_x2(s, v), rng);
        if accept {
            s.sigma_x2 = v;
        }
        accept
    }

    /// Shape and scale of the inverse-gamma proposal for `sigma_y2_tilde`.
    pub fn sigma_y2_tilde_proposal(&self, s: &SamplerState) -> (f64, f64) {
        let ex = eps_x_coef(s.alpha_x, s.phi);
        let ey = eps_y_coef(s.alpha_y, s.beta);
        let et: [f64; 4] = std::array::from_fn(|i| ey[i] - s.psi * ex[i]);
        let ss = self.cp.quad(&et).max(0.0);
        (self.prior.nu_y + 0.5 * self.t, self.prior.s0_y + 0.5 * ss)
    }

    pub fn log_accept_sigma_y2_tilde(&self, s: &SamplerState, sigma_y2_tilde: f64) -> f64 {
        self.log_beta_prior_ratio(&SamplerState { sigma_y2_tilde, ..*s }, s)
    }

    /// Step 5.
    pub fn step_sigma_y2_tilde(&self, s: &mut SamplerState, rng: &mut RngStream) -> bool {
        let (shape, scale) = self.sigma_y2_tilde_proposal(s);
        let v = rng.inverse_gamma(shape, scale);
        let accept = mh_accept(self.log_accept_sigma_y2_tilde(s, v), rng);
        if accept {
            s.sigma_y2_tilde = v;
        }
        accept
    }

    /// `S_beta = (beta - mu0_beta)^2 / (2 (1 - phi^2)) (sigma_y2_tilde / sigma_x2 + psi^2)^{-1}`.
    pub fn s_beta(&self, s: &SamplerState) -> f64 {
        let dev = s.beta - self.prior.mu0_beta;
        dev * dev / (2.0 * (1.0 - s.phi * s.phi) * (s.sigma_y2_tilde / s.sigma_x2 + s.psi * s.psi))
    }

    /// Step 6: `Z_beta` from its gamma conditional, then `Sigma_beta` from
    /// its inverse-gamma conditional.
    pub fn step_sigma_beta(&self, s: &mut SamplerState, rng: &mut RngStream) {
        let b = self.prior.b0_r;
        let z = rng.gamma(s.a0r + b) / (1.0 + 1.0 / s.sigma_beta);
        let sb = rng.inverse_gamma(b + 0.5, z + self.s_beta(s));
        // Guard against an underflowed gamma variate with tiny shapes.
        if z > 0.0 && sb > 0.0 && sb.is_finite() {
            s.z_beta = z;
            s.sigma_beta = sb;
        }
    }

    /// Log MH ratio for switching `a0R` to `a_new`, including the
    /// hyperprior mass ratio.
    pub fn log_accept_a0r(&self, s: &SamplerState, a_new: f64) -> f64 {
        log_accept_a0r(s.a0r, a_new, s.sigma_beta, self.prior.b0_r) + self.prior.log_prior_a_r(a_new)
            - self.prior.log_prior_a_r(s.a0r)
    }

    /// Step 7: propose the other support point.
    pub fn step_a0r(&self, s: &mut SamplerState, rng: &mut RngStream) -> bool {
        let p = &self.prior;
        let a_new = if s.a0r == p.a_r_high { p.a_r_low } else { p.a_r_high };
        let accept = mh_accept(self.log_accept_a0r(s, a_new), rng);
        if accept {
            s.a0r = a_new;
        }
        accept
    }

    /// One full sweep of steps 1-7.
    pub fn sweep(&self, s: &mut SamplerState, rng: &mut RngStream, acc: &mut Acceptance) -> Result<ReturnDraw> {
        let fz = self.opts.frozen;
        let draw = self.step_return_coeffs(s, rng)?;
        if !fz.ar_coeffs {
            acc.ar.record(self.step_ar_coeffs(s, rng)?);
        }
        if !fz.psi {
            acc.psi.record(self.step_psi(s, rng));
        }
        if !fz.sigma_x2 {
            acc.sigma_x2.record(self.step_sigma_x2(s, rng));
        }
        if !fz.sigma_y2_tilde {
            acc.sigma_y2_tilde.record(self.step_sigma_y2_tilde(s, rng));
        }
        if self.hierarchical() && !fz.shrinkage {
            self.step_sigma_beta(s, rng);
            if self.prior.a_r_mode == ARMode::Hyperprior {
                acc.a0r.record(self.step_a0r(s, rng));
            }
        }
        Ok(draw)
    }
}

impl Counter {
    pub(crate) fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }
}
