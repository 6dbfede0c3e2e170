//! Shared machinery for the sampler correctness checks: the
//! joint-distribution (successive-conditional) tests and an independent
//! conjugate Gibbs sampler.

use predbayes::dists::{logpdf_phi_reference, RngStream};
use predbayes::model::{simulate_dataset, Dataset, ReducedFormParams};
use predbayes::sampler::{
    run_chain, sample_prior, Acceptance, BetaPrior, Frozen, Gibbs, PriorConfig, ReturnStep, SamplerOptions,
    SamplerState, Schedule,
};
use predbayes::stats::mean;

use super::{gauss_jordan_inverse, z_crit, z_two_sample};

pub fn dgp_data(beta: f64, t: usize, seed: u64) -> Dataset {
    simulate_dataset(&ReducedFormParams::simulation_dgp(beta), t, &mut RngStream::new(seed, 0)).unwrap()
}

pub fn geweke_z(marginal: &[Vec<f64>], successive: &[Vec<f64>], names: &[&str]) -> Vec<(String, f64)> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let a: Vec<f64> = marginal.iter().map(|r| r[j]).collect();
            let b: Vec<f64> = successive.iter().map(|r| r[j]).collect();
            (name.to_string(), z_two_sample(&a, &b))
        })
        .collect()
}

pub fn with_squares(v: Vec<f64>) -> Vec<f64> {
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    v.into_iter().chain(sq).collect()
}

pub const STEP_STATS: [&str; 14] = [
    "alpha_x", "phi", "alpha_y", "beta", "psi", "log_sigma_x2", "log_sigma_y2_tilde",
    "alpha_x^2", "phi^2", "alpha_y^2", "beta^2", "psi^2", "log_sigma_x2^2", "log_sigma_y2_tilde^2",
];

pub fn step_stats(s: &SamplerState) -> Vec<f64> {
    with_squares(vec![s.alpha_x, s.phi, s.alpha_y, s.beta, s.psi, s.sigma_x2.ln(), s.sigma_y2_tilde.ln()])
}

/// Joint-distribution test of steps 1-5: prior draws against a chain that
/// alternates one sweep with a fresh dataset simulated from the current
/// state. The `beta` prior variance is fixed and the location priors are
/// tight so that the second chain mixes within the run length.
pub fn geweke_steps(opts: SamplerOptions, seed: u64, n: usize) -> Vec<(String, f64)> {
    let var_beta = 0.05;
    let opts = SamplerOptions { beta_prior: BetaPrior::Fixed(var_beta), ..opts };
    let prior = PriorConfig { mu0_mu_x: Some(-3.0), sigma0_alpha_y: 0.01, sigma0_psi: 1.0, ..Default::default() };
    let t = 30;
    let draw_prior = |rng: &mut RngStream| {
        let mut s = sample_prior(&prior, -3.0, rng);
        s.beta = rng.normal(prior.mu0_beta, var_beta);
        s
    };
    let simulate = |s: &SamplerState, rng: &mut RngStream| {
        simulate_dataset(&s.control_form().to_reduced_form(), t, rng).unwrap()
    };

    let mut rng = RngStream::new(seed, 0);
    let marginal: Vec<Vec<f64>> = (0..n).map(|_| step_stats(&draw_prior(&mut rng))).collect();

    let mut rng = RngStream::new(seed, 1);
    let mut s = draw_prior(&mut rng);
    let mut d = simulate(&s, &mut rng);
    let mut acc = Acceptance::default();
    let mut successive = Vec::with_capacity(n);
    for _ in 0..n {
        Gibbs::new(&d, &prior, &opts).unwrap().sweep(&mut s, &mut rng, &mut acc).unwrap();
        s.check().unwrap();
        d = simulate(&s, &mut rng);
        successive.push(step_stats(&s));
    }
    geweke_z(&marginal, &successive, &STEP_STATS)
}

/// Joint-distribution test of the shrinkage block. Everything but
/// `(Z_beta, Sigma_beta, a0R)` is frozen and `beta` is redrawn from its
/// prior given the new `Sigma_beta`, so the chain targets the prior.
/// `Z_beta` itself is not compared: the `a0R` move integrates it out and
/// the stored value is refreshed at the start of the next sweep.
pub fn geweke_shrinkage(seed: u64, n: usize) -> Vec<(String, f64)> {
    let prior = PriorConfig { mu0_mu_x: Some(-3.0), ..Default::default() };
    let frozen = Frozen {
        return_coeffs: true,
        ar_coeffs: true,
        psi: true,
        sigma_x2: true,
        sigma_y2_tilde: true,
        shrinkage: false,
    };
    let opts = SamplerOptions { frozen, ..SamplerOptions::new() };
    let d = dgp_data(0.0, 30, seed);
    let g = Gibbs::new(&d, &prior, &opts).unwrap();
    let stats = |s: &SamplerState| with_squares(vec![s.r2(), s.a0r, s.beta / (1.0 + s.beta.abs())]);
    let names = ["r2", "a0r", "beta", "r2^2", "a0r^2", "beta^2"];

    let mut rng = RngStream::new(seed, 0);
    let base = sample_prior(&prior, -3.0, &mut rng);
    let redraw_beta = |s: &mut SamplerState, rng: &mut RngStream| {
        s.beta = rng.normal(prior.mu0_beta, s.shrinkage_variance());
    };
    let marginal: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut s = base;
            s.a0r = prior.sample_a_r(&mut rng);
            s.z_beta = rng.gamma(s.a0r);
            s.sigma_beta = rng.inverse_gamma(prior.b0_r, s.z_beta);
            redraw_beta(&mut s, &mut rng);
            stats(&s)
        })
        .collect();

    let mut rng = RngStream::new(seed, 1);
    let mut s = base;
    let mut acc = Acceptance::default();
    let successive: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            g.sweep(&mut s, &mut rng, &mut acc).unwrap();
            redraw_beta(&mut s, &mut rng);
            stats(&s)
        })
        .collect();
    assert_eq!(acc.ar.proposed, 0);
    geweke_z(&marginal, &successive, &names)
}

/// Direct Gibbs sampler for the model with a fixed `beta` prior variance and
/// no initial-condition term: `(alpha_y, beta, psi)` jointly Gaussian,
/// `(alpha_x, phi)` by griddy Gibbs on `phi` with `alpha_x` integrated out,
/// variances inverse gamma.
pub struct ConjugateOracle {
    g: [[f64; 4]; 4],
    t: f64,
    prior: PriorConfig,
    mu0: f64,
    var_beta: f64,
}

impl ConjugateOracle {
    pub fn new(d: &Dataset, prior: PriorConfig, var_beta: f64) -> Self {
        let mut g = [[0.0; 4]; 4];
        for ((xl, &xt), &yt) in d.lagged_x().zip(d.x()).zip(d.y()) {
            let u = [1.0, xl, xt, yt];
            for i in 0..4 {
                for j in 0..4 {
                    g[i][j] += u[i] * u[j];
                }
            }
        }
        let mu0 = prior.mu0_mu_x.unwrap();
        Self { g, t: d.len() as f64, prior, mu0, var_beta }
    }

    pub fn quad(&self, a: &[f64; 4], b: &[f64; 4]) -> f64 {
        (0..4).map(|i| (0..4).map(|j| a[i] * self.g[i][j] * b[j]).sum::<f64>()).sum()
    }

    pub fn sum(&self, a: &[f64; 4]) -> f64 {
        (0..4).map(|j| a[j] * self.g[0][j]).sum()
    }

    /// State: `[alpha_x, phi, alpha_y, beta, psi, sigma_x2, sigma_y2_tilde]`.
    pub fn sweep(&self, s: &mut [f64; 7], rng: &mut RngStream) {
        let p = &self.prior;
        let [ax, phi, ..] = *s;
        let ex = [-ax, -phi, 1.0, 0.0];
        let cols = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], ex];
        let yv = [0.0, 0.0, 0.0, 1.0];
        let sy = s[6];
        let d_inv = [1.0 / p.sigma0_alpha_y, 1.0 / self.var_beta, 1.0 / p.sigma0_psi];
        let m0 = [p.mu0_alpha_y, p.mu0_beta, p.mu0_psi];
        let mut prec = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                prec[i][j] = self.quad(&cols[i], &cols[j]) / sy;
            }
            prec[i][i] += d_inv[i];
            rhs[i] = self.quad(&cols[i], &yv) / sy + d_inv[i] * m0[i];
        }
        let cov = gauss_jordan_inverse(prec);
        let mean: Vec<f64> = (0..3).map(|i| (0..3).map(|j| cov[i][j] * rhs[j]).sum()).collect();
        // Cholesky of the 3x3 covariance
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let sum: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    l[i][i] = (cov[i][i] - sum).sqrt();
                } else {
                    l[i][j] = (cov[i][j] - sum) / l[j][j];
                }
            }
        }
        let z = [rng.std_normal(), rng.std_normal(), rng.std_normal()];
        for i in 0..3 {
            s[2 + i] = mean[i] + (0..=i).map(|k| l[i][k] * z[k]).sum::<f64>();
        }
        let [_, _, ay, beta, psi, ..] = *s;

        let r: [f64; 4] = std::array::from_fn(|i| yv[i] - ay * cols[0][i] - beta * cols[1][i] - psi * ex[i]);
        s[6] = rng.inverse_gamma(p.nu_y + 0.5 * self.t, p.s0_y + 0.5 * self.quad(&r, &r));
        s[5] = rng.inverse_gamma(p.nu_x + 0.5 * self.t, p.s0_x + 0.5 * self.quad(&ex, &ex));
        let (sx, sy) = (s[5], s[6]);

        let cells = 4000;
        let width = 1.0 / cells as f64;
        let cw = [-ay, -beta, 0.0, 1.0];
        let cond = |phi: f64| {
            let cz = [0.0, -phi, 1.0, 0.0];
            let cv: [f64; 4] = std::array::from_fn(|i| cw[i] - psi * cz[i]);
            let a = self.t / sx + self.t * psi * psi / sy;
            let b = self.sum(&cz) / sx - psi * self.sum(&cv) / sy;
            let c = self.quad(&cz, &cz) / sx + self.quad(&cv, &cv) / sy;
            let m = self.mu0 * (1.0 - phi);
            let v = self.prior.s0_mu_x * (1.0 - phi).powi(2);
            let pr = a + 1.0 / v;
            let h = b + m / v;
            let lp = -0.5 * (c + m * m / v - h * h / pr) - 0.5 * pr.ln() - 0.5 * v.ln() + logpdf_phi_reference(phi);
            (lp, h / pr, 1.0 / pr)
        };
        let lps: Vec<f64> = (0..cells).map(|k| cond((k as f64 + 0.5) * width).0).collect();
        let top = lps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lps.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut u = rng.uniform() * total;
        let mut k = 0;
        while k + 1 < cells && u >= w[k] {
            u -= w[k];
            k += 1;
        }
        let phi = (k as f64 + rng.uniform()) * width;
        let (_, m, v) = cond(phi);
        s[0] = rng.normal(m, v);
        s[1] = phi;
    }
}

/// Per-parameter z statistics (mean, variance) of the sampler against the
/// conjugate oracle, the Bonferroni critical value for a 1% family-wise
/// level, and the sampler's acceptance counters.
pub fn conjugate_oracle_check(seed: u64) -> (Vec<(&'static str, f64, f64)>, f64, Acceptance) {
    let d = dgp_data(0.0, 100, seed);
    let var_beta = 0.01;
    let prior = PriorConfig { mu0_mu_x: Some(d.mean_x_with_initial()), ..Default::default() };
    let opts = SamplerOptions {
        return_step: ReturnStep::Conditional,
        beta_prior: BetaPrior::Fixed(var_beta),
        include_initial: false,
        ..SamplerOptions::new()
    };
    let rec = run_chain(&d, &prior, &opts, Schedule { m0: 2000, m1: 40_000, thin: 2 }, &mut RngStream::new(seed, 1))
        .unwrap();

    let oracle = ConjugateOracle::new(&d, prior.clone(), var_beta);
    let init = SamplerState::initial(&d, &prior).unwrap();
    let mut s = [init.alpha_x, init.phi, init.alpha_y, init.beta, init.psi, init.sigma_x2, init.sigma_y2_tilde];
    let mut rng = RngStream::new(seed, 2);
    for _ in 0..2000 {
        oracle.sweep(&mut s, &mut rng);
    }
    let draws: Vec<[f64; 7]> = (0..rec.len())
        .map(|_| {
            oracle.sweep(&mut s, &mut rng);
            s
        })
        .collect();

    let names = ["alpha_x", "phi", "alpha_y", "beta", "psi", "sigma_x2", "sigma_y2_tilde"];
    // first and second moments of each parameter
    let crit = z_crit(0.01 / (2 * names.len()) as f64);
    let zs = names
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let a = rec.column(name).unwrap();
            let b: Vec<f64> = draws.iter().map(|r| r[j]).collect();
            let (ma, mb) = (mean(&a), mean(&b));
            let ca: Vec<f64> = a.iter().map(|v| (v - ma).powi(2)).collect();
            let cb: Vec<f64> = b.iter().map(|v| (v - mb).powi(2)).collect();
            (name, z_two_sample(&a, &b), z_two_sample(&ca, &cb))
        })
        .collect();
    (zs, crit, rec.acceptance)
}
