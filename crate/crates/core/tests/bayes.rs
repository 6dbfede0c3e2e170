mod common;

use common::gauss_jordan_inverse;
use predbayes::bayes::{
    log_median_ordinate, log_posterior_ordinate_beta, log_prior_ordinate_beta, posterior_summary,
    BfResult, Decision,
};
use predbayes::dists::RngStream;
use predbayes::model::{simulate_dataset, Dataset, ReducedFormParams};
use predbayes::sampler::{
    run_chain, run_chain_from, BetaPrior, Frozen, PriorConfig, ReturnStep, SamplerOptions, SamplerState, Schedule,
};
use predbayes::stats::{mean, median};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn ln_n0(m: f64, v: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * v.ln() - 0.5 * m * m / v
}

/// Exact Bayes factor when the variances, `psi` and the predictor
/// coefficients are known: `y_t - psi eps_x_t` is a Gaussian regression on
/// `(1, x_{t-1})`, so the Savage-Dickey ratio is a ratio of normal densities.
fn analytic_bf(d: &Dataset, truth: &SamplerState, prior: &PriorConfig, g: f64) -> f64 {
    let v = truth.sigma_y2_tilde;
    let mut prec = [[1.0 / prior.sigma0_alpha_y, 0.0], [0.0, 1.0 / g]];
    let mut rhs = [prior.mu0_alpha_y / prior.sigma0_alpha_y, prior.mu0_beta / g];
    for ((xl, &xt), &yt) in d.lagged_x().zip(d.x()).zip(d.y()) {
        let row = [1.0, xl];
        let r = yt - truth.psi * (xt - truth.alpha_x - truth.phi * xl);
        for i in 0..2 {
            for j in 0..2 {
                prec[i][j] += row[i] * row[j] / v;
            }
            rhs[i] += row[i] * r / v;
        }
    }
    let cov = gauss_jordan_inverse(prec);
    let m_beta = cov[1][0] * rhs[0] + cov[1][1] * rhs[1];
    (ln_n0(m_beta, cov[1][1]) - ln_n0(prior.mu0_beta, g)).exp()
}

#[test]
fn bayes_factor_matches_conjugate_oracle() {
    let g = 0.01;
    let prior = PriorConfig::default();
    let frozen = Frozen { ar_coeffs: true, psi: true, sigma_x2: true, sigma_y2_tilde: true, ..Frozen::default() };
    let opts = SamplerOptions {
        return_step: ReturnStep::Conditional,
        beta_prior: BetaPrior::Fixed(g),
        frozen,
        ..SamplerOptions::new()
    };
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let beta = if seed % 2 == 0 { 0.0 } else { 0.1 };
        let dgp = ReducedFormParams::simulation_dgp(beta);
        let d = simulate_dataset(&dgp, 100, &mut RngStream::new(60 + seed, 0)).unwrap();
        let cf = dgp.to_control_form().unwrap();
        let truth = SamplerState {
            alpha_x: cf.alpha_x,
            alpha_y: 0.0,
            phi: cf.phi,
            beta: 0.0,
            sigma_x2: cf.sigma_x2,
            psi: cf.psi,
            sigma_y2_tilde: cf.sigma_y2_tilde,
            sigma_beta: 1.0,
            z_beta: 1.0,
            a0r: 0.5,
        };
        let rec = run_chain_from(&d, &prior, &opts, Schedule::DESK, truth, &mut RngStream::new(seed, 1)).unwrap();
        assert!(rec.draws.iter().all(|s| s.phi == cf.phi && s.sigma_x2 == cf.sigma_x2));
        let est = BfResult::from_log_ordinates(log_posterior_ordinate_beta(&rec).unwrap(), ln_n0(0.0, g), rec.len())
            .unwrap();
        let want = analytic_bf(&d, &truth, &prior, g);
        let rel = (est.bf01 / want - 1.0).abs();
        worst = worst.max(rel);
        assert!(rel < 0.10, "seed {seed}: {} vs {want}", est.bf01);
    }
    println!("worst relative error {worst:.4}");
}

/// Prior ordinate from an independent construction: `Sigma_beta` as the
/// odds of a beta variate and `phi = sin(pi u / 2)`. The ordinate is
/// decreasing in the variance, so the median ordinate is the ordinate at
/// the median variance.
fn oracle_prior_ordinate(prior: &PriorConfig, m: usize, seed: u64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let gx = Gamma::new(prior.nu_x, 1.0).unwrap();
    let gy = Gamma::new(prior.nu_y, 1.0).unwrap();
    let psi = Normal::new(prior.mu0_psi, prior.sigma0_psi.sqrt()).unwrap();
    let lo = Beta::new(prior.a_r_low, prior.b0_r).unwrap();
    let hi = Beta::new(prior.a_r_high, prior.b0_r).unwrap();
    let gs: Vec<f64> = (0..m)
        .map(|_| {
            let r = if rng.random::<f64>() < prior.p_a_r { hi.sample(&mut rng) } else { lo.sample(&mut rng) };
            let sb = r / (1.0 - r);
            let phi = (std::f64::consts::FRAC_PI_2 * rng.random::<f64>()).sin();
            let sx2 = prior.s0_x / gx.sample(&mut rng);
            let sy2t = prior.s0_y / gy.sample(&mut rng);
            let p = psi.sample(&mut rng);
            sb * (sy2t / sx2 + p * p) * (1.0 - phi * phi)
        })
        .collect();
    (-LN_SQRT_2PI - 0.5 * median(&gs).ln()).exp()
}

#[test]
fn prior_ordinate_is_stable_and_matches_oracle() {
    let prior = PriorConfig::default();
    let vals: Vec<f64> = (0..5)
        .map(|s| log_prior_ordinate_beta(&prior, 100_000, &mut RngStream::new(70 + s, 0)).unwrap().exp())
        .collect();
    let centre = mean(&vals);
    assert!(vals.iter().all(|v| (v / centre - 1.0).abs() < 0.03), "{vals:?}");
    let want = oracle_prior_ordinate(&prior, 1_000_000, 71);
    assert!((centre / want - 1.0).abs() < 0.03, "{vals:?} vs {want}");
}

#[test]
fn prior_ordinate_needs_enough_draws() {
    assert!(log_prior_ordinate_beta(&PriorConfig::default(), 99, &mut RngStream::new(1, 0)).is_err());
}

#[test]
fn median_ordinate_of_fixed_normals() {
    let zeros = vec![0.0; 101];
    assert!((log_median_ordinate(&zeros, &vec![1.0; 101]).exp() - 0.398_942_280_4).abs() < 1e-9);
    assert!((log_median_ordinate(&zeros, &vec![4.0; 101]).exp() - 0.199_471_140_2).abs() < 1e-9);
}

fn chain_on(beta: f64, seed: u64) -> predbayes::sampler::ChainRecord {
    let d = simulate_dataset(&ReducedFormParams::simulation_dgp(beta), 100, &mut RngStream::new(seed, 0)).unwrap();
    run_chain(&d, &PriorConfig::default(), &SamplerOptions::new(), Schedule::DESK, &mut RngStream::new(seed, 1))
        .unwrap()
}

#[test]
fn posterior_ordinate_matches_brute_force() {
    let rec = chain_on(0.0, 80);
    let mut dens: Vec<f64> = rec
        .b_t
        .iter()
        .zip(&rec.big_b_t)
        .map(|(&m, &v)| (-0.5 * m * m / v).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
        .collect();
    dens.sort_by(f64::total_cmp);
    let n = dens.len();
    let want = if n % 2 == 1 { dens[n / 2] } else { 0.5 * (dens[n / 2 - 1] + dens[n / 2]) };
    let got = log_posterior_ordinate_beta(&rec).unwrap().exp();
    assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn alternative_data_pull_the_posterior_ordinate_below_the_prior() {
    let prior = PriorConfig::default();
    let log_prior = log_prior_ordinate_beta(&prior, 100_000, &mut RngStream::new(81, 9)).unwrap();
    let post: Vec<f64> = (0..200).map(|i| log_posterior_ordinate_beta(&chain_on(0.1, 200 + i)).unwrap()).collect();
    assert!(median(&post) < log_prior, "{} vs {log_prior}", median(&post));
}

#[test]
fn a0r_posterior_mean_within_support() {
    for beta in [0.0, 0.1] {
        let m = mean(&chain_on(beta, 82).column("a0r").unwrap());
        assert!((0.1..=0.5).contains(&m), "{m}");
    }
}

#[test]
fn decision_threshold_is_strict() {
    let at_one = BfResult::from_log_ordinates(-1.0, -1.0, 10).unwrap();
    assert_eq!(at_one.bf01, 1.0);
    assert_eq!(at_one.decision, Decision::H1);
    assert_eq!(BfResult::from_log_ordinates(0.0, -1.0, 10).unwrap().decision, Decision::H0);
    assert!(BfResult::from_log_ordinates(0.0, f64::NEG_INFINITY, 10).is_err());
    assert!(BfResult::from_log_ordinates(f64::NAN, 0.0, 10).is_err());
}

#[test]
fn summary_quantiles_are_ordered() {
    let rec = chain_on(0.0, 83);
    for p in posterior_summary(&rec).unwrap() {
        assert!(p.q05 <= p.q50 && p.q50 <= p.q95 && p.sd >= 0.0, "{p:?}");
    }
}

proptest! {
    #[test]
    fn median_ordinate_scales_out(
        mv in prop::collection::vec((-3.0f64..3.0, 0.1f64..10.0), 1..50),
        log_c in -300.0f64..300.0,
    ) {
        let (m, v): (Vec<f64>, Vec<f64>) = mv.into_iter().unzip();
        let c = 10f64.powf(log_c / 10.0);
        let base = log_median_ordinate(&m, &v);
        let mc: Vec<f64> = m.iter().map(|x| x * c).collect();
        let vc: Vec<f64> = v.iter().map(|x| x * c * c).collect();
        let scaled = log_median_ordinate(&mc, &vc);
        prop_assert!(!scaled.is_nan());
        prop_assert!((scaled - (base - c.ln())).abs() < 1e-9 * (1.0 + base.abs()), "{} vs {}", scaled, base - c.ln());
    }

    #[test]
    fn tiny_and_huge_variances_stay_finite(v in prop::collection::vec(-300.0f64..300.0, 2..20)) {
        let vars: Vec<f64> = v.iter().map(|e| 10f64.powf(*e)).collect();
        let r = log_median_ordinate(&vec![0.0; vars.len()], &vars);
        prop_assert!(r.is_finite());
    }
}
