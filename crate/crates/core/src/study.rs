//! Replicated simulation study comparing OLS, the reduced-bias estimator and
//! the Bayesian posterior mean, with table and figure-data emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayes::{bayes_factor_01, BfResult, Decision};
use crate::diag::{ess_report, write_ess_csv, EssReport, MONITORED};
use crate::dists::{normal_logpdf, RngStream};
use crate::error::{Error, Result};
use crate::freq::{ols_fit, rbe_fit, FreqFit, TTest};
use crate::model::{simulate_dataset, ReducedFormParams};
use crate::sampler::{run_chain, sample_prior_variance_beta, ARMode, ChainRecord, PriorConfig, SamplerOptions, Schedule};
use crate::stats;

/// Equally spaced grid `[lo, hi]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Data-generating process; its `beta` is replaced by each grid value.
    pub dgp: ReducedFormParams,
    pub beta_grid: Vec<f64>,
    #[serde(rename = "T")]
    pub t: usize,
    /// Replications per grid value.
    pub n: usize,
    pub schedule: Schedule,
    pub prior: PriorConfig,
    pub sampler: SamplerOptions,
    pub alpha_level: f64,
    pub seed: u64,
    /// Prior draws for the prior ordinate; `None` uses the kept chain length.
    pub m_prior: Option<usize>,
    /// Run the Bayesian arm.
    pub bayes: bool,
    /// Worker threads; 1 runs serially on the calling thread.
    pub jobs: usize,
    /// Keep every chain in the result for trace export.
    pub keep_traces: bool,
    /// Grid on which posterior and prior densities of `beta` are tabulated.
    pub density_grid: Grid,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            dgp: ReducedFormParams::simulation_dgp(0.0),
            beta_grid: vec![0.0, 0.1],
            t: 100,
            n: 200,
            schedule: Schedule::DESK,
            prior: PriorConfig::default(),
            sampler: SamplerOptions::new(),
            alpha_level: 0.05,
            seed: 1,
            m_prior: None,
            bayes: true,
            jobs: 1,
            keep_traces: false,
            density_grid: Grid { lo: -0.3, hi: 0.5, n: 161 },
        }
    }
}

impl StudyConfig {
    /// Full-scale setting: 1000 replications, 2000 kept draws thinned by 45.
    pub fn full_scale() -> Self {
        Self { n: 1000, schedule: Schedule::SIMULATION, ..Self::default() }
    }

    pub fn a_r_mode(&self) -> ARMode {
        self.prior.a_r_mode
    }

    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.n < 1 {
            bad.push("n must be at least 1".into());
        }
        if self.t < 4 {
            bad.push(format!("T must be at least 4 (got {})", self.t));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            bad.push(format!("alpha_level must lie in (0, 1) (got {})", self.alpha_level));
        }
        if self.beta_grid.is_empty() {
            bad.push("beta_grid must not be empty".into());
        }
        if self.beta_grid.iter().any(|b| !b.is_finite()) {
            bad.push("beta_grid values must be finite".into());
        }
        if let Err(e) = self.dgp.validate() {
            bad.push(format!("dgp: {e}"));
        }
        if self.jobs < 1 {
            bad.push("jobs must be at least 1".into());
        }
        if matches!(self.m_prior, Some(m) if m < 100) {
            bad.push("m_prior must be at least 100".into());
        }
        if self.density_grid.n < 1 || !(self.density_grid.hi >= self.density_grid.lo) {
            bad.push("density_grid needs n >= 1 and hi >= lo".into());
        }
        bad.extend(self.schedule.violations());
        bad.extend(self.prior.violations());
        if let Err(Error::Config(v)) = self.sampler.validate() {
            bad.extend(v);
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

    fn m_prior(&self) -> usize {
        self.m_prior.unwrap_or_else(|| self.schedule.kept().max(100))
    }
}

/// Bias, standard deviation (1/n convention), RMSE and MAE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(rename = "B")]
    pub b: f64,
    pub sigma: f64,
    #[serde(rename = "RMSE")]
    pub rmse: f64,
    #[serde(rename = "MAE")]
    pub mae: f64,
}

pub fn metrics(estimates: &[f64], truth: f64) -> Result<Metrics> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no estimates to summarize".into()));
    }
    let n = estimates.len() as f64;
    let mean = stats::mean(estimates);
    Ok(Metrics {
        b: mean - truth,
        sigma: (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt(),
        rmse: (estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / n).sqrt(),
        mae: estimates.iter().map(|e| (e - truth).abs()).sum::<f64>() / n,
    })
}

/// Fraction of wrong decisions: deciding `H1` under a true null (FP) or
/// `H0` under a false one (FN).
pub fn error_rates(decisions: &[Decision], truth_is_h0: bool) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::InsufficientData("no decisions to summarize".into()));
    }
    let wrong = if truth_is_h0 { Decision::H1 } else { Decision::H0 };
    Ok(decisions.iter().filter(|&&d| d == wrong).count() as f64 / decisions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesReplication {
    pub phi_mean: f64,
    pub beta_mean: f64,
    pub a0r_mean: f64,
    pub bf: BfResult,
    pub ess: EssReport,
    /// Rao–Blackwellized posterior density of `beta` on the density grid.
    pub beta_density: Vec<f64>,
    pub chain: Option<ChainRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub ols: FreqFit,
    pub rbe: FreqFit,
    pub ols_test: TTest,
    pub rbe_test: TTest,
    pub bayes: Option<BayesReplication>,
}

impl Replication {
    /// Whether the replication survives the ESS filter (always true without
    /// the Bayesian arm).
    pub fn kept(&self) -> bool {
        self.bayes.as_ref().is_none_or(|b| b.ess.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub message: String,
}

/// Aggregates for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub phi: Metrics,
    pub beta: Metrics,
    /// FP when the true `beta` is zero, FN otherwise.
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub beta: f64,
    pub replications: Vec<Replication>,
    pub failures: Vec<Failure>,
    pub n_d: usize,
    pub summaries: Vec<EstimatorSummary>,
    /// Prior density of `beta` on the density grid (Bayesian arm only).
    pub prior_density: Vec<f64>,
}

impl CellResult {
    pub fn kept(&self) -> impl Iterator<Item = &Replication> {
        self.replications.iter().filter(|r| r.kept())
    }

    pub fn summary(&self, estimator: &str) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == estimator)
    }

    pub fn is_null(&self) -> bool {
        self.beta == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub cells: Vec<CellResult>,
}

impl StudyResult {
    pub fn cell(&self, beta: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.beta == beta)
    }
}

fn replication(cfg: &StudyConfig, beta: f64, index: usize, stream: u64) -> Result<Replication> {
    let mut rng = RngStream::new(cfg.seed, stream);
    let dgp = ReducedFormParams { beta, ..cfg.dgp };
    let d = simulate_dataset(&dgp, cfg.t, &mut rng)?;
    let ols = ols_fit(&d)?;
    let rbe = rbe_fit(&d)?;
    let ols_test = ols.beta_test(cfg.alpha_level)?;
    let rbe_test = rbe.beta_test(cfg.alpha_level)?;
    let bayes = if cfg.bayes {
        let chain = run_chain(&d, &cfg.prior, &cfg.sampler, cfg.schedule, &mut rng)?;
        let bf = bayes_factor_01(&chain, &cfg.prior, cfg.m_prior(), &mut rng)?;
        let ess = ess_report(&chain, &MONITORED)?;
        let col = |n: &str| stats::mean(&chain.column(n).unwrap_or_default());
        let grid = cfg.density_grid.points();
        let m = chain.len() as f64;
        let beta_density = grid
            .iter()
            .map(|&b| {
                chain.b_t.iter().zip(&chain.big_b_t).map(|(&mu, &v)| normal_logpdf(b, mu, v).exp()).sum::<f64>() / m
            })
            .collect();
        Some(BayesReplication {
            phi_mean: col("phi"),
            beta_mean: col("beta"),
            a0r_mean: col("a0r"),
            bf,
            ess,
            beta_density,
            chain: cfg.keep_traces.then_some(chain),
        })
    } else {
        None
    };
    Ok(Replication { index, ols, rbe, ols_test, rbe_test, bayes })
}

fn decision(t: &TTest) -> Decision {
    if t.reject {
        Decision::H1
    } else {
        Decision::H0
    }
}

fn summarize(cfg: &StudyConfig, beta: f64, reps: &[&Replication]) -> Result<Vec<EstimatorSummary>> {
    let phi = cfg.dgp.phi;
    let truth_h0 = beta == 0.0;
    let pick = |f: &dyn Fn(&Replication) -> f64| reps.iter().map(|r| f(r)).collect::<Vec<_>>();
    let mut out = vec![
        EstimatorSummary {
            estimator: "OLS".into(),
            phi: metrics(&pick(&|r| r.ols.phi_hat), phi)?,
            beta: metrics(&pick(&|r| r.ols.beta_hat), beta)?,
            error_rate: error_rates(&reps.iter().map(|r| decision(&r.ols_test)).collect::<Vec<_>>(), truth_h0)?,
        },
        EstimatorSummary {
            estimator: "RBE".into(),
            phi: metrics(&pick(&|r| r.rbe.phi_hat), phi)?,
            beta: metrics(&pick(&|r| r.rbe.beta_hat), beta)?,
            error_rate: error_rates(&reps.iter().map(|r| decision(&r.rbe_test)).collect::<Vec<_>>(), truth_h0)?,
        },
    ];
    if cfg.bayes {
        let b = |r: &Replication| r.bayes.clone().expect("bayesian arm enabled");
        out.push(EstimatorSummary {
            estimator: "BAY".into(),
            phi: metrics(&pick(&|r| b(r).phi_mean), phi)?,
            beta: metrics(&pick(&|r| b(r).beta_mean), beta)?,
            error_rate: error_rates(&reps.iter().map(|r| b(r).bf.decision).collect::<Vec<_>>(), truth_h0)?,
        });
    }
    Ok(out)
}

fn prior_density(cfg: &StudyConfig, cell: usize) -> Vec<f64> {
    let mut rng = RngStream::new(cfg.seed, u64::MAX - cell as u64);
    let m = cfg.m_prior();
    let vars: Vec<f64> = (0..m).map(|_| sample_prior_variance_beta(&cfg.prior, &mut rng)).collect();
    cfg.density_grid
        .points()
        .iter()
        .map(|&b| vars.iter().map(|&v| normal_logpdf(b, cfg.prior.mu0_beta, v).exp()).sum::<f64>() / m as f64)
        .collect()
}

/// Runs every replication of every grid value. Replication `i` of cell `c`
/// draws from stream `c * n + i` of the study seed, so the result does not
/// depend on `jobs`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> =
        (0..cfg.beta_grid.len()).flat_map(|c| (0..cfg.n).map(move |i| (c, i))).collect();
    let work = |&(c, i): &(usize, usize)| replication(cfg, cfg.beta_grid[c], i, (c * cfg.n + i) as u64);
    let outcomes: Vec<Result<Replication>> = if cfg.jobs <= 1 {
        tasks.iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config(vec![format!("cannot start worker pool: {e}")]))?;
        pool.install(|| tasks.par_iter().map(work).collect())
    };
    let total = outcomes.len();
    let mut per_cell: Vec<(Vec<Replication>, Vec<Failure>)> =
        (0..cfg.beta_grid.len()).map(|_| (Vec::new(), Vec::new())).collect();
    for (&(c, i), out) in tasks.iter().zip(outcomes) {
        match out {
            Ok(r) => per_cell[c].0.push(r),
            Err(e) => per_cell[c].1.push(Failure { index: i, message: e.to_string() }),
        }
    }
    let failed: usize = per_cell.iter().map(|(_, f)| f.len()).sum();
    if failed * 10 > total {
        return Err(Error::StudyFailed { failed, total });
    }
    let mut cells = Vec::with_capacity(per_cell.len());
    for (c, (replications, failures)) in per_cell.into_iter().enumerate() {
        let beta = cfg.beta_grid[c];
        let kept: Vec<&Replication> = replications.iter().filter(|r| r.kept()).collect();
        if kept.is_empty() {
            return Err(Error::InsufficientData(format!("no usable replications for beta = {beta}")));
        }
        let summaries = summarize(cfg, beta, &kept)?;
        let n_d = kept.len();
        let prior_density = if cfg.bayes { prior_density(cfg, c) } else { Vec::new() };
        cells.push(CellResult { beta, replications, failures, n_d, summaries, prior_density });
    }
    Ok(StudyResult { config: cfg.clone(), cells })
}

/// Hash of `content` in git's blob format under SHA-256.
pub fn git_blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `tables/`, `figures/`, `ess.csv`, optional `replications/` traces
/// and `manifest.json` under `dir`.
pub fn emit_tables(result: &StudyResult, dir: &Path) -> Result<()> {
    if result.cells.iter().all(|c| c.replications.is_empty()) {
        return Err(Error::InsufficientData("study has no replications".into()));
    }
    let tables = dir.join("tables");
    let figures = dir.join("figures");
    fs::create_dir_all(&tables)?;
    fs::create_dir_all(&figures)?;

    let metric_cols = |m: &Metrics| vec![fmt(m.b), fmt(m.sigma), fmt(m.rmse), fmt(m.mae)];
    let mut phi_rows = Vec::new();
    let mut beta_rows = Vec::new();
    for c in &result.cells {
        for s in &c.summaries {
            let head = vec![fmt(c.beta), s.estimator.clone()];
            let mut row = head.clone();
            row.extend(metric_cols(&s.phi));
            row.push(c.n_d.to_string());
            phi_rows.push(row);
            let mut row = head;
            row.extend(metric_cols(&s.beta));
            row.push(if c.is_null() { "FP" } else { "FN" }.to_string());
            row.push(fmt(s.error_rate));
            row.push(c.n_d.to_string());
            beta_rows.push(row);
        }
    }
    write_rows(&tables.join("phi.csv"), &["beta", "estimator", "B", "sigma", "RMSE", "MAE", "n_d"], &phi_rows)?;
    write_rows(
        &tables.join("beta.csv"),
        &["beta", "estimator", "B", "sigma", "RMSE", "MAE", "rate_kind", "rate", "n_d"],
        &beta_rows,
    )?;

    let bayes = result.config.bayes;
    let mut est_rows = Vec::new();
    let mut stat_rows = Vec::new();
    let mut a0r_rows = Vec::new();
    let mut ess_rows = Vec::new();
    for c in &result.cells {
        for r in c.kept() {
            let bay = r.bayes.as_ref();
            let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
            est_rows.push(vec![
                fmt(c.beta),
                r.index.to_string(),
                fmt(r.ols.beta_hat),
                fmt(r.rbe.beta_hat),
                opt(bay.map(|b| b.beta_mean)),
            ]);
            stat_rows.push(vec![
                fmt(c.beta),
                r.index.to_string(),
                fmt(r.ols_test.statistic),
                fmt(r.rbe_test.statistic),
                opt(bay.map(|b| b.bf.bf01)),
            ]);
            if let Some(b) = bay {
                a0r_rows.push(vec![fmt(c.beta), r.index.to_string(), fmt(b.a0r_mean)]);
            }
        }
        for r in &c.replications {
            if let Some(b) = &r.bayes {
                ess_rows.push((r.index, b.ess.clone()));
            }
        }
    }
    write_rows(&figures.join("beta_estimates.csv"), &["beta", "replication", "OLS", "RBE", "BAY"], &est_rows)?;
    write_rows(
        &figures.join("test_statistics.csv"),
        &["beta", "replication", "t_OLS", "t_RBE", "bf01"],
        &stat_rows,
    )?;
    if bayes {
        write_rows(&figures.join("a0r_posterior_means.csv"), &["beta", "replication", "a0r_mean"], &a0r_rows)?;
        let grid = result.config.density_grid.points();
        let mut rows = Vec::new();
        for c in &result.cells {
            let dens: Vec<&Vec<f64>> = c.kept().filter_map(|r| r.bayes.as_ref().map(|b| &b.beta_density)).collect();
            for (k, &g) in grid.iter().enumerate() {
                let col: Vec<f64> = dens.iter().map(|d| d[k]).collect();
                let sorted = stats::sorted(&col);
                let mut row = vec![fmt(c.beta), fmt(g)];
                row.extend([0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&p| fmt(stats::quantile_sorted(&sorted, p))));
                row.push(fmt(c.prior_density[k]));
                rows.push(row);
            }
        }
        write_rows(
            &figures.join("beta_posterior_density_quantiles.csv"),
            &["beta", "grid", "q05", "q25", "q50", "q75", "q95", "prior"],
            &rows,
        )?;
        let f = fs::File::create(dir.join("ess.csv"))?;
        write_ess_csv(&ess_rows, f)?;
    }
    if result.config.keep_traces {
        let traces = dir.join("replications");
        fs::create_dir_all(&traces)?;
        for c in &result.cells {
            for r in &c.replications {
                if let Some(chain) = r.bayes.as_ref().and_then(|b| b.chain.as_ref()) {
                    let f = fs::File::create(traces.join(format!("beta_{}_rep_{:05}.csv", c.beta, r.index)))?;
                    chain.write_csv(f)?;
                }
            }
        }
    }
    write_manifest(result, dir)
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else if p.file_name().is_some_and(|n| n != "manifest.json") {
            let rel = p.strip_prefix(root).unwrap_or(&p).to_string_lossy().replace('\\', "/");
            out.insert(rel, git_blob_hash(&fs::read(&p)?));
        }
    }
    Ok(())
}

fn write_manifest(result: &StudyResult, dir: &Path) -> Result<()> {
    let mut files = BTreeMap::new();
    collect_files(dir, dir, &mut files)?;
    let listing: String = files.iter().map(|(k, v)| format!("{v}  {k}\n")).collect();
    let manifest = serde_json::json!({
        "config": result.config,
        "mu0_mu_x": match result.config.prior.mu0_mu_x {
            Some(v) => serde_json::json!(v),
            None => serde_json::json!("sample mean of x_0..x_T of each simulated dataset"),
        },
        "n_d": result.cells.iter().map(|c| (c.beta.to_string(), c.n_d)).collect::<BTreeMap<_, _>>(),
        "failures": result.cells.iter().map(|c| c.failures.len()).sum::<usize>(),
        "files": files,
        "content_hash": git_blob_hash(listing.as_bytes()),
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_hand_values() {
        let m = metrics(&[0.0, 2.0], 1.0).unwrap();
        assert_eq!((m.b, m.sigma, m.rmse, m.mae), (0.0, 1.0, 1.0, 1.0));
        let z = metrics(&[0.3; 4], 0.3).unwrap();
        assert_eq!((z.b, z.sigma, z.rmse, z.mae), (0.0, 0.0, 0.0, 0.0));
        assert!(metrics(&[], 0.0).is_err());
    }

    #[test]
    fn error_rate_values() {
        use Decision::*;
        assert_eq!(error_rates(&[H0, H0], true).unwrap(), 0.0);
        assert_eq!(error_rates(&[H0, H1], true).unwrap(), 0.5);
        assert_eq!(error_rates(&[H0, H1, H1, H1], false).unwrap(), 0.25);
    }

    #[test]
    fn blob_hash_matches_git_sha256_format() {
        // `printf 'hello\n' | git hash-object --object-format=sha256 --stdin`
        assert_eq!(
            git_blob_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn grid_points() {
        let g = Grid { lo: -1.0, hi: 1.0, n: 5 }.points();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn invalid_config_lists_all_problems() {
        let cfg = StudyConfig { n: 0, alpha_level: 2.0, beta_grid: vec![], ..Default::default() };
        match cfg.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }
}
