use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use predbayes::bayes::{bayes_factor_01, posterior_summary};
use predbayes::config::{parse_config, to_toml_string};
use predbayes::data::{load_data, write_series};
use predbayes::diag::{acf, band, ess_report, pacf, write_ess_csv, MONITORED};
use predbayes::freq::{ols_fit, rbe_fit};
use predbayes::model::simulate_dataset;
use predbayes::study::emit_tables;
use predbayes::{run_chain, run_study, ChainRecord, Dataset, Error, RngStream, StudyConfig};

const SEED_ENV: &str = "PREDBAYES_SEED";

#[derive(Parser)]
#[command(name = "predbayes", version, about = "Bayesian estimation and testing for predictive return regressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ols,
    Rbe,
    Bayes,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one dataset from the configured DGP.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the predictive regression.
    Fit {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test beta = 0 with the Bayes factor and the two t-tests; prints JSON.
    Test {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a replicated simulation study.
    Study {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// ACF, PACF, ESS and trace export for a chain CSV.
    Diagnose {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> predbayes::Result<StudyConfig> {
    let mut cfg = match path {
        Some(p) => parse_config(p)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = resolve_seed(seed)? {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn resolve_seed(flag: Option<u64>) -> predbayes::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(vec![format!("{SEED_ENV} must be a non-negative integer, got {v:?}")])),
        Err(_) => Ok(flag),
    }
}

fn load_dataset(path: &Path) -> predbayes::Result<Dataset> {
    load_data(path)?.into_dataset()
}

fn write_json(path: &Path, v: &serde_json::Value) -> predbayes::Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn fit(method: Method, data: &Path, cfg: &StudyConfig, out: &Path) -> predbayes::Result<()> {
    let d = load_dataset(data)?;
    fs::create_dir_all(out)?;
    let freq = match method {
        Method::Ols => Some(ols_fit(&d)?),
        Method::Rbe => Some(rbe_fit(&d)?),
        Method::Bayes => None,
    };
    if let Some(f) = freq {
        let t = f.beta_test(cfg.alpha_level)?;
        let v = json!({ "fit": f, "beta_test": t, "correlation": f.sigma_hat.correlation() });
        write_json(&out.join("fit.json"), &v)?;
        println!("{}", serde_json::to_string_pretty(&v)?);
        return Ok(());
    }
    let mut rng = RngStream::new(cfg.seed, 0);
    let rec = run_chain(&d, &cfg.prior, &cfg.sampler, cfg.schedule, &mut rng)?;
    rec.write_csv(fs::File::create(out.join("chain.csv"))?)?;
    let summary = posterior_summary(&rec)?;
    let mut w = csv::Writer::from_path(out.join("summary.csv")).map_err(Error::from)?;
    w.write_record(["parameter", "mean", "sd", "q05", "q50", "q95"]).map_err(Error::from)?;
    for s in &summary {
        let nums = [s.mean, s.sd, s.q05, s.q50, s.q95].map(|v| format!("{v:.16e}"));
        w.write_record(std::iter::once(s.name.clone()).chain(nums)).map_err(Error::from)?;
    }
    w.flush()?;
    let acc = rec.acceptance;
    let v = json!({
        "T": d.len(),
        "M": rec.len(),
        "schedule": rec.schedule,
        "mu0_mu_x": cfg.prior.resolve_mu0_mu_x(d.mean_x_with_initial()),
        "acceptance": {
            "ar": acc.ar.rate(),
            "psi": acc.psi.rate(),
            "sigma_x2": acc.sigma_x2.rate(),
            "sigma_y2_tilde": acc.sigma_y2_tilde.rate(),
            "a0r": acc.a0r.rate(),
        },
        "ess": ess_report(&rec, &MONITORED).ok(),
        "summary": summary,
    });
    write_json(&out.join("summary.json"), &v)?;
    fs::write(out.join("config.toml"), to_toml_string(cfg))?;
    for s in &summary {
        println!("{:<15} mean {:>12.6} sd {:>10.6} [{:.6}, {:.6}]", s.name, s.mean, s.sd, s.q05, s.q95);
    }
    Ok(())
}

fn test(data: &Path, cfg: &StudyConfig) -> predbayes::Result<()> {
    let d = load_dataset(data)?;
    let ols = ols_fit(&d)?;
    let rbe = rbe_fit(&d)?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let rec = run_chain(&d, &cfg.prior, &cfg.sampler, cfg.schedule, &mut rng)?;
    let m_prior = cfg.m_prior.unwrap_or(rec.len().max(100));
    let bf = bayes_factor_01(&rec, &cfg.prior, m_prior, &mut rng)?;
    let v = json!({
        "bayes_factor": bf,
        "ols": { "beta_hat": ols.beta_hat, "se": ols.se_beta, "t_test": ols.beta_test(cfg.alpha_level)? },
        "rbe": { "beta_hat": rbe.beta_hat, "se": rbe.se_beta, "t_test": rbe.beta_test(cfg.alpha_level)? },
    });
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(())
}

fn diagnose(chain: &Path, out: &Path, max_lag: usize) -> predbayes::Result<()> {
    let rec = ChainRecord::read_csv(fs::File::open(chain)?)?;
    fs::create_dir_all(out)?;
    let names = ["alpha_x", "alpha_y", "phi", "beta", "sigma_x2", "psi", "sigma_y2_tilde", "r2"];
    let lag = max_lag.min(rec.len().saturating_sub(2));
    let mut acfs = Vec::new();
    let mut pacfs = Vec::new();
    for n in names {
        let col = rec.column(n).unwrap_or_default();
        acfs.push(acf(&col, lag).unwrap_or_else(|_| vec![f64::NAN; lag]));
        pacfs.push(pacf(&col, lag).unwrap_or_else(|_| vec![f64::NAN; lag]));
    }
    for (file, table) in [("acf.csv", &acfs), ("pacf.csv", &pacfs)] {
        let mut w = csv::Writer::from_path(out.join(file)).map_err(Error::from)?;
        let header = ["lag"].into_iter().chain(names).chain(["band"]);
        w.write_record(header).map_err(Error::from)?;
        for k in 0..lag {
            let row = std::iter::once((k + 1).to_string())
                .chain(table.iter().map(|c| format!("{:.16e}", c[k])))
                .chain(std::iter::once(format!("{:.16e}", band(rec.len()))));
            w.write_record(row).map_err(Error::from)?;
        }
        w.flush()?;
    }
    let rep = ess_report(&rec, &MONITORED)?;
    write_ess_csv(&[(0, rep.clone())], fs::File::create(out.join("ess.csv"))?)?;
    rec.write_csv(fs::File::create(out.join("trace.csv"))?)?;
    println!("M = {}, pass = {}", rep.m, rep.pass);
    for (n, v) in &rep.m_eff {
        println!("ESS({n}) = {v:.1}");
    }
    Ok(())
}

fn run(cli: Cli) -> predbayes::Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let mut rng = RngStream::new(cfg.seed, 0);
            let d = simulate_dataset(&cfg.dgp, cfg.t, &mut rng)?;
            fs::create_dir_all(&out)?;
            write_series(&d, fs::File::create(out.join("data.csv"))?)?;
            fs::write(out.join("config.toml"), to_toml_string(&cfg))?;
        }
        Command::Fit { method, data, config, seed, out } => {
            let cfg = load_config(config.as_deref(), seed)?;
            fit(method, &data, &cfg, &out)?;
        }
        Command::Test { data, config, seed } => {
            let cfg = load_config(config.as_deref(), seed)?;
            test(&data, &cfg)?;
        }
        Command::Study { config, seed, jobs, out } => {
            let mut cfg = load_config(config.as_deref(), seed)?;
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            let result = run_study(&cfg)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("config.toml"), to_toml_string(&cfg))?;
            emit_tables(&result, &out)?;
            for c in &result.cells {
                println!("beta = {}: n_d = {}, failures = {}", c.beta, c.n_d, c.failures.len());
                for s in &c.summaries {
                    let kind = if c.is_null() { "FP" } else { "FN" };
                    println!(
                        "  {:<4} B {:>9.5} sigma {:>8.5} RMSE {:>8.5} MAE {:>8.5} {kind} {:.3}",
                        s.estimator, s.beta.b, s.beta.sigma, s.beta.rmse, s.beta.mae, s.error_rate
                    );
                }
            }
        }
        Command::Diagnose { chain, out, max_lag } => diagnose(&chain, &out, max_lag)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
