//! Autocorrelation, partial autocorrelation, spectral effective sample size
//! and the replication filter based on it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::ChainRecord;
use crate::stats;

/// Parameters monitored by the replication filter.
pub const MONITORED: [&str; 3] = ["beta", "phi", "psi"];

fn centered(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    if series.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateChain("series is constant".into()));
    }
    let m = stats::mean(series);
    let c: Vec<f64> = series.iter().map(|v| v - m).collect();
    let ss: f64 = c.iter().map(|v| v * v).sum();
    if !(ss > 0.0) || !ss.is_finite() {
        return Err(Error::DegenerateChain("series has zero variance".into()));
    }
    Ok((c, ss))
}

/// Half-width of the approximate 95% white-noise band, `1.96 / sqrt(n)`.
pub fn band(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}

/// Sample autocorrelations at lags `1..=max_lag` (biased normalization).
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() < max_lag + 2 {
        return Err(Error::InsufficientDraws(format!(
            "acf to lag {max_lag} needs at least {} values, got {}",
            max_lag + 2,
            series.len()
        )));
    }
    let (c, ss) = centered(series)?;
    Ok((1..=max_lag)
        .map(|k| c[k..].iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / ss)
        .collect())
}

/// Partial autocorrelations at lags `1..=max_lag` by Durbin–Levinson.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let rho = acf(series, max_lag)?;
    let mut out = Vec::with_capacity(max_lag);
    let mut prev: Vec<f64> = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = rho[k - 1] - (1..k).map(|j| prev[j - 1] * rho[k - j - 1]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| prev[j - 1] * rho[j - 1]).sum::<f64>();
        let pkk = num / den;
        let mut cur = vec![0.0; k];
        for j in 1..k {
            cur[j - 1] = prev[j - 1] - pkk * prev[k - j - 1];
        }
        cur[k - 1] = pkk;
        out.push(pkk);
        prev = cur;
    }
    Ok(out)
}

/// Autoregressive fit used for the spectral density at frequency zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ArFit {
    pub order: usize,
    pub coef: Vec<f64>,
    pub innovation_var: f64,
}

impl ArFit {
    /// Spectral density at zero, scaled so that white noise gives its variance.
    pub fn spectrum0(&self) -> f64 {
        let s = 1.0 - self.coef.iter().sum::<f64>();
        self.innovation_var / (s * s)
    }
}

/// Least-squares AR fits of every order up to `max_order` on the common
/// sample `t = max_order..n`, choosing the order by AIC.
///
/// The Gram matrix of the lagged regressors is filled by a shifted-window
/// recurrence and factored once; the nested Cholesky factors give every
/// order's residual sum of squares from one forward substitution.
pub fn ar_aic(series: &[f64], max_order: usize) -> Result<ArFit> {
    let (y, _) = centered(series)?;
    let n = y.len();
    let p = max_order;
    if n < p + 2 {
        return Err(Error::InsufficientDraws(format!("AR({p}) fit needs more than {} values", p + 1)));
    }
    let big_n = (n - p) as f64;
    // g[i][j] = sum_{t=p}^{n-1} y[t-i] y[t-j], i, j = 0..=p.
    let dim = p + 1;
    let mut g = vec![0.0; dim * dim];
    for j in 0..dim {
        let v: f64 = (p..n).map(|t| y[t] * y[t - j]).sum();
        g[j] = v;
        g[j * dim] = v;
    }
    for i in 0..p {
        for j in i..p {
            let v = g[i * dim + j] + y[p - 1 - i] * y[p - 1 - j] - y[n - 1 - i] * y[n - 1 - j];
            g[(i + 1) * dim + j + 1] = v;
            g[(j + 1) * dim + i + 1] = v;
        }
    }
    // Cholesky of the lag block, stopping at the first non-positive pivot.
    let mut l = vec![0.0; p * p];
    let mut usable = 0;
    'outer: for j in 0..p {
        let mut d = g[(j + 1) * dim + j + 1];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > 1e-12 * g[(j + 1) * dim + j + 1]) {
            break 'outer;
        }
        let ljj = d.sqrt();
        l[j * p + j] = ljj;
        for i in j + 1..p {
            let mut s = g[(i + 1) * dim + j + 1];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / ljj;
        }
        usable = j + 1;
    }
    let mut z = vec![0.0; usable];
    for i in 0..usable {
        let mut s = g[(i + 1) * dim];
        for k in 0..i {
            s -= l[i * p + k] * z[k];
        }
        z[i] = s / l[i * p + i];
    }
    let mut rss = g[0];
    let mut best = (big_n * (rss / big_n).ln(), 0, rss);
    for k in 0..usable {
        rss -= z[k] * z[k];
        if !(rss > 0.0) {
            break;
        }
        let aic = big_n * (rss / big_n).ln() + 2.0 * (k + 1) as f64;
        if aic < best.0 {
            best = (aic, k + 1, rss);
        }
    }
    let (_, order, rss) = best;
    let mut coef = vec![0.0; order];
    for i in (0..order).rev() {
        let mut s = z[i];
        for k in i + 1..order {
            s -= l[k * p + i] * coef[k];
        }
        coef[i] = s / l[i * p + i];
    }
    Ok(ArFit { order, coef, innovation_var: rss / big_n })
}

/// Effective sample size `n var / S(0)` with `S(0)` from an AIC-selected AR
/// fit of order at most `min(100, n / 10)`; capped at `2 n`.
pub fn ess(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 100 {
        return Err(Error::InsufficientDraws(format!("ess needs at least 100 draws, got {n}")));
    }
    let fit = ar_aic(series, (n / 10).min(100))?;
    let var = stats::variance(series);
    let m_eff = n as f64 * var / fit.spectrum0();
    Ok(m_eff.min(2.0 * n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssReport {
    #[serde(rename = "M")]
    pub m: usize,
    /// `(parameter, M_eff)`; zero for a constant trace.
    pub m_eff: Vec<(String, f64)>,
    pub pass: bool,
}

impl EssReport {
    pub fn min_ess(&self) -> f64 {
        self.m_eff.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
    }
}

pub fn ess_report(rec: &ChainRecord, monitored: &[&str]) -> Result<EssReport> {
    let m = rec.len();
    let mut m_eff = Vec::with_capacity(monitored.len());
    for &name in monitored {
        let col = rec
            .column(name)
            .ok_or_else(|| Error::Config(vec![format!("unknown monitored parameter {name}")]))?;
        let v = match ess(&col) {
            Ok(v) => v,
            Err(Error::DegenerateChain(_)) => 0.0,
            Err(e) => return Err(e),
        };
        m_eff.push((name.to_string(), v));
    }
    let mut rep = EssReport { m, m_eff, pass: false };
    rep.pass = rep.min_ess() >= m as f64 / 3.0;
    Ok(rep)
}

/// Indices of the records whose smallest monitored ESS is at least a third
/// of the kept draws, with every record's report.
pub fn convergence_filter(records: &[ChainRecord], monitored: &[&str]) -> Result<(Vec<usize>, Vec<EssReport>)> {
    let reports = records.iter().map(|r| ess_report(r, monitored)).collect::<Result<Vec<_>>>()?;
    let kept = reports.iter().enumerate().filter(|(_, r)| r.pass).map(|(i, _)| i).collect();
    Ok((kept, reports))
}

/// CSV with columns `replication, parameter, M_eff, pass`.
pub fn write_ess_csv<W: Write>(reports: &[(usize, EssReport)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["replication", "parameter", "M_eff", "pass"])?;
    for (id, rep) in reports {
        for (name, v) in &rep.m_eff {
            out.write_record([id.to_string(), name.clone(), format!("{v:.16e}"), rep.pass.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}
