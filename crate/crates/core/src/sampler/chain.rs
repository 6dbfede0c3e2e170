use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dists::RngStream;
use crate::error::{Error, Result};
use crate::model::Dataset;

use super::{Gibbs, PriorConfig, SamplerOptions, SamplerState};

/// Burn-in `m0`, post-burn-in length `m1` and thinning interval `thin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub m0: usize,
    pub m1: usize,
    pub thin: usize,
}

impl Schedule {
    pub const SIMULATION: Schedule = Schedule { m0: 10_000, m1: 90_000, thin: 45 };
    pub const EMPIRICAL: Schedule = Schedule { m0: 100_000, m1: 900_000, thin: 30 };
    pub const DESK: Schedule = Schedule { m0: 2_000, m1: 81_000, thin: 45 };

    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.m0 < 1 {
            bad.push("m0 must be at least 1".to_string());
        }
        if self.m1 < 1 {
            bad.push("m1 must be at least 1".to_string());
        }
        if self.thin < 1 || self.thin > self.m1 {
            bad.push(format!("thin must lie in [1, m1] (got {})", self.thin));
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

    /// Number of kept draws, `floor(m1 / thin)`.
    pub fn kept(&self) -> usize {
        self.m1 / self.thin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counter {
    pub accepted: u64,
    pub proposed: u64,
}

impl Counter {
    /// Acceptance rate, `None` before the first proposal.
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Acceptance counters of the MH steps over the whole run, burn-in included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Acceptance {
    pub ar: Counter,
    pub psi: Counter,
    pub sigma_x2: Counter,
    pub sigma_y2_tilde: Counter,
    pub a0r: Counter,
}

/// Column order of the chain CSV.
pub const COLUMNS: [&str; 13] = [
    "alpha_x",
    "alpha_y",
    "phi",
    "beta",
    "sigma_x2",
    "psi",
    "sigma_y2_tilde",
    "sigma_beta",
    "z_beta",
    "a0r",
    "b_t",
    "big_b_t",
    "g",
];

/// Kept draws of one chain plus the step-1 moments of `beta` and the prior
/// variance `g` at each kept iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub draws: Vec<SamplerState>,
    pub b_t: Vec<f64>,
    pub big_b_t: Vec<f64>,
    pub g: Vec<f64>,
    pub acceptance: Acceptance,
    pub schedule: Schedule,
}

impl ChainRecord {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Kept values of a named column (see [`COLUMNS`]), plus the derived
    /// column `r2`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let pick = |f: fn(&SamplerState) -> f64| Some(self.draws.iter().map(f).collect());
        match name {
            "alpha_x" => pick(|s| s.alpha_x),
            "alpha_y" => pick(|s| s.alpha_y),
            "phi" => pick(|s| s.phi),
            "beta" => pick(|s| s.beta),
            "sigma_x2" => pick(|s| s.sigma_x2),
            "psi" => pick(|s| s.psi),
            "sigma_y2_tilde" => pick(|s| s.sigma_y2_tilde),
            "sigma_beta" => pick(|s| s.sigma_beta),
            "z_beta" => pick(|s| s.z_beta),
            "a0r" => pick(|s| s.a0r),
            "r2" => pick(|s| s.r2()),
            "b_t" => Some(self.b_t.clone()),
            "big_b_t" => Some(self.big_b_t.clone()),
            "g" => Some(self.g.clone()),
            _ => None,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(COLUMNS)?;
        for (i, s) in self.draws.iter().enumerate() {
            let row = s.as_row();
            let extra = [self.b_t[i], self.big_b_t[i], self.g[i]];
            out.write_record(row.iter().chain(&extra).map(|v| format!("{v:.16e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a chain CSV. The schedule is reconstructed as `m1 = M`,
    /// `thin = 1` and the acceptance counters are zero, since neither is
    /// stored in the file.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let idx: Vec<usize> = COLUMNS
            .iter()
            .map(|c| {
                header.iter().position(|h| h == c).ok_or_else(|| Error::Parse {
                    line: 1,
                    msg: format!("missing column {c}"),
                })
            })
            .collect::<Result<_>>()?;
        let mut rec = ChainRecord {
            draws: Vec::new(),
            b_t: Vec::new(),
            big_b_t: Vec::new(),
            g: Vec::new(),
            acceptance: Acceptance::default(),
            schedule: Schedule { m0: 0, m1: 0, thin: 1 },
        };
        for (k, row) in rdr.records().enumerate() {
            let row = row?;
            let line = k + 2;
            let vals: Vec<f64> = idx
                .iter()
                .map(|&i| {
                    let field = row.get(i).unwrap_or("").trim();
                    field.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("{field:?}: {e}") })
                })
                .collect::<Result<_>>()?;
            rec.draws.push(SamplerState::from_row(&vals[..10]));
            rec.b_t.push(vals[10]);
            rec.big_b_t.push(vals[11]);
            rec.g.push(vals[12]);
        }
        rec.schedule.m1 = rec.draws.len().max(1);
        Ok(rec)
    }
}

/// Runs the sampler from OLS-based starting values.
pub fn run_chain(
    d: &Dataset,
    prior: &PriorConfig,
    opts: &SamplerOptions,
    schedule: Schedule,
    rng: &mut RngStream,
) -> Result<ChainRecord> {
    let init = SamplerState::initial(d, prior)?;
    run_chain_from(d, prior, opts, schedule, init, rng)
}

/// Runs `m0 + m1` sweeps from `init`, keeping every `thin`-th sweep after
/// burn-in.
pub fn run_chain_from(
    d: &Dataset,
    prior: &PriorConfig,
    opts: &SamplerOptions,
    schedule: Schedule,
    init: SamplerState,
    rng: &mut RngStream,
) -> Result<ChainRecord> {
    schedule.validate()?;
    init.check()?;
    let gibbs = Gibbs::new(d, prior, opts)?;
    let m = schedule.kept();
    let mut rec = ChainRecord {
        draws: Vec::with_capacity(m),
        b_t: Vec::with_capacity(m),
        big_b_t: Vec::with_capacity(m),
        g: Vec::with_capacity(m),
        acceptance: Acceptance::default(),
        schedule,
    };
    let mut s = init;
    for it in 0..schedule.m0 + schedule.m1 {
        let draw = gibbs
            .sweep(&mut s, rng, &mut rec.acceptance)
            .map_err(|e| Error::NumericalFailure(format!("sweep {it}: {e}")))?;
        if it < schedule.m0 || (it - schedule.m0 + 1) % schedule.thin != 0 {
            continue;
        }
        s.check().map_err(|e| Error::NumericalFailure(format!("sweep {it}: {e}")))?;
        rec.draws.push(s);
        rec.b_t.push(draw.b_t);
        rec.big_b_t.push(draw.big_b_t);
        rec.g.push(gibbs.prior_variance_beta(&s));
    }
    Ok(rec)
}
