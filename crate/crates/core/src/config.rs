//! TOML configuration with sections `[prior]`, `[sampler]`, `[schedule]`,
//! `[dgp]` and `[study]`. Every key is optional and defaults to the
//! simulation-study values; unknown keys, wrong types and violated
//! constraints are all reported together.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sampler::{ARMode, BetaPrior, ReturnStep, Schedule, VarianceStep};
use crate::study::StudyConfig;

type Table = toml::Table;
type Value = toml::Value;

struct Walker<'a> {
    section: &'a str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<String>,
    seen: Vec<&'static str>,
}

impl<'a> Walker<'a> {
    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn bad(&mut self, key: &str, want: &str, v: &Value) {
        self.errors.push(format!("[{}] {key}: expected {want}, got {v}", self.section));
    }

    fn float(&mut self, key: &'static str, slot: &mut f64) {
        match self.get(key) {
            None => {}
            Some(Value::Float(f)) => *slot = *f,
            Some(Value::Integer(i)) => *slot = *i as f64,
            Some(v) => self.bad(key, "a number", v),
        }
    }

    fn opt_float(&mut self, key: &'static str, slot: &mut Option<f64>) {
        let mut v = f64::NAN;
        let before = self.errors.len();
        self.float(key, &mut v);
        if self.errors.len() == before && self.table.is_some_and(|t| t.contains_key(key)) {
            *slot = Some(v);
        }
    }

    fn uint(&mut self, key: &'static str, slot: &mut usize) {
        match self.get(key) {
            None => {}
            Some(Value::Integer(i)) if *i >= 0 => *slot = *i as usize,
            Some(v) => self.bad(key, "a non-negative integer", v),
        }
    }

    fn u64(&mut self, key: &'static str, slot: &mut u64) {
        match self.get(key) {
            None => {}
            Some(Value::Integer(i)) if *i >= 0 => *slot = *i as u64,
            Some(v) => self.bad(key, "a non-negative integer", v),
        }
    }

    fn boolean(&mut self, key: &'static str, slot: &mut bool) {
        match self.get(key) {
            None => {}
            Some(Value::Boolean(b)) => *slot = *b,
            Some(v) => self.bad(key, "true or false", v),
        }
    }

    fn floats(&mut self, key: &'static str) -> Option<Vec<f64>> {
        let v = self.get(key)?;
        let out: Option<Vec<f64>> = match v {
            Value::Array(a) => a
                .iter()
                .map(|e| match e {
                    Value::Float(f) => Some(*f),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                })
                .collect(),
            _ => None,
        };
        if out.is_none() {
            self.bad(key, "an array of numbers", v);
        }
        out
    }

    fn pair(&mut self, key: &'static str, slot: &mut [f64; 2]) {
        if let Some(v) = self.floats(key) {
            match v.as_slice() {
                [a, b] => *slot = [*a, *b],
                _ => self.errors.push(format!("[{}] {key}: expected 2 values, got {}", self.section, v.len())),
            }
        }
    }

    fn choice<T: Copy>(&mut self, key: &'static str, options: &[(&str, T)], slot: &mut T) {
        match self.get(key) {
            None => {}
            Some(Value::String(s)) if options.iter().any(|(n, _)| n == s) => {
                *slot = options.iter().find(|(n, _)| n == s).map(|(_, v)| *v).expect("checked");
            }
            Some(v) => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.bad(key, &format!("one of {names:?}"), v)
            }
        }
    }

    fn finish(self) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.seen.contains(&k.as_str()) {
                    self.errors.push(format!("[{}] unknown key {k}", self.section));
                }
            }
        }
    }
}

const SECTIONS: [&str; 5] = ["prior", "sampler", "schedule", "dgp", "study"];
const A_R_MODES: [(&str, ARMode); 3] =
    [("hyperprior", ARMode::Hyperprior), ("fixed_low", ARMode::FixedLow), ("fixed_high", ARMode::FixedHigh)];
const RETURN_STEPS: [(&str, ReturnStep); 2] =
    [("marginal", ReturnStep::Marginal), ("conditional", ReturnStep::Conditional)];
const VARIANCE_STEPS: [(&str, VarianceStep); 2] =
    [("exact", VarianceStep::Exact), ("transitions_only", VarianceStep::TransitionsOnly)];

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config_str(src: &str) -> Result<StudyConfig> {
    let doc: Table = src.parse().map_err(|e: toml::de::Error| Error::Parse {
        line: e.span().map_or(1, |s| line_of(src, s.start)),
        msg: e.message().to_string(),
    })?;
    let mut errors = Vec::new();
    for (k, v) in &doc {
        if !SECTIONS.contains(&k.as_str()) {
            errors.push(format!("unknown section or key {k}"));
        } else if !v.is_table() {
            errors.push(format!("{k} must be a section"));
        }
    }
    let section = |name: &str| doc.get(name).and_then(Value::as_table);
    let mut cfg = StudyConfig::default();

    let mut w = Walker { section: "study", table: section("study"), errors: &mut errors, seen: vec![] };
    let mut full = false;
    w.boolean("full_scale", &mut full);
    if full {
        cfg = StudyConfig::full_scale();
    }
    if let Some(g) = w.floats("beta_grid") {
        cfg.beta_grid = g;
    }
    w.uint("T", &mut cfg.t);
    w.uint("n", &mut cfg.n);
    w.float("alpha_level", &mut cfg.alpha_level);
    w.u64("seed", &mut cfg.seed);
    let mut m_prior = 0usize;
    w.uint("m_prior", &mut m_prior);
    if m_prior > 0 {
        cfg.m_prior = Some(m_prior);
    }
    w.boolean("bayes", &mut cfg.bayes);
    w.uint("jobs", &mut cfg.jobs);
    w.boolean("keep_traces", &mut cfg.keep_traces);
    w.float("density_grid_lo", &mut cfg.density_grid.lo);
    w.float("density_grid_hi", &mut cfg.density_grid.hi);
    w.uint("density_grid_n", &mut cfg.density_grid.n);
    w.finish();

    let p = &mut cfg.prior;
    let mut w = Walker { section: "prior", table: section("prior"), errors: &mut errors, seen: vec![] };
    w.float("mu0_alpha_y", &mut p.mu0_alpha_y);
    w.float("sigma0_alpha_y", &mut p.sigma0_alpha_y);
    w.float("mu0_psi", &mut p.mu0_psi);
    w.float("sigma0_psi", &mut p.sigma0_psi);
    w.opt_float("mu0_mu_x", &mut p.mu0_mu_x);
    w.float("s0_mu_x", &mut p.s0_mu_x);
    w.float("nu_x", &mut p.nu_x);
    w.float("s0_x", &mut p.s0_x);
    w.float("nu_y", &mut p.nu_y);
    w.float("s0_y", &mut p.s0_y);
    w.float("mu0_beta", &mut p.mu0_beta);
    w.float("b0_r", &mut p.b0_r);
    w.float("a_r_low", &mut p.a_r_low);
    w.float("a_r_high", &mut p.a_r_high);
    w.float("p_a_r", &mut p.p_a_r);
    w.choice("a_r_mode", &A_R_MODES, &mut p.a_r_mode);
    w.pair("aux_b0", &mut p.aux_b0);
    w.pair("aux_big_b0", &mut p.aux_big_b0);
    w.finish();

    let s = &mut cfg.sampler;
    let mut w = Walker { section: "sampler", table: section("sampler"), errors: &mut errors, seen: vec![] };
    w.choice("return_step", &RETURN_STEPS, &mut s.return_step);
    w.choice("sigma_x2_step", &VARIANCE_STEPS, &mut s.sigma_x2_step);
    w.boolean("include_initial", &mut s.include_initial);
    let mut fixed = None;
    w.opt_float("beta_prior_variance", &mut fixed);
    if let Some(v) = fixed {
        s.beta_prior = BetaPrior::Fixed(v);
    }
    w.finish();

    let sc: &mut Schedule = &mut cfg.schedule;
    let mut w = Walker { section: "schedule", table: section("schedule"), errors: &mut errors, seen: vec![] };
    w.uint("m0", &mut sc.m0);
    w.uint("m1", &mut sc.m1);
    w.uint("thin", &mut sc.thin);
    w.finish();

    let d = &mut cfg.dgp;
    let mut w = Walker { section: "dgp", table: section("dgp"), errors: &mut errors, seen: vec![] };
    w.float("alpha_x", &mut d.alpha_x);
    w.float("alpha_y", &mut d.alpha_y);
    w.float("phi", &mut d.phi);
    w.float("beta", &mut d.beta);
    w.float("sigma_x2", &mut d.sigma_x2);
    w.float("sigma_y2", &mut d.sigma_y2);
    w.float("sigma_xy", &mut d.sigma_xy);
    w.finish();

    if errors.is_empty() {
        errors.extend(cfg.violations());
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

pub fn parse_config(path: &Path) -> Result<StudyConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

fn name_of<T: PartialEq + Copy>(options: &[(&'static str, T)], v: T) -> &'static str {
    options.iter().find(|(_, o)| *o == v).map(|(n, _)| *n).expect("every variant is named")
}

fn num(v: f64) -> String {
    // `{:?}` prints the shortest string that round-trips.
    format!("{v:?}")
}

/// Effective configuration as a document that parses back to the same value.
pub fn to_toml_string(cfg: &StudyConfig) -> String {
    let mut s = String::new();
    let p = &cfg.prior;
    let grid: Vec<String> = cfg.beta_grid.iter().map(|&b| num(b)).collect();
    let _ = writeln!(s, "[study]");
    let _ = writeln!(s, "beta_grid = [{}]", grid.join(", "));
    let _ = writeln!(s, "T = {}\nn = {}\nalpha_level = {}\nseed = {}", cfg.t, cfg.n, num(cfg.alpha_level), cfg.seed);
    if let Some(m) = cfg.m_prior {
        let _ = writeln!(s, "m_prior = {m}");
    }
    let _ = writeln!(s, "bayes = {}\njobs = {}\nkeep_traces = {}", cfg.bayes, cfg.jobs, cfg.keep_traces);
    let g = cfg.density_grid;
    let _ = writeln!(s, "density_grid_lo = {}\ndensity_grid_hi = {}\ndensity_grid_n = {}", num(g.lo), num(g.hi), g.n);

    let _ = writeln!(s, "\n[prior]");
    for (k, v) in [
        ("mu0_alpha_y", p.mu0_alpha_y),
        ("sigma0_alpha_y", p.sigma0_alpha_y),
        ("mu0_psi", p.mu0_psi),
        ("sigma0_psi", p.sigma0_psi),
        ("s0_mu_x", p.s0_mu_x),
        ("nu_x", p.nu_x),
        ("s0_x", p.s0_x),
        ("nu_y", p.nu_y),
        ("s0_y", p.s0_y),
        ("mu0_beta", p.mu0_beta),
        ("b0_r", p.b0_r),
        ("a_r_low", p.a_r_low),
        ("a_r_high", p.a_r_high),
        ("p_a_r", p.p_a_r),
    ] {
        let _ = writeln!(s, "{k} = {}", num(v));
    }
    if let Some(m) = p.mu0_mu_x {
        let _ = writeln!(s, "mu0_mu_x = {}", num(m));
    }
    let _ = writeln!(s, "a_r_mode = \"{}\"", name_of(&A_R_MODES, p.a_r_mode));
    let _ = writeln!(s, "aux_b0 = [{}, {}]", num(p.aux_b0[0]), num(p.aux_b0[1]));
    let _ = writeln!(s, "aux_big_b0 = [{}, {}]", num(p.aux_big_b0[0]), num(p.aux_big_b0[1]));

    let o = &cfg.sampler;
    let _ = writeln!(s, "\n[sampler]");
    let _ = writeln!(s, "return_step = \"{}\"", name_of(&RETURN_STEPS, o.return_step));
    let _ = writeln!(s, "sigma_x2_step = \"{}\"", name_of(&VARIANCE_STEPS, o.sigma_x2_step));
    let _ = writeln!(s, "include_initial = {}", o.include_initial);
    if let BetaPrior::Fixed(v) = o.beta_prior {
        let _ = writeln!(s, "beta_prior_variance = {}", num(v));
    }

    let sc = cfg.schedule;
    let _ = writeln!(s, "\n[schedule]\nm0 = {}\nm1 = {}\nthin = {}", sc.m0, sc.m1, sc.thin);

    let d = &cfg.dgp;
    let _ = writeln!(s, "\n[dgp]");
    for (k, v) in [
        ("alpha_x", d.alpha_x),
        ("alpha_y", d.alpha_y),
        ("phi", d.phi),
        ("beta", d.beta),
        ("sigma_x2", d.sigma_x2),
        ("sigma_y2", d.sigma_y2),
        ("sigma_xy", d.sigma_xy),
    ] {
        let _ = writeln!(s, "{k} = {}", num(v));
    }
    s
}
