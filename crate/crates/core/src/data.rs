//! CSV ingestion of annual return data and construction of the log
//! dividend-price ratio and log return series.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// One period of index returns with and without dividends, as gross returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsRow {
    pub period: String,
    pub r: f64,
    pub r_minus: f64,
}

/// Contents of a data file in either supported layout.
#[derive(Debug, Clone, PartialEq)]
pub enum DataFile {
    /// `year, ret_incl, ret_excl`.
    Returns(Vec<ReturnsRow>),
    /// `year, x, y` with the first row holding `x_0` (its `y` may be empty).
    Series { periods: Vec<String>, dataset: Dataset },
}

impl DataFile {
    pub fn into_dataset(self) -> Result<Dataset> {
        match self {
            DataFile::Returns(rows) => build_series(&rows),
            DataFile::Series { dataset, .. } => Ok(dataset),
        }
    }
}

fn field(rec: &csv::StringRecord, i: usize, line: usize, name: &str) -> Result<f64> {
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse { line, msg: format!("{name}: expected a finite number, got {raw:?}") })
}

fn check_order(periods: &[String], line: usize) -> Result<()> {
    let n = periods.len();
    if n < 2 {
        return Ok(());
    }
    if let (Ok(a), Ok(b)) = (periods[n - 2].parse::<f64>(), periods[n - 1].parse::<f64>()) {
        if b <= a {
            return Err(Error::DataValidation {
                line,
                msg: format!("period {} does not follow {} chronologically", periods[n - 1], periods[n - 2]),
            });
        }
    }
    Ok(())
}

/// Reads either layout, detected from the header.
pub fn read_data<R: Read>(r: R) -> Result<DataFile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let pos = |n: &str| header.iter().position(|h| h == n);
    let period_col = pos("year").or_else(|| pos("period")).unwrap_or(0);
    if let (Some(ri), Some(rm)) = (pos("ret_incl"), pos("ret_excl")) {
        let mut rows = Vec::new();
        let mut periods = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let r = field(&rec, ri, line, "ret_incl")?;
            let r_minus = field(&rec, rm, line, "ret_excl")?;
            if !(r_minus > 0.0) {
                return Err(Error::DataValidation { line, msg: format!("gross return {r_minus} must be positive") });
            }
            if r < r_minus {
                return Err(Error::DataValidation {
                    line,
                    msg: format!("return with dividends {r} is below return without dividends {r_minus}"),
                });
            }
            let period = rec.get(period_col).unwrap_or("").to_string();
            periods.push(period.clone());
            check_order(&periods, line)?;
            rows.push(ReturnsRow { period, r, r_minus });
        }
        return Ok(DataFile::Returns(rows));
    }
    if let (Some(xi), Some(yi)) = (pos("x"), pos("y")) {
        let mut periods = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            xs.push(field(&rec, xi, line, "x")?);
            if k > 0 {
                ys.push(field(&rec, yi, line, "y")?);
            }
            periods.push(rec.get(period_col).unwrap_or("").to_string());
            check_order(&periods, line)?;
        }
        if xs.len() < 3 {
            return Err(Error::InsufficientData(format!("need at least 3 rows, got {}", xs.len())));
        }
        let x0 = xs.remove(0);
        let dataset = Dataset::new(x0, xs, ys)?;
        return Ok(DataFile::Series { periods, dataset });
    }
    Err(Error::Parse {
        line: 1,
        msg: format!("header {header:?} has neither (year, ret_incl, ret_excl) nor (year, x, y)"),
    })
}

pub fn load_data(path: &Path) -> Result<DataFile> {
    read_data(std::fs::File::open(path)?)
}

/// Loads a `(year, ret_incl, ret_excl)` file.
pub fn load_returns_csv(path: &Path) -> Result<Vec<ReturnsRow>> {
    match load_data(path)? {
        DataFile::Returns(rows) => Ok(rows),
        DataFile::Series { .. } => Err(Error::Parse {
            line: 1,
            msg: "expected columns year, ret_incl, ret_excl".into(),
        }),
    }
}

/// `X = R / R_minus - 1`, `x = log X`, `y = log R`; the first `x` is `x_0`
/// and the first return is dropped, leaving `T = rows - 1` pairs.
pub fn build_series(rows: &[ReturnsRow]) -> Result<Dataset> {
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 rows, got {}", rows.len())));
    }
    let mut x = Vec::with_capacity(rows.len());
    for row in rows {
        let dp = row.r / row.r_minus - 1.0;
        if !(dp > 0.0) {
            return Err(Error::LogDomain { period: row.period.clone(), value: dp });
        }
        x.push(dp.ln());
    }
    let y = rows[1..].iter().map(|r| r.r.ln()).collect();
    let x0 = x.remove(0);
    Dataset::new(x0, x, y)
}

/// Writes a dataset in the `(year, x, y)` layout, periods numbered from 0.
pub fn write_series<W: Write>(d: &Dataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["year", "x", "y"])?;
    out.write_record(["0".to_string(), format!("{:.16e}", d.x0()), String::new()])?;
    for (t, (x, y)) in d.x().iter().zip(d.y()).enumerate() {
        out.write_record([(t + 1).to_string(), format!("{x:.16e}"), format!("{y:.16e}")])?;
    }
    out.flush()?;
    Ok(())
}
