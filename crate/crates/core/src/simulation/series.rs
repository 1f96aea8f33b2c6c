use std::path::Path;

use chrono::{Months, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::market::{IncrementSampler, MarketParams};

/// Monthly real total returns of a stock index and a bond index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub stock: Vec<f64>,
    pub bond: Vec<f64>,
    pub source: String,
}

#[derive(Deserialize)]
struct Row {
    date: String,
    stock_real_return: f64,
    bond_real_return: f64,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, stock: Vec<f64>, bond: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        let s = ReturnSeries {
            dates,
            stock,
            bond,
            source: source.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.stock.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stock.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.stock.len();
        if n == 0 {
            return Err(Error::Data("return series is empty".into()));
        }
        if self.bond.len() != n || self.dates.len() != n {
            return Err(Error::Data("return series columns differ in length".into()));
        }
        for k in 0..n {
            if k > 0 && self.dates[k] <= self.dates[k - 1] {
                return Err(Error::Data(format!(
                    "dates must increase strictly: {} follows {}",
                    self.dates[k],
                    self.dates[k - 1]
                )));
            }
            for v in [self.stock[k], self.bond[k]] {
                if !(v > -1.0) || !v.is_finite() {
                    return Err(Error::Data(format!(
                        "return {v} on {} must be finite and above -1",
                        self.dates[k]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Read `date,stock_real_return,bond_real_return` rows with ISO dates.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        let expected = ["date", "stock_real_return", "bond_real_return"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Format(format!(
                "{}: header must be {}, found {}",
                path.display(),
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut dates, mut stock, mut bond) = (Vec::new(), Vec::new(), Vec::new());
        for (k, rec) in rdr.deserialize::<Row>().enumerate() {
            let line = k + 2;
            let row = rec.map_err(|e| {
                Error::Format(format!("{}: row {line}: {e}", path.display()))
            })?;
            let date = NaiveDate::parse_from_str(row.date.trim(), "%Y-%m-%d").map_err(|e| {
                Error::Format(format!(
                    "{}: row {line}: bad date {:?}: {e}",
                    path.display(),
                    row.date
                ))
            })?;
            dates.push(date);
            stock.push(row.stock_real_return);
            bond.push(row.bond_real_return);
        }
        let source = path.display().to_string();
        Self::new(dates, stock, bond, source)
    }

    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("date,stock_real_return,bond_real_return\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.dates[k].format("%Y-%m-%d"),
                self.stock[k],
                self.bond[k]
            ));
        }
        crate::write_atomic(path, out.as_bytes())
    }

    /// Monthly returns simulated from the parametric market, starting at
    /// `1926-01-31`. Useful as a stand-in when historical data is absent.
    pub fn from_model(market: &MarketParams, months: usize, seed: u64) -> Result<Self> {
        let sampler = IncrementSampler::new(market, 1.0 / 12.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = NaiveDate::from_ymd_opt(1926, 2, 1).expect("valid date");
        let mut dates = Vec::with_capacity(months);
        let mut stock = Vec::with_capacity(months);
        let mut bond = Vec::with_capacity(months);
        for k in 0..months {
            let end = u32::try_from(k)
                .ok()
                .and_then(|k| start.checked_add_months(Months::new(k)))
                .and_then(|d| d.pred_opt())
                .ok_or_else(|| Error::Argument(format!("{months} months runs past the calendar")))?;
            dates.push(end);
            let inc = sampler.sample(false, &mut rng);
            stock.push(inc.ds.exp_m1());
            bond.push(inc.db.exp_m1());
        }
        Self::new(dates, stock, bond, format!("model seed {seed}"))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        let csv::ErrorKind::Io(io) = e.into_kind() else {
            unreachable!()
        };
        Error::io(path, io)
    } else {
        Error::Format(format!("{}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_row_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let s = ReturnSeries::from_model(&MarketParams::crsp_tbill(), 24, 3).unwrap();
        s.to_csv(&path).unwrap();
        let back = ReturnSeries::from_csv(&path).unwrap();
        assert_eq!(back.stock, s.stock);
        assert_eq!(back.dates, s.dates);

        std::fs::write(&path, "date,stock_real_return,bond_real_return\n2000-01-31,0.01,0.0\n2000-02-29,abc,0.0\n").unwrap();
        let err = ReturnSeries::from_csv(&path).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("row 3")), "{err}");

        std::fs::write(&path, "when,s,b\n2000-01-31,0.01,0.0\n").unwrap();
        assert!(matches!(ReturnSeries::from_csv(&path), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_unordered_dates_and_total_losses() {
        let d = |m| NaiveDate::from_ymd_opt(2000, m, 1).unwrap();
        assert!(ReturnSeries::new(vec![d(2), d(1)], vec![0.0, 0.0], vec![0.0, 0.0], "x").is_err());
        assert!(ReturnSeries::new(vec![d(1)], vec![-1.0], vec![0.0], "x").is_err());
        assert!(ReturnSeries::new(vec![], vec![], vec![], "x").is_err());
    }
}
