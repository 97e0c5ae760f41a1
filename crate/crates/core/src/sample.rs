//! Observed left-truncated samples and their `x,y,t` CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One observed triplet. The truncation rule guarantees `y >= t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Record {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Record { x, y, t }
    }
}

/// The `n` observed records of a truncated sample, in observation order.
///
/// `latent_size` is the size `N` of the latent draw and is only known for
/// simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSample {
    records: Vec<Record>,
    latent_size: Option<usize>,
}

impl ObservedSample {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        Self::with_latent_size(records, None)
    }

    pub fn with_latent_size(records: Vec<Record>, latent_size: Option<usize>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidSample("sample must contain at least one record".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if !(r.x.is_finite() && r.y.is_finite() && r.t.is_finite()) {
                return Err(Error::InvalidSample(format!("record {i} has a non-finite field")));
            }
            if r.y < r.t {
                return Err(Error::InvalidSample(format!(
                    "record {i} violates y >= t (y = {}, t = {})",
                    r.y, r.t
                )));
            }
        }
        if let Some(big_n) = latent_size {
            if records.len() > big_n {
                return Err(Error::InvalidSample(format!(
                    "{} observed records exceed latent size {big_n}",
                    records.len()
                )));
            }
        }
        Ok(ObservedSample { records, latent_size })
    }

    /// Builds a sample from parallel columns.
    pub fn from_columns(x: &[f64], y: &[f64], t: &[f64]) -> Result<Self> {
        if x.len() != y.len() || y.len() != t.len() {
            return Err(Error::InvalidSample(format!(
                "column lengths differ: x {}, y {}, t {}",
                x.len(),
                y.len(),
                t.len()
            )));
        }
        let records = x
            .iter()
            .zip(y)
            .zip(t)
            .map(|((&x, &y), &t)| Record { x, y, t })
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn latent_size(&self) -> Option<usize> {
        self.latent_size
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.x)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.y)
    }

    pub fn ts(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    /// Sample standard deviation of the covariate (0 for `n = 1`).
    pub fn covariate_sd(&self) -> f64 {
        let n = self.len() as f64;
        if self.len() < 2 {
            return 0.0;
        }
        let mean = self.xs().sum::<f64>() / n;
        let ss: f64 = self.xs().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    }

    /// Empirical quantile of the observed responses (type-7 interpolation).
    pub fn response_quantile(&self, p: f64) -> f64 {
        let mut ys: Vec<f64> = self.ys().collect();
        ys.sort_by(f64::total_cmp);
        let pos = p.clamp(0.0, 1.0) * (ys.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        ys[lo] + (pos - lo as f64) * (ys[hi] - ys[lo])
    }

    /// Every `t_i` lies strictly below every `y_j`, so truncation never bites.
    pub fn is_untruncated(&self) -> bool {
        let t_max = self.ts().fold(f64::NEG_INFINITY, f64::max);
        let y_min = self.ys().fold(f64::INFINITY, f64::min);
        t_max < y_min
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "y", "t"])?;
        for r in &self.records {
            w.write_record([r.x.to_string(), r.y.to_string(), r.t.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an `x,y,t` CSV. The header must be exactly `x,y,t`.
    pub fn read_csv<R: Read>(reader: R, latent_size: Option<usize>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "y", "t"] {
            return Err(Error::InvalidSample(format!(
                "expected header `x,y,t`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut records = Vec::new();
        for row in rdr.deserialize() {
            records.push(row?);
        }
        Self::with_latent_size(records, latent_size)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: impl AsRef<Path>, latent_size: Option<usize>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), latent_size)
    }
}
