//! Piecewise-constant curves with explicit point values and left limits.
//!
//! A curve is stored as sorted, distinct jump points `p_0 < ... < p_{m-1}`
//! together with
//!
//! - `values[k]`: the value exactly at `p_k`,
//! - `left_limits[k]`: the value on the open interval `(p_{k-1}, p_k)`,
//! - `right_value`: the value on `(p_{m-1}, inf)`.
//!
//! The value below `p_0` is `left_limits[0]`. Right-continuous curves
//! (the product-limit estimators) have `values[k] == left_limits[k + 1]`;
//! the risk set `C_n` is neither left- nor right-continuous and uses the
//! general form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    jump_points: Vec<f64>,
    values: Vec<f64>,
    left_limits: Vec<f64>,
    boundary_left: f64,
    boundary_right: f64,
}

impl StepCurve {
    pub fn new(
        jump_points: Vec<f64>,
        values: Vec<f64>,
        left_limits: Vec<f64>,
        boundary_left: f64,
        boundary_right: f64,
    ) -> Result<Self> {
        if jump_points.len() != values.len() || values.len() != left_limits.len() {
            return Err(Error::Numeric("step curve arrays differ in length".into()));
        }
        if jump_points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Numeric(
                "step curve jump points must be strictly increasing".into(),
            ));
        }
        if let Some(&first) = left_limits.first() {
            if first != boundary_left {
                return Err(Error::Numeric(
                    "left limit at the smallest jump must equal the left boundary value".into(),
                ));
            }
        }
        Ok(StepCurve {
            jump_points,
            values,
            left_limits,
            boundary_left,
            boundary_right,
        })
    }

    /// A right-continuous curve: `values[k]` holds on `[p_k, p_{k+1})`.
    pub fn right_continuous(jump_points: Vec<f64>, values: Vec<f64>, boundary_left: f64) -> Result<Self> {
        let mut left_limits = Vec::with_capacity(values.len());
        let mut prev = boundary_left;
        for &v in &values {
            left_limits.push(prev);
            prev = v;
        }
        let boundary_right = values.last().copied().unwrap_or(boundary_left);
        Self::new(jump_points, values, left_limits, boundary_left, boundary_right)
    }

    /// Value of the curve at `y`.
    pub fn eval(&self, y: f64) -> f64 {
        let k = self.jump_points.partition_point(|&p| p < y);
        match self.jump_points.get(k) {
            Some(&p) if p == y => self.values[k],
            Some(_) => self.left_limits[k],
            None => self.boundary_right,
        }
    }

    /// Left limit `lim_{s -> y-}` of the curve.
    pub fn left_limit(&self, y: f64) -> f64 {
        let k = self.jump_points.partition_point(|&p| p < y);
        match self.left_limits.get(k) {
            Some(&v) => v,
            None => self.boundary_right,
        }
    }

    pub fn jump_points(&self) -> &[f64] {
        &self.jump_points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_limit_values(&self) -> &[f64] {
        &self.left_limits
    }

    pub fn boundary_left(&self) -> f64 {
        self.boundary_left
    }

    pub fn boundary_right(&self) -> f64 {
        self.boundary_right
    }

    /// All stored levels, in order of the real line.
    fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.left_limits
            .iter()
            .zip(&self.values)
            .flat_map(|(&l, &v)| [l, v])
            .chain(std::iter::once(self.boundary_right))
    }

    pub fn is_nondecreasing(&self) -> bool {
        let mut prev = f64::NEG_INFINITY;
        self.levels().all(|v| {
            let ok = v >= prev;
            prev = v;
            ok
        })
    }

    pub fn in_unit_interval(&self) -> bool {
        self.levels().all(|v| (0.0..=1.0).contains(&v))
    }

    /// Writes one row per jump point: the value just left of the point, at
    /// the point, and on the open interval up to the next point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["jump_point", "left_limit", "value", "right_value"])?;
        let rights = self
            .left_limits
            .iter()
            .skip(1)
            .chain(std::iter::once(&self.boundary_right));
        for (((p, l), v), r) in self
            .jump_points
            .iter()
            .zip(&self.left_limits)
            .zip(&self.values)
            .zip(rights)
        {
            w.write_record([p.to_string(), l.to_string(), v.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
