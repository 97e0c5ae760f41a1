//! Truncation-weighted kernel estimators of the conditional distribution
//! function and its quantiles.
//!
//! Each record gets the weight `w_i = 1 / G_n(y_i)`; records with
//! `G_n(y_i) = 0` are inactive and skipped by every sum. With
//! `K_i = K((x - x_i) / h)` and `H_i = H((y - y_i) / h)`:
//!
//! ```text
//! v_n*(x)     = (n h)^-1        sum_i K_i
//! v_n(x)      = mu_n (n h)^-1   sum_i w_i K_i
//! F_{1,n}(x,y)= mu_n (n h)^-1   sum_i w_i K_i H_i
//! F_n(y | x)  = sum_i w_i K_i H_i / sum_i w_i K_i     (0/0 = 0)
//! q_{p,n}(x)  = inf { y : F_n(y | x) >= p }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kernels::{KernelSpec, SmootherSpec};
use crate::lynden_bell::truncation_probability;
use crate::{Error, ObservedSample, Result};

const MAX_BISECTIONS: usize = 100;

/// A fitted conditional distribution estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EstimatorFile", into = "EstimatorFile")]
pub struct ConditionalCdfEstimator {
    sample: ObservedSample,
    kernel: KernelSpec,
    smoother: SmootherSpec,
    h: f64,
    weights: Vec<f64>,
    active: Vec<bool>,
    mu_hat: f64,
    // record indices sorted by covariate, for windowed kernel sums
    by_x: Vec<usize>,
    sorted_x: Vec<f64>,
}

/// On-disk form of [`ConditionalCdfEstimator`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorFile {
    kernel: KernelSpec,
    smoother: SmootherSpec,
    h: f64,
    mu_hat: f64,
    weights: Vec<f64>,
    active: Vec<bool>,
    sample: ObservedSample,
}

impl From<ConditionalCdfEstimator> for EstimatorFile {
    fn from(e: ConditionalCdfEstimator) -> Self {
        EstimatorFile {
            kernel: e.kernel,
            smoother: e.smoother,
            h: e.h,
            mu_hat: e.mu_hat,
            weights: e.weights,
            active: e.active,
            sample: e.sample,
        }
    }
}

impl TryFrom<EstimatorFile> for ConditionalCdfEstimator {
    type Error = Error;

    fn try_from(f: EstimatorFile) -> Result<Self> {
        let n = f.sample.len();
        if f.weights.len() != n || f.active.len() != n {
            return Err(Error::InvalidSample(format!(
                "estimator file has {} weights and {} mask entries for {n} records",
                f.weights.len(),
                f.active.len()
            )));
        }
        if f.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidSample(
                "estimator weights must be finite and nonnegative".into(),
            ));
        }
        if !(f.h > 0.0 && f.h.is_finite()) {
            return Err(Error::Config(format!("bandwidth must be positive, got {}", f.h)));
        }
        Ok(Self::assemble(
            f.sample, f.kernel, f.smoother, f.h, f.weights, f.active, f.mu_hat,
        ))
    }
}

/// Conditional distribution value together with whether any kernel mass
/// was found near `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub value: f64,
    pub has_local_data: bool,
}

/// A quantile request on the search bracket `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileQuery {
    pub x: f64,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    /// Bracket width at which bisection stops; `None` means `1e-8 (b - a)`.
    pub tolerance: Option<f64>,
}

impl QuantileQuery {
    pub fn new(x: f64, p: f64, a: f64, b: f64) -> Self {
        QuantileQuery {
            x,
            p,
            a,
            b,
            tolerance: None,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(1e-8 * (self.b - self.a))
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!(
                "quantile level must lie in (0, 1), got {}",
                self.p
            )));
        }
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::Config(format!(
                "invalid search interval [{}, {}]",
                self.a, self.b
            )));
        }
        if !(self.tolerance() > 0.0) {
            return Err(Error::Config("quantile tolerance must be positive".into()));
        }
        Ok(())
    }
}

impl ConditionalCdfEstimator {
    /// Fits the estimator: computes `G_n` and `mu_n` once and caches the
    /// per-record weights.
    pub fn fit(sample: ObservedSample, kernel: KernelSpec, smoother: SmootherSpec, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("bandwidth must be positive, got {h}")));
        }
        let trunc = truncation_probability(&sample);
        let (weights, active): (Vec<f64>, Vec<bool>) = sample
            .ys()
            .map(|y| {
                let g = trunc.g_curve.eval(y);
                if g > 0.0 {
                    (1.0 / g, true)
                } else {
                    (0.0, false)
                }
            })
            .unzip();
        if !active.iter().any(|&a| a) {
            return Err(Error::DegenerateWeights);
        }
        Ok(Self::assemble(
            sample,
            kernel,
            smoother,
            h,
            weights,
            active,
            trunc.mu_hat,
        ))
    }

    fn assemble(
        sample: ObservedSample,
        kernel: KernelSpec,
        smoother: SmootherSpec,
        h: f64,
        weights: Vec<f64>,
        active: Vec<bool>,
        mu_hat: f64,
    ) -> Self {
        let mut by_x: Vec<usize> = (0..sample.len()).collect();
        let recs = sample.records();
        by_x.sort_by(|&i, &j| recs[i].x.total_cmp(&recs[j].x));
        let sorted_x = by_x.iter().map(|&i| recs[i].x).collect();
        ConditionalCdfEstimator {
            sample,
            kernel,
            smoother,
            h,
            weights,
            active,
            mu_hat,
            by_x,
            sorted_x,
        }
    }

    pub fn sample(&self) -> &ObservedSample {
        &self.sample
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn smoother(&self) -> SmootherSpec {
        self.smoother
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    /// A copy with `mu_n` replaced. The conditional distribution does not
    /// depend on it; the density and `F_{1,n}` scale with it.
    pub fn with_mu_hat(&self, mu_hat: f64) -> Self {
        Self { mu_hat, ..self.clone() }
    }

    /// A copy with every weight multiplied by `factor > 0`.
    pub fn with_scaled_weights(&self, factor: f64) -> Self {
        let weights = self.weights.iter().map(|w| w * factor).collect();
        Self {
            weights,
            ..self.clone()
        }
    }

    /// Indices (into the sample) of records whose kernel term can be
    /// nonzero at `x`.
    fn window(&self, x: f64) -> &[usize] {
        match self.kernel.support_radius() {
            Some(r) => {
                let reach = r * self.h;
                let lo = self.sorted_x.partition_point(|&v| v < x - reach);
                let hi = self.sorted_x.partition_point(|&v| v <= x + reach);
                &self.by_x[lo..hi]
            }
            None => &self.by_x,
        }
    }

    fn k(&self, x: f64, xi: f64) -> f64 {
        self.kernel.eval((x - xi) / self.h)
    }

    /// `v_n*(x)`: unweighted kernel density of the observed covariates.
    pub fn density_observed(&self, x: f64) -> f64 {
        let recs = self.sample.records();
        let s: f64 = self.window(x).iter().map(|&i| self.k(x, recs[i].x)).sum();
        s / (self.sample.len() as f64 * self.h)
    }

    /// `v_n(x)`: truncation-corrected density of the latent covariate.
    pub fn density_marginal(&self, x: f64) -> f64 {
        let recs = self.sample.records();
        let s: f64 = self
            .window(x)
            .iter()
            .filter(|&&i| self.active[i])
            .map(|&i| self.weights[i] * self.k(x, recs[i].x))
            .sum();
        self.mu_hat * s / (self.sample.len() as f64 * self.h)
    }

    /// `F_{1,n}(x, y)`.
    pub fn f1(&self, x: f64, y: f64) -> f64 {
        let local = self.local(x);
        self.mu_hat * local.numerator(y) / (self.sample.len() as f64 * self.h)
    }

    /// Collects the nonzero weighted kernel terms at `x` for repeated
    /// evaluation in `y`.
    pub fn local(&self, x: f64) -> LocalCdf {
        let recs = self.sample.records();
        let mut terms = Vec::new();
        let mut denom = 0.0;
        for &i in self.window(x) {
            if !self.active[i] {
                continue;
            }
            let a = self.weights[i] * self.k(x, recs[i].x);
            if a > 0.0 {
                terms.push((a, recs[i].y));
                denom += a;
            }
        }
        LocalCdf {
            x,
            terms,
            denom,
            h: self.h,
            smoother: self.smoother,
        }
    }

    /// `F_n(y | x)`, with `0/0 = 0` where no kernel mass reaches `x`.
    pub fn conditional_cdf(&self, x: f64, y: f64) -> f64 {
        self.conditional_cdf_checked(x, y).value
    }

    pub fn conditional_cdf_checked(&self, x: f64, y: f64) -> CdfValue {
        let local = self.local(x);
        CdfValue {
            value: local.cdf(y),
            has_local_data: local.has_data(),
        }
    }

    /// `q_{p,n}(x)` located by bisection on the query bracket.
    pub fn conditional_quantile(&self, q: &QuantileQuery) -> Result<f64> {
        q.validate()?;
        self.local(q.x).quantile(q.p, q.a, q.b, q.tolerance())
    }

    /// Conditional median prediction of the response at `x_new`.
    pub fn predict_median(&self, x_new: f64, search: (f64, f64), tol: f64) -> Result<f64> {
        self.conditional_quantile(&QuantileQuery::new(x_new, 0.5, search.0, search.1).with_tolerance(tol))
    }

    /// Default quantile bracket: the empirical 5%-95% range of the observed
    /// responses, widened to `[min y - h, max y + h]` when that range is
    /// degenerate.
    pub fn default_bracket(&self) -> (f64, f64) {
        let a = self.sample.response_quantile(0.05);
        let b = self.sample.response_quantile(0.95);
        if a < b {
            return (a, b);
        }
        let reach = self.h * self.smoother.support_radius();
        let lo = self.sample.ys().fold(f64::INFINITY, f64::min);
        let hi = self.sample.ys().fold(f64::NEG_INFINITY, f64::max);
        (lo - reach, hi + reach)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Weighted kernel terms `(w_i K_i, y_i)` at a fixed covariate value.
#[derive(Debug, Clone)]
pub struct LocalCdf {
    x: f64,
    terms: Vec<(f64, f64)>,
    denom: f64,
    h: f64,
    smoother: SmootherSpec,
}

impl LocalCdf {
    pub fn has_data(&self) -> bool {
        self.denom > 0.0
    }

    /// `sum_i w_i K_i`.
    pub fn denominator(&self) -> f64 {
        self.denom
    }

    /// `sum_i w_i K_i H((y - y_i) / h)`.
    pub fn numerator(&self, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, yi)| a * self.smoother.cdf((y - yi) / self.h))
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if self.denom > 0.0 {
            (self.numerator(y) / self.denom).min(1.0)
        } else {
            0.0
        }
    }

    /// `inf { y in [a, b] : F_n(y | x) >= p }` to within `tol`.
    pub fn quantile(&self, p: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
        if !self.has_data() {
            return Err(Error::NoLocalData { x: self.x });
        }
        let fa = self.cdf(a);
        let fb = self.cdf(b);
        if p < fa || p > fb {
            return Err(Error::NotBracketed {
                p,
                a,
                b,
                low: fa,
                high: fb,
            });
        }
        if fa >= p {
            return Ok(a);
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..MAX_BISECTIONS {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// `max |F_n(y | x) - F(y | x)|` over the grid `x_grid x y_grid`.
pub fn sup_error_cdf(
    est: &ConditionalCdfEstimator,
    truth: impl Fn(f64, f64) -> f64,
    x_grid: &[f64],
    y_grid: &[f64],
) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in x_grid {
        let local = est.local(x);
        for &y in y_grid {
            worst = worst.max((local.cdf(y) - truth(x, y)).abs());
        }
    }
    worst
}
