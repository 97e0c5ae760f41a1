//! Replicated Monte-Carlo experiments on a ladder of latent sample sizes.
//!
//! Each replication draws a dataset, fits the estimator and records
//! `|mu_n - mu|`, the grid sup-error of the conditional distribution
//! function, and the grid sup-error of each requested conditional quantile.
//! Per-size means are then regressed on the mean observed size in log-log
//! scale to estimate the empirical convergence exponent.
//!
//! Sup errors are grid maxima, not true suprema.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cond_quantile::{sup_error_cdf, ConditionalCdfEstimator};
use crate::kernels::{BandwidthSchedule, KernelSpec, SmootherSpec};
use crate::rng::derive_seed;
use crate::{Error, Result, TruncatedDataModel};

/// Acceptance window for the conditional distribution and quantile slopes.
pub const ESTIMATOR_SLOPE_WINDOW: (f64, f64) = (-0.55, -0.25);
/// Acceptance window for the slope of `|mu_n - mu|`.
pub const MU_SLOPE_WINDOW: (f64, f64) = (-0.65, -0.35);

pub const MU_METRIC: &str = "mu_abs_error";
pub const CDF_METRIC: &str = "sup_cdf_error";

pub fn quantile_metric(p: f64) -> String {
    format!("sup_quantile_error_p{p}")
}

/// Evenly spaced grid over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Grid { lo, hi, points }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + i as f64 * step).collect()
    }

    fn problems(&self, name: &str, out: &mut Vec<String>) {
        if self.points == 0 {
            out.push(format!("{name} needs at least one point"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            out.push(format!("{name} bounds [{}, {}] are invalid", self.lo, self.hi));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: TruncatedDataModel,
    /// Increasing latent sizes `N`.
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub bandwidth: BandwidthSchedule,
    pub kernel: KernelSpec,
    pub smoother: SmootherSpec,
    pub p_levels: Vec<f64>,
    pub x_grid: Grid,
    pub y_grid: Grid,
    /// Fixed quantile search bracket; `None` uses the empirical 5%-95%
    /// range of each replication's observed responses.
    pub quantile_bracket: Option<(f64, f64)>,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: TruncatedDataModel::default(),
            sample_sizes: vec![500, 1000, 2000, 4000, 8000],
            replications: 200,
            bandwidth: BandwidthSchedule::PowerLaw { c: 0.5, a: 0.2 },
            kernel: KernelSpec::default(),
            smoother: SmootherSpec::default(),
            p_levels: vec![0.5],
            // the conditional law is smooth over this region for every x
            // within one bandwidth of the x grid
            x_grid: Grid::new(-0.5, 0.5, 41),
            y_grid: Grid::new(2.8, 3.2, 41),
            quantile_bracket: None,
            base_seed: 20_240_601,
        }
    }
}

impl ExperimentConfig {
    /// Every problem with the configuration, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.model.validate() {
            out.push(e.to_string());
        }
        if let Err(e) = self.bandwidth.validate() {
            out.push(e.to_string());
        }
        if self.sample_sizes.is_empty() {
            out.push("sample_sizes is empty".into());
        }
        if self.sample_sizes.iter().any(|&n| n < 10) {
            out.push("every latent sample size must be at least 10".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            out.push("sample_sizes must be strictly increasing".into());
        }
        if self.replications == 0 {
            out.push("replications must be positive".into());
        }
        for &p in &self.p_levels {
            if !(p > 0.0 && p < 1.0) {
                out.push(format!("p level {p} is outside (0, 1)"));
            }
        }
        self.x_grid.problems("x_grid", &mut out);
        self.y_grid.problems("y_grid", &mut out);
        let (a_f, b_f) = (self.model.response_lower(), self.model.response_upper());
        if !(a_f < self.y_grid.lo && self.y_grid.hi < b_f) {
            out.push(format!(
                "y_grid [{}, {}] must lie strictly inside the response support ({a_f}, {b_f})",
                self.y_grid.lo, self.y_grid.hi
            ));
        }
        if let Some((a, b)) = self.quantile_bracket {
            if !(a < b) {
                out.push(format!("quantile_bracket [{a}, {b}] is empty"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn metric_names(&self) -> Vec<String> {
        let mut names = vec![MU_METRIC.to_string(), CDF_METRIC.to_string()];
        names.extend(self.p_levels.iter().map(|&p| quantile_metric(p)));
        names
    }

    /// Dominant exponent of `max{ sqrt(log n / (n h)), h^2 }` under the
    /// configured schedule, ignoring logarithmic factors.
    pub fn target_slope(&self) -> f64 {
        match self.bandwidth {
            BandwidthSchedule::PowerLaw { a, .. } => (-(1.0 - a) / 2.0).max(-2.0 * a),
            BandwidthSchedule::RuleOfThumb => -0.4,
            BandwidthSchedule::Explicit { .. } => 0.0,
        }
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    /// One value per entry of [`ExperimentConfig::metric_names`].
    Measured(Vec<f64>),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub latent_n: usize,
    pub rep: usize,
    pub seed: u64,
    pub observed_n: usize,
    pub bandwidth: f64,
    pub outcome: Outcome,
}

impl ReplicationRecord {
    pub fn metrics(&self) -> Option<&[f64]> {
        match &self.outcome {
            Outcome::Measured(v) => Some(v),
            Outcome::Skipped(_) => None,
        }
    }
}

/// Generates, fits and scores one replication. Deterministic given
/// `(config.base_seed, latent_n, rep)`.
pub fn run_replication(config: &ExperimentConfig, latent_n: usize, rep: usize) -> ReplicationRecord {
    let seed = derive_seed(config.base_seed, &[latent_n as u64, rep as u64]);
    let mut record = ReplicationRecord {
        latent_n,
        rep,
        seed,
        observed_n: 0,
        bandwidth: f64::NAN,
        outcome: Outcome::Skipped(String::new()),
    };
    record.outcome = match score(config, latent_n, seed, &mut record) {
        Ok(values) => Outcome::Measured(values),
        Err(e) => Outcome::Skipped(e.to_string()),
    };
    record
}

fn score(config: &ExperimentConfig, latent_n: usize, seed: u64, record: &mut ReplicationRecord) -> Result<Vec<f64>> {
    let model = config.model.with_seed(seed);
    let data = model.generate(latent_n)?;
    let n = data.observed.len();
    record.observed_n = n;
    let h = config.bandwidth.bandwidth(n, Some(data.observed.covariate_sd()))?;
    record.bandwidth = h;
    let est = ConditionalCdfEstimator::fit(data.observed, config.kernel, config.smoother, h)?;

    let xs = config.x_grid.values();
    let ys = config.y_grid.values();
    let mut values = Vec::with_capacity(2 + config.p_levels.len());
    values.push((est.mu_hat() - data.true_mu).abs());
    values.push(sup_error_cdf(&est, |x, y| model.true_conditional_cdf(x, y), &xs, &ys));

    let (a, b) = config.quantile_bracket.unwrap_or_else(|| est.default_bracket());
    let locals: Vec<_> = xs.iter().map(|&x| est.local(x)).collect();
    for &p in &config.p_levels {
        let mut worst: f64 = 0.0;
        for (&x, local) in xs.iter().zip(&locals) {
            let q = local.quantile(p, a, b, 1e-8 * (b - a))?;
            worst = worst.max((q - model.true_quantile(x, p)).abs());
        }
        values.push(worst);
    }
    Ok(values)
}

/// Least-squares fit of `log(error)` on `log(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
}

pub fn fit_rate(errors: &[f64], sizes: &[f64]) -> Result<RateFit> {
    if errors.len() != sizes.len() {
        return Err(Error::RateFit(format!(
            "{} errors for {} sizes",
            errors.len(),
            sizes.len()
        )));
    }
    if errors.len() < 4 {
        return Err(Error::RateFit(format!(
            "slope fit needs at least 4 sample sizes, got {}",
            errors.len()
        )));
    }
    if let Some(e) = errors.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::RateFit(format!("errors must be positive and finite, got {e}")));
    }
    if let Some(n) = sizes.iter().find(|&&n| !(n > 0.0 && n.is_finite())) {
        return Err(Error::RateFit(format!("sizes must be positive, got {n}")));
    }
    let lx: Vec<f64> = sizes.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::RateFit("sizes must not all be equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, stderr })
}

/// `max{ sqrt(log n / (n h)), h^2 }`.
pub fn theoretical_rate(n: f64, h: f64) -> f64 {
    (n.ln() / (n * h)).sqrt().max(h * h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub median: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub latent_n: usize,
    pub mean_observed_n: f64,
    /// Bandwidth at the mean observed size.
    pub bandwidth: f64,
    pub theoretical_rate: f64,
    pub ok: usize,
    pub skipped: usize,
    /// Parallel to the report's metric names; `None` when every
    /// replication at this size was skipped.
    pub metrics: Vec<Option<MetricSummary>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSlope {
    pub metric: String,
    pub fit: std::result::Result<RateFit, String>,
    pub target: f64,
    pub window: (f64, f64),
}

impl MetricSlope {
    pub fn within_window(&self) -> bool {
        matches!(&self.fit, Ok(f) if f.slope >= self.window.0 && f.slope <= self.window.1)
    }
}

/// Full result of a size-ladder experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub metric_names: Vec<String>,
    pub records: Vec<ReplicationRecord>,
    pub sizes: Vec<SizeSummary>,
    pub slopes: Vec<MetricSlope>,
}

fn summarize(values: &mut [f64]) -> Option<MetricSummary> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len().is_multiple_of(2) {
        0.5 * (values[mid - 1] + values[mid])
    } else {
        values[mid]
    };
    Some(MetricSummary {
        mean,
        median,
        stderr: (var / k).sqrt(),
    })
}

impl RateReport {
    /// Aggregates replication records, which must be ordered by
    /// `(latent_n, rep)`.
    pub fn from_records(config: &ExperimentConfig, records: Vec<ReplicationRecord>) -> Result<Self> {
        let metric_names = config.metric_names();
        let mut sizes = Vec::new();
        for &latent_n in &config.sample_sizes {
            let at: Vec<&ReplicationRecord> = records.iter().filter(|r| r.latent_n == latent_n).collect();
            let measured: Vec<&[f64]> = at.iter().filter_map(|r| r.metrics()).collect();
            let ok_recs: Vec<&&ReplicationRecord> = at.iter().filter(|r| r.metrics().is_some()).collect();
            let mean_observed_n = if ok_recs.is_empty() {
                f64::NAN
            } else {
                ok_recs.iter().map(|r| r.observed_n as f64).sum::<f64>() / ok_recs.len() as f64
            };
            let (bandwidth, theoretical) = if mean_observed_n >= 2.0 {
                // dispersion-based schedules use the unit stationary sd
                let h = config
                    .bandwidth
                    .bandwidth(mean_observed_n.round() as usize, Some(1.0))?;
                (h, theoretical_rate(mean_observed_n, h))
            } else {
                (f64::NAN, f64::NAN)
            };
            let metrics = (0..metric_names.len())
                .map(|m| {
                    let mut v: Vec<f64> = measured.iter().map(|vals| vals[m]).collect();
                    summarize(&mut v)
                })
                .collect();
            sizes.push(SizeSummary {
                latent_n,
                mean_observed_n,
                bandwidth,
                theoretical_rate: theoretical,
                ok: measured.len(),
                skipped: at.len() - measured.len(),
                metrics,
            });
        }
        let mut report = RateReport {
            metric_names,
            records,
            sizes,
            slopes: Vec::new(),
        };
        report.refit_slopes(config.target_slope());
        Ok(report)
    }

    fn refit_slopes(&mut self, estimator_target: f64) {
        self.slopes = self
            .metric_names
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let (target, window) = if name == MU_METRIC {
                    (-0.5, MU_SLOPE_WINDOW)
                } else {
                    (estimator_target, ESTIMATOR_SLOPE_WINDOW)
                };
                let usable: Vec<(f64, f64)> = self
                    .sizes
                    .iter()
                    .filter_map(|s| s.metrics[m].as_ref().map(|ms| (ms.mean, s.mean_observed_n)))
                    .collect();
                let (errs, ns): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
                MetricSlope {
                    metric: name.clone(),
                    fit: fit_rate(&errs, &ns).map_err(|e| e.to_string()),
                    target,
                    window,
                }
            })
            .collect();
    }

    /// Replaces every per-size mean by `mean_observed_n^exponent` and refits.
    /// Used to self-test the slope assertion path end to end.
    pub fn inject_power_law(&mut self, exponent: f64, estimator_target: f64) {
        for s in &mut self.sizes {
            let v = s.mean_observed_n.powf(exponent);
            for m in s.metrics.iter_mut() {
                *m = Some(MetricSummary {
                    mean: v,
                    median: v,
                    stderr: 0.0,
                });
            }
        }
        self.refit_slopes(estimator_target);
    }

    pub fn slope(&self, metric: &str) -> Option<&MetricSlope> {
        self.slopes.iter().find(|s| s.metric == metric)
    }

    pub fn metric_index(&self, metric: &str) -> Option<usize> {
        self.metric_names.iter().position(|m| m == metric)
    }

    /// Per-size mean of a metric, in ladder order.
    pub fn means(&self, metric: &str) -> Vec<Option<f64>> {
        let Some(m) = self.metric_index(metric) else {
            return Vec::new();
        };
        self.sizes
            .iter()
            .map(|s| s.metrics[m].as_ref().map(|ms| ms.mean))
            .collect()
    }

    pub fn skipped(&self) -> usize {
        self.sizes.iter().map(|s| s.skipped).sum()
    }

    /// Slopes that failed to fit or fell outside their window.
    pub fn window_violations(&self) -> Vec<String> {
        self.slopes
            .iter()
            .filter(|s| !s.within_window())
            .map(|s| match &s.fit {
                Ok(f) => format!(
                    "{}: slope {:.4} outside [{}, {}]",
                    s.metric, f.slope, s.window.0, s.window.1
                ),
                Err(e) => format!("{}: {e}", s.metric),
            })
            .collect()
    }

    /// One row per replication per metric.
    pub fn write_tidy_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "latent_n",
            "rep",
            "seed",
            "observed_n",
            "bandwidth",
            "status",
            "metric",
            "value",
        ])?;
        for r in &self.records {
            let head = [
                r.latent_n.to_string(),
                r.rep.to_string(),
                r.seed.to_string(),
                r.observed_n.to_string(),
                r.bandwidth.to_string(),
            ];
            match &r.outcome {
                Outcome::Measured(values) => {
                    for (name, v) in self.metric_names.iter().zip(values) {
                        let mut row = head.to_vec();
                        row.extend(["ok".to_string(), name.clone(), v.to_string()]);
                        w.write_record(&row)?;
                    }
                }
                Outcome::Skipped(reason) => {
                    let mut row = head.to_vec();
                    row.extend([format!("skipped: {reason}"), String::new(), String::new()]);
                    w.write_record(&row)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Per-size aggregates, with each metric's fitted slope repeated on its
    /// rows.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "metric",
            "latent_n",
            "mean_observed_n",
            "bandwidth",
            "mean",
            "median",
            "stderr",
            "theoretical_rate",
            "ok_replications",
            "skipped_replications",
            "slope",
            "slope_stderr",
            "target_slope",
        ])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for (m, name) in self.metric_names.iter().enumerate() {
            let slope = &self.slopes[m];
            let (sl, se) = match &slope.fit {
                Ok(f) => (Some(f.slope), Some(f.stderr)),
                Err(_) => (None, None),
            };
            for s in &self.sizes {
                let ms = s.metrics[m].as_ref();
                w.write_record([
                    name.clone(),
                    s.latent_n.to_string(),
                    s.mean_observed_n.to_string(),
                    s.bandwidth.to_string(),
                    opt(ms.map(|v| v.mean)),
                    opt(ms.map(|v| v.median)),
                    opt(ms.map(|v| v.stderr)),
                    s.theoretical_rate.to_string(),
                    s.ok.to_string(),
                    s.skipped.to_string(),
                    opt(sl),
                    opt(se),
                    slope.target.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every `(N, rep)` replication of the ladder and aggregates them.
///
/// With the `parallel` feature, replications run on a pool of `jobs`
/// workers (`None`: one per core); results are reduced in `(N, rep)` order
/// regardless of completion order.
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RateReport> {
    config.validate()?;
    let jobs_list: Vec<(usize, usize)> = config
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..config.replications).map(move |r| (n, r)))
        .collect();
    let records = run_all(config, &jobs_list, jobs)?;
    RateReport::from_records(config, records)
}

#[cfg(feature = "parallel")]
fn run_all(config: &ExperimentConfig, list: &[(usize, usize)], jobs: Option<usize>) -> Result<Vec<ReplicationRecord>> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| list.par_iter().map(|&(n, r)| run_replication(config, n, r)).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_all(config: &ExperimentConfig, list: &[(usize, usize)], _jobs: Option<usize>) -> Result<Vec<ReplicationRecord>> {
    Ok(list.iter().map(|&(n, r)| run_replication(config, n, r)).collect())
}
