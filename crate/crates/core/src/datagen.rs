//! Simulation of the random left-truncation scheme.
//!
//! A latent sequence `(X_j, Y_j, T_j)`, `j = 1..N`, is drawn with `X` a
//! stationary AR(1) process with standard normal marginal, `Y = m(X) + e`
//! and `T` iid from `G`, independent of everything else. Only triplets with
//! `Y >= T` are kept, in their original order. The model also provides the
//! analytic conditional law, its quantiles and `mu = P(Y >= T)`.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::quadrature;
use crate::rng::{stream, Stream};
use crate::{Error, ObservedSample, Record, Result};

/// Covariate range integrated over by the oracles; `P(|X| > 12)` is far
/// below double precision.
const X_REACH: f64 = 12.0;

/// Panel edges for the covariate integrals; fixed panels keep the adaptive
/// rule from accepting a coarse estimate of a kinked integrand.
fn x_panels() -> Vec<f64> {
    (1..48).map(|i| -X_REACH + 0.5 * i as f64).collect()
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Regression function `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Regression {
    /// `offset + sin(x)`.
    ShiftedSine { offset: f64 },
    /// `intercept + slope * x`.
    Linear { intercept: f64, slope: f64 },
}

impl Default for Regression {
    fn default() -> Self {
        Regression::ShiftedSine { offset: 3.0 }
    }
}

impl Regression {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Regression::ShiftedSine { offset } => offset + x.sin(),
            Regression::Linear { intercept, slope } => intercept + slope * x,
        }
    }

    /// Infimum and supremum of `m` over the real line.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Regression::ShiftedSine { offset } => (offset - 1.0, offset + 1.0),
            Regression::Linear { intercept, slope: 0.0 } => (intercept, intercept),
            Regression::Linear { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Additive noise law `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Noise {
    /// Uniform on `(-sigma, sigma)`.
    Uniform { sigma: f64 },
    /// Centered normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Uniform { sigma: 1.0 }
    }
}

impl Noise {
    pub fn sigma(&self) -> f64 {
        match *self {
            Noise::Uniform { sigma } | Noise::Gaussian { sigma } => sigma,
        }
    }

    pub fn cdf(&self, e: f64) -> f64 {
        match *self {
            Noise::Uniform { sigma } => ((e + sigma) / (2.0 * sigma)).clamp(0.0, 1.0),
            Noise::Gaussian { sigma } => std_normal().cdf(e / sigma),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Noise::Uniform { sigma } => sigma * (2.0 * p - 1.0),
            Noise::Gaussian { sigma } => sigma * std_normal().inverse_cdf(p),
        }
    }

    /// Half-width of the support, infinite for Gaussian noise.
    pub fn reach(&self) -> f64 {
        match *self {
            Noise::Uniform { sigma } => sigma,
            Noise::Gaussian { .. } => f64::INFINITY,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::Uniform { sigma } => sigma * (2.0 * rng.random::<f64>() - 1.0),
            Noise::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
        }
    }
}

/// Truncation law `G`, supported on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Truncation {
    /// Uniform on `(0, tau)`.
    Uniform { tau: f64 },
    /// Point mass at 0: every latent draw with `Y >= 0` is observed.
    AtZero,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Uniform { tau: 4.0 }
    }
}

impl Truncation {
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            Truncation::Uniform { tau } => (t / tau).clamp(0.0, 1.0),
            Truncation::AtZero => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Right endpoint `b_G` of the support.
    pub fn upper(&self) -> f64 {
        match *self {
            Truncation::Uniform { tau } => tau,
            Truncation::AtZero => 0.0,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Truncation::Uniform { tau } => tau * rng.random::<f64>(),
            Truncation::AtZero => 0.0,
        }
    }

    /// `E[G(Y)]` for `Y = mean + e`.
    fn expected_cdf(&self, mean: f64, noise: &Noise) -> f64 {
        match (*self, *noise) {
            (Truncation::AtZero, noise) => 1.0 - noise.cdf(-mean),
            (Truncation::Uniform { tau }, Noise::Uniform { sigma }) => {
                // antiderivative of clamp(u / tau, 0, 1)
                let ramp = |u: f64| {
                    if u <= 0.0 {
                        0.0
                    } else if u < tau {
                        u * u / (2.0 * tau)
                    } else {
                        u - tau / 2.0
                    }
                };
                (ramp(mean + sigma) - ramp(mean - sigma)) / (2.0 * sigma)
            }
            (Truncation::Uniform { tau }, Noise::Gaussian { sigma }) => {
                let nd = std_normal();
                let lo = (0.0 - mean) / sigma;
                let hi = (tau - mean) / sigma;
                let mass = nd.cdf(hi) - nd.cdf(lo);
                let partial_mean = mean * mass + sigma * (nd.pdf(lo) - nd.pdf(hi));
                partial_mean / tau + (1.0 - nd.cdf(hi))
            }
        }
    }
}

/// Generative model for truncated, dependent data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedDataModel {
    #[serde(default)]
    pub regression: Regression,
    #[serde(default)]
    pub noise: Noise,
    /// AR(1) coefficient of the covariate process; 0 gives iid covariates.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub seed: u64,
}

fn default_rho() -> f64 {
    0.5
}

impl Default for TruncatedDataModel {
    fn default() -> Self {
        TruncatedDataModel {
            regression: Regression::default(),
            noise: Noise::default(),
            rho: default_rho(),
            truncation: Truncation::default(),
            seed: 0,
        }
    }
}

impl TruncatedDataModel {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Rejects parameters for which the model is not defined.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            problems.push(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        let sigma = self.noise.sigma();
        if !(sigma > 0.0 && sigma.is_finite()) {
            problems.push(format!("noise sigma must be positive, got {sigma}"));
        }
        if let Truncation::Uniform { tau } = self.truncation {
            if !(tau > 0.0 && tau.is_finite()) {
                problems.push(format!("truncation tau must be positive, got {tau}"));
            }
        }
        let finite = match self.regression {
            Regression::ShiftedSine { offset } => offset.is_finite(),
            Regression::Linear { intercept, slope } => intercept.is_finite() && slope.is_finite(),
        };
        if !finite {
            problems.push("regression parameters must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Left endpoint `a_F` of the latent response support.
    pub fn response_lower(&self) -> f64 {
        self.regression.range().0 - self.noise.reach()
    }

    /// Right endpoint `b_F` of the latent response support.
    pub fn response_upper(&self) -> f64 {
        self.regression.range().1 + self.noise.reach()
    }

    /// Support-layout assumptions (`0 = a_G < a_F`, `b_G <= b_F`) that this
    /// model violates. An empty list means the model is compliant.
    pub fn assumption_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let a_f = self.response_lower();
        let b_f = self.response_upper();
        if let Noise::Gaussian { .. } = self.noise {
            out.push("assumption-noncompliant: gaussian noise has unbounded support, so a_F > 0 fails".into());
        } else if !(a_f > 0.0) {
            out.push(format!("a_F = {a_f} is not above a_G = 0"));
        }
        if self.truncation.upper() > b_f {
            out.push(format!("b_G = {} exceeds b_F = {b_f}", self.truncation.upper()));
        }
        out
    }

    /// No latent draw can be truncated: `b_G <= a_F`.
    pub fn is_untruncated(&self) -> bool {
        self.truncation.upper() <= self.response_lower()
    }

    pub fn true_quantile(&self, x: f64, p: f64) -> f64 {
        self.regression.eval(x) + self.noise.quantile(p)
    }

    pub fn true_conditional_cdf(&self, x: f64, y: f64) -> f64 {
        self.noise.cdf(y - self.regression.eval(x))
    }

    /// `mu = P(Y >= T) = int G(u) dF(u)` over the stationary law of `X`.
    pub fn true_mu(&self) -> Result<f64> {
        if self.is_untruncated() {
            return Ok(1.0);
        }
        let nd = std_normal();
        let integrand = |x: f64| nd.pdf(x) * self.truncation.expected_cdf(self.regression.eval(x), &self.noise);
        let mu = quadrature::integrate_piecewise(integrand, -X_REACH, X_REACH, &x_panels(), 1e-11)?;
        if !(mu > 0.0 && mu <= 1.0 + 1e-9) {
            return Err(Error::Numeric(format!("truncation probability {mu} outside (0, 1]")));
        }
        Ok(mu.min(1.0))
    }

    /// Marginal distribution function of the latent response.
    pub fn response_cdf(&self, y: f64) -> Result<f64> {
        let nd = std_normal();
        let integrand = |x: f64| nd.pdf(x) * self.noise.cdf(y - self.regression.eval(x));
        quadrature::integrate_piecewise(integrand, -X_REACH, X_REACH, &x_panels(), 1e-11)
    }

    /// Draws the full latent sequence `(X_j, Y_j, T_j)` of length `n`.
    pub fn latent(&self, n: usize) -> Vec<Record> {
        let mut cov = stream(self.seed, Stream::Covariate);
        let mut noise = stream(self.seed, Stream::Noise);
        let mut trunc = stream(self.seed, Stream::Truncation);
        let innovation_sd = (1.0 - self.rho * self.rho).sqrt();
        let mut x: f64 = StandardNormal.sample(&mut cov);
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            if j > 0 {
                let z: f64 = StandardNormal.sample(&mut cov);
                x = self.rho * x + innovation_sd * z;
            }
            let y = self.regression.eval(x) + self.noise.sample(&mut noise);
            let t = self.truncation.sample(&mut trunc);
            out.push(Record { x, y, t });
        }
        out
    }

    /// Simulates `latent_n` latent draws and keeps those with `y >= t`.
    pub fn generate(&self, latent_n: usize) -> Result<GeneratedDataset> {
        self.validate()?;
        if latent_n < 10 {
            return Err(Error::Config(format!(
                "latent size must be at least 10, got {latent_n}"
            )));
        }
        let kept: Vec<Record> = self.latent(latent_n).into_iter().filter(|r| r.y >= r.t).collect();
        if kept.len() < 2 {
            return Err(Error::DegenerateSample {
                observed: kept.len(),
                latent: latent_n,
            });
        }
        let observed = ObservedSample::with_latent_size(kept, Some(latent_n))?;
        Ok(GeneratedDataset {
            observed,
            latent_size: latent_n,
            true_mu: self.true_mu()?,
            model: *self,
        })
    }
}

/// A simulated truncated sample with its latent size and true `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub observed: ObservedSample,
    pub latent_size: usize,
    pub true_mu: f64,
    pub model: TruncatedDataModel,
}

impl GeneratedDataset {
    /// `n / N`.
    pub fn observation_ratio(&self) -> f64 {
        self.observed.len() as f64 / self.latent_size as f64
    }

    /// `(n - N mu) / sqrt(N mu (1 - mu))`, 0 when `mu = 1`.
    pub fn binomial_z(&self) -> f64 {
        let big_n = self.latent_size as f64;
        let var = big_n * self.true_mu * (1.0 - self.true_mu);
        if var <= 0.0 {
            0.0
        } else {
            (self.observed.len() as f64 - big_n * self.true_mu) / var.sqrt()
        }
    }

    pub fn metadata(&self) -> DatasetMetadata {
        DatasetMetadata {
            latent_size: self.latent_size,
            observed_size: self.observed.len(),
            observation_ratio: self.observation_ratio(),
            true_mu: self.true_mu,
            assumption_violations: self.model.assumption_violations(),
            model: self.model,
        }
    }

    /// Writes `<stem>.csv` and its `<stem>.meta.toml` sidecar into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        let csv_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.meta.toml"));
        self.observed.save_csv(&csv_path)?;
        std::fs::write(&meta_path, toml::to_string(&self.metadata())?)?;
        Ok((csv_path, meta_path))
    }
}

/// Sidecar describing how a dataset CSV was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    pub latent_size: usize,
    pub observed_size: usize,
    pub observation_ratio: f64,
    pub true_mu: f64,
    pub assumption_violations: Vec<String>,
    pub model: TruncatedDataModel,
}

/// Path of the sidecar belonging to a dataset CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

/// Loads a dataset CSV, picking up the latent size from its sidecar when
/// one exists. External datasets without a sidecar load with no metadata.
pub fn load_dataset(csv_path: impl AsRef<Path>) -> Result<(ObservedSample, Option<DatasetMetadata>)> {
    let csv_path = csv_path.as_ref();
    let meta_path = sidecar_path(csv_path);
    let meta = if meta_path.exists() {
        Some(toml::from_str::<DatasetMetadata>(&std::fs::read_to_string(
            &meta_path,
        )?)?)
    } else {
        None
    };
    let sample = ObservedSample::load_csv(csv_path, meta.as_ref().map(|m| m.latent_size))?;
    Ok((sample, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_quantiles() {
        let m = TruncatedDataModel::default();
        assert_eq!(m.true_quantile(0.7, 0.5), m.regression.eval(0.7));
        assert!((m.true_quantile(0.0, 0.75) - 3.5).abs() < 1e-15);
        let g = TruncatedDataModel {
            noise: Noise::Gaussian { sigma: 1.0 },
            ..m
        };
        assert!((g.true_quantile(0.0, 0.75) - 3.0 - 0.6744898).abs() < 1e-7);
        assert!((g.true_quantile(1.0, 0.5) - g.regression.eval(1.0)).abs() < 1e-12);
    }

    #[test]
    fn true_cdf_values() {
        let m = TruncatedDataModel::default();
        let x = 0.3;
        let mx = m.regression.eval(x);
        assert_eq!(m.true_conditional_cdf(x, mx), 0.5);
        assert_eq!(m.true_conditional_cdf(x, mx + 1.0), 1.0);
        assert_eq!(m.true_conditional_cdf(x, mx + 0.5), 0.75);
    }

    #[test]
    fn untruncated_models_have_unit_mu() {
        let m = TruncatedDataModel {
            truncation: Truncation::Uniform { tau: 0.9 },
            ..Default::default()
        };
        assert!(m.is_untruncated());
        assert_eq!(m.true_mu().unwrap(), 1.0);
        let d = m.generate(500).unwrap();
        assert_eq!(d.observed.len(), 500);
        let z = TruncatedDataModel {
            truncation: Truncation::AtZero,
            ..Default::default()
        };
        assert_eq!(z.true_mu().unwrap(), 1.0);
    }

    #[test]
    fn gaussian_closed_form_matches_quadrature() {
        let m = TruncatedDataModel {
            noise: Noise::Gaussian { sigma: 0.7 },
            ..Default::default()
        };
        let nd = std_normal();
        let tau = 4.0;
        for mean in [0.5, 2.0, 3.0, 4.5] {
            let direct = quadrature::integrate_piecewise(
                |u| (u / tau).clamp(0.0, 1.0) * nd.pdf((u - mean) / 0.7) / 0.7,
                mean - 12.0,
                mean + 12.0,
                &[0.0, tau],
                1e-12,
            )
            .unwrap();
            let closed = m.truncation.expected_cdf(mean, &m.noise);
            assert!((direct - closed).abs() < 1e-10, "{direct} vs {closed}");
        }
    }

    #[test]
    fn default_model_is_compliant() {
        let m = TruncatedDataModel::default();
        assert!(m.validate().is_ok());
        assert!(m.assumption_violations().is_empty());
        assert_eq!(m.response_lower(), 1.0);
        let g = TruncatedDataModel {
            noise: Noise::Gaussian { sigma: 1.0 },
            ..m
        };
        assert_eq!(g.assumption_violations().len(), 1);
        let wide = TruncatedDataModel {
            truncation: Truncation::Uniform { tau: 6.0 },
            ..m
        };
        assert!(wide.assumption_violations()[0].contains("b_G"));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let m = TruncatedDataModel {
            rho: 1.0,
            ..Default::default()
        };
        assert!(matches!(m.validate(), Err(Error::Config(_))));
        let m = TruncatedDataModel {
            noise: Noise::Uniform { sigma: -1.0 },
            ..Default::default()
        };
        assert!(m.generate(100).is_err());
        assert!(TruncatedDataModel::default().generate(5).is_err());
    }

    #[test]
    fn too_few_observations_is_degenerate() {
        let m = TruncatedDataModel {
            regression: Regression::ShiftedSine { offset: 1.0 },
            noise: Noise::Uniform { sigma: 0.01 },
            truncation: Truncation::Uniform { tau: 1000.0 },
            ..Default::default()
        };
        assert!(matches!(m.generate(10), Err(Error::DegenerateSample { .. })));
    }

    #[test]
    fn generation_is_reproducible() {
        let m = TruncatedDataModel {
            rho: 0.0,
            seed: 99,
            ..Default::default()
        };
        let a = m.generate(300).unwrap();
        let b = m.generate(300).unwrap();
        assert_eq!(a, b);
        assert!(a.observed.records().iter().all(|r| r.y >= r.t));
        assert_ne!(a, m.with_seed(100).generate(300).unwrap());
    }

    #[test]
    fn metadata_round_trips_through_toml() {
        let d = TruncatedDataModel::default().with_seed(5).generate(200).unwrap();
        let text = toml::to_string(&d.metadata()).unwrap();
        let back: DatasetMetadata = toml::from_str(&text).unwrap();
        assert_eq!(back, d.metadata());
    }
}
