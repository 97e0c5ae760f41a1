//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function simulates a dataset from the default model (with
//! the given seed, latent size, truncation bound and AR coefficient), runs
//! one stage of the estimator and returns the curves as a JSON string.

use serde::Serialize;
use truncq::datagen::{GeneratedDataset, Truncation};
use truncq::lynden_bell::truncation_probability;
use truncq::{ConditionalCdfEstimator, KernelSpec, ObservedSample, SmootherSpec, TruncatedDataModel};
use wasm_bindgen::prelude::*;

pub const P_LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub latent_n: usize,
    pub tau: f64,
    pub rho: f64,
}

impl Scenario {
    pub fn model(&self) -> TruncatedDataModel {
        TruncatedDataModel {
            rho: self.rho,
            truncation: Truncation::Uniform { tau: self.tau },
            ..Default::default()
        }
        .with_seed(self.seed)
    }

    fn simulate(&self) -> Result<GeneratedDataset, String> {
        let model = self.model();
        model.validate().map_err(|e| e.to_string())?;
        model.generate(self.latent_n).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct SampleInfo {
    pub n: usize,
    pub latent_n: usize,
    pub true_mu: f64,
    pub mu_hat: f64,
    pub h: f64,
}

fn fit(data: &GeneratedDataset, c: f64) -> Result<(ConditionalCdfEstimator, SampleInfo), String> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(format!("bandwidth constant must be positive, got {c}"));
    }
    let n = data.observed.len();
    let h = c * (n as f64).powf(-0.2);
    let est = ConditionalCdfEstimator::fit(
        data.observed.clone(),
        KernelSpec::Epanechnikov,
        SmootherSpec::IntegratedBiweight,
        h,
    )
    .map_err(|e| e.to_string())?;
    let info = SampleInfo {
        n,
        latent_n: data.latent_size,
        true_mu: data.true_mu,
        mu_hat: est.mu_hat(),
        h,
    };
    Ok((est, info))
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

fn response_range(sample: &ObservedSample) -> (f64, f64) {
    let lo = sample.ys().fold(f64::INFINITY, f64::min);
    let hi = sample.ys().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[derive(Debug, Serialize)]
pub struct QuantileCurves {
    pub info: SampleInfo,
    pub xs: Vec<f64>,
    pub p_levels: Vec<f64>,
    /// `estimate[k][i]` is `q_hat` at `p_levels[k]`, `xs[i]`; `None` where
    /// no record is within reach of the kernel.
    pub estimate: Vec<Vec<Option<f64>>>,
    pub truth: Vec<Vec<f64>>,
    /// Observed points, thinned for plotting.
    pub points: Vec<(f64, f64)>,
}

/// Estimated and true conditional quartile curves over `x` in `[-2, 2]`.
pub fn quantile_curves(s: Scenario, c: f64) -> Result<QuantileCurves, String> {
    let data = s.simulate()?;
    let (est, info) = fit(&data, c)?;
    let (lo, hi) = response_range(&data.observed);
    let reach = est.bandwidth() * est.smoother().support_radius();
    let (a, b) = (lo - reach, hi + reach);
    let xs = grid(-2.0, 2.0, 81);
    let locals: Vec<_> = xs.iter().map(|&x| est.local(x)).collect();
    let estimate = P_LEVELS
        .iter()
        .map(|&p| {
            locals
                .iter()
                .map(|l| l.quantile(p, a, b, 1e-9 * (b - a)).ok())
                .collect()
        })
        .collect();
    let model = s.model();
    let truth = P_LEVELS
        .iter()
        .map(|&p| xs.iter().map(|&x| model.true_quantile(x, p)).collect())
        .collect();
    let step = (data.observed.len() / 1500).max(1);
    let points = data
        .observed
        .records()
        .iter()
        .step_by(step)
        .map(|r| (r.x, r.y))
        .collect();
    Ok(QuantileCurves {
        info,
        xs,
        p_levels: P_LEVELS.to_vec(),
        estimate,
        truth,
        points,
    })
}

#[derive(Debug, Serialize)]
pub struct CdfCurve {
    pub info: SampleInfo,
    pub x: f64,
    pub has_local_data: bool,
    pub ys: Vec<f64>,
    pub estimate: Vec<f64>,
    pub truth: Vec<f64>,
}

/// `F_n(y | x)` against `F(y | x)` on a response grid.
pub fn conditional_cdf(s: Scenario, c: f64, x: f64) -> Result<CdfCurve, String> {
    if !x.is_finite() {
        return Err(format!("x must be finite, got {x}"));
    }
    let data = s.simulate()?;
    let (est, info) = fit(&data, c)?;
    let model = s.model();
    let ys = grid(model.response_lower() - 0.5, model.response_upper() + 0.5, 241);
    let local = est.local(x);
    Ok(CdfCurve {
        info,
        x,
        has_local_data: local.has_data(),
        estimate: ys.iter().map(|&y| local.cdf(y)).collect(),
        truth: ys.iter().map(|&y| model.true_conditional_cdf(x, y)).collect(),
        ys,
    })
}

#[derive(Debug, Serialize)]
pub struct TruncationCurves {
    pub n: usize,
    pub latent_n: usize,
    pub true_mu: f64,
    pub mu_hat: f64,
    pub ys: Vec<f64>,
    /// Lynden-Bell estimate of the latent response law.
    pub lynden_bell_f: Vec<f64>,
    /// Plain ECDF of the observed responses, biased upward by truncation.
    pub naive_f: Vec<f64>,
    pub true_f: Vec<f64>,
    pub lynden_bell_g: Vec<f64>,
    pub true_g: Vec<f64>,
}

/// Lynden-Bell `F_n` and `G_n` against the naive observed ECDF and the truth.
pub fn truncation_curves(s: Scenario) -> Result<TruncationCurves, String> {
    let data = s.simulate()?;
    let t = truncation_probability(&data.observed);
    let model = s.model();
    let ys = grid(0.0, model.response_upper() + 0.5, 241);
    let mut sorted: Vec<f64> = data.observed.ys().collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let naive_f = ys
        .iter()
        .map(|&y| sorted.partition_point(|&v| v <= y) as f64 / n)
        .collect();
    let true_f = ys
        .iter()
        .map(|&y| model.response_cdf(y).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok(TruncationCurves {
        n: data.observed.len(),
        latent_n: data.latent_size,
        true_mu: data.true_mu,
        mu_hat: t.mu_hat,
        lynden_bell_f: ys.iter().map(|&y| t.f_curve.eval(y)).collect(),
        lynden_bell_g: ys.iter().map(|&y| t.g_curve.eval(y)).collect(),
        true_g: ys.iter().map(|&y| model.truncation.cdf(y)).collect(),
        naive_f,
        true_f,
        ys,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

fn scenario(seed: u32, latent_n: u32, tau: f64, rho: f64) -> Scenario {
    Scenario {
        seed: seed as u64,
        latent_n: latent_n as usize,
        tau,
        rho,
    }
}

#[wasm_bindgen(js_name = quantileCurves)]
pub fn quantile_curves_js(seed: u32, latent_n: u32, tau: f64, rho: f64, c: f64) -> Result<String, JsValue> {
    to_json(quantile_curves(scenario(seed, latent_n, tau, rho), c))
}

#[wasm_bindgen(js_name = conditionalCdf)]
pub fn conditional_cdf_js(seed: u32, latent_n: u32, tau: f64, rho: f64, c: f64, x: f64) -> Result<String, JsValue> {
    to_json(conditional_cdf(scenario(seed, latent_n, tau, rho), c, x))
}

#[wasm_bindgen(js_name = truncationCurves)]
pub fn truncation_curves_js(seed: u32, latent_n: u32, tau: f64, rho: f64) -> Result<String, JsValue> {
    to_json(truncation_curves(scenario(seed, latent_n, tau, rho)))
}
