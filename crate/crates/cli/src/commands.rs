use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use truncq::cond_quantile::QuantileQuery;
use truncq::datagen::load_dataset;
use truncq::harness::run_experiment;
use truncq::lynden_bell::truncation_probability;
use truncq::{BandwidthSchedule, ConditionalCdfEstimator, Error, StepCurve};

use crate::config::{prepare_out_dir, write_resolved, FitQueryConfig, GenerateConfig, RateConfig};
use crate::error::{check, CliError};

pub const QUANTILES_CSV: &str = "quantiles.csv";
pub const ESTIMATOR_JSON: &str = "estimator.json";
pub const TIDY_CSV: &str = "replications.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", path.display())))
}

/// Reports every config problem before any work starts. The output
/// directory is only created once the rest of the config is valid.
fn preflight(problems: Vec<String>, out_dir: &Path) -> Result<(), CliError> {
    check(problems)?;
    prepare_out_dir(out_dir).map_err(CliError::config)
}

pub fn generate(cfg: &GenerateConfig) -> Result<(), CliError> {
    preflight(cfg.problems(), &cfg.out_dir)?;
    write_resolved(&cfg.out_dir, cfg)?;
    let data = cfg.model.generate(cfg.latent_n)?;
    let (csv_path, _) = data.save(&cfg.out_dir, &cfg.stem)?;
    for v in cfg.model.assumption_violations() {
        eprintln!("warning: {v}");
    }
    println!("wrote {}", csv_path.display());
    println!(
        "n = {}, N = {}, n/N = {:.6}, true_mu = {:.6}",
        data.observed.len(),
        data.latent_size,
        data.observation_ratio(),
        data.true_mu
    );
    Ok(())
}

#[derive(Serialize)]
struct QuantileRow {
    x: f64,
    p: f64,
    q_hat: Option<f64>,
    cdf_at_qhat: Option<f64>,
    status: &'static str,
}

fn status_of(err: &Error) -> &'static str {
    match err {
        Error::NoLocalData { .. } => "no-local-data",
        Error::NotBracketed { .. } => "not-bracketed",
        _ => "error",
    }
}

fn fit_estimator(cfg: &FitQueryConfig) -> Result<ConditionalCdfEstimator, CliError> {
    if let Some(path) = &cfg.estimator {
        return ConditionalCdfEstimator::load(path)
            .map_err(|e| CliError::runtime(format!("cannot load estimator {}: {e}", path.display())));
    }
    let path = cfg.dataset.as_ref().expect("checked by preflight");
    let (sample, _) =
        load_dataset(path).map_err(|e| CliError::runtime(format!("cannot load dataset {}: {e}", path.display())))?;
    // an explicit bandwidth does not depend on n, so it also serves n = 1
    let h = match cfg.bandwidth {
        BandwidthSchedule::Explicit { h } => h,
        schedule => schedule.bandwidth(sample.len(), Some(sample.covariate_sd()))?,
    };
    Ok(ConditionalCdfEstimator::fit(sample, cfg.kernel, cfg.smoother, h)?)
}

fn write_curve(path: &Path, curve: &StepCurve) -> Result<(), CliError> {
    Ok(curve.write_csv(create(path)?)?)
}

pub fn fit_query(cfg: &FitQueryConfig) -> Result<(), CliError> {
    preflight(cfg.problems(), &cfg.out_dir)?;
    write_resolved(&cfg.out_dir, cfg)?;
    let est = fit_estimator(cfg)?;
    let (a, b) = cfg.bracket.unwrap_or_else(|| est.default_bracket());

    let mut rows = Vec::with_capacity(cfg.x.len() * cfg.p.len());
    for &x in &cfg.x {
        let local = est.local(x);
        for &p in &cfg.p {
            let mut q = QuantileQuery::new(x, p, a, b);
            if let Some(tol) = cfg.tolerance {
                q = q.with_tolerance(tol);
            }
            let row = match local.quantile(p, a, b, q.tolerance()) {
                Ok(v) => QuantileRow {
                    x,
                    p,
                    q_hat: Some(v),
                    cdf_at_qhat: Some(local.cdf(v)),
                    status: "ok",
                },
                Err(e) => QuantileRow {
                    x,
                    p,
                    q_hat: None,
                    cdf_at_qhat: None,
                    status: status_of(&e),
                },
            };
            rows.push(row);
        }
    }
    let path = cfg.out_dir.join(QUANTILES_CSV);
    let mut w = csv::Writer::from_writer(create(&path)?);
    for row in &rows {
        w.serialize(row).map_err(|e| CliError::runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::runtime(e.to_string()))?;

    if cfg.save_estimator {
        est.save(cfg.out_dir.join(ESTIMATOR_JSON))?;
    }
    if cfg.export_curves {
        let t = truncation_probability(est.sample());
        write_curve(&cfg.out_dir.join("curve_c.csv"), &t.c_curve)?;
        write_curve(&cfg.out_dir.join("curve_f.csv"), &t.f_curve)?;
        write_curve(&cfg.out_dir.join("curve_g.csv"), &t.g_curve)?;
    }
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!(
        "n = {}, h = {:.6}, mu_hat = {:.6}, bracket = [{a:.6}, {b:.6}]",
        est.sample().len(),
        est.bandwidth(),
        est.mu_hat()
    );
    println!("{ok} of {} queries ok; wrote {}", rows.len(), path.display());
    Ok(())
}

pub fn rate(cfg: &RateConfig, assert: bool) -> Result<(), CliError> {
    let out_dir = cfg.out_dir();
    preflight(cfg.problems(), &out_dir)?;
    write_resolved(&out_dir, cfg)?;
    let exp = &cfg.experiment;
    let mut report = run_experiment(exp, cfg.jobs)?;
    if let Some(exponent) = cfg.inject_power_law {
        eprintln!("note: slopes are fitted to injected means N^{exponent}");
        report.inject_power_law(exponent, exp.target_slope());
    }
    report.write_tidy_csv(create(&out_dir.join(TIDY_CSV))?)?;
    report.write_summary_csv(create(&out_dir.join(SUMMARY_CSV))?)?;

    println!(
        "{} replications, {} skipped; wrote {}",
        report.records.len(),
        report.skipped(),
        out_dir.display()
    );
    for s in &report.slopes {
        match &s.fit {
            Ok(f) => println!(
                "{}: slope {:.4} (se {:.4}), target {:.4}, window [{}, {}]",
                s.metric, f.slope, f.stderr, s.target, s.window.0, s.window.1
            ),
            Err(e) => println!("{}: slope fit refused: {e}", s.metric),
        }
    }
    let violations = report.window_violations();
    if assert && !violations.is_empty() {
        return Err(CliError::Assertion(violations));
    }
    Ok(())
}
