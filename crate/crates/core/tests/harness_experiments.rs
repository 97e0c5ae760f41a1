mod common;

use truncq::datagen::Truncation;
use truncq::harness::{
    quantile_metric, run_experiment, run_replication, ExperimentConfig, Outcome, CDF_METRIC, MU_METRIC,
};
use truncq::{KernelSpec, SmootherSpec, TruncatedDataModel};

use common::nadaraya_watson_cdf;

#[test]
fn replications_are_deterministic() {
    let cfg = ExperimentConfig {
        replications: 3,
        ..Default::default()
    };
    let a = run_replication(&cfg, 1000, 2);
    let b = run_replication(&cfg, 1000, 2);
    assert_eq!(a, b);
    assert_ne!(a.seed, run_replication(&cfg, 1000, 3).seed);
}

#[test]
fn default_record_is_finite_and_positive() {
    let cfg = ExperimentConfig::default();
    let r = run_replication(&cfg, 2000, 0);
    let values = r.metrics().expect("replication measured");
    assert_eq!(values.len(), cfg.metric_names().len());
    assert!(values.iter().all(|v| v.is_finite() && *v > 0.0), "{values:?}");
    assert!(r.observed_n > 1000 && r.observed_n < 2000);
}

#[test]
fn untruncated_iid_errors_match_plain_nadaraya_watson() {
    let cfg = ExperimentConfig {
        model: TruncatedDataModel {
            rho: 0.0,
            truncation: Truncation::Uniform { tau: 1.0 },
            ..Default::default()
        },
        ..Default::default()
    };
    let latent_n = 1500;
    let rec = run_replication(&cfg, latent_n, 4);
    let values = rec.metrics().unwrap().to_vec();

    // independent pipeline on the same draws
    let model = cfg.model.with_seed(rec.seed);
    let data = model.generate(latent_n).unwrap();
    assert_eq!(data.observed.len(), latent_n);
    let h = 0.5 * (latent_n as f64).powf(-0.2);
    assert!((rec.bandwidth - h).abs() < 1e-15);
    let (k, sm) = (KernelSpec::Epanechnikov, SmootherSpec::IntegratedBiweight);
    let nw = |x: f64, y: f64| nadaraya_watson_cdf(&data.observed, k, sm, h, x, y);
    let xs = cfg.x_grid.values();
    let ys = cfg.y_grid.values();
    let mut sup_cdf: f64 = 0.0;
    for &x in &xs {
        for &y in &ys {
            sup_cdf = sup_cdf.max((nw(x, y) - model.true_conditional_cdf(x, y)).abs());
        }
    }
    let (a, b) = (
        data.observed.response_quantile(0.05),
        data.observed.response_quantile(0.95),
    );
    let mut sup_q: f64 = 0.0;
    for &x in &xs {
        let (mut lo, mut hi) = (a, b);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if nw(x, mid) >= 0.5 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        sup_q = sup_q.max((hi - model.true_quantile(x, 0.5)).abs());
    }
    assert_eq!(values[0], 0.0, "mu error");
    assert!((values[1] - sup_cdf).abs() < 1e-12, "{} vs {sup_cdf}", values[1]);
    assert!((values[2] - sup_q).abs() < 1e-7, "{} vs {sup_q}", values[2]);
}

#[test]
fn full_runs_decrease_along_the_ladder_without_skips() {
    let runs = 10;
    let mut decreasing = 0;
    for seed in 0..runs {
        let cfg = ExperimentConfig {
            base_seed: 1000 + seed,
            ..Default::default()
        };
        let report = run_experiment(&cfg, None).unwrap();
        assert_eq!(report.skipped(), 0, "seed {seed}");
        let means: Vec<f64> = report
            .means(&quantile_metric(0.5))
            .into_iter()
            .map(Option::unwrap)
            .collect();
        if means.windows(2).all(|w| w[1] < w[0]) {
            decreasing += 1;
        }
        let mu = report.slope(MU_METRIC).unwrap().fit.as_ref().unwrap().slope;
        assert!((mu + 0.5).abs() <= 0.15, "mu slope {mu}");
    }
    assert!(decreasing * 10 >= runs * 9, "{decreasing} of {runs} runs decreasing");
}

#[test]
fn doubling_replications_is_stable() {
    let small = ExperimentConfig {
        sample_sizes: vec![500, 1000, 2000, 4000],
        replications: 100,
        ..Default::default()
    };
    let big = ExperimentConfig {
        replications: 200,
        ..small.clone()
    };
    let a = run_experiment(&small, None).unwrap();
    let b = run_experiment(&big, None).unwrap();
    for (m, name) in a.metric_names.iter().enumerate() {
        for (sa, sb) in a.sizes.iter().zip(&b.sizes) {
            let (ma, mb) = (sa.metrics[m].as_ref().unwrap(), sb.metrics[m].as_ref().unwrap());
            assert!(
                (ma.mean - mb.mean).abs() < 2.0 * ma.stderr,
                "{name} at N = {}: {} vs {} (se {})",
                sa.latent_n,
                ma.mean,
                mb.mean,
                ma.stderr
            );
        }
    }
}

#[test]
fn slope_fit_refuses_short_ladders() {
    let cfg = ExperimentConfig {
        sample_sizes: vec![200, 400],
        replications: 1,
        ..Default::default()
    };
    let report = run_experiment(&cfg, Some(1)).unwrap();
    let slope = report.slope(CDF_METRIC).unwrap();
    assert!(slope.fit.as_ref().unwrap_err().contains("at least 4"));
    assert!(!report.window_violations().is_empty());
}

#[test]
fn injected_power_law_passes_the_windows() {
    let cfg = ExperimentConfig {
        sample_sizes: vec![100, 200, 400, 800],
        replications: 2,
        ..Default::default()
    };
    let mut report = run_experiment(&cfg, None).unwrap();
    report.inject_power_law(-0.45, cfg.target_slope());
    assert!(
        report.window_violations().is_empty(),
        "{:?}",
        report.window_violations()
    );
    let s = report.slope(CDF_METRIC).unwrap().fit.as_ref().unwrap().slope;
    assert!((s + 0.45).abs() < 1e-10);
}

#[test]
fn csv_schemas() {
    let cfg = ExperimentConfig {
        sample_sizes: vec![100, 200, 400, 800],
        replications: 2,
        ..Default::default()
    };
    let report = run_experiment(&cfg, None).unwrap();
    let mut tidy = Vec::new();
    report.write_tidy_csv(&mut tidy).unwrap();
    let tidy = String::from_utf8(tidy).unwrap();
    let mut lines = tidy.lines();
    assert_eq!(
        lines.next().unwrap(),
        "latent_n,rep,seed,observed_n,bandwidth,status,metric,value"
    );
    let measured = report
        .records
        .iter()
        .filter(|r| matches!(r.outcome, Outcome::Measured(_)))
        .count();
    let skipped = report.records.len() - measured;
    assert_eq!(lines.count(), measured * cfg.metric_names().len() + skipped);

    let mut summary = Vec::new();
    report.write_summary_csv(&mut summary).unwrap();
    let summary = String::from_utf8(summary).unwrap();
    assert!(summary.starts_with(
        "metric,latent_n,mean_observed_n,bandwidth,mean,median,stderr,theoretical_rate,ok_replications,skipped_replications,slope,slope_stderr,target_slope\n"
    ));
    assert_eq!(
        summary.lines().count(),
        1 + cfg.metric_names().len() * cfg.sample_sizes.len()
    );
}
