use truncq_wasm::{conditional_cdf, quantile_curves, truncation_curves, Scenario, P_LEVELS};

fn scenario() -> Scenario {
    Scenario {
        seed: 7,
        latent_n: 4000,
        tau: 4.0,
        rho: 0.5,
    }
}

#[test]
fn quantile_curves_track_the_truth_in_the_interior() {
    let c = quantile_curves(scenario(), 0.5).unwrap();
    assert_eq!(c.estimate.len(), P_LEVELS.len());
    assert!(c.info.n > 2000 && c.info.n < 4000);
    for (est, truth) in c.estimate.iter().zip(&c.truth) {
        for ((&x, q), t) in c.xs.iter().zip(est).zip(truth) {
            if x.abs() <= 1.0 {
                let q = q.expect("interior x has local data");
                assert!((q - t).abs() < 0.3, "x = {x}: {q} vs {t}");
            }
        }
    }
    // quartile curves do not cross
    for i in 0..c.xs.len() {
        if let (Some(a), Some(b), Some(m)) = (c.estimate[0][i], c.estimate[2][i], c.estimate[1][i]) {
            assert!(a <= m && m <= b);
        }
    }
}

#[test]
fn conditional_cdf_is_a_distribution_close_to_the_truth() {
    let c = conditional_cdf(scenario(), 0.5, 0.3).unwrap();
    assert!(c.has_local_data);
    assert!(c.estimate.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*c.estimate.first().unwrap(), 0.0);
    assert_eq!(*c.estimate.last().unwrap(), 1.0);
    let sup = c
        .estimate
        .iter()
        .zip(&c.truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(sup < 0.15, "sup error {sup}");
    let far = conditional_cdf(scenario(), 0.5, 40.0).unwrap();
    assert!(!far.has_local_data && far.estimate.iter().all(|&v| v == 0.0));
}

#[test]
fn lynden_bell_corrects_the_naive_ecdf() {
    let c = truncation_curves(scenario()).unwrap();
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let lb = sup(&c.lynden_bell_f, &c.true_f);
    let naive = sup(&c.naive_f, &c.true_f);
    assert!(lb < 0.05 && naive > 2.0 * lb, "lynden-bell {lb}, naive {naive}");
    assert!((c.mu_hat - c.true_mu).abs() < 0.05);
}

#[test]
fn invalid_inputs_are_errors_not_panics() {
    let bad = Scenario { rho: 1.5, ..scenario() };
    assert!(quantile_curves(bad, 0.5).is_err());
    assert!(quantile_curves(scenario(), -1.0).is_err());
    assert!(conditional_cdf(scenario(), 0.5, f64::NAN).is_err());
    let tiny = Scenario {
        latent_n: 3,
        ..scenario()
    };
    assert!(truncation_curves(tiny).is_err());
}
