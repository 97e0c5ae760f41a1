use proptest::prelude::*;
use truncq::{KernelSpec, SmootherSpec};

fn kernels() -> [KernelSpec; 3] {
    [KernelSpec::Epanechnikov, KernelSpec::Biweight, KernelSpec::Gaussian]
}

fn smoothers() -> [SmootherSpec; 2] {
    [SmootherSpec::IntegratedBiweight, SmootherSpec::IntegratedTriweight]
}

/// Largest finite-difference slope on a dense grid over `[-3, 3]`.
fn empirical_lipschitz(f: impl Fn(f64) -> f64) -> f64 {
    let step = 1e-4;
    (0..60_000)
        .map(|i| -3.0 + i as f64 * step)
        .map(|u| ((f(u + step) - f(u)) / step).abs())
        .fold(0.0, f64::max)
}

#[test]
fn lipschitz_constants_are_bounded() {
    // sup |K'|: Epanechnikov 1.5, biweight 15 sqrt(3) / 18 ~ 1.443, Gaussian phi(1) ~ 0.242
    let bounds = [1.5, 1.45, 0.25];
    for (k, bound) in kernels().into_iter().zip(bounds) {
        let l = empirical_lipschitz(|u| k.eval(u));
        assert!(l <= bound + 1e-3, "{}: {l}", k.name());
    }
    // sup |H'| is the density peak: 15/16 and 35/32
    for (h, bound) in smoothers().into_iter().zip([0.9375, 1.09375]) {
        let l = empirical_lipschitz(|u| h.cdf(u));
        assert!(l <= bound + 1e-6, "{}: {l}", h.name());
    }
}

#[test]
fn tails_vanish() {
    for k in kernels() {
        for u in [5.0, 10.0, 40.0] {
            assert!(u * k.eval(u) < 1e-4, "{} at {u}", k.name());
        }
    }
}

proptest! {
    #[test]
    fn smoother_is_a_distribution_function(u in -3.0f64..3.0, v in -3.0f64..3.0) {
        for h in smoothers() {
            let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
            prop_assert!(h.cdf(lo) <= h.cdf(hi));
            prop_assert!((0.0..=1.0).contains(&h.cdf(u)));
            prop_assert!(h.density(u) >= 0.0);
            prop_assert!((h.cdf(u) + h.cdf(-u) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kernels_are_symmetric_and_nonnegative(u in -5.0f64..5.0) {
        for k in kernels() {
            prop_assert!(k.eval(u) >= 0.0);
            prop_assert_eq!(k.eval(u), k.eval(-u));
        }
    }
}
