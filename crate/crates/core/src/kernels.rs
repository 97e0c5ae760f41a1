//! Covariate kernels `K`, response smoothers `H` and bandwidth schedules.
//!
//! Every kernel here is a symmetric, bounded, second-order probability
//! density with `|u| K(u) -> 0` in the tails. The smoothers are
//! distribution functions whose densities are `C^1`, bounded and compactly
//! supported; `H` is evaluated from its closed-form antiderivative since it
//! sits in the innermost loop of the conditional distribution estimator.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Covariate kernel `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `0.75 (1 - u^2)` on `[-1, 1]`.
    #[default]
    Epanechnikov,
    /// `(15/16) (1 - u^2)^2` on `[-1, 1]`.
    Biweight,
    /// Standard normal density.
    Gaussian,
}

impl KernelSpec {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelSpec::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelSpec::Biweight => {
                if u.abs() <= 1.0 {
                    let s = 1.0 - u * u;
                    0.9375 * s * s
                } else {
                    0.0
                }
            }
            KernelSpec::Gaussian => FRAC_1_SQRT_2PI * (-0.5 * u * u).exp(),
        }
    }

    /// Radius of the support, `None` when unbounded.
    pub fn support_radius(self) -> Option<f64> {
        match self {
            KernelSpec::Epanechnikov | KernelSpec::Biweight => Some(1.0),
            KernelSpec::Gaussian => None,
        }
    }

    /// Second moment `int u^2 K(u) du`.
    pub fn second_moment(self) -> f64 {
        match self {
            KernelSpec::Epanechnikov => 0.2,
            KernelSpec::Biweight => 1.0 / 7.0,
            KernelSpec::Gaussian => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelSpec::Epanechnikov => "epanechnikov",
            KernelSpec::Biweight => "biweight",
            KernelSpec::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            "biweight" => Ok(KernelSpec::Biweight),
            "gaussian" => Ok(KernelSpec::Gaussian),
            other => Err(Error::Config(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Smoothing distribution function `H` replacing the indicator `1{Y <= y}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmootherSpec {
    /// Antiderivative of the biweight density `(15/16)(1 - t^2)^2`.
    #[default]
    IntegratedBiweight,
    /// Antiderivative of the triweight density `(35/32)(1 - t^2)^3`.
    IntegratedTriweight,
}

impl SmootherSpec {
    /// `H(u)`.
    pub fn cdf(self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let u2 = u * u;
        match self {
            SmootherSpec::IntegratedBiweight => 0.5 + 0.9375 * u * (1.0 - u2 * (2.0 / 3.0 - u2 / 5.0)),
            SmootherSpec::IntegratedTriweight => 0.5 + 1.09375 * u * (1.0 - u2 * (1.0 - u2 * (0.6 - u2 / 7.0))),
        }
    }

    /// `H^(1)(u)`.
    pub fn density(self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - u * u;
        match self {
            SmootherSpec::IntegratedBiweight => 0.9375 * s * s,
            SmootherSpec::IntegratedTriweight => 1.09375 * s * s * s,
        }
    }

    pub fn support_radius(self) -> f64 {
        1.0
    }

    pub fn name(self) -> &'static str {
        match self {
            SmootherSpec::IntegratedBiweight => "integrated-biweight",
            SmootherSpec::IntegratedTriweight => "integrated-triweight",
        }
    }
}

impl std::str::FromStr for SmootherSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integrated-biweight" => Ok(SmootherSpec::IntegratedBiweight),
            "integrated-triweight" => Ok(SmootherSpec::IntegratedTriweight),
            other => Err(Error::Config(format!("unknown smoother `{other}`"))),
        }
    }
}

/// How the bandwidth `h` is chosen from the observed sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BandwidthSchedule {
    /// A fixed `h`, independent of `n`.
    Explicit { h: f64 },
    /// `h(n) = c n^(-a)`.
    PowerLaw { c: f64, a: f64 },
    /// `1.06 * dispersion * n^(-1/5)`.
    RuleOfThumb,
}

impl Default for BandwidthSchedule {
    fn default() -> Self {
        BandwidthSchedule::PowerLaw { c: 1.0, a: 0.2 }
    }
}

impl BandwidthSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthSchedule::Explicit { h } if !(h > 0.0 && h.is_finite()) => {
                Err(Error::Config(format!("explicit bandwidth must be positive, got {h}")))
            }
            BandwidthSchedule::PowerLaw { c, a } => {
                if !(c > 0.0 && c.is_finite()) {
                    Err(Error::Config(format!("bandwidth constant must be positive, got {c}")))
                } else if !(a > 0.0 && a < 1.0) {
                    Err(Error::Config(format!("bandwidth exponent must lie in (0, 1), got {a}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Bandwidth for a sample of size `n`. `dispersion` is only consulted by
    /// [`BandwidthSchedule::RuleOfThumb`].
    pub fn bandwidth(&self, n: usize, dispersion: Option<f64>) -> Result<f64> {
        if n < 2 {
            return Err(Error::Config(format!("bandwidth needs n >= 2, got {n}")));
        }
        self.validate()?;
        let n = n as f64;
        match *self {
            BandwidthSchedule::Explicit { h } => Ok(h),
            BandwidthSchedule::PowerLaw { c, a } => Ok(c * n.powf(-a)),
            BandwidthSchedule::RuleOfThumb => match dispersion {
                Some(s) if s > 0.0 && s.is_finite() => Ok(1.06 * s * n.powf(-0.2)),
                Some(s) => Err(Error::Config(format!("dispersion must be positive, got {s}"))),
                None => Err(Error::Config(
                    "rule-of-thumb bandwidth requires a sample dispersion".into(),
                )),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Simpson, independent of the closed forms above.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n.is_multiple_of(2) { n } else { n + 1 };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn kernel_point_values() {
        assert_eq!(KernelSpec::Epanechnikov.eval(0.0), 0.75);
        assert_eq!(KernelSpec::Epanechnikov.eval(1.5), 0.0);
        assert_eq!(KernelSpec::Biweight.eval(-1.2), 0.0);
        let oracle = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((KernelSpec::Gaussian.eval(0.0) - oracle).abs() < 1e-15);
        assert!((KernelSpec::Gaussian.eval(0.0) - 0.39894228).abs() < 1e-8);
    }

    #[test]
    fn smoother_point_values() {
        let h = SmootherSpec::IntegratedBiweight;
        assert!((h.cdf(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(h.cdf(1.0), 1.0);
        assert_eq!(h.cdf(-3.0), 0.0);
        let oracle = simpson(|t| 15.0 / 16.0 * (1.0 - t * t).powi(2), -1.0, 0.5, 2000);
        assert!((h.cdf(0.5) - oracle).abs() < 1e-12, "{} vs {}", h.cdf(0.5), oracle);
    }

    #[test]
    fn smoother_closed_form_is_continuous_at_edges() {
        for h in [SmootherSpec::IntegratedBiweight, SmootherSpec::IntegratedTriweight] {
            assert!((h.cdf(1.0 - 1e-9) - 1.0).abs() < 1e-9);
            assert!(h.cdf(-1.0 + 1e-9).abs() < 1e-9);
        }
    }

    #[test]
    fn second_moments_match_quadrature() {
        for k in [KernelSpec::Epanechnikov, KernelSpec::Biweight] {
            let m2 = simpson(|u| u * u * k.eval(u), -1.0, 1.0, 2000);
            assert!((m2 - k.second_moment()).abs() < 1e-10);
        }
        let m2 = simpson(|u| u * u * KernelSpec::Gaussian.eval(u), -12.0, 12.0, 20000);
        assert!((m2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn names_round_trip() {
        for k in [KernelSpec::Epanechnikov, KernelSpec::Biweight, KernelSpec::Gaussian] {
            assert_eq!(k.name().parse::<KernelSpec>().unwrap(), k);
        }
        for h in [SmootherSpec::IntegratedBiweight, SmootherSpec::IntegratedTriweight] {
            assert_eq!(h.name().parse::<SmootherSpec>().unwrap(), h);
        }
        assert!("cosine".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn bandwidth_examples() {
        let pl = BandwidthSchedule::PowerLaw { c: 1.0, a: 0.2 };
        assert!((pl.bandwidth(32, None).unwrap() - 0.5).abs() < 1e-15);
        let pl2 = BandwidthSchedule::PowerLaw { c: 2.0, a: 0.2 };
        assert!((pl2.bandwidth(32, None).unwrap() - 1.0).abs() < 1e-15);
        let rot = BandwidthSchedule::RuleOfThumb.bandwidth(1000, Some(1.0)).unwrap();
        assert!((rot - 1.06 * 1000f64.powf(-0.2)).abs() < 1e-15);
        assert!((rot - 0.2662).abs() < 1e-4);
        assert!(matches!(
            BandwidthSchedule::RuleOfThumb.bandwidth(1000, None),
            Err(Error::Config(_))
        ));
        assert!(pl.bandwidth(1, None).is_err());
        assert!(BandwidthSchedule::PowerLaw { c: 1.0, a: 1.5 }.validate().is_err());
        assert!(BandwidthSchedule::Explicit { h: 0.0 }.validate().is_err());
    }

    #[test]
    fn bandwidth_monotone_in_n_and_c() {
        let mut prev = f64::INFINITY;
        for n in 2..2000 {
            let h = BandwidthSchedule::PowerLaw { c: 1.0, a: 0.2 }
                .bandwidth(n, None)
                .unwrap();
            assert!(h < prev);
            // (H1) at the sizes we can test
            let nf = n as f64;
            assert!(nf.ln() / (nf * h) < nf.ln() / nf.powf(0.8) + 1e-12);
            prev = h;
        }
        let small = BandwidthSchedule::PowerLaw { c: 0.5, a: 0.25 }
            .bandwidth(100, None)
            .unwrap();
        let big = BandwidthSchedule::PowerLaw { c: 0.6, a: 0.25 }
            .bandwidth(100, None)
            .unwrap();
        assert!(small < big);
    }

    #[test]
    fn bandwidth_schedule_toml_forms() {
        let s: BandwidthSchedule = toml::from_str("rule = \"power-law\"\nc = 0.5\na = 0.2").unwrap();
        assert_eq!(s, BandwidthSchedule::PowerLaw { c: 0.5, a: 0.2 });
        let s: BandwidthSchedule = toml::from_str("rule = \"explicit\"\nh = 0.3").unwrap();
        assert_eq!(s, BandwidthSchedule::Explicit { h: 0.3 });
        assert!(toml::from_str::<BandwidthSchedule>("rule = \"explicit\"\nh = 0.3\nq = 1").is_err());
    }
}
