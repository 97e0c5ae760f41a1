//! Per-command configuration files.
//!
//! Each subcommand reads an optional TOML file into its config struct,
//! unknown keys are rejected, and command-line flags are applied on top.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use truncq::harness::ExperimentConfig;
use truncq::{BandwidthSchedule, KernelSpec, SmootherSpec, TruncatedDataModel};

use crate::error::CliError;

/// File name of the config echo written into every output directory.
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    pub out_dir: PathBuf,
    /// Dataset files are `<stem>.csv` and `<stem>.meta.toml`.
    pub stem: String,
    pub latent_n: usize,
    pub model: TruncatedDataModel,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            out_dir: PathBuf::from("out/generate"),
            stem: "data".into(),
            latent_n: 5000,
            model: TruncatedDataModel::default(),
        }
    }
}

impl GenerateConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.model.validate() {
            out.push(e.to_string());
        }
        if self.latent_n < 10 {
            out.push(format!("latent_n must be at least 10, got {}", self.latent_n));
        }
        stem_problems(&self.stem, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitQueryConfig {
    pub out_dir: PathBuf,
    /// Dataset CSV with header `x,y,t`; ignored when `estimator` is set.
    pub dataset: Option<PathBuf>,
    /// Previously saved estimator to query instead of fitting.
    pub estimator: Option<PathBuf>,
    pub kernel: KernelSpec,
    pub smoother: SmootherSpec,
    pub bandwidth: BandwidthSchedule,
    /// Query covariates; every `x` is paired with every `p`.
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Search bracket `[a, b]`; defaults to the estimator's own bracket.
    pub bracket: Option<(f64, f64)>,
    pub tolerance: Option<f64>,
    pub save_estimator: bool,
    /// Also write the `C_n`, `F_n` and `G_n` step curves.
    pub export_curves: bool,
}

impl Default for FitQueryConfig {
    fn default() -> Self {
        FitQueryConfig {
            out_dir: PathBuf::from("out/fit-query"),
            dataset: None,
            estimator: None,
            kernel: KernelSpec::default(),
            smoother: SmootherSpec::default(),
            bandwidth: BandwidthSchedule::PowerLaw { c: 0.5, a: 0.2 },
            x: vec![0.0],
            p: vec![0.5],
            bracket: None,
            tolerance: None,
            save_estimator: false,
            export_curves: false,
        }
    }
}

impl FitQueryConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match (&self.dataset, &self.estimator) {
            (None, None) => out.push("one of dataset or estimator is required".into()),
            (_, Some(path)) | (Some(path), None) => {
                if !path.is_file() {
                    out.push(format!("input file {} does not exist", path.display()));
                }
            }
        }
        if let Err(e) = self.bandwidth.validate() {
            out.push(e.to_string());
        }
        if self.x.is_empty() {
            out.push("x is empty".into());
        }
        if self.p.is_empty() {
            out.push("p is empty".into());
        }
        for &x in &self.x {
            if !x.is_finite() {
                out.push(format!("query x {x} is not finite"));
            }
        }
        for &p in &self.p {
            if !(p > 0.0 && p < 1.0) {
                out.push(format!("probability level {p} is outside (0, 1)"));
            }
        }
        if let Some((a, b)) = self.bracket {
            if !(a < b && a.is_finite() && b.is_finite()) {
                out.push(format!("bracket [{a}, {b}] is not a finite nonempty interval"));
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                out.push(format!("tolerance must be positive, got {tol}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Replaces every measured mean by `N^exponent` before fitting slopes.
    /// This is a self-check of the fitting and assertion path.
    pub inject_power_law: Option<f64>,
    pub experiment: ExperimentConfig,
}

impl RateConfig {
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out/rate"))
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = self.experiment.problems();
        if self.jobs == Some(0) {
            out.push("jobs must be positive".into());
        }
        if let Some(e) = self.inject_power_law {
            if !e.is_finite() {
                out.push(format!("inject_power_law exponent {e} is not finite"));
            }
        }
        out
    }
}

fn stem_problems(stem: &str, out: &mut Vec<String>) {
    if stem.is_empty() || stem.contains(['/', '\\']) {
        out.push(format!("stem {stem:?} must be a plain file name"));
    }
}

/// Reads `path` into `T`, or returns `T::default()` when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("config {}: {}", path.display(), e.message())))
}

/// Creates the output directory and checks that it accepts files.
pub fn prepare_out_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))?;
    let probe = dir.join(".truncq-write-check");
    std::fs::write(&probe, b"").map_err(|e| format!("output directory {} is not writable: {e}", dir.display()))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

pub fn write_resolved<T: Serialize>(dir: &Path, config: &T) -> Result<(), CliError> {
    let text = toml::to_string(config).map_err(|e| CliError::runtime(format!("cannot serialize config: {e}")))?;
    std::fs::write(dir.join(RESOLVED_CONFIG), text)
        .map_err(|e| CliError::runtime(format!("cannot write config echo: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let g = GenerateConfig::default();
        assert_eq!(
            toml::from_str::<GenerateConfig>(&toml::to_string(&g).unwrap()).unwrap(),
            g
        );
        let f = FitQueryConfig {
            bracket: Some((1.0, 2.0)),
            ..Default::default()
        };
        assert_eq!(
            toml::from_str::<FitQueryConfig>(&toml::to_string(&f).unwrap()).unwrap(),
            f
        );
        let r = RateConfig {
            jobs: Some(2),
            ..Default::default()
        };
        assert_eq!(toml::from_str::<RateConfig>(&toml::to_string(&r).unwrap()).unwrap(), r);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<GenerateConfig>("latent_n = 100\nlatentn = 3\n").is_err());
        assert!(toml::from_str::<RateConfig>("[experiment]\nreplication = 3\n").is_err());
        assert!(toml::from_str::<FitQueryConfig>("[bandwidth]\nrule = \"explicit\"\nh = 0.1\nc = 1.0\n").is_err());
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let g: GenerateConfig =
            toml::from_str("latent_n = 100\n[model.truncation]\nkind = \"uniform\"\ntau = 2.0\n").unwrap();
        assert_eq!(g.latent_n, 100);
        assert_eq!(g.stem, "data");
        assert_eq!(g.model.rho, 0.5);
    }

    #[test]
    fn problems_are_listed_together() {
        let f = FitQueryConfig {
            x: vec![],
            p: vec![1.5],
            bracket: Some((2.0, 1.0)),
            ..Default::default()
        };
        assert_eq!(f.problems().len(), 4);
    }
}
