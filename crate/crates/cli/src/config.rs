use std::path::{Path, PathBuf};

use fedpdmc::federated::PriorMode;
use fedpdmc::models::check_prior;
use fedpdmc::samplers::DEFAULT_BPS_REFRESH;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Gaussian,
    Logistic,
    Ar1,
    Cox,
    PrivacyCalc,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Gaussian => "gaussian",
            ExperimentKind::Logistic => "logistic",
            ExperimentKind::Ar1 => "ar1",
            ExperimentKind::Cox => "cox",
            ExperimentKind::PrivacyCalc => "privacy_calc",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Zigzag,
    Bps,
}

/// Prior placement as written in the config; the redistribution rate is the
/// separate `lambda_redist` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorPlacement {
    ServerHeld,
    ProportionalSplit,
    ExtraWorker,
    DynamicRedistribution,
}

/// One experiment, stored as a single JSON document.
///
/// Optional keys are filled with the benchmark defaults by
/// [`ExperimentConfig::with_defaults`], so a config written back out lists
/// every value that was used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(rename = "M", default = "one")]
    pub workers: usize,
    /// Total number of observations (trajectories for AR(1), ignored by Cox).
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Discretization step of `samples.csv`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Discretized samples before this time are dropped.
    #[serde(default)]
    pub burn_in: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_mode: Option<PriorPlacement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_redist: Option<f64>,
    /// Refreshment rate added by every data-holding worker. Defaults to 0
    /// for Zig-Zag and to the standard BPS refreshment otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Gaussian noise scale, or the Cox interaction strength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Gaussian true mean, the same in every coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// AR(1) steps per trajectory.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_side: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<f64>,
    /// Data manifest; synthetic data is generated from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Size of the reference sample used for W₁.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_samples: Option<usize>,
    #[serde(default = "yes")]
    pub write_skeleton: bool,
    #[serde(default)]
    pub write_log: bool,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_horizon() -> f64 {
    100.0
}

fn default_delta() -> f64 {
    1e-2
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

pub const DEFAULT_REFERENCE_SAMPLES: usize = 20_000;

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment })).expect("all other keys have defaults")
    }

    /// Fills unset model parameters with the benchmark defaults.
    pub fn with_defaults(mut self) -> Self {
        fn fill<T>(slot: &mut Option<T>, v: T) {
            if slot.is_none() {
                *slot = Some(v);
            }
        }
        if self.experiment != ExperimentKind::PrivacyCalc {
            let rho = match self.sampler {
                SamplerKind::Zigzag => 0.0,
                SamplerKind::Bps => DEFAULT_BPS_REFRESH,
            };
            fill(&mut self.rho, rho);
        }
        match self.experiment {
            ExperimentKind::Gaussian => {
                fill(&mut self.observations, 50);
                fill(&mut self.d, 10);
                fill(&mut self.alpha, 1.0);
                fill(&mut self.mu0, 0.5);
            }
            ExperimentKind::Logistic => {
                fill(&mut self.observations, 1000);
                fill(&mut self.d, 6);
                fill(&mut self.prior_mode, PriorPlacement::ProportionalSplit);
            }
            ExperimentKind::Ar1 => {
                fill(&mut self.observations, 100);
                fill(&mut self.d, 2);
                fill(&mut self.steps, 20);
                fill(&mut self.nu, 4.0);
            }
            ExperimentKind::Cox => {
                fill(&mut self.grid_side, 4);
                fill(&mut self.alpha, 0.1);
                fill(&mut self.beta, 1.0);
                fill(&mut self.prior_mode, PriorPlacement::ServerHeld);
                let side = self.grid_side.unwrap_or(0);
                fill(&mut self.d, side * side);
                fill(&mut self.observations, side * side);
            }
            ExperimentKind::PrivacyCalc => {}
        }
        if self.experiment != ExperimentKind::PrivacyCalc {
            fill(&mut self.reference_samples, DEFAULT_REFERENCE_SAMPLES);
        }
        self
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(0.0)
    }

    pub fn dim(&self) -> usize {
        self.d.unwrap_or(0)
    }

    pub fn total_observations(&self) -> usize {
        self.observations.unwrap_or(0)
    }

    /// The engine's prior mode; `ServerHeld` for models without a prior.
    pub fn prior_mode(&self) -> PriorMode<f64> {
        match self.prior_mode {
            None | Some(PriorPlacement::ServerHeld) => PriorMode::ServerHeld,
            Some(PriorPlacement::ProportionalSplit) => PriorMode::ProportionalSplit,
            Some(PriorPlacement::ExtraWorker) => PriorMode::ExtraWorker,
            Some(PriorPlacement::DynamicRedistribution) => {
                PriorMode::DynamicRedistribution { lambda_redist: self.lambda_redist.unwrap_or(f64::NAN) }
            }
        }
    }

    /// Every constraint violation, one message per field.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut positive_count = |name: &str, v: Option<usize>| {
            if v == Some(0) {
                errs.push(format!("{name} must be ≥ 1"));
            }
        };
        positive_count("M", Some(self.workers));
        positive_count("runs", Some(self.runs));
        positive_count("N", self.observations);
        positive_count("d", self.d);
        positive_count("K", self.steps);
        positive_count("grid_side", self.grid_side);
        positive_count("reference_samples", self.reference_samples);

        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.experiment == ExperimentKind::PrivacyCalc {
            match self.epsilon {
                Some(e) if positive(e) => {}
                _ => errs.push("epsilon must be set and positive".into()),
            }
            match self.privacy_delta {
                Some(d) if d > 0.0 && d < 1.0 => {}
                _ => errs.push("privacy_delta must be set and lie in (0, 1)".into()),
            }
            match self.sensitivity {
                Some(k) if k >= 0.0 && k.is_finite() => {}
                _ => errs.push("sensitivity must be set and nonnegative".into()),
            }
            return errs;
        }

        if !positive(self.horizon) {
            errs.push("horizon must be positive".into());
        }
        if !positive(self.delta) {
            errs.push("delta must be positive".into());
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            errs.push("burn_in must lie in [0, horizon)".into());
        }
        if !(self.rho() >= 0.0 && self.rho().is_finite()) {
            errs.push("rho must be nonnegative".into());
        }
        if self.sampler == SamplerKind::Bps && !(self.rho() > 0.0) {
            errs.push("rho must be positive for the bps sampler".into());
        }
        match (self.prior_mode, self.lambda_redist) {
            (Some(PriorPlacement::DynamicRedistribution), Some(l)) if positive(l) => {}
            (Some(PriorPlacement::DynamicRedistribution), Some(_)) => errs.push("lambda_redist must be positive".into()),
            (Some(PriorPlacement::DynamicRedistribution), None) => {
                errs.push("lambda_redist must be set for prior_mode dynamic_redistribution".into())
            }
            (_, Some(_)) => errs.push("lambda_redist needs prior_mode dynamic_redistribution".into()),
            _ => {}
        }

        let n = self.total_observations();
        match self.experiment {
            ExperimentKind::Gaussian | ExperimentKind::Ar1 => {
                if self.prior_mode.is_some() {
                    errs.push(format!("prior_mode: the {} model has a flat prior", self.experiment.name()));
                }
            }
            _ => {}
        }
        match self.experiment {
            ExperimentKind::Gaussian => {
                if !self.alpha.is_some_and(positive) {
                    errs.push("alpha must be positive".into());
                }
                if !self.mu0.is_some_and(f64::is_finite) {
                    errs.push("mu0 must be finite".into());
                }
            }
            ExperimentKind::Logistic => {}
            ExperimentKind::Ar1 => {
                if self.d != Some(2) {
                    errs.push("d must be 2 for the ar1 model (parameters x and c)".into());
                }
                if !self.nu.is_some_and(positive) {
                    errs.push("nu must be positive".into());
                }
            }
            ExperimentKind::Cox => {
                let side = self.grid_side.unwrap_or(0);
                if self.d != Some(side * side) {
                    errs.push(format!("d must equal grid_side² = {}", side * side));
                }
                if self.observations != Some(side * side) {
                    errs.push(format!("N must equal the number of grid cells {}", side * side));
                }
                match (self.alpha, self.beta) {
                    (Some(a), Some(b)) if side > 0 => {
                        if let Err(e) = check_prior(side, a, b) {
                            errs.push(format!("alpha/beta: {e}"));
                        }
                    }
                    _ => errs.push("alpha and beta must be set".into()),
                }
            }
            ExperimentKind::PrivacyCalc => unreachable!(),
        }
        if self.data.is_none() && n > 0 && self.workers > n {
            errs.push(format!("M = {} exceeds the {n} observations to split", self.workers));
        }
        errs
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(errs))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

/// Parses a config document and fills defaults, without validating.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(cfg.with_defaults())
}

/// Reads, fills defaults and validates a config file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text, &path.display().to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_per_model() {
        let g = ExperimentConfig::new(ExperimentKind::Gaussian).with_defaults();
        assert_eq!((g.observations, g.d, g.alpha, g.mu0), (Some(50), Some(10), Some(1.0), Some(0.5)));
        assert_eq!(g.delta, 1e-2);
        let l = ExperimentConfig::new(ExperimentKind::Logistic).with_defaults();
        assert_eq!((l.observations, l.d), (Some(1000), Some(6)));
        assert_eq!(l.prior_mode, Some(PriorPlacement::ProportionalSplit));
        let a = ExperimentConfig::new(ExperimentKind::Ar1).with_defaults();
        assert_eq!((a.observations, a.steps, a.nu), (Some(100), Some(20), Some(4.0)));
        let c = ExperimentConfig::new(ExperimentKind::Cox).with_defaults();
        assert_eq!((c.grid_side, c.alpha, c.beta, c.d), (Some(4), Some(0.1), Some(1.0), Some(16)));
        for cfg in [g, l, a, c] {
            assert!(cfg.violations().is_empty(), "{:?}", cfg.violations());
        }
    }

    #[test]
    fn all_violations_are_listed() {
        let mut c = ExperimentConfig::new(ExperimentKind::Gaussian).with_defaults();
        c.workers = 0;
        c.horizon = -1.0;
        c.runs = 0;
        let errs = c.violations();
        assert!(errs.contains(&"M must be ≥ 1".to_string()), "{errs:?}");
        assert!(errs.contains(&"runs must be ≥ 1".to_string()));
        assert!(errs.iter().any(|e| e.starts_with("horizon")));
    }

    #[test]
    fn redistribution_needs_rate() {
        let mut c = ExperimentConfig::new(ExperimentKind::Logistic).with_defaults();
        c.prior_mode = Some(PriorPlacement::DynamicRedistribution);
        assert!(c.violations().iter().any(|e| e.contains("lambda_redist")));
        c.lambda_redist = Some(0.1);
        assert!(c.violations().is_empty());
        assert_eq!(c.prior_mode(), PriorMode::DynamicRedistribution { lambda_redist: 0.1 });
    }
}
