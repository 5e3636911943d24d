//! Run configuration: a plain serializable mirror of the CLI flags.
//!
//! A config can come from a JSON file, from flags, or both; flags override
//! file values field by field. Serialization round-trips losslessly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rame::core::RngHandle;
use rame::optimizers::{Method, Mode, RunSettings, Schedule, Sequence};
use rame::optimizers::{AdamConfig, RameConfig};
use rame::problems::{
    make_conditioned_quadratic, make_logistic, make_mlp, make_pseudo_huber, Problem, SelectorMode,
    SpiralSpec,
};
use rame::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub dim: Option<usize>,
    /// Finite-sum component count (logistic).
    pub k: Option<usize>,
    /// Condition number (quadratic).
    pub cond: Option<f64>,
    /// Spiral dataset size (mlp_spiral).
    pub samples: Option<usize>,
    pub noise: Option<f64>,
    pub turns: Option<f64>,
    pub layers: Option<Vec<usize>>,
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub name: String,
    pub q: Option<f64>,
    pub xi: Option<f64>,
    pub beta: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub alpha_decay_factor: Option<f64>,
    pub alpha_decay_every: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub optimizer: OptimizerConfig,
    /// "deterministic" | "random" | "cyclic".
    pub mode: String,
    pub budget: Option<u64>,
    /// For finite-sum problems: budget = epochs * component count.
    pub epochs: Option<u64>,
    pub seed: u64,
    pub stop_eps: f64,
    pub log_stride: Option<u64>,
    pub full_state: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            optimizer: OptimizerConfig::default(),
            mode: "deterministic".to_string(),
            budget: None,
            epochs: None,
            seed: 0,
            stop_eps: 0.0,
            log_stride: None,
            full_state: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("cannot parse config {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Everything needed to execute one run at the configured rate.
    pub fn build(&self) -> Result<BuiltRun> {
        let alpha = self.optimizer.alpha.ok_or_else(|| {
            Error::config("alpha is required (pass --alpha or use the grid subcommand)")
        })?;
        self.build_with_alpha(alpha, "run")
    }

    /// Build with an explicit rate and rng stream label; the grid uses this
    /// once per rate.
    pub fn build_with_alpha(&self, alpha: f64, stream: &str) -> Result<BuiltRun> {
        let problem = self.build_problem()?;
        let method = self.build_method(alpha)?;
        let mode = self.parse_mode()?;
        let k = problem.component_count();
        if matches!(mode, Mode::Minibatch(_)) && k.is_none() {
            return Err(Error::config(format!(
                "problem {} has no finite-sum structure; use deterministic mode",
                problem.name()
            )));
        }
        let budget = match (self.budget, self.epochs) {
            (Some(b), _) => b,
            (None, Some(e)) => {
                let k = k.ok_or_else(|| {
                    Error::config("epochs needs a finite-sum problem; give --budget instead")
                })? as u64;
                e.checked_mul(k)
                    .ok_or_else(|| Error::config("epochs * components overflows"))?
            }
            (None, None) => return Err(Error::config("either budget or epochs is required")),
        };
        let log_stride = self.log_stride.unwrap_or(match mode {
            Mode::Deterministic => 1,
            Mode::Minibatch(_) => k.unwrap_or(1) as u64,
        });
        let settings = RunSettings::new(budget)
            .with_stop_eps(self.stop_eps)
            .with_mode(mode)
            .with_log_stride(log_stride);
        Ok(BuiltRun {
            problem,
            method,
            settings,
            rng: RngHandle::new(self.seed, stream),
        })
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let data_rng = RngHandle::new(self.seed, "problem-data");
        match self.problem.name.as_str() {
            "quadratic" => make_conditioned_quadratic(
                self.problem.dim.unwrap_or(10),
                self.problem.cond.unwrap_or(100.0),
            ),
            "pseudo_huber" => make_pseudo_huber(self.problem.dim.unwrap_or(4)),
            "logistic" => make_logistic(
                self.problem.k.unwrap_or(200),
                self.problem.dim.unwrap_or(10),
                &data_rng,
            ),
            "mlp_spiral" => {
                let layers = self
                    .problem
                    .layers
                    .clone()
                    .unwrap_or_else(|| vec![2, 16, 16, 2]);
                let spiral = SpiralSpec {
                    samples: self.problem.samples.unwrap_or(400),
                    noise: self.problem.noise.unwrap_or(0.08),
                    turns: self.problem.turns.unwrap_or(1.5),
                };
                make_mlp(&layers, &spiral, self.problem.batch.unwrap_or(20), &data_rng)
            }
            other => Err(Error::config(format!(
                "unknown problem '{other}' (expected quadratic, pseudo_huber, logistic or mlp_spiral)"
            ))),
        }
    }

    fn alpha_sequence(&self, alpha: f64) -> Sequence {
        match (
            self.optimizer.alpha_decay_factor,
            self.optimizer.alpha_decay_every,
        ) {
            (Some(factor), Some(every)) => Sequence::StepDecay {
                initial: alpha,
                factor,
                every,
            },
            _ => Sequence::Constant(alpha),
        }
    }

    pub fn build_method(&self, alpha: f64) -> Result<Method> {
        let beta = self.optimizer.beta.unwrap_or(0.9);
        let eta = self.optimizer.eta.unwrap_or(1.0);
        let schedule = Schedule::new(
            self.alpha_sequence(alpha),
            Sequence::Constant(beta),
            Sequence::Constant(eta),
        )?;
        schedule.at(1)?;
        match self.optimizer.name.as_str() {
            "rame" => Ok(Method::Rame(RameConfig::new(
                self.optimizer.q.unwrap_or(0.25),
                self.optimizer.xi.unwrap_or(0.0),
                schedule,
            )?)),
            "shb" => Ok(Method::Shb { schedule }),
            "adam" => Ok(Method::Adam(AdamConfig::new(
                self.optimizer.beta1.unwrap_or(0.9),
                self.optimizer.beta2.unwrap_or(0.999),
                self.optimizer.xi.unwrap_or(1e-7),
                self.alpha_sequence(alpha),
            )?)),
            "rmsprop" => Ok(Method::Rmsprop(AdamConfig::new(
                self.optimizer.beta1.unwrap_or(0.0),
                self.optimizer.beta2.unwrap_or(0.999),
                self.optimizer.xi.unwrap_or(1e-7),
                self.alpha_sequence(alpha),
            )?)),
            other => Err(Error::config(format!(
                "unknown optimizer '{other}' (expected rame, shb, adam or rmsprop)"
            ))),
        }
    }

    fn parse_mode(&self) -> Result<Mode> {
        match self.mode.as_str() {
            "deterministic" => Ok(Mode::Deterministic),
            "random" => Ok(Mode::Minibatch(SelectorMode::Random)),
            "cyclic" => Ok(Mode::Minibatch(SelectorMode::Cyclic)),
            other => Err(Error::config(format!(
                "unknown mode '{other}' (expected deterministic, random or cyclic)"
            ))),
        }
    }
}

/// A fully constructed run.
pub struct BuiltRun {
    pub problem: Problem,
    pub method: Method,
    pub settings: RunSettings,
    pub rng: RngHandle,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> RunConfig {
        RunConfig {
            problem: ProblemConfig {
                name: "logistic".into(),
                dim: Some(10),
                k: Some(50),
                ..ProblemConfig::default()
            },
            optimizer: OptimizerConfig {
                name: "rame".into(),
                q: Some(0.25),
                xi: Some(0.0),
                beta: Some(0.9),
                alpha: Some(0.01),
                eta: Some(1.0),
                ..OptimizerConfig::default()
            },
            mode: "cyclic".into(),
            budget: None,
            epochs: Some(3),
            seed: 7,
            stop_eps: 1e-8,
            log_stride: None,
            full_state: false,
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let config = sample_config();
        let parsed: RunConfig = serde_json::from_str(&config.to_json()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn epochs_expand_to_budget() {
        let built = sample_config().build().unwrap();
        assert_eq!(built.settings.budget, 150); // 3 epochs x 50 components
        assert_eq!(built.settings.log_stride, 50);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let mut config = sample_config();
        config.problem.name = "rosenbrock".into();
        assert!(config.build().is_err());
        let mut config = sample_config();
        config.optimizer.name = "adagrad".into();
        assert!(config.build().is_err());
        let mut config = sample_config();
        config.mode = "warp".into();
        assert!(config.build().is_err());
    }

    #[test]
    fn invalid_q_is_rejected_with_message() {
        let mut config = sample_config();
        config.optimizer.q = Some(1.5);
        let err = config.build().unwrap_err();
        assert!(err.to_string().contains("q"), "{err}");
    }
}
