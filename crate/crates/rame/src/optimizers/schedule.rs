//! Iteration-indexed hyperparameter sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar sequence indexed by iteration `t >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    Constant(f64),
    /// `initial / factor^floor((t-1)/every)`: the value is divided by
    /// `factor` every `every` iterations.
    StepDecay { initial: f64, factor: f64, every: u64 },
    /// Explicit values for t = 1, 2, ...; holds the final value afterwards.
    List(Vec<f64>),
}

impl Sequence {
    pub fn at(&self, t: u64) -> f64 {
        debug_assert!(t >= 1, "sequences are 1-indexed");
        match self {
            Sequence::Constant(v) => *v,
            Sequence::StepDecay {
                initial,
                factor,
                every,
            } => initial / factor.powi(((t - 1) / every) as i32),
            Sequence::List(values) => {
                let idx = ((t - 1) as usize).min(values.len() - 1);
                values[idx]
            }
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        let finite_ok = match self {
            Sequence::Constant(v) => v.is_finite(),
            Sequence::StepDecay {
                initial,
                factor,
                every,
            } => initial.is_finite() && factor.is_finite() && *factor > 0.0 && *every >= 1,
            Sequence::List(values) => !values.is_empty() && values.iter().all(|v| v.is_finite()),
        };
        if finite_ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid {what} sequence")))
        }
    }
}

/// The `(alpha_t, beta_t, eta_t)` triple that drives a momentum method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub alpha: Sequence,
    pub beta: Sequence,
    pub eta: Sequence,
}

impl Schedule {
    pub fn new(alpha: Sequence, beta: Sequence, eta: Sequence) -> Result<Self> {
        alpha.check("alpha")?;
        beta.check("beta")?;
        eta.check("eta")?;
        Ok(Self { alpha, beta, eta })
    }

    pub fn constant(alpha: f64, beta: f64, eta: f64) -> Result<Self> {
        let s = Self::new(
            Sequence::Constant(alpha),
            Sequence::Constant(beta),
            Sequence::Constant(eta),
        )?;
        s.at(1)?;
        Ok(s)
    }

    /// Query `(alpha_t, beta_t, eta_t)` with the range contract enforced:
    /// `alpha_t > 0`, `0 <= beta_t < 1`, `eta_t > 0`.
    pub fn at(&self, t: u64) -> Result<(f64, f64, f64)> {
        let alpha = self.alpha.at(t);
        let beta = self.beta.at(t);
        let eta = self.eta.at(t);
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::config(format!("alpha_{t} = {alpha} must be > 0")));
        }
        if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
            return Err(Error::config(format!(
                "beta_{t} = {beta} must lie in [0, 1)"
            )));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::config(format!("eta_{t} = {eta} must be > 0")));
        }
        Ok((alpha, beta, eta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_ranges_enforced() {
        assert!(Schedule::constant(0.1, 0.9, 1.0).is_ok());
        assert!(Schedule::constant(0.0, 0.9, 1.0).is_err());
        assert!(Schedule::constant(0.1, 1.0, 1.0).is_err());
        assert!(Schedule::constant(0.1, -0.1, 1.0).is_err());
        assert!(Schedule::constant(0.1, 0.9, 0.0).is_err());
    }

    #[test]
    fn step_decay_halves_every_n() {
        let s = Sequence::StepDecay {
            initial: 0.8,
            factor: 2.0,
            every: 3,
        };
        let values: Vec<f64> = (1..=8).map(|t| s.at(t)).collect();
        assert_eq!(values, vec![0.8, 0.8, 0.8, 0.4, 0.4, 0.4, 0.2, 0.2]);
    }

    #[test]
    fn list_holds_final_value() {
        let s = Sequence::List(vec![0.3, 0.2, 0.1]);
        assert_eq!(s.at(1), 0.3);
        assert_eq!(s.at(3), 0.1);
        assert_eq!(s.at(30), 0.1);
    }
}
