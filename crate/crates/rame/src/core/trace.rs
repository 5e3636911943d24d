//! Per-iteration run records and their container.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::vector::{l2_norm, linf_norm, GradientVector, ParamVector};
use crate::error::{Error, Result};

/// Snapshot of one optimizer iteration.
///
/// The norm fields are computed by the constructor from the stored vectors,
/// so they cannot drift from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub x_before: Vec<f64>,
    pub x_after: Vec<f64>,
    pub g: Vec<f64>,
    /// First moment after the step.
    pub m: Vec<f64>,
    /// Second moment after the step (Adam/RMSprop only).
    pub v: Option<Vec<f64>>,
    pub loss: f64,
    pub grad_l2: f64,
    pub grad_linf: f64,
    pub step_l2: f64,
    pub eta_used: f64,
    pub alpha_used: f64,
    /// Held-out metric at this iterate, when the problem has one.
    pub val_metric: Option<f64>,
}

impl StepRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t: u64,
        x_before: &ParamVector,
        x_after: &ParamVector,
        g: &GradientVector,
        m: Vec<f64>,
        v: Option<Vec<f64>>,
        loss: f64,
        eta_used: f64,
        alpha_used: f64,
        val_metric: Option<f64>,
    ) -> Result<Self> {
        if t == 0 {
            return Err(Error::config("step records are 1-indexed"));
        }
        if eta_used <= 0.0 || alpha_used <= 0.0 {
            return Err(Error::config("eta_used and alpha_used must be positive"));
        }
        let gs = g.as_slice();
        let step: Vec<f64> = x_after
            .as_slice()
            .iter()
            .zip(x_before.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            t,
            x_before: x_before.to_vec(),
            x_after: x_after.to_vec(),
            g: g.to_vec(),
            m,
            v,
            loss,
            grad_l2: l2_norm(gs),
            grad_linf: linf_norm(gs),
            step_l2: l2_norm(&step),
            eta_used,
            alpha_used,
            val_metric,
        })
    }
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// Iteration budget exhausted.
    Budget,
    /// Full-gradient l2 norm fell to the stop threshold at iterate `at_t`.
    Converged { at_t: u64, grad_l2: f64 },
    /// A non-finite value appeared at iteration `at_t`; the trace holds all
    /// records logged before that point.
    Diverged { at_t: u64, reason: String },
}

/// Run configuration snapshot stored alongside the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub optimizer: String,
    pub problem: String,
    pub dim: usize,
    pub seed: u64,
    pub stream: String,
    pub rng_algorithm: String,
    pub mode: String,
    pub budget: u64,
    pub stop_eps: f64,
    pub log_stride: u64,
    /// Flat rendering of the hyperparameters, stable order.
    pub params: BTreeMap<String, String>,
    pub termination: Termination,
}

/// Ordered sequence of step records plus the run snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: TraceMeta,
    records: Vec<StepRecord>,
}

impl Trace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            records: Vec::new(),
        }
    }

    /// Append a record; `t` must be strictly increasing.
    pub fn push(&mut self, record: StepRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t <= last.t {
                return Err(Error::config(format!(
                    "trace records must be strictly increasing in t ({} after {})",
                    record.t, last.t
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// Final iterate of the run; `None` when nothing was logged.
    pub fn final_iterate(&self) -> Option<ParamVector> {
        self.records
            .last()
            .map(|r| ParamVector::new(r.x_after.clone()).expect("trace iterates are finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TraceMeta {
        TraceMeta {
            optimizer: "shb".into(),
            problem: "quadratic".into(),
            dim: 2,
            seed: 1,
            stream: "run".into(),
            rng_algorithm: super::super::rng::RNG_ALGORITHM.into(),
            mode: "deterministic".into(),
            budget: 10,
            stop_eps: 0.0,
            log_stride: 1,
            params: BTreeMap::new(),
            termination: Termination::Budget,
        }
    }

    fn record(t: u64) -> StepRecord {
        let x0 = ParamVector::new(vec![1.0, 2.0]).unwrap();
        let x1 = ParamVector::new(vec![0.5, 1.0]).unwrap();
        let g = GradientVector::new(vec![3.0, -4.0]).unwrap();
        StepRecord::new(t, &x0, &x1, &g, vec![0.1, 0.2], None, 1.0, 1.0, 0.1, None).unwrap()
    }

    #[test]
    fn norms_are_recomputed_from_vectors() {
        let r = record(1);
        assert_eq!(r.grad_l2, 5.0);
        assert_eq!(r.grad_linf, 4.0);
        let expected_step = (0.25f64 + 1.0).sqrt();
        assert_eq!(r.step_l2, expected_step);
    }

    #[test]
    fn push_requires_increasing_t() {
        let mut trace = Trace::new(meta());
        trace.push(record(1)).unwrap();
        trace.push(record(2)).unwrap();
        assert!(trace.push(record(2)).is_err());
        assert_eq!(trace.len(), 2);
    }
}
