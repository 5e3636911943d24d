//! The five-rate learning-rate grid.
//!
//! Every rate runs with the same seed; the winner is the rate with the best
//! validation metric when the problem has a held-out split, otherwise the
//! lowest final objective. Ties go to the larger rate. Divergent runs are
//! recorded, flagged, and excluded from selection.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rame::core::{norms, Termination, Trace};
use rame::Result;

use crate::config::RunConfig;
use crate::trace_io::write_trace;

/// The default sweep `{10^-i | i = 1..5}`.
pub const DEFAULT_GRID: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateOutcome {
    pub alpha: f64,
    pub diverged: bool,
    pub final_loss: Option<f64>,
    pub final_grad_l2: Option<f64>,
    /// Best held-out metric over the logged iterations, when one exists.
    pub best_val: Option<f64>,
    pub trace_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rates: Vec<RateOutcome>,
    pub selected_lr: Option<f64>,
}

/// Selection rule: best validation metric if any outcome has one, otherwise
/// lowest final loss; ties break to the larger rate; divergent and valueless
/// outcomes never win.
pub fn select_rate(rates: &[RateOutcome]) -> Option<f64> {
    let candidates: Vec<&RateOutcome> = rates.iter().filter(|r| !r.diverged).collect();
    let by_val = candidates.iter().any(|r| r.best_val.is_some());
    let mut best: Option<(&RateOutcome, f64)> = None;
    for rate in candidates {
        let score = if by_val {
            match rate.best_val {
                Some(v) => v,
                None => continue,
            }
        } else {
            match rate.final_loss {
                Some(loss) if loss.is_finite() => -loss,
                _ => continue,
            }
        };
        let better = match best {
            None => true,
            Some((incumbent, incumbent_score)) => {
                score > incumbent_score
                    || (score == incumbent_score && rate.alpha > incumbent.alpha)
            }
        };
        if better {
            best = Some((rate, score));
        }
    }
    best.map(|(r, _)| r.alpha)
}

fn alpha_tag(alpha: f64) -> String {
    format!("{alpha:e}").replace('-', "m")
}

/// Run the grid. When `out_dir` is given, every per-rate trace is written to
/// `trace_a<rate>.jsonl` there.
pub fn run_grid(
    config: &RunConfig,
    grid: &[f64],
    out_dir: Option<&Path>,
    full_state: bool,
) -> Result<(GridResult, Vec<Trace>)> {
    let mut rates = Vec::with_capacity(grid.len());
    let mut traces = Vec::with_capacity(grid.len());
    for (index, &alpha) in grid.iter().enumerate() {
        let built = config.build_with_alpha(alpha, &format!("grid/a{index}"))?;
        let trace = rame::optimizers::run_optimizer(
            &built.problem,
            built.problem.default_x0(),
            &built.method,
            &built.settings,
            &built.rng,
        )?;
        let diverged = matches!(trace.meta.termination, Termination::Diverged { .. });
        let final_x = trace
            .final_iterate()
            .unwrap_or_else(|| built.problem.default_x0().clone());
        let (final_loss, final_grad_l2) = if diverged {
            (trace.last().map(|r| r.loss), None)
        } else {
            let loss = built.problem.eval_f(&final_x)?;
            let grad = built.problem.eval_grad(&final_x)?;
            (Some(loss), Some(norms(grad.as_slice())?.l2))
        };
        let best_val = trace
            .records()
            .iter()
            .filter_map(|r| r.val_metric)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        let trace_path = match out_dir {
            Some(dir) => {
                let path = dir.join(format!("trace_a{}.jsonl", alpha_tag(alpha)));
                write_trace(&path, &trace, full_state)
                    .map_err(|e| rame::Error::config(format!("cannot write trace: {e}")))?;
                Some(path)
            }
            None => None,
        };
        rates.push(RateOutcome {
            alpha,
            diverged,
            final_loss,
            final_grad_l2,
            best_val,
            trace_path,
        });
        traces.push(trace);
    }
    let selected_lr = select_rate(&rates);
    Ok((GridResult { rates, selected_lr }, traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(alpha: f64, diverged: bool, loss: Option<f64>, val: Option<f64>) -> RateOutcome {
        RateOutcome {
            alpha,
            diverged,
            final_loss: loss,
            final_grad_l2: None,
            best_val: val,
            trace_path: None,
        }
    }

    #[test]
    fn selects_lowest_loss_without_validation() {
        let rates = vec![
            outcome(1e-1, true, Some(f64::NAN), None),
            outcome(1e-2, false, Some(0.5), None),
            outcome(1e-3, false, Some(0.01), None),
            outcome(1e-4, false, Some(0.2), None),
        ];
        assert_eq!(select_rate(&rates), Some(1e-3));
    }

    #[test]
    fn selects_best_validation_when_available() {
        let rates = vec![
            outcome(1e-1, false, Some(0.9), Some(0.6)),
            outcome(1e-2, false, Some(0.5), Some(0.95)),
            outcome(1e-3, false, Some(0.01), Some(0.8)),
        ];
        assert_eq!(select_rate(&rates), Some(1e-2));
    }

    #[test]
    fn ties_break_to_larger_rate() {
        let rates = vec![
            outcome(1e-3, false, None, Some(0.9)),
            outcome(1e-2, false, None, Some(0.9)),
            outcome(1e-4, false, None, Some(0.9)),
        ];
        assert_eq!(select_rate(&rates), Some(1e-2));

        let by_loss = vec![
            outcome(1e-2, false, Some(0.25), None),
            outcome(1e-1, false, Some(0.25), None),
        ];
        assert_eq!(select_rate(&by_loss), Some(1e-1));
    }

    #[test]
    fn all_divergent_selects_nothing() {
        let rates = vec![
            outcome(1e-1, true, None, None),
            outcome(1e-2, true, None, None),
        ];
        assert_eq!(select_rate(&rates), None);
    }
}
