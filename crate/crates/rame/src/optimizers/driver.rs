//! The run driver: iterates a step function over a problem, records a trace,
//! and applies the stopping rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schedule::{Schedule, Sequence};
use super::steps::{
    adam_step, rame_step, rmsprop_step, shb_step, AdamConfig, AdamState, RameConfig, RameState,
    ShbState,
};
use crate::core::{
    l2_norm, GradientVector, ParamVector, RngHandle, StepRecord, Termination, Trace, TraceMeta,
    RNG_ALGORITHM,
};
use crate::error::{Error, Result};
use crate::problems::{minibatch_selector, MinibatchSelector, Problem, SelectorMode};

/// Optimizer choice plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    Rame(RameConfig),
    Shb { schedule: Schedule },
    Adam(AdamConfig),
    Rmsprop(AdamConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Rame(_) => "rame",
            Method::Shb { .. } => "shb",
            Method::Adam(_) => "adam",
            Method::Rmsprop(_) => "rmsprop",
        }
    }

    fn render_sequence(seq: &Sequence) -> String {
        match seq {
            Sequence::Constant(v) => format!("{v}"),
            Sequence::StepDecay {
                initial,
                factor,
                every,
            } => format!("step({initial},/{factor}@{every})"),
            Sequence::List(values) => format!("list[{}]", values.len()),
        }
    }

    /// Flat hyperparameter snapshot for trace metadata.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        match self {
            Method::Rame(cfg) => {
                map.insert("q".into(), format!("{}", cfg.q));
                map.insert("xi".into(), format!("{}", cfg.xi));
                map.insert("alpha".into(), Self::render_sequence(&cfg.schedule.alpha));
                map.insert("beta".into(), Self::render_sequence(&cfg.schedule.beta));
                map.insert("eta".into(), Self::render_sequence(&cfg.schedule.eta));
            }
            Method::Shb { schedule } => {
                map.insert("alpha".into(), Self::render_sequence(&schedule.alpha));
                map.insert("beta".into(), Self::render_sequence(&schedule.beta));
                map.insert("eta".into(), Self::render_sequence(&schedule.eta));
            }
            Method::Adam(cfg) | Method::Rmsprop(cfg) => {
                map.insert("beta1".into(), format!("{}", cfg.beta1));
                map.insert("beta2".into(), format!("{}", cfg.beta2));
                map.insert("xi".into(), format!("{}", cfg.xi));
                map.insert("alpha".into(), Self::render_sequence(&cfg.alpha));
            }
        }
        map
    }
}

/// Gradient source per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full gradient every step.
    Deterministic,
    /// One finite-sum component per step, chosen by the selector.
    Minibatch(SelectorMode),
}

impl Mode {
    fn label(&self) -> &'static str {
        match self {
            Mode::Deterministic => "deterministic",
            Mode::Minibatch(SelectorMode::Random) => "minibatch_random",
            Mode::Minibatch(SelectorMode::Cyclic) => "minibatch_cyclic",
        }
    }
}

/// Budget, stopping rule, gradient mode and logging stride for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub budget: u64,
    /// Stop when the full-gradient l2 norm falls to this threshold; checked
    /// every iteration in deterministic mode, every full pass in minibatch
    /// mode. Zero means run to budget unless the gradient vanishes exactly.
    pub stop_eps: f64,
    pub mode: Mode,
    /// Record every `log_stride`-th iteration; the final step of a run is
    /// always recorded.
    pub log_stride: u64,
}

impl RunSettings {
    pub fn new(budget: u64) -> Self {
        Self {
            budget,
            stop_eps: 0.0,
            mode: Mode::Deterministic,
            log_stride: 1,
        }
    }

    pub fn with_stop_eps(mut self, eps: f64) -> Self {
        self.stop_eps = eps;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_log_stride(mut self, stride: u64) -> Self {
        self.log_stride = stride;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::config("budget must be >= 1".to_string()));
        }
        if self.log_stride == 0 {
            return Err(Error::config("log stride must be >= 1".to_string()));
        }
        if !(self.stop_eps.is_finite() && self.stop_eps >= 0.0) {
            return Err(Error::config(format!(
                "stop threshold must be finite and >= 0, got {}",
                self.stop_eps
            )));
        }
        Ok(())
    }
}

enum OptState {
    Rame(RameState),
    Shb(ShbState),
    Adam(AdamState),
}

struct StepOut {
    state: OptState,
    update: Vec<f64>,
    eta: f64,
    alpha: f64,
    m: Vec<f64>,
    v: Option<Vec<f64>>,
}

fn init_state(method: &Method, dim: usize) -> OptState {
    match method {
        Method::Rame(_) => OptState::Rame(RameState::new(dim)),
        Method::Shb { .. } => OptState::Shb(ShbState::new(dim)),
        Method::Adam(_) | Method::Rmsprop(_) => OptState::Adam(AdamState::new(dim)),
    }
}

fn dispatch_step(state: &OptState, g: &GradientVector, method: &Method) -> Result<StepOut> {
    match (state, method) {
        (OptState::Rame(s), Method::Rame(cfg)) => {
            let t = s.t + 1;
            let (alpha, _, eta) = cfg.schedule.at(t)?;
            let (next, update) = rame_step(s, g, cfg)?;
            Ok(StepOut {
                m: next.m.clone(),
                v: None,
                state: OptState::Rame(next),
                update,
                eta,
                alpha,
            })
        }
        (OptState::Shb(s), Method::Shb { schedule }) => {
            let t = s.t + 1;
            let (alpha, _, eta) = schedule.at(t)?;
            let (next, update) = shb_step(s, g, schedule)?;
            Ok(StepOut {
                m: next.m.clone(),
                v: None,
                state: OptState::Shb(next),
                update,
                eta,
                alpha,
            })
        }
        (OptState::Adam(s), Method::Adam(cfg)) => {
            let alpha = cfg.alpha.at(s.t + 1);
            let (next, update) = adam_step(s, g, cfg)?;
            Ok(StepOut {
                m: next.m.clone(),
                v: Some(next.v.clone()),
                state: OptState::Adam(next),
                update,
                eta: 1.0,
                alpha,
            })
        }
        (OptState::Adam(s), Method::Rmsprop(cfg)) => {
            let alpha = cfg.alpha.at(s.t + 1);
            let (next, update) = rmsprop_step(s, g, cfg)?;
            Ok(StepOut {
                m: next.m.clone(),
                v: Some(next.v.clone()),
                state: OptState::Adam(next),
                update,
                eta: 1.0,
                alpha,
            })
        }
        _ => Err(Error::config("optimizer state does not match method")),
    }
}

struct Pending {
    t: u64,
    x_before: ParamVector,
    x_after: ParamVector,
    g: GradientVector,
    m: Vec<f64>,
    v: Option<Vec<f64>>,
    eta: f64,
    alpha: f64,
}

/// Push the pending step into the trace, evaluating the (full) loss and the
/// validation metric at its iterate. A non-finite loss is a divergence.
fn flush_pending(
    trace: &mut Trace,
    pending: &mut Option<Pending>,
    problem: &Problem,
) -> Result<std::result::Result<(), String>> {
    let Some(p) = pending.take() else {
        return Ok(Ok(()));
    };
    let loss = match problem.eval_f(&p.x_after) {
        Ok(value) => value,
        Err(Error::NonFinite { context }) => return Ok(Err(context)),
        Err(other) => return Err(other),
    };
    let val = problem.val_metric(&p.x_after);
    let record = StepRecord::new(
        p.t, &p.x_before, &p.x_after, &p.g, p.m, p.v, loss, p.eta, p.alpha, val,
    )?;
    trace.push(record)?;
    Ok(Ok(()))
}

/// Run `method` on `problem` from `x0`.
///
/// Deterministic mode uses the full gradient every step and checks the stop
/// threshold against it before each step. Minibatch mode consumes one
/// component per step and checks the full gradient once per pass. Divergence
/// (any non-finite value) ends the run with a `Diverged` termination and the
/// partial trace intact; configuration mistakes are hard errors.
pub fn run_optimizer(
    problem: &Problem,
    x0: &ParamVector,
    method: &Method,
    settings: &RunSettings,
    rng: &RngHandle,
) -> Result<Trace> {
    settings.validate()?;
    if x0.dim() != problem.dim() {
        return Err(Error::DimMismatch {
            context: "run_optimizer start",
            expected: problem.dim(),
            found: x0.dim(),
        });
    }
    let component_count = match settings.mode {
        Mode::Minibatch(_) => Some(problem.component_count().ok_or_else(|| {
            Error::config(format!(
                "minibatch mode needs a finite-sum problem, {} has none",
                problem.name()
            ))
        })?),
        Mode::Deterministic => None,
    };
    let mut selector: Option<MinibatchSelector> = match settings.mode {
        Mode::Minibatch(mode) => Some(minibatch_selector(mode, component_count.unwrap(), rng)?),
        Mode::Deterministic => None,
    };

    let meta = TraceMeta {
        optimizer: method.name().to_string(),
        problem: problem.name().to_string(),
        dim: problem.dim(),
        seed: rng.seed(),
        stream: rng.stream_label().to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        mode: settings.mode.label().to_string(),
        budget: settings.budget,
        stop_eps: settings.stop_eps,
        log_stride: settings.log_stride,
        params: method.params(),
        termination: Termination::Budget,
    };
    let mut trace = Trace::new(meta);

    let mut x = x0.clone();
    let mut state = init_state(method, problem.dim());
    let mut pending: Option<Pending> = None;
    let mut termination = Termination::Budget;

    for t in 1..=settings.budget {
        // Gradient for this step, with the pre-step stop check in
        // deterministic mode (the step gradient is the full gradient there).
        let g = if let Some(selector) = selector.as_mut() {
            let index = selector.next_index();
            match problem.eval_component_grad(index, &x) {
                Ok(g) => g,
                Err(Error::NonFinite { context }) => {
                    termination = Termination::Diverged {
                        at_t: t,
                        reason: context,
                    };
                    break;
                }
                Err(other) => return Err(other),
            }
        } else {
            match problem.eval_grad(&x) {
                Ok(g) => {
                    let grad_l2 = l2_norm(g.as_slice());
                    if grad_l2 <= settings.stop_eps {
                        termination = Termination::Converged { at_t: t - 1, grad_l2 };
                        break;
                    }
                    g
                }
                Err(Error::NonFinite { context }) => {
                    termination = Termination::Diverged {
                        at_t: t,
                        reason: context,
                    };
                    break;
                }
                Err(other) => return Err(other),
            }
        };

        let out = dispatch_step(&state, &g, method)?;
        let x_next = match x.add(&out.update) {
            Ok(v) => v,
            Err(Error::NonFinite { context }) => {
                termination = Termination::Diverged {
                    at_t: t,
                    reason: context,
                };
                break;
            }
            Err(other) => return Err(other),
        };

        pending = Some(Pending {
            t,
            x_before: x,
            x_after: x_next.clone(),
            g,
            m: out.m,
            v: out.v,
            eta: out.eta,
            alpha: out.alpha,
        });
        x = x_next;
        state = out.state;

        if t % settings.log_stride == 0 {
            if let Err(reason) = flush_pending(&mut trace, &mut pending, problem)? {
                termination = Termination::Diverged { at_t: t, reason };
                break;
            }
        }

        // Full-pass stop check in minibatch mode.
        if let Some(k) = component_count {
            if t % (k as u64) == 0 {
                match problem.eval_grad(&x) {
                    Ok(full_g) => {
                        let grad_l2 = l2_norm(full_g.as_slice());
                        if grad_l2 <= settings.stop_eps {
                            termination = Termination::Converged { at_t: t, grad_l2 };
                            break;
                        }
                    }
                    Err(Error::NonFinite { context }) => {
                        termination = Termination::Diverged {
                            at_t: t,
                            reason: context,
                        };
                        break;
                    }
                    Err(other) => return Err(other),
                }
            }
        }
    }

    // The final executed step is always recorded, whatever the stride.
    let final_step_t = pending.as_ref().map(|p| p.t);
    if flush_pending(&mut trace, &mut pending, problem)?.is_err()
        && !matches!(termination, Termination::Diverged { .. })
    {
        // Non-finite loss discovered only at the final flush.
        termination = Termination::Diverged {
            at_t: final_step_t.unwrap_or(1),
            reason: "objective value".to_string(),
        };
    }
    trace.meta.termination = termination;
    Ok(trace)
}
