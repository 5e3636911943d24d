//! The dynamic-system view of RAME under `(eta_t, xi) = (1, 0)`.
//!
//! With unit common rate and no denominator offset, the RAME iterates obey a
//! recursion on *modulated steering vectors*: the quantity
//! `(x_{t+1} - x_t) .* |x_{t+1} - x_t|^(q/(1-q))` evolves exactly like a
//! heavy-ball moment. This module implements both directions of that
//! correspondence and verifies it along real trajectories.

use serde::{Deserialize, Serialize};

use crate::core::{abs_pow_kernel, sign_kernel, GradientVector, ParamVector};
use crate::error::{Error, Result};
use crate::optimizers::{run_optimizer, Method, RameConfig, RunSettings};
use crate::problems::Problem;
use crate::core::RngHandle;

/// Modulated steering moment together with the iterate it steers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringState {
    /// Modulated steering moment; zero on a fresh run.
    pub m_tilde: Vec<f64>,
    pub x_curr: ParamVector,
    pub t: u64,
}

impl SteeringState {
    pub fn initial(x0: ParamVector) -> Self {
        let dim = x0.dim();
        Self {
            m_tilde: vec![0.0; dim],
            x_curr: x0,
            t: 0,
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "steering modulation requires 0 <= q < 1, got {q}"
        )))
    }
}

/// `delta .* |delta|^(q/(1-q))` with `delta = x_next - x_curr`.
///
/// Applied to consecutive RAME iterates this recovers the negated moment.
/// At `q = 0` the exponent is zero and the modulation is the identity
/// (`0^0 := 1`).
pub fn modulated_steering(x_next: &ParamVector, x_curr: &ParamVector, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    if x_next.dim() != x_curr.dim() {
        return Err(Error::DimMismatch {
            context: "modulated_steering",
            expected: x_curr.dim(),
            found: x_next.dim(),
        });
    }
    let exponent = q / (1.0 - q);
    Ok(x_next
        .as_slice()
        .iter()
        .zip(x_curr.as_slice())
        .map(|(next, curr)| {
            let delta = next - curr;
            delta * abs_pow_kernel(delta, exponent)
        })
        .collect())
}

/// The steering recursion `m~' = beta m~ + alpha g`; the iterate is advanced
/// separately by [`reconstruct_iterate`].
pub fn steering_recursion_step(
    state: &SteeringState,
    g: &GradientVector,
    beta: f64,
    alpha: f64,
) -> Result<SteeringState> {
    if g.dim() != state.m_tilde.len() {
        return Err(Error::DimMismatch {
            context: "steering_recursion_step",
            expected: state.m_tilde.len(),
            found: g.dim(),
        });
    }
    let m_tilde: Vec<f64> = state
        .m_tilde
        .iter()
        .zip(g.as_slice())
        .map(|(mi, gi)| beta * mi + alpha * gi)
        .collect();
    Ok(SteeringState {
        m_tilde,
        x_curr: state.x_curr.clone(),
        t: state.t + 1,
    })
}

/// Recover the next iterate from the steering moment:
/// `x' = x - sign(m~) .* |m~|^(1-q)`, the total rewriting of
/// `x - m~ / |m~|^q`.
pub fn reconstruct_iterate(state: &SteeringState, q: f64) -> Result<ParamVector> {
    check_q(q)?;
    let update: Vec<f64> = state
        .m_tilde
        .iter()
        .map(|&mi| -(sign_kernel(mi) * abs_pow_kernel(mi, 1.0 - q)))
        .collect();
    state.x_curr.add(&update)
}

/// One full steering-path iteration: recursion then reconstruction.
pub fn steering_advance(
    state: &SteeringState,
    g: &GradientVector,
    beta: f64,
    alpha: f64,
    q: f64,
) -> Result<SteeringState> {
    let advanced = steering_recursion_step(state, g, beta, alpha)?;
    let x_next = reconstruct_iterate(&advanced, q)?;
    Ok(SteeringState {
        m_tilde: advanced.m_tilde,
        x_curr: x_next,
        t: advanced.t,
    })
}

/// Result of running the direct path and the steering path side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub steps: u64,
    pub q: f64,
    pub tol: f64,
    /// Max relative discrepancy between the two iterate sequences, per step.
    pub per_step_max_rel: Vec<f64>,
    pub max_trajectory_rel: f64,
    /// Max relative error of the moment recovered by [`modulated_steering`]
    /// from consecutive direct-path iterates.
    pub max_roundtrip_rel: f64,
    pub pass: bool,
}

// relative with an absolute floor, to avoid dividing by near-zero iterates
fn rel_discrepancy(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Run RAME and the steering recursion from the same start and report the
/// worst per-coordinate discrepancy, plus the moment round trip.
///
/// Requires the dynamic-system premise `eta_t = 1` (checked for every
/// queried iteration) and `xi = 0`.
pub fn verify_equivalence(
    problem: &Problem,
    cfg: &RameConfig,
    x0: &ParamVector,
    steps: u64,
    tol: f64,
) -> Result<EquivalenceReport> {
    if cfg.xi != 0.0 {
        return Err(Error::config(format!(
            "steering equivalence requires xi = 0, got {}",
            cfg.xi
        )));
    }
    for t in 1..=steps {
        let (_, _, eta) = cfg.schedule.at(t)?;
        if eta != 1.0 {
            return Err(Error::config(format!(
                "steering equivalence requires eta_t = 1, got eta_{t} = {eta}"
            )));
        }
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::config(format!("tolerance must be positive, got {tol}")));
    }
    if steps == 0 {
        return Ok(EquivalenceReport {
            steps,
            q: cfg.q,
            tol,
            per_step_max_rel: Vec::new(),
            max_trajectory_rel: 0.0,
            max_roundtrip_rel: 0.0,
            pass: true,
        });
    }

    // Direct path, full-state trace at stride 1.
    let settings = RunSettings::new(steps);
    let rng = RngHandle::new(0, "steering-equivalence");
    let trace = run_optimizer(problem, x0, &Method::Rame(cfg.clone()), &settings, &rng)?;

    // Steering path evaluates its own gradients at its own iterates.
    let mut state = SteeringState::initial(x0.clone());
    let mut per_step_max_rel = Vec::with_capacity(trace.len());
    let mut max_roundtrip_rel = 0.0f64;
    for record in trace.records() {
        let (alpha, beta, _) = cfg.schedule.at(record.t)?;
        let g = problem.eval_grad(&state.x_curr)?;
        state = steering_advance(&state, &g, beta, alpha, cfg.q)?;

        let step_max = state
            .x_curr
            .as_slice()
            .iter()
            .zip(&record.x_after)
            .map(|(a, b)| rel_discrepancy(*a, *b))
            .fold(0.0f64, f64::max);
        per_step_max_rel.push(step_max);

        // Round trip: the modulated steering of consecutive direct-path
        // iterates is the negated moment.
        let x_before = ParamVector::new(record.x_before.clone())?;
        let x_after = ParamVector::new(record.x_after.clone())?;
        let recovered = modulated_steering(&x_after, &x_before, cfg.q)?;
        for (rec, m) in recovered.iter().zip(&record.m) {
            max_roundtrip_rel = max_roundtrip_rel.max(rel_discrepancy(-rec, *m));
        }
    }

    let max_trajectory_rel = per_step_max_rel.iter().cloned().fold(0.0f64, f64::max);
    Ok(EquivalenceReport {
        steps,
        q: cfg.q,
        tol,
        per_step_max_rel,
        max_trajectory_rel,
        max_roundtrip_rel,
        pass: max_trajectory_rel <= tol && max_roundtrip_rel <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::Schedule;
    use crate::problems::make_pseudo_huber;

    #[test]
    fn modulation_hand_values() {
        let x_next = ParamVector::new(vec![1.0 - 0.177_827_941_003_892_28]).unwrap();
        let x_curr = ParamVector::new(vec![1.0]).unwrap();
        let out = modulated_steering(&x_next, &x_curr, 0.25).unwrap();
        assert!((out[0] + 0.1).abs() < 1e-12);

        // zero displacement, q > 0
        let z = modulated_steering(&x_curr, &x_curr, 0.5).unwrap();
        assert_eq!(z, vec![0.0]);

        // q = 0 is the identity modulation
        let a = ParamVector::new(vec![1.0, -1.0]).unwrap();
        let b = ParamVector::zeros(2).unwrap();
        assert_eq!(modulated_steering(&a, &b, 0.0).unwrap(), vec![1.0, -1.0]);

        assert!(modulated_steering(&a, &b, 1.0).is_err());
    }

    #[test]
    fn recursion_hand_values() {
        let s = SteeringState::initial(ParamVector::zeros(1).unwrap());
        let g = GradientVector::new(vec![1.0]).unwrap();
        let next = steering_recursion_step(&s, &g, 0.9, 0.1).unwrap();
        assert!((next.m_tilde[0] - 0.1).abs() < 1e-16);

        // beta = 0 forgets history
        let held = SteeringState {
            m_tilde: vec![5.0],
            x_curr: ParamVector::zeros(1).unwrap(),
            t: 3,
        };
        let next = steering_recursion_step(&held, &g, 0.0, 0.1).unwrap();
        assert_eq!(next.m_tilde, vec![0.1]);

        // zero gradient halves under beta = 0.5
        let zero_g = GradientVector::new(vec![0.0]).unwrap();
        let next = steering_recursion_step(&held, &zero_g, 0.5, 0.1).unwrap();
        assert_eq!(next.m_tilde, vec![2.5]);
    }

    #[test]
    fn reconstruction_hand_values() {
        let s = SteeringState {
            m_tilde: vec![0.1],
            x_curr: ParamVector::new(vec![1.0]).unwrap(),
            t: 1,
        };
        let x = reconstruct_iterate(&s, 0.25).unwrap();
        assert!((x.as_slice()[0] - 0.822_172_058_996_107_7).abs() < 1e-15);

        // zero moment leaves x unchanged
        let z = SteeringState {
            m_tilde: vec![0.0],
            x_curr: ParamVector::new(vec![1.0]).unwrap(),
            t: 1,
        };
        assert_eq!(reconstruct_iterate(&z, 0.5).unwrap().as_slice(), &[1.0]);

        // q = 0 is the heavy-ball form x - m~
        let hb = reconstruct_iterate(&s, 0.0).unwrap();
        assert!((hb.as_slice()[0] - 0.9).abs() < 1e-16);
    }

    #[test]
    fn zero_steps_trivially_pass() {
        let p = make_pseudo_huber(3).unwrap();
        let cfg =
            RameConfig::new(0.25, 0.0, Schedule::constant(0.01, 0.9, 1.0).unwrap()).unwrap();
        let report = verify_equivalence(&p, &cfg, p.default_x0(), 0, 1e-9).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_trajectory_rel, 0.0);
    }

    #[test]
    fn premise_violations_rejected() {
        let p = make_pseudo_huber(3).unwrap();
        let bad_xi =
            RameConfig::new(0.25, 0.1, Schedule::constant(0.01, 0.9, 1.0).unwrap()).unwrap();
        assert!(verify_equivalence(&p, &bad_xi, p.default_x0(), 10, 1e-9).is_err());
        let bad_eta =
            RameConfig::new(0.25, 0.0, Schedule::constant(0.01, 0.9, 0.5).unwrap()).unwrap();
        assert!(verify_equivalence(&p, &bad_eta, p.default_x0(), 10, 1e-9).is_err());
    }

    #[test]
    fn pseudo_huber_equivalence_and_q0_degeneracy() {
        let p = make_pseudo_huber(4).unwrap();
        for &q in &[0.0, 0.25] {
            let cfg =
                RameConfig::new(q, 0.0, Schedule::constant(0.01, 0.9, 1.0).unwrap()).unwrap();
            let report = verify_equivalence(&p, &cfg, p.default_x0(), 100, 1e-9).unwrap();
            assert!(report.pass, "q = {q}: {report:?}");
        }
    }
}
