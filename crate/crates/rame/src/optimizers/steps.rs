//! Step functions for RAME, SHB, Adam and RMSprop.
//!
//! Each step is a pure function `(state, gradient, config) -> (state, update)`;
//! the caller applies `x' = x + update`. The moment is always advanced before
//! the iterate.

use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::core::{GradientVector, ParamVector};
use crate::error::{Error, Result};

fn check_dim(state_dim: usize, g: &GradientVector, context: &'static str) -> Result<()> {
    if g.dim() != state_dim {
        return Err(Error::DimMismatch {
            context,
            expected: state_dim,
            found: g.dim(),
        });
    }
    Ok(())
}

/// RAME hyperparameters: moment-power `q` in `[0, 1)`, denominator offset
/// `xi >= 0` (zero is allowed, unlike Adam), and the common-rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RameConfig {
    pub q: f64,
    pub xi: f64,
    pub schedule: Schedule,
}

impl RameConfig {
    pub fn new(q: f64, xi: f64, schedule: Schedule) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::config(format!("q must satisfy 0 <= q < 1, got {q}")));
        }
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(Error::config(format!("xi must satisfy xi >= 0, got {xi}")));
        }
        Ok(Self { q, xi, schedule })
    }
}

/// RAME state: first moment (zero at t = 0) and the iteration counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RameState {
    pub m: Vec<f64>,
    pub t: u64,
}

impl RameState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// The direction `h(m)` scaled off the moment.
///
/// For `xi > 0` this is `m_i / (|m_i|^q + xi)` per coordinate. For `xi = 0`
/// the division form is undefined at `m_i = 0`, so the sign form
/// `sign(m_i) * |m_i|^(1-q)` is used instead; it is total and agrees with the
/// division form wherever both are defined.
pub fn rame_direction(m: &[f64], q: f64, xi: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::config(format!("q must satisfy 0 <= q < 1, got {q}")));
    }
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(Error::config(format!("xi must satisfy xi >= 0, got {xi}")));
    }
    crate::core::vector_finite(m, "rame_direction moment")?;
    if xi > 0.0 {
        Ok(m.iter()
            .map(|&mi| mi / (crate::core::abs_pow_kernel(mi, q) + xi))
            .collect())
    } else {
        // sign(m) .* |m|^(1-q); the exponent may equal 1 exactly (q = 0), in
        // which case the kernel returns |m| with no rounding.
        Ok(m.iter()
            .map(|&mi| crate::core::sign_kernel(mi) * crate::core::abs_pow_kernel(mi, 1.0 - q))
            .collect())
    }
}

/// One RAME iteration: `m' = beta_t m + alpha_t g`,
/// `update = -eta_t * h(m')`.
pub fn rame_step(
    state: &RameState,
    g: &GradientVector,
    cfg: &RameConfig,
) -> Result<(RameState, Vec<f64>)> {
    check_dim(state.dim(), g, "rame_step")?;
    let t = state.t + 1;
    let (alpha, beta, eta) = cfg.schedule.at(t)?;
    let m: Vec<f64> = state
        .m
        .iter()
        .zip(g.as_slice())
        .map(|(mi, gi)| beta * mi + alpha * gi)
        .collect();
    let direction = rame_direction(&m, cfg.q, cfg.xi)?;
    let update: Vec<f64> = direction.iter().map(|d| -eta * d).collect();
    Ok((RameState { m, t }, update))
}

/// Heavy-ball state; same moment recursion as RAME, linear update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShbState {
    pub m: Vec<f64>,
    pub t: u64,
}

impl ShbState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// One heavy-ball iteration: `m' = beta_t m + alpha_t g`, `update = -eta_t m'`.
pub fn shb_step(
    state: &ShbState,
    g: &GradientVector,
    sched: &Schedule,
) -> Result<(ShbState, Vec<f64>)> {
    check_dim(state.dim(), g, "shb_step")?;
    let t = state.t + 1;
    let (alpha, beta, eta) = sched.at(t)?;
    let m: Vec<f64> = state
        .m
        .iter()
        .zip(g.as_slice())
        .map(|(mi, gi)| beta * mi + alpha * gi)
        .collect();
    let update: Vec<f64> = m.iter().map(|mi| -eta * mi).collect();
    Ok((ShbState { m, t }, update))
}

/// Adam hyperparameters. `xi > 0` strictly: the second-moment denominator
/// cannot be combined into a sign form the way RAME's can.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub xi: f64,
    pub alpha: super::schedule::Sequence,
}

impl AdamConfig {
    pub fn new(beta1: f64, beta2: f64, xi: f64, alpha: super::schedule::Sequence) -> Result<Self> {
        if !(0.0..1.0).contains(&beta1) {
            return Err(Error::config(format!("beta1 must lie in [0, 1), got {beta1}")));
        }
        if !(0.0..1.0).contains(&beta2) {
            return Err(Error::config(format!("beta2 must lie in [0, 1), got {beta2}")));
        }
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::config(format!("adam requires xi > 0, got {xi}")));
        }
        Ok(Self {
            beta1,
            beta2,
            xi,
            alpha,
        })
    }

    /// The conventional defaults `(0.9, 0.999, 1e-7)` with a constant rate.
    pub fn with_defaults(alpha: f64) -> Result<Self> {
        Self::new(0.9, 0.999, 1e-7, super::schedule::Sequence::Constant(alpha))
    }
}

/// Adam state: first and second moment, both zero at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// One Adam iteration, without bias correction:
/// `m' = beta1 m + (1-beta1) g`, `v' = beta2 v + (1-beta2) g.*g`,
/// `update = -alpha_t * m' ./ (sqrt(v') + xi)`.
pub fn adam_step(
    state: &AdamState,
    g: &GradientVector,
    cfg: &AdamConfig,
) -> Result<(AdamState, Vec<f64>)> {
    check_dim(state.dim(), g, "adam_step")?;
    if !(cfg.xi > 0.0) {
        return Err(Error::config("adam requires xi > 0".to_string()));
    }
    let t = state.t + 1;
    let alpha = cfg.alpha.at(t);
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config(format!("alpha_{t} = {alpha} must be > 0")));
    }
    let gs = g.as_slice();
    let m: Vec<f64> = state
        .m
        .iter()
        .zip(gs)
        .map(|(mi, gi)| cfg.beta1 * mi + (1.0 - cfg.beta1) * gi)
        .collect();
    let v: Vec<f64> = state
        .v
        .iter()
        .zip(gs)
        .map(|(vi, gi)| cfg.beta2 * vi + (1.0 - cfg.beta2) * (gi * gi))
        .collect();
    let update: Vec<f64> = m
        .iter()
        .zip(&v)
        .map(|(mi, vi)| -alpha * mi / (vi.sqrt() + cfg.xi))
        .collect();
    Ok((AdamState { m, v, t }, update))
}

/// RMSprop is Adam with the first-moment coefficient forced to zero; the two
/// share state and configuration so the identity is definitional.
pub fn rmsprop_step(
    state: &AdamState,
    g: &GradientVector,
    cfg: &AdamConfig,
) -> Result<(AdamState, Vec<f64>)> {
    let forced = AdamConfig {
        beta1: 0.0,
        ..cfg.clone()
    };
    adam_step(state, g, &forced)
}

/// Heavy-ball in its two-point form, valid in the `eta_t = 1` regime:
/// `x_{t+1} = x_t - alpha_t g + beta_t (x_t - x_prev)`.
pub fn hb_alt_step(
    x_t: &ParamVector,
    x_prev: &ParamVector,
    g: &GradientVector,
    sched: &Schedule,
    t: u64,
) -> Result<ParamVector> {
    if x_prev.dim() != x_t.dim() {
        return Err(Error::DimMismatch {
            context: "hb_alt_step iterates",
            expected: x_t.dim(),
            found: x_prev.dim(),
        });
    }
    check_dim(x_t.dim(), g, "hb_alt_step")?;
    let (alpha, beta, eta) = sched.at(t)?;
    if eta != 1.0 {
        return Err(Error::config(format!(
            "two-point heavy-ball form requires eta_t = 1, got {eta}"
        )));
    }
    let values: Vec<f64> = x_t
        .as_slice()
        .iter()
        .zip(x_prev.as_slice())
        .zip(g.as_slice())
        .map(|((xt, xp), gi)| xt - alpha * gi + beta * (xt - xp))
        .collect();
    ParamVector::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::schedule::Sequence;

    fn grad(values: Vec<f64>) -> GradientVector {
        GradientVector::new(values).unwrap()
    }

    #[test]
    fn rame_direction_hand_values() {
        // sign(0.1) * 0.1^0.75 = 10^-0.75
        let d = rame_direction(&[0.1], 0.25, 0.0).unwrap();
        assert!((d[0] - 0.177_827_941_003_892_28).abs() < 1e-15);

        // zero moment gives zero direction, including signed zero
        let z = rame_direction(&[0.0, -0.0, 0.0], 0.5, 0.0).unwrap();
        assert_eq!(z, vec![0.0, 0.0, 0.0]);

        // q = 0 is the identity
        let id = rame_direction(&[1.0], 0.0, 0.0).unwrap();
        assert_eq!(id, vec![1.0]);

        assert!(rame_direction(&[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn rame_direction_division_and_sign_forms_agree() {
        let m = [0.3, -0.7, 1.3];
        let with_xi = rame_direction(&m, 0.25, 1e-300).unwrap();
        let sign_form = rame_direction(&m, 0.25, 0.0).unwrap();
        for (a, b) in with_xi.iter().zip(&sign_form) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn rame_step_single_step() {
        let cfg = RameConfig::new(0.25, 0.0, Schedule::constant(0.1, 0.9, 1.0).unwrap()).unwrap();
        let state = RameState::new(1);
        let (next, update) = rame_step(&state, &grad(vec![1.0]), &cfg).unwrap();
        assert_eq!(next.t, 1);
        assert!((next.m[0] - 0.1).abs() < 1e-16);
        assert!((update[0] + 0.177_827_941_003_892_28).abs() < 1e-15);
    }

    #[test]
    fn rame_step_zero_gradient_fixed_point() {
        let cfg = RameConfig::new(0.25, 0.0, Schedule::constant(0.1, 0.9, 1.0).unwrap()).unwrap();
        let state = RameState::new(2);
        let (next, update) = rame_step(&state, &grad(vec![0.0, 0.0]), &cfg).unwrap();
        assert_eq!(next.m, vec![0.0, 0.0]);
        assert_eq!(update, vec![0.0, 0.0]);
    }

    #[test]
    fn rame_q0_matches_shb_arithmetic() {
        let cfg = RameConfig::new(0.0, 0.0, Schedule::constant(0.1, 0.9, 1.0).unwrap()).unwrap();
        let state = RameState {
            m: vec![0.1],
            t: 5,
        };
        let (next, update) = rame_step(&state, &grad(vec![-1.0]), &cfg).unwrap();
        assert!((next.m[0] + 0.01).abs() < 1e-17);
        assert!((update[0] - 0.01).abs() < 1e-17);
    }

    #[test]
    fn shb_step_hand_values() {
        let sched = Schedule::constant(0.1, 0.9, 1.0).unwrap();
        let state = ShbState::new(1);
        let (next, update) = shb_step(&state, &grad(vec![1.0]), &sched).unwrap();
        assert_eq!(update, vec![-0.1]);
        assert_eq!(next.m, vec![0.1]);

        let (_, zero) = shb_step(&ShbState::new(2), &grad(vec![0.0, 0.0]), &sched).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);

        // beta = 0 reduces to vanilla gradient descent
        let plain = Schedule::constant(0.05, 0.0, 1.0).unwrap();
        let (_, u) = shb_step(&ShbState::new(1), &grad(vec![2.0]), &plain).unwrap();
        assert_eq!(u, vec![-0.1]);
    }

    #[test]
    fn adam_step_hand_values() {
        let cfg = AdamConfig::with_defaults(0.001).unwrap();
        let state = AdamState::new(1);
        let (next, update) = adam_step(&state, &grad(vec![1.0]), &cfg).unwrap();
        assert!((next.m[0] - 0.1).abs() < 1e-16);
        assert!((next.v[0] - 0.001).abs() < 1e-18);
        assert!((update[0] + 0.003_162_267_660_200_002).abs() < 1e-15);

        let (_, zero) = adam_step(&AdamState::new(1), &grad(vec![0.0]), &cfg).unwrap();
        assert_eq!(zero, vec![0.0]);
    }

    #[test]
    fn adam_rejects_nonpositive_xi() {
        assert!(AdamConfig::new(0.9, 0.999, 0.0, Sequence::Constant(0.001)).is_err());
        assert!(AdamConfig::new(0.9, 0.999, -1.0, Sequence::Constant(0.001)).is_err());
    }

    #[test]
    fn rmsprop_is_adam_with_beta1_zero() {
        let cfg = AdamConfig::new(0.9, 0.999, 1e-7, Sequence::Constant(0.001)).unwrap();
        let forced = AdamConfig {
            beta1: 0.0,
            ..cfg.clone()
        };
        let state = AdamState {
            m: vec![0.3, -0.2],
            v: vec![0.04, 0.09],
            t: 7,
        };
        let g = grad(vec![0.5, -1.5]);
        let (s1, u1) = rmsprop_step(&state, &g, &cfg).unwrap();
        let (s2, u2) = adam_step(&state, &g, &forced).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(u1, u2);

        // and the first-step value from substituting beta1 = 0
        let (_, u) = rmsprop_step(&AdamState::new(1), &grad(vec![1.0]), &cfg).unwrap();
        let expected = -0.001 * 1.0 / (0.001f64.sqrt() + 1e-7);
        assert!((u[0] - expected).abs() < 1e-15 * expected.abs());
    }

    #[test]
    fn hb_alt_fixed_point_and_plain_gradient() {
        let sched = Schedule::constant(0.1, 0.9, 1.0).unwrap();
        let x = ParamVector::new(vec![1.0, -2.0]).unwrap();
        let next = hb_alt_step(&x, &x, &grad(vec![0.0, 0.0]), &sched, 3).unwrap();
        assert_eq!(next, x);

        let plain = Schedule::constant(0.1, 0.0, 1.0).unwrap();
        let next = hb_alt_step(&x, &x, &grad(vec![1.0, 1.0]), &plain, 1).unwrap();
        assert_eq!(next.as_slice(), &[0.9, -2.1]);

        let bad_eta = Schedule::constant(0.1, 0.9, 0.5).unwrap();
        assert!(hb_alt_step(&x, &x, &grad(vec![0.0, 0.0]), &bad_eta, 1).is_err());
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let cfg = RameConfig::new(0.25, 0.0, Schedule::constant(0.1, 0.9, 1.0).unwrap()).unwrap();
        assert!(rame_step(&RameState::new(2), &grad(vec![1.0]), &cfg).is_err());
        let sched = Schedule::constant(0.1, 0.9, 1.0).unwrap();
        assert!(shb_step(&ShbState::new(1), &grad(vec![1.0, 2.0]), &sched).is_err());
    }
}
