//! Quantitative convergence theory for deterministic RAME on L-smooth
//! objectives with a uniformly bounded gradient: admissible `(beta, alpha)`
//! regions, the optimal per-step length, moment and direction bounds, and the
//! end-to-end certified-convergence harness.

mod bounds;
mod certify;

pub use bounds::{
    alpha_max, beta_max, descent_certificate, direction_l2_bound, eta_star,
    inner_product_lower_bound, iteration_budget, moment_linf_bound, preconditioner_eig_bounds,
    theta1_value, theta2_value, theta_params, DescentCheck, InnerProductCheck, PrecondCheck,
};
pub use certify::{run_certified, SmoothnessProbe, StepCheck, TheoryCertificate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared analytic data for a problem: smoothness constant `l`, uniform
/// gradient l-infinity bound `sigma`, dimension, and a lower bound on `f`.
/// The constants are declared, not estimated; the harness spot-checks them
/// empirically and treats a violation as an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSpec {
    pub l: f64,
    pub sigma: f64,
    pub d: usize,
    pub f_lower: f64,
}

impl SmoothnessSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(Error::config(format!("L must be positive, got {}", self.l)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::config(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.d == 0 {
            return Err(Error::config("dimension must be >= 1".to_string()));
        }
        if !self.f_lower.is_finite() {
            return Err(Error::config("f_lower must be finite".to_string()));
        }
        Ok(())
    }
}
