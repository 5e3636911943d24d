//! End-to-end certified convergence: run deterministic RAME with the optimal
//! step length and machine-check every inequality the analysis relies on.

use serde::{Deserialize, Serialize};

use super::bounds::{
    alpha_max, beta_max, descent_certificate, direction_l2_bound, eta_star,
    inner_product_lower_bound, iteration_budget, moment_linf_bound, preconditioner_eig_bounds,
    theta_params,
};
use super::SmoothnessSpec;
use crate::core::{dot, l2_norm, linf_norm, ParamVector};
use crate::error::{Error, Result};
use crate::optimizers::rame_direction;
use crate::problems::Problem;

/// All inequality outcomes for one certified step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub t: u64,
    /// l2 norm of the step gradient (at the previous iterate).
    pub grad_l2: f64,
    pub eta_star: f64,
    pub descent_lhs: f64,
    pub descent_rhs_bound: f64,
    pub descent_pass: bool,
    pub m_linf: f64,
    pub m_linf_bound: f64,
    pub moment_pass: bool,
    pub precond_min: f64,
    pub precond_max: f64,
    pub precond_min_bound: f64,
    pub precond_max_bound: f64,
    pub precond_pass: bool,
    pub h_l2: f64,
    pub h_l2_bound: f64,
    pub direction_pass: bool,
    /// Inner-product lower bound; absent when the gradient already sits at or
    /// below epsilon (the bound's hypothesis fails there).
    pub ip_observed: f64,
    pub ip_bound: Option<f64>,
    pub ip_pass: Option<bool>,
}

/// Random-pair check of the smoothness inequality over visited iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessProbe {
    pub pairs: usize,
    pub max_violation: f64,
    pub pass: bool,
}

/// Machine-checked record of a certified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCertificate {
    pub epsilon: f64,
    pub q: f64,
    pub xi: f64,
    pub safety: f64,
    pub beta: f64,
    pub alpha: f64,
    pub beta_max: f64,
    pub alpha_max: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Sufficient iteration count from the analysis; available once the
    /// second iterate exists.
    pub t_budget: Option<u64>,
    pub per_step: Vec<StepCheck>,
    /// Smallest full-gradient l2 norm seen over iterate indices >= 2, and
    /// where it occurred.
    pub achieved_min_grad_l2: f64,
    pub achieved_at_t: u64,
    pub smoothness_probe: SmoothnessProbe,
    pub passed: bool,
    pub first_violation: Option<String>,
}

fn probe_smoothness(problem: &Problem, iterates: &[ParamVector], l: f64) -> Result<SmoothnessProbe> {
    let mut pairs = 0usize;
    let mut max_violation = f64::NEG_INFINITY;
    for (i, x) in iterates.iter().enumerate() {
        let fx = problem.eval_f(x)?;
        let gx = problem.eval_grad(x)?;
        for (j, y) in iterates.iter().enumerate() {
            if i == j {
                continue;
            }
            let fy = problem.eval_f(y)?;
            let diff: Vec<f64> = y
                .as_slice()
                .iter()
                .zip(x.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let model = fx + dot(gx.as_slice(), &diff)
                + 0.5 * l * diff.iter().map(|v| v * v).sum::<f64>();
            max_violation = max_violation.max(fy - model);
            pairs += 1;
        }
    }
    if pairs == 0 {
        max_violation = 0.0;
    }
    Ok(SmoothnessProbe {
        pairs,
        max_violation,
        pass: max_violation <= 1e-10,
    })
}

/// Run deterministic RAME with `eta_t = eta*_t`, `(beta, alpha)` placed at
/// `safety` times their admissible maxima, and check every per-step
/// inequality of the analysis until the gradient threshold is reached or the
/// iteration budget runs out.
///
/// The minimum-gradient guarantee quantifies over iterate indices 2..T+1, so
/// the first iterate is stepped through but not counted. A violated declared
/// bound (`sigma` or `l`) is an error, not a failed certificate.
pub fn run_certified(
    problem: &Problem,
    spec: &SmoothnessSpec,
    epsilon: f64,
    q: f64,
    xi: f64,
    safety: f64,
    x0: Option<&ParamVector>,
) -> Result<TheoryCertificate> {
    spec.validate()?;
    if problem.dim() != spec.d {
        return Err(Error::DimMismatch {
            context: "run_certified",
            expected: spec.d,
            found: problem.dim(),
        });
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::config(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(safety.is_finite() && 0.0 < safety && safety < 1.0) {
        return Err(Error::config(format!(
            "safety fraction must lie strictly inside (0, 1), got {safety}"
        )));
    }

    let b_max = beta_max(epsilon, spec.sigma, spec.d)?;
    let beta = safety * b_max;
    let a_max = alpha_max(beta, epsilon, spec.sigma, spec.d, xi, q)?;
    let alpha = safety * a_max;
    let (theta1, theta2) = theta_params(beta, alpha, epsilon, spec.sigma, spec.d, xi, q)?;

    let x_start = match x0 {
        Some(x) => x.clone(),
        None => problem.default_x0().clone(),
    };
    if x_start.dim() != spec.d {
        return Err(Error::DimMismatch {
            context: "run_certified start",
            expected: spec.d,
            found: x_start.dim(),
        });
    }

    let mut x = x_start.clone();
    let mut m = vec![0.0; spec.d];
    let mut per_step: Vec<StepCheck> = Vec::new();
    let mut iterates = vec![x.clone()];
    let mut t_budget: Option<u64> = None;
    let mut first_violation: Option<String> = None;
    let mut achieved: Option<(u64, f64)> = None;
    let mut min_grad: Option<(u64, f64)> = None;

    let mut step: u64 = 1;
    loop {
        // g_step = grad f(x_{step-1}); iterate index step-1 is inspected here.
        let g = problem.eval_grad(&x)?;
        let grad_l2 = l2_norm(g.as_slice());
        let grad_linf = linf_norm(g.as_slice());
        if grad_linf > spec.sigma + 1e-12 * (1.0 + spec.sigma) {
            return Err(Error::Infeasible(format!(
                "declared sigma = {} violated empirically: ||g||_inf = {grad_linf} at iterate {}",
                spec.sigma,
                step - 1
            )));
        }
        let iterate_index = step - 1;
        if iterate_index >= 2 {
            if min_grad.map_or(true, |(_, best)| grad_l2 < best) {
                min_grad = Some((iterate_index, grad_l2));
            }
            if grad_l2 <= epsilon {
                achieved = Some((iterate_index, grad_l2));
                break;
            }
            if let Some(budget) = t_budget {
                // indices 2..budget+1 are the guaranteed window
                if iterate_index >= budget + 1 {
                    break;
                }
            }
        }

        // m_step = beta m + alpha g
        for (mi, gi) in m.iter_mut().zip(g.as_slice()) {
            *mi = beta * *mi + alpha * gi;
        }

        // Lemma-style trajectory checks at t = step.
        let m_linf = linf_norm(&m);
        let m_linf_bound = moment_linf_bound(alpha, beta, spec.sigma, step);
        let moment_pass = m_linf <= m_linf_bound + 1e-12 * (1.0 + m_linf_bound);

        let precond = preconditioner_eig_bounds(&m, q, xi, alpha, beta, spec.sigma, step);
        let h = rame_direction(&m, q, xi)?;
        let h_l2 = l2_norm(&h);
        let h_l2_bound = direction_l2_bound(alpha, beta, spec.sigma, spec.d, q, step);
        let direction_pass = h_l2 <= h_l2_bound + 1e-12 * (1.0 + h_l2_bound);

        let (ip_observed, ip_bound, ip_pass) = if grad_l2 > epsilon {
            let check = inner_product_lower_bound(
                &g, &m, beta, alpha, spec.sigma, spec.d, xi, q, theta1, theta2,
            )?;
            (check.observed, Some(check.bound), Some(check.pass))
        } else {
            let h_dir = rame_direction(&m, q, xi)?;
            (dot(g.as_slice(), &h_dir), None, None)
        };

        // Optimal step and its descent certificate.
        let eta = match eta_star(&g, &m, q, xi, spec.l) {
            Ok(eta) => eta,
            Err(Error::Infeasible(message)) => {
                first_violation.get_or_insert(format!("step {step}: {message}"));
                break;
            }
            Err(other) => return Err(other),
        };
        let descent = descent_certificate(problem, &x, &g, &m, q, xi, spec.l, eta)?;

        let check = StepCheck {
            t: step,
            grad_l2,
            eta_star: eta,
            descent_lhs: descent.lhs,
            descent_rhs_bound: descent.rhs_bound,
            descent_pass: descent.pass,
            m_linf,
            m_linf_bound,
            moment_pass,
            precond_min: precond.observed_min,
            precond_max: precond.observed_max,
            precond_min_bound: precond.min_entry_bound,
            precond_max_bound: precond.max_entry_bound,
            precond_pass: precond.pass,
            h_l2,
            h_l2_bound,
            direction_pass,
            ip_observed,
            ip_bound,
            ip_pass,
        };
        if first_violation.is_none() {
            let failed = [
                (check.descent_pass, "descent inequality"),
                (check.moment_pass, "moment magnitude bound"),
                (check.precond_pass, "preconditioner entry bounds"),
                (check.direction_pass, "direction norm bound"),
                (check.ip_pass.unwrap_or(true), "inner-product lower bound"),
            ]
            .iter()
            .find(|(pass, _)| !pass)
            .map(|(_, name)| format!("step {step}: {name}"));
            first_violation = failed;
        }
        per_step.push(check);

        x = descent.x_next;
        if iterates.len() < 64 {
            iterates.push(x.clone());
        }

        if step == 2 {
            let f_x2 = problem.eval_f(&x)?;
            t_budget = Some(iteration_budget(
                spec.l,
                spec.d,
                alpha,
                beta,
                spec.sigma,
                xi,
                q,
                epsilon,
                f_x2,
                spec.f_lower,
            )?);
        }
        step += 1;
    }

    let smoothness_probe = probe_smoothness(problem, &iterates, spec.l)?;
    if !smoothness_probe.pass {
        return Err(Error::Infeasible(format!(
            "declared L = {} violated empirically: smoothness-model excess {:.3e}",
            spec.l, smoothness_probe.max_violation
        )));
    }

    let (achieved_at_t, achieved_min_grad_l2) =
        achieved.or(min_grad).unwrap_or((0, f64::INFINITY));
    let reached = achieved.is_some()
        && t_budget.map_or(false, |budget| achieved_at_t <= budget + 1);
    if achieved.is_none() && first_violation.is_none() {
        first_violation = Some(format!(
            "gradient threshold {epsilon} not reached within the iteration budget"
        ));
    }
    let passed = reached && first_violation.is_none();

    Ok(TheoryCertificate {
        epsilon,
        q,
        xi,
        safety,
        beta,
        alpha,
        beta_max: b_max,
        alpha_max: a_max,
        theta1,
        theta2,
        t_budget,
        per_step,
        achieved_min_grad_l2,
        achieved_at_t,
        smoothness_probe,
        passed,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_pseudo_huber;

    #[test]
    fn certifies_pseudo_huber() {
        let problem = make_pseudo_huber(4).unwrap();
        let spec = problem.smoothness_spec().unwrap();
        let cert = run_certified(&problem, &spec, 0.2, 0.25, 0.1, 0.5, None).unwrap();
        assert!(cert.passed, "certificate: {:?}", cert.first_violation);
        assert!(cert.achieved_min_grad_l2 <= 0.2);
        assert!(cert.per_step.iter().all(|s| s.descent_pass));
        assert!(cert.t_budget.unwrap() > 0);
    }

    #[test]
    fn immediate_pass_when_start_is_near_optimal() {
        let problem = make_pseudo_huber(4).unwrap();
        let spec = problem.smoothness_spec().unwrap();
        // gradient at 0.05 * ones has l2 norm ~0.1 < 0.2
        let x0 = ParamVector::new(vec![0.05; 4]).unwrap();
        let cert = run_certified(&problem, &spec, 0.2, 0.25, 0.1, 0.5, Some(&x0)).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.achieved_at_t, 2);
    }

    #[test]
    fn safety_outside_unit_interval_is_rejected() {
        let problem = make_pseudo_huber(4).unwrap();
        let spec = problem.smoothness_spec().unwrap();
        assert!(run_certified(&problem, &spec, 0.2, 0.25, 0.1, 1.5, None).is_err());
        assert!(run_certified(&problem, &spec, 0.2, 0.25, 0.1, 0.0, None).is_err());
    }

    #[test]
    fn q_zero_rejected_on_certified_path() {
        let problem = make_pseudo_huber(4).unwrap();
        let spec = problem.smoothness_spec().unwrap();
        let err = run_certified(&problem, &spec, 0.2, 0.0, 0.1, 0.5, None);
        assert!(err.is_err());
    }
}
