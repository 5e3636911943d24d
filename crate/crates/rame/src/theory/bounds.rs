//! The individual quantitative objects of the convergence analysis.
//!
//! All inequality checks use an additive slack of `1e-12 * (1 + magnitude)`
//! to absorb rounding; the analytic bounds themselves have far larger
//! margins along real trajectories.

use serde::{Deserialize, Serialize};

use crate::core::{abs_pow_kernel, dot, l2_norm, GradientVector, ParamVector};
use crate::error::{Error, Result};
use crate::optimizers::rame_direction;
use crate::problems::Problem;

fn slack(magnitude: f64) -> f64 {
    1e-12 * (1.0 + magnitude.abs())
}

fn check_positive(value: f64, name: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive, got {value}")))
    }
}

fn check_certified_q(q: f64) -> Result<()> {
    if q == 0.0 {
        return Err(Error::config(
            "q = 0 is not supported on the certified path (the step-size bound raises to 1/q)"
                .to_string(),
        ));
    }
    if !(0.0 < q && q < 1.0) {
        return Err(Error::config(format!(
            "certified path requires 0 < q < 1, got {q}"
        )));
    }
    Ok(())
}

/// Largest admissible momentum: `epsilon / (sqrt(d) sigma + epsilon)`.
pub fn beta_max(epsilon: f64, sigma: f64, d: usize) -> Result<f64> {
    check_positive(epsilon, "epsilon")?;
    check_positive(sigma, "sigma")?;
    if d == 0 {
        return Err(Error::config("dimension must be >= 1".to_string()));
    }
    let sqrt_d = (d as f64).sqrt();
    Ok(epsilon / (sqrt_d * sigma + epsilon))
}

/// Slack of the momentum bound:
/// `theta1 = (1 - beta) epsilon / (beta sqrt(d) sigma) - 1`,
/// positive exactly when `beta < beta_max`.
pub fn theta1_value(beta: f64, epsilon: f64, sigma: f64, d: usize) -> f64 {
    (1.0 - beta) * epsilon / (beta * (d as f64).sqrt() * sigma) - 1.0
}

/// Slack of the step-size bound:
/// `theta2 = xi - alpha^q sigma^q / ((1 - beta)^q theta1)`,
/// positive exactly when `alpha < alpha_max` (for valid `beta`).
pub fn theta2_value(
    beta: f64,
    alpha: f64,
    epsilon: f64,
    sigma: f64,
    d: usize,
    xi: f64,
    q: f64,
) -> f64 {
    let theta1 = theta1_value(beta, epsilon, sigma, d);
    xi - alpha.powf(q) * sigma.powf(q) / ((1.0 - beta).powf(q) * theta1)
}

/// Largest admissible common rate for a given `beta`:
/// `(xi (1-beta)^q / sigma^q * theta1)^(1/q)`.
pub fn alpha_max(beta: f64, epsilon: f64, sigma: f64, d: usize, xi: f64, q: f64) -> Result<f64> {
    check_positive(epsilon, "epsilon")?;
    check_positive(sigma, "sigma")?;
    check_positive(xi, "xi")?;
    check_certified_q(q)?;
    if d == 0 {
        return Err(Error::config("dimension must be >= 1".to_string()));
    }
    if !(beta.is_finite() && (0.0..1.0).contains(&beta) && beta > 0.0) {
        return Err(Error::config(format!("beta must lie in (0, 1), got {beta}")));
    }
    let theta1 = theta1_value(beta, epsilon, sigma, d);
    if theta1 <= 0.0 {
        return Err(Error::Infeasible(format!(
            "theta1 nonpositive ({theta1}): beta = {beta} is not below beta_max"
        )));
    }
    Ok((xi * (1.0 - beta).powf(q) / sigma.powf(q) * theta1).powf(1.0 / q))
}

/// Both slack parameters, failing when either is nonpositive.
#[allow(clippy::too_many_arguments)]
pub fn theta_params(
    beta: f64,
    alpha: f64,
    epsilon: f64,
    sigma: f64,
    d: usize,
    xi: f64,
    q: f64,
) -> Result<(f64, f64)> {
    check_positive(epsilon, "epsilon")?;
    check_positive(sigma, "sigma")?;
    check_positive(alpha, "alpha")?;
    check_positive(xi, "xi")?;
    check_certified_q(q)?;
    let theta1 = theta1_value(beta, epsilon, sigma, d);
    if theta1 <= 0.0 {
        return Err(Error::Infeasible(format!(
            "theta1 = {theta1} <= 0: the momentum bound is violated (beta too large)"
        )));
    }
    let theta2 = theta2_value(beta, alpha, epsilon, sigma, d, xi, q);
    if theta2 <= 0.0 {
        return Err(Error::Infeasible(format!(
            "theta2 = {theta2} <= 0: the step-size bound is violated (alpha too large)"
        )));
    }
    Ok((theta1, theta2))
}

/// The step length that minimizes the L-smooth quadratic model of the
/// objective change along `h(m)`:
/// `eta* = <g, h(m)> / (L ||h(m)||^2)`.
pub fn eta_star(g: &GradientVector, m: &[f64], q: f64, xi: f64, l: f64) -> Result<f64> {
    check_positive(xi, "xi")?;
    check_positive(l, "L")?;
    if g.dim() != m.len() {
        return Err(Error::DimMismatch {
            context: "eta_star",
            expected: m.len(),
            found: g.dim(),
        });
    }
    let h = rame_direction(m, q, xi)?;
    let h_norm_sq: f64 = h.iter().map(|v| v * v).sum();
    if h_norm_sq == 0.0 {
        return Err(Error::Infeasible(
            "eta_star undefined: h(m) is the zero vector".to_string(),
        ));
    }
    let ip = dot(g.as_slice(), &h);
    if ip <= 0.0 {
        return Err(Error::Infeasible(format!(
            "eta_star not certified: <g, h(m)> = {ip} is nonpositive"
        )));
    }
    Ok(ip / (l * h_norm_sq))
}

/// Outcome of the per-step descent inequality
/// `f(x') - f(x) <= -<g, h(m)>^2 / (2 L ||h(m)||^2)` at `eta = eta*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentCheck {
    pub lhs: f64,
    pub rhs_bound: f64,
    pub pass: bool,
    /// The iterate the certified step produced.
    pub x_next: ParamVector,
}

/// Evaluate both sides of the descent inequality for the step
/// `x' = x - eta_used * h(m)`.
#[allow(clippy::too_many_arguments)]
pub fn descent_certificate(
    problem: &Problem,
    x: &ParamVector,
    g: &GradientVector,
    m: &[f64],
    q: f64,
    xi: f64,
    l: f64,
    eta_used: f64,
) -> Result<DescentCheck> {
    check_positive(l, "L")?;
    check_positive(xi, "xi")?;
    let h = rame_direction(m, q, xi)?;
    let h_norm_sq: f64 = h.iter().map(|v| v * v).sum();
    if h_norm_sq == 0.0 {
        return Err(Error::Infeasible(
            "descent certificate undefined: h(m) is the zero vector".to_string(),
        ));
    }
    let ip = dot(g.as_slice(), &h);
    let update: Vec<f64> = h.iter().map(|hi| -eta_used * hi).collect();
    let x_next = x.add(&update)?;
    let lhs = problem.eval_f(&x_next)? - problem.eval_f(x)?;
    let rhs_bound = -ip * ip / (2.0 * l * h_norm_sq);
    let pass = lhs <= rhs_bound + slack(lhs);
    Ok(DescentCheck {
        lhs,
        rhs_bound,
        pass,
        x_next,
    })
}

fn beta_pow_t(beta: f64, t: u64) -> f64 {
    beta.powf(t as f64)
}

/// Moment magnitude bound: `||m_t||_inf <= alpha sigma (1 - beta^t) / (1 - beta)`.
pub fn moment_linf_bound(alpha: f64, beta: f64, sigma: f64, t: u64) -> f64 {
    alpha * sigma * (1.0 - beta_pow_t(beta, t)) / (1.0 - beta)
}

/// Entry bounds of the diagonal preconditioner `|m_t|^q + xi` against the
/// observed entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecondCheck {
    pub max_entry_bound: f64,
    pub min_entry_bound: f64,
    pub observed_max: f64,
    pub observed_min: f64,
    pub pass: bool,
}

/// `max entry <= alpha^q sigma^q (1-beta^t)^q / (1-beta)^q + xi` and
/// `min entry >= xi`.
#[allow(clippy::too_many_arguments)]
pub fn preconditioner_eig_bounds(
    m: &[f64],
    q: f64,
    xi: f64,
    alpha: f64,
    beta: f64,
    sigma: f64,
    t: u64,
) -> PrecondCheck {
    let entries: Vec<f64> = m.iter().map(|&mi| abs_pow_kernel(mi, q) + xi).collect();
    let observed_max = entries.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let observed_min = entries.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_entry_bound = moment_linf_bound(alpha, beta, sigma, t).powf(q) + xi;
    let min_entry_bound = xi;
    let pass = observed_max <= max_entry_bound + slack(max_entry_bound)
        && observed_min >= min_entry_bound - slack(min_entry_bound);
    PrecondCheck {
        max_entry_bound,
        min_entry_bound,
        observed_max,
        observed_min,
        pass,
    }
}

/// Direction norm bound:
/// `||m/(|m|^q + xi)||_2 <= d (alpha sigma (1-beta^t) / (1-beta))^(1-q)`.
pub fn direction_l2_bound(alpha: f64, beta: f64, sigma: f64, d: usize, q: f64, t: u64) -> f64 {
    d as f64 * moment_linf_bound(alpha, beta, sigma, t).powf(1.0 - q)
}

/// Outcome of the inner-product lower bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerProductCheck {
    pub bound: f64,
    pub observed: f64,
    pub pass: bool,
}

/// While `||g_t||_2 > epsilon` and `(beta, alpha)` sit strictly inside their
/// bounds:
/// `<g, m/(|m|^q+xi)>  >=  alpha ||g||_2 beta (1-beta)^q sqrt(d) sigma theta1 theta2
///                         / ([alpha^q sigma^q + xi (1-beta)^q] xi)`.
#[allow(clippy::too_many_arguments)]
pub fn inner_product_lower_bound(
    g: &GradientVector,
    m: &[f64],
    beta: f64,
    alpha: f64,
    sigma: f64,
    d: usize,
    xi: f64,
    q: f64,
    theta1: f64,
    theta2: f64,
) -> Result<InnerProductCheck> {
    check_positive(xi, "xi")?;
    check_certified_q(q)?;
    if g.dim() != m.len() {
        return Err(Error::DimMismatch {
            context: "inner_product_lower_bound",
            expected: m.len(),
            found: g.dim(),
        });
    }
    let h = rame_direction(m, q, xi)?;
    let observed = dot(g.as_slice(), &h);
    let g_l2 = l2_norm(g.as_slice());
    let numerator =
        alpha * g_l2 * beta * (1.0 - beta).powf(q) * (d as f64).sqrt() * sigma * theta1 * theta2;
    let denominator = (alpha.powf(q) * sigma.powf(q) + xi * (1.0 - beta).powf(q)) * xi;
    let bound = numerator / denominator;
    let pass = observed >= bound - slack(bound);
    Ok(InnerProductCheck {
        bound,
        observed,
        pass,
    })
}

/// Sufficient iteration count for the min-gradient guarantee:
/// `ceil( 2 L d [alpha^q sigma^q + xi (1-beta)^q]^2 xi^2
///        / (epsilon^2 (alpha^q sigma^q beta (1-beta) theta1 theta2)^2)
///        * (f(x_2) - f_lower) ) + 1`,
/// using the declared lower bound in place of the unknown optimal value
/// (which can only enlarge the budget).
#[allow(clippy::too_many_arguments)]
pub fn iteration_budget(
    l: f64,
    d: usize,
    alpha: f64,
    beta: f64,
    sigma: f64,
    xi: f64,
    q: f64,
    epsilon: f64,
    f_at_x2: f64,
    f_star_lower: f64,
) -> Result<u64> {
    check_positive(l, "L")?;
    let (theta1, theta2) = theta_params(beta, alpha, epsilon, sigma, d, xi, q)?;
    let gap = (f_at_x2 - f_star_lower).max(0.0);
    let aq_sq = alpha.powf(q) * sigma.powf(q);
    let bracket = aq_sq + xi * (1.0 - beta).powf(q);
    let numerator = 2.0 * l * d as f64 * bracket * bracket * xi * xi;
    let denominator = {
        let inner = aq_sq * beta * (1.0 - beta) * theta1 * theta2;
        epsilon * epsilon * inner * inner
    };
    let rhs = numerator / denominator * gap;
    if !rhs.is_finite() || rhs >= 9.0e18 {
        return Err(Error::Infeasible(format!(
            "iteration budget overflows ({rhs:e})"
        )));
    }
    Ok(rhs.ceil() as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::GradientVector;

    #[test]
    fn beta_max_hand_values() {
        let b = beta_max(0.2, 1.0, 4).unwrap();
        assert!((b - 0.090_909_090_909_090_91).abs() < 1e-15);
        // asymptotic sanity: bound -> 1 as epsilon grows
        assert!(beta_max(1e6, 1.0, 4).unwrap() > 0.999);
        // symmetry point epsilon = sigma sqrt(d)
        assert!((beta_max(2.0, 1.0, 4).unwrap() - 0.5).abs() < 1e-15);
        assert!(beta_max(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn theta1_hand_value() {
        let t1 = theta1_value(0.05, 0.2, 1.0, 4);
        assert!((t1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn alpha_max_hand_value() {
        // (0.1 * 0.95^0.25 * 0.9)^4 = 1e-4 * 0.95 * 0.9^4 = 6.23295e-5
        let a = alpha_max(0.05, 0.2, 1.0, 4, 0.1, 0.25).unwrap();
        assert!((a - 6.232_95e-5).abs() < 1e-11, "alpha_max = {a}");
        // homogeneity: scaling xi by c scales alpha_max by c^(1/q)
        let a2 = alpha_max(0.05, 0.2, 1.0, 4, 0.2, 0.25).unwrap();
        assert!((a2 / a - 2f64.powi(4)).abs() < 1e-9);
        // beta at the boundary is infeasible
        let bm = beta_max(0.2, 1.0, 4).unwrap();
        assert!(alpha_max(bm, 0.2, 1.0, 4, 0.1, 0.25).is_err());
        // q = 0 unsupported
        assert!(alpha_max(0.05, 0.2, 1.0, 4, 0.1, 0.0).is_err());
    }

    #[test]
    fn alpha_max_vanishes_at_beta_max() {
        let bm = beta_max(0.2, 1.0, 4).unwrap();
        let near = alpha_max(bm * (1.0 - 1e-9), 0.2, 1.0, 4, 0.1, 0.25).unwrap();
        let mid = alpha_max(bm * 0.5, 0.2, 1.0, 4, 0.1, 0.25).unwrap();
        assert!(near < mid * 1e-20);
    }

    #[test]
    fn theta_params_boundaries() {
        let (t1, t2) = theta_params(0.05, 3e-5, 0.2, 1.0, 4, 0.1, 0.25).unwrap();
        assert!(t1 > 0.0 && t2 > 0.0);
        // alpha at alpha_max puts theta2 at (numerically) zero
        let am = alpha_max(0.05, 0.2, 1.0, 4, 0.1, 0.25).unwrap();
        let t2_boundary = theta2_value(0.05, am, 0.2, 1.0, 4, 0.1, 0.25);
        assert!(t2_boundary.abs() < 1e-12);
        // any alpha below alpha_max gives theta2 > 0
        assert!(theta2_value(0.05, am * 0.999_999, 0.2, 1.0, 4, 0.1, 0.25) > 0.0);
        assert!(theta_params(0.05, am * 1.01, 0.2, 1.0, 4, 0.1, 0.25).is_err());
    }

    #[test]
    fn eta_star_hand_values() {
        // scalar: g=1, m=1, q=0.5, xi=1, L=1 -> h=0.5, eta* = 0.5/0.25 = 2
        let g = GradientVector::new(vec![1.0]).unwrap();
        let eta = eta_star(&g, &[1.0], 0.5, 1.0, 1.0).unwrap();
        assert!((eta - 2.0).abs() < 1e-14);
        // doubling L halves eta*
        let eta_2l = eta_star(&g, &[1.0], 0.5, 1.0, 2.0).unwrap();
        assert!((eta_2l - 1.0).abs() < 1e-14);
        // zero direction and nonpositive inner product are flagged
        assert!(eta_star(&g, &[0.0], 0.5, 1.0, 1.0).is_err());
        assert!(eta_star(&g, &[-1.0], 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn eta_star_aligned_unit_case() {
        // g parallel to h with ||h|| = 1 and L = 1 gives eta* = ||g||
        // choose m so that h = m/(|m|^0.5 + xi) has unit norm: m scalar with
        // m/(sqrt(m)+xi) = 1 at xi = 0.25 -> m = 1.900612...; solve numerically
        let mut m = 1.5f64;
        for _ in 0..60 {
            let f = m / (m.sqrt() + 0.25) - 1.0;
            let df = (m.sqrt() / 2.0 + 0.25) / (m.sqrt() + 0.25).powi(2);
            m -= f / df;
        }
        let g = GradientVector::new(vec![3.7]).unwrap();
        let eta = eta_star(&g, &[m], 0.5, 0.25, 1.0).unwrap();
        assert!((eta - 3.7).abs() < 1e-9);
    }

    #[test]
    fn moment_bound_hand_values() {
        assert!((moment_linf_bound(0.1, 0.9, 1.0, 1) - 0.1).abs() < 1e-15);
        // geometric series limit alpha sigma / (1 - beta)
        assert!((moment_linf_bound(0.1, 0.9, 1.0, 10_000) - 1.0).abs() < 1e-12);
        // beta = 0: alpha sigma for all t >= 1
        assert_eq!(moment_linf_bound(0.1, 0.0, 2.0, 5), 0.2);
    }

    #[test]
    fn precond_bounds_on_zero_moment() {
        let check = preconditioner_eig_bounds(&[0.0, 0.0], 0.5, 0.1, 0.1, 0.9, 1.0, 3);
        assert_eq!(check.observed_min, 0.1);
        assert_eq!(check.observed_max, 0.1);
        assert!(check.pass);
    }

    #[test]
    fn direction_bound_special_cases() {
        // d=1, t=1: alpha^(1-q) sigma^(1-q)
        let b = direction_l2_bound(0.01, 0.9, 2.0, 1, 0.25, 1);
        assert!((b - (0.01f64 * 2.0).powf(0.75)).abs() < 1e-15);
        // q=0 collapses to d x the moment bound
        let b0 = direction_l2_bound(0.1, 0.9, 1.0, 3, 0.0, 7);
        assert!((b0 - 3.0 * moment_linf_bound(0.1, 0.9, 1.0, 7)).abs() < 1e-15);
    }

    #[test]
    fn budget_zero_gap_and_linearity() {
        let t = iteration_budget(1.0, 4, 3e-5, 0.05, 1.0, 0.1, 0.25, 0.2, 0.0, 0.0).unwrap();
        assert_eq!(t, 1);
        let t1 = iteration_budget(1.0, 4, 3e-5, 0.05, 1.0, 0.1, 0.25, 0.2, 1.0, 0.0).unwrap();
        let t2 = iteration_budget(1.0, 4, 3e-5, 0.05, 1.0, 0.1, 0.25, 0.2, 2.0, 0.0).unwrap();
        // doubling the gap doubles the pre-ceiling value
        let raw1 = (t1 - 1) as f64;
        let raw2 = (t2 - 1) as f64;
        assert!((raw2 / raw1 - 2.0).abs() < 1e-3);
    }
}
