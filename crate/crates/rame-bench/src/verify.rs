//! Verification suites behind `rame-bench verify`: the dynamic-system
//! equivalence, the certified-convergence theorem harness, and the
//! finite-difference gradient check.

use serde::{Deserialize, Serialize};

use rame::core::{norms, ParamVector, RngHandle};
use rame::dynamics::verify_equivalence;
use rame::optimizers::{RameConfig, Schedule};
use rame::problems::{
    finite_difference_gradient, make_logistic, make_mlp, make_pseudo_huber, make_quadratic,
    Problem, SpiralSpec,
};
use rame::theory::{run_certified, TheoryCertificate};
use rame::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub observed: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<TheoryCertificate>,
}

impl VerifyReport {
    fn conclude(mut self) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass);
        self
    }

    pub fn render_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: observed {:.6e} vs bound {:.6e}{}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.observed,
                    c.bound,
                    if c.detail.is_empty() {
                        String::new()
                    } else {
                        format!(" ({})", c.detail)
                    }
                )
            })
            .collect();
        lines.push(format!(
            "suite {}: {}",
            self.suite,
            if self.pass { "PASS" } else { "FAIL" }
        ));
        lines
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Steering-recursion equivalence across the q grid on a finite-sum problem
/// and a smooth separable one.
pub fn verify_prop1(steps: u64, tol: f64, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let data_rng = RngHandle::new(seed, "problem-data");
    let problems: Vec<Problem> = vec![
        make_logistic(200, 10, &data_rng)?,
        make_pseudo_huber(4)?,
    ];
    for problem in &problems {
        for &q in &[0.0, 0.125, 0.25, 0.5] {
            let cfg = RameConfig::new(q, 0.0, Schedule::constant(0.01, 0.9, 1.0)?)?;
            let report = verify_equivalence(problem, &cfg, problem.default_x0(), steps, tol)?;
            let observed = report.max_trajectory_rel.max(report.max_roundtrip_rel);
            checks.push(CheckResult {
                name: format!("steering equivalence {} q={q}", problem.name()),
                pass: report.pass,
                observed,
                bound: tol,
                detail: format!(
                    "trajectory {:.3e}, moment round-trip {:.3e} over {} steps",
                    report.max_trajectory_rel, report.max_roundtrip_rel, report.steps
                ),
            });
        }
    }
    Ok(VerifyReport {
        suite: "prop1".into(),
        pass: false,
        checks,
        certificate: None,
    }
    .conclude())
}

fn worst<I: Iterator<Item = f64>>(iter: I) -> f64 {
    iter.fold(f64::NEG_INFINITY, f64::max)
}

/// Certified convergence on the pseudo-Huber objective.
pub fn verify_theory(epsilon: f64, dim: usize, q: f64, xi: f64, safety: f64) -> Result<VerifyReport> {
    let problem = make_pseudo_huber(dim)?;
    let spec = problem
        .smoothness_spec()
        .expect("pseudo-huber declares full smoothness data");
    let cert = run_certified(&problem, &spec, epsilon, q, xi, safety, None)?;

    let steps = cert.per_step.len();
    let mut checks = vec![CheckResult {
        name: "min-gradient threshold within budget".into(),
        pass: cert.passed,
        observed: cert.achieved_min_grad_l2,
        bound: epsilon,
        detail: format!(
            "reached at iterate {} of budget {:?}{}",
            cert.achieved_at_t,
            cert.t_budget,
            cert.first_violation
                .as_deref()
                .map(|v| format!("; violation: {v}"))
                .unwrap_or_default()
        ),
    }];
    checks.push(CheckResult {
        name: "descent inequality per step".into(),
        pass: cert.per_step.iter().all(|s| s.descent_pass),
        observed: worst(cert.per_step.iter().map(|s| s.descent_lhs - s.descent_rhs_bound)),
        bound: 0.0,
        detail: format!("{steps} steps"),
    });
    checks.push(CheckResult {
        name: "moment magnitude bound per step".into(),
        pass: cert.per_step.iter().all(|s| s.moment_pass),
        observed: worst(cert.per_step.iter().map(|s| s.m_linf - s.m_linf_bound)),
        bound: 0.0,
        detail: format!("{steps} steps"),
    });
    checks.push(CheckResult {
        name: "preconditioner entry bounds per step".into(),
        pass: cert.per_step.iter().all(|s| s.precond_pass),
        observed: worst(
            cert.per_step
                .iter()
                .map(|s| (s.precond_max - s.precond_max_bound).max(s.precond_min_bound - s.precond_min)),
        ),
        bound: 0.0,
        detail: format!("{steps} steps"),
    });
    checks.push(CheckResult {
        name: "direction norm bound per step".into(),
        pass: cert.per_step.iter().all(|s| s.direction_pass),
        observed: worst(cert.per_step.iter().map(|s| s.h_l2 - s.h_l2_bound)),
        bound: 0.0,
        detail: format!("{steps} steps"),
    });
    let applicable = cert.per_step.iter().filter(|s| s.ip_bound.is_some()).count();
    checks.push(CheckResult {
        name: "inner-product lower bound while gradient above epsilon".into(),
        pass: cert.per_step.iter().all(|s| s.ip_pass.unwrap_or(true)),
        observed: worst(
            cert.per_step
                .iter()
                .filter_map(|s| s.ip_bound.map(|b| b - s.ip_observed)),
        ),
        bound: 0.0,
        detail: format!("{applicable} applicable steps"),
    });
    checks.push(CheckResult {
        name: "smoothness model probe".into(),
        pass: cert.smoothness_probe.pass,
        observed: cert.smoothness_probe.max_violation,
        bound: 1e-10,
        detail: format!("{} iterate pairs", cert.smoothness_probe.pairs),
    });

    Ok(VerifyReport {
        suite: "theory".into(),
        pass: false,
        checks,
        certificate: Some(cert),
    }
    .conclude())
}

fn gradcheck_problem(
    problem: &Problem,
    points: usize,
    scale: f64,
    around_default: bool,
    threshold: f64,
    rng: &RngHandle,
) -> Result<CheckResult> {
    let mut stream = rng.stream();
    let mut worst_rel = 0.0f64;
    for _ in 0..points {
        let x0 = problem.default_x0().as_slice();
        let values: Vec<f64> = (0..problem.dim())
            .enumerate()
            .map(|(i, _)| {
                let noise = scale * stream.normal();
                if around_default {
                    x0[i] + noise
                } else {
                    noise
                }
            })
            .collect();
        let x = ParamVector::new(values)?;
        let analytic = problem.eval_grad(&x)?;
        let fd = finite_difference_gradient(problem, &x, None)?;
        let err = analytic
            .as_slice()
            .iter()
            .zip(fd.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let denom = norms(analytic.as_slice())?.linf.max(1e-6);
        worst_rel = worst_rel.max(err / denom);
    }
    Ok(CheckResult {
        name: format!("gradient oracle {}", problem.name()),
        pass: worst_rel <= threshold,
        observed: worst_rel,
        bound: threshold,
        detail: format!("{points} seeded points"),
    })
}

/// Analytic gradients against central finite differences for every problem
/// family.
pub fn verify_gradcheck(seed: u64) -> Result<VerifyReport> {
    let data_rng = RngHandle::new(seed, "problem-data");
    let mut quad_stream = RngHandle::new(seed, "gradcheck-quadratic").stream();
    let diag: Vec<f64> = (0..6).map(|_| quad_stream.uniform_range(0.5, 3.0)).collect();
    let b: Vec<f64> = (0..6).map(|_| quad_stream.normal()).collect();

    let quadratic = make_quadratic(diag, b)?;
    let pseudo_huber = make_pseudo_huber(5)?;
    let logistic = make_logistic(40, 7, &data_rng)?;
    let spiral = SpiralSpec {
        samples: 50,
        noise: 0.08,
        turns: 1.5,
    };
    let mlp = make_mlp(&[2, 8, 8, 2], &spiral, 10, &data_rng)?;

    let points_rng = RngHandle::new(seed, "gradcheck-points");
    let checks = vec![
        gradcheck_problem(&quadratic, 20, 1.0, false, 1e-6, &points_rng.derive("quadratic"))?,
        gradcheck_problem(
            &pseudo_huber,
            20,
            1.0,
            false,
            1e-6,
            &points_rng.derive("pseudo_huber"),
        )?,
        gradcheck_problem(&logistic, 20, 1.0, false, 1e-6, &points_rng.derive("logistic"))?,
        gradcheck_problem(&mlp, 20, 0.5, true, 1e-4, &points_rng.derive("mlp"))?,
    ];
    Ok(VerifyReport {
        suite: "gradcheck".into(),
        pass: false,
        checks,
        certificate: None,
    }
    .conclude())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradcheck_suite_passes() {
        let report = verify_gradcheck(17).unwrap();
        assert!(report.pass, "{:#?}", report.checks);
    }

    #[test]
    fn prop1_suite_passes_quickly() {
        let report = verify_prop1(50, 1e-9, 17).unwrap();
        assert!(report.pass, "{:#?}", report.checks);
        assert_eq!(report.checks.len(), 8);
    }
}
