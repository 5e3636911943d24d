//! Diagonal quadratic objectives.

use super::Problem;
use crate::core::ParamVector;
use crate::error::{Error, Result};

/// `f(x) = 1/2 x' A x - b' x` with diagonal positive-semidefinite `A`.
///
/// The Lipschitz constant is the largest diagonal entry, exact for this
/// family. The optimal value is known whenever every zero diagonal entry has
/// a zero linear term.
pub fn make_quadratic(diag: Vec<f64>, b: Vec<f64>) -> Result<Problem> {
    if diag.is_empty() || diag.len() != b.len() {
        return Err(Error::config(format!(
            "quadratic needs matching nonempty diagonal and linear term, got {} and {}",
            diag.len(),
            b.len()
        )));
    }
    if !diag.iter().all(|a| a.is_finite()) || !b.iter().all(|v| v.is_finite()) {
        return Err(Error::non_finite("quadratic coefficients"));
    }
    if diag.iter().any(|&a| a < 0.0) {
        return Err(Error::config(
            "quadratic diagonal must be positive semidefinite".to_string(),
        ));
    }
    let dim = diag.len();
    let lipschitz = diag.iter().cloned().fold(0.0f64, f64::max);

    // f* = -1/2 sum b_i^2 / a_i over the curved coordinates, provided the
    // flat ones carry no linear term (otherwise f is unbounded below).
    let bounded = diag.iter().zip(&b).all(|(&a, &bi)| a > 0.0 || bi == 0.0);
    let x_star_f = if bounded {
        Some(
            diag.iter()
                .zip(&b)
                .filter(|(&a, _)| a > 0.0)
                .map(|(&a, &bi)| -0.5 * bi * bi / a)
                .sum(),
        )
    } else {
        None
    };

    let (diag_f, b_f) = (diag.clone(), b.clone());
    let f = move |x: &[f64]| -> f64 {
        x.iter()
            .zip(&diag_f)
            .zip(&b_f)
            .map(|((xi, ai), bi)| 0.5 * ai * xi * xi - bi * xi)
            .sum()
    };
    let (diag_g, b_g) = (diag, b);
    let grad = move |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(&diag_g)
            .zip(&b_g)
            .map(|((xi, ai), bi)| ai * xi - bi)
            .collect()
    };

    Ok(Problem {
        name: "quadratic".into(),
        dim,
        f: Box::new(f),
        grad: Box::new(grad),
        components: None,
        lipschitz: Some(lipschitz),
        grad_linf_bound: None,
        f_lower: x_star_f,
        x_star_f,
        default_x0: ParamVector::new(vec![1.0; dim])?,
        val_metric: None,
        train_metric: None,
    })
}

/// Positive-definite quadratic with eigenvalues log-spaced from 1 to `cond`,
/// zero linear term, optimum at the origin. Default start is `0.3 * ones`.
pub fn make_conditioned_quadratic(dim: usize, cond: f64) -> Result<Problem> {
    if dim == 0 {
        return Err(Error::config("quadratic needs dimension >= 1".to_string()));
    }
    if !(cond.is_finite() && cond >= 1.0) {
        return Err(Error::config(format!(
            "condition number must be >= 1, got {cond}"
        )));
    }
    let diag: Vec<f64> = (0..dim)
        .map(|i| {
            if dim == 1 {
                1.0
            } else {
                cond.powf(i as f64 / (dim - 1) as f64)
            }
        })
        .collect();
    let mut problem = make_quadratic(diag, vec![0.0; dim])?;
    problem.default_x0 = ParamVector::new(vec![0.3; dim])?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_quadratic() {
        let p = make_quadratic(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let x = ParamVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(p.eval_f(&x).unwrap(), 1.0);
        assert_eq!(p.eval_grad(&x).unwrap().as_slice(), &[1.0, 1.0]);
        assert_eq!(p.x_star_f(), Some(0.0));
    }

    #[test]
    fn diagonal_hand_values() {
        let p = make_quadratic(vec![1.0, 4.0], vec![0.0, 0.0]).unwrap();
        let x = ParamVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(p.eval_f(&x).unwrap(), 2.5);
        assert_eq!(p.eval_grad(&x).unwrap().as_slice(), &[1.0, 4.0]);
        assert_eq!(p.lipschitz(), Some(4.0));
    }

    #[test]
    fn stationarity_at_known_minimizer() {
        // b = A x_hat makes x_hat the minimizer
        let diag = vec![2.0, 3.0];
        let x_hat = [1.5, -0.5];
        let b: Vec<f64> = diag.iter().zip(&x_hat).map(|(a, x)| a * x).collect();
        let p = make_quadratic(diag, b).unwrap();
        let at_hat = ParamVector::new(x_hat.to_vec()).unwrap();
        let g = p.eval_grad(&at_hat).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
        assert!((p.eval_f(&at_hat).unwrap() - p.x_star_f().unwrap()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_psd() {
        assert!(make_quadratic(vec![1.0, -0.5], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn unbounded_flat_direction_has_no_optimum() {
        let p = make_quadratic(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(p.x_star_f(), None);
        assert_eq!(p.f_lower(), None);
    }

    #[test]
    fn conditioned_spectrum() {
        let p = make_conditioned_quadratic(10, 100.0).unwrap();
        assert_eq!(p.lipschitz(), Some(100.0));
        assert_eq!(p.x_star_f(), Some(0.0));
    }
}
