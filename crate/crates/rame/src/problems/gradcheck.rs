//! Central finite-difference gradient oracle.

use super::Problem;
use crate::core::{GradientVector, ParamVector};
use crate::error::Result;

/// Central differences `(f(x + h_i e_i) - f(x - h_i e_i)) / (2 h_i)` per
/// coordinate, with `h_i = base * (1 + |x_i|)` and `base` defaulting to 1e-5.
pub fn finite_difference_gradient(
    problem: &Problem,
    x: &ParamVector,
    base_step: Option<f64>,
) -> Result<GradientVector> {
    let base = base_step.unwrap_or(1e-5);
    let mut point = x.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let original = point[i];
        let h = base * (1.0 + original.abs());
        point[i] = original + h;
        let plus = problem.eval_f(&ParamVector::new(point.clone())?)?;
        point[i] = original - h;
        let minus = problem.eval_f(&ParamVector::new(point.clone())?)?;
        point[i] = original;
        grad.push((plus - minus) / (2.0 * h));
    }
    GradientVector::for_dim(grad, x.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_pseudo_huber, make_quadratic};

    #[test]
    fn exact_on_quadratics() {
        let p = make_quadratic(vec![1.0], vec![0.0]).unwrap();
        let x = ParamVector::new(vec![2.0]).unwrap();
        let fd = finite_difference_gradient(&p, &x, None).unwrap();
        assert!((fd.as_slice()[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_on_constant_direction() {
        // flat coordinate of a PSD quadratic has zero gradient
        let p = make_quadratic(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let x = ParamVector::new(vec![5.0, 0.5]).unwrap();
        let fd = finite_difference_gradient(&p, &x, None).unwrap();
        assert!(fd.as_slice()[0].abs() < 1e-10);
    }

    #[test]
    fn matches_pseudo_huber_analytic() {
        let p = make_pseudo_huber(1).unwrap();
        let x = ParamVector::new(vec![1.0]).unwrap();
        let fd = finite_difference_gradient(&p, &x, None).unwrap();
        assert!((fd.as_slice()[0] - 0.707_106_781_186_547_5).abs() < 1e-8);
    }
}
