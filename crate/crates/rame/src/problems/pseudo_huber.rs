//! Separable pseudo-Huber objective, the certified-convergence workhorse:
//! 1-smooth with gradient l-infinity norm strictly below 1 everywhere.

use super::Problem;
use crate::core::ParamVector;
use crate::error::{Error, Result};

/// `f(x) = sum_i (sqrt(1 + x_i^2) - 1)`, gradient `x_i / sqrt(1 + x_i^2)`.
pub fn make_pseudo_huber(dim: usize) -> Result<Problem> {
    if dim == 0 {
        return Err(Error::config("pseudo-huber needs dimension >= 1".to_string()));
    }
    let f = |x: &[f64]| -> f64 { x.iter().map(|xi| (1.0 + xi * xi).sqrt() - 1.0).sum() };
    let grad =
        |x: &[f64]| -> Vec<f64> { x.iter().map(|xi| xi / (1.0 + xi * xi).sqrt()).collect() };
    Ok(Problem {
        name: "pseudo_huber".into(),
        dim,
        f: Box::new(f),
        grad: Box::new(grad),
        components: None,
        lipschitz: Some(1.0),
        grad_linf_bound: Some(1.0),
        f_lower: Some(0.0),
        x_star_f: Some(0.0),
        default_x0: ParamVector::new(vec![3.0; dim])?,
        val_metric: None,
        train_metric: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_minimum_at_origin() {
        let p = make_pseudo_huber(3).unwrap();
        let zero = ParamVector::zeros(3).unwrap();
        assert_eq!(p.eval_f(&zero).unwrap(), 0.0);
        assert_eq!(p.eval_grad(&zero).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_values_at_one() {
        let p = make_pseudo_huber(1).unwrap();
        let x = ParamVector::new(vec![1.0]).unwrap();
        assert!((p.eval_f(&x).unwrap() - 0.414_213_562_373_095_05).abs() < 1e-15);
        assert!((p.eval_grad(&x).unwrap().as_slice()[0] - 0.707_106_781_186_547_5).abs() < 1e-15);
    }

    #[test]
    fn gradient_bounded_by_one() {
        let p = make_pseudo_huber(1).unwrap();
        for &v in &[0.5, 3.0, 100.0, 1e6] {
            let x = ParamVector::new(vec![v]).unwrap();
            let g = p.eval_grad(&x).unwrap();
            assert!(g.as_slice()[0].abs() < 1.0);
        }
        // beyond ~6.7e7 the ratio rounds to exactly 1 in f64; never above
        for &v in &[1e8, -3e12] {
            let x = ParamVector::new(vec![v]).unwrap();
            let g = p.eval_grad(&x).unwrap();
            assert!(g.as_slice()[0].abs() <= 1.0);
        }
    }
}
