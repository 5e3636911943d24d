//! Synthetic l2-regularized logistic regression with finite-sum structure.

use std::sync::Arc;

use super::{Component, Problem};
use crate::core::{ParamVector, RngHandle};
use crate::error::{Error, Result};

struct Sample {
    a: Vec<f64>,
    y: f64, // +1 or -1
}

/// Numerically stable `ln(1 + exp(w))`.
fn ln_1p_exp(w: f64) -> f64 {
    if w > 0.0 {
        w + (-w).exp().ln_1p()
    } else {
        w.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(ai, xi)| ai * xi).sum()
}

fn gen_samples(n: usize, d: usize, separator: &[f64], rng: &RngHandle) -> Vec<Sample> {
    let mut stream = rng.stream();
    (0..n)
        .map(|_| {
            let a: Vec<f64> = (0..d).map(|_| stream.normal()).collect();
            let score = dot(&a, separator);
            let y = if score >= 0.0 { 1.0 } else { -1.0 };
            Sample { a, y }
        })
        .collect()
}

fn accuracy(samples: &Arc<Vec<Sample>>, x: &[f64]) -> f64 {
    let correct = samples
        .iter()
        .filter(|s| {
            let predicted = if dot(&s.a, x) >= 0.0 { 1.0 } else { -1.0 };
            predicted == s.y
        })
        .count();
    correct as f64 / samples.len() as f64
}

const LAMBDA: f64 = 0.01;

/// `k` synthetic labelled samples in dimension `d`; features are seeded
/// standard normals, labels come from a random ground-truth separator.
///
/// Each component is `f_i(x) = loss_i(x)/k + (lambda/k) ||x||^2` so the
/// finite-sum identity `sum_i f_i = f` holds literally, with
/// `f(x) = (1/k) sum_i loss_i(x) + lambda ||x||^2` and `f(0) = ln 2`.
/// A held-out split of `max(k/4, 1)` samples provides the validation metric.
pub fn make_logistic(k: usize, d: usize, rng: &RngHandle) -> Result<Problem> {
    if k == 0 || d == 0 {
        return Err(Error::config(
            "logistic regression needs k >= 1 and d >= 1".to_string(),
        ));
    }
    let separator: Vec<f64> = {
        let mut s = rng.derive("separator").stream();
        (0..d).map(|_| s.normal()).collect()
    };
    let train = Arc::new(gen_samples(k, d, &separator, &rng.derive("features")));
    let k_val = (k / 4).max(1);
    let val = Arc::new(gen_samples(
        k_val,
        d,
        &separator,
        &rng.derive("validation"),
    ));

    // L = max ||a_i||^2 / 4 + 2 lambda, an upper bound on the Hessian norm.
    let lipschitz = train
        .iter()
        .map(|s| dot(&s.a, &s.a))
        .fold(0.0f64, f64::max)
        / 4.0
        + 2.0 * LAMBDA;

    let kf = k as f64;
    let train_f = Arc::clone(&train);
    let f = move |x: &[f64]| -> f64 {
        let loss: f64 = train_f
            .iter()
            .map(|s| ln_1p_exp(-s.y * dot(&s.a, x)))
            .sum();
        loss / kf + LAMBDA * dot(x, x)
    };
    let train_g = Arc::clone(&train);
    let grad = move |x: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for s in train_g.iter() {
            let margin = s.y * dot(&s.a, x);
            let w = -s.y * sigmoid(-margin) / kf;
            for (gi, ai) in g.iter_mut().zip(&s.a) {
                *gi += w * ai;
            }
        }
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += 2.0 * LAMBDA * xi;
        }
        g
    };

    let components: Vec<Component> = (0..k)
        .map(|i| {
            let tf = Arc::clone(&train);
            let tg = Arc::clone(&train);
            Component {
                f: Box::new(move |x: &[f64]| {
                    let s = &tf[i];
                    (ln_1p_exp(-s.y * dot(&s.a, x)) + LAMBDA * dot(x, x)) / kf
                }),
                grad: Box::new(move |x: &[f64]| {
                    let s = &tg[i];
                    let margin = s.y * dot(&s.a, x);
                    let w = -s.y * sigmoid(-margin) / kf;
                    s.a.iter()
                        .zip(x)
                        .map(|(ai, xi)| w * ai + 2.0 * LAMBDA * xi / kf)
                        .collect()
                }),
            }
        })
        .collect();

    let val_acc = Arc::clone(&val);
    let train_acc = Arc::clone(&train);
    Ok(Problem {
        name: "logistic".into(),
        dim: d,
        f: Box::new(f),
        grad: Box::new(grad),
        components: Some(components),
        lipschitz: Some(lipschitz),
        grad_linf_bound: None,
        f_lower: Some(0.0),
        x_star_f: None,
        default_x0: ParamVector::zeros(d)?,
        val_metric: Some(Box::new(move |x: &[f64]| accuracy(&val_acc, x))),
        train_metric: Some(Box::new(move |x: &[f64]| accuracy(&train_acc, x))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::GradientVector;

    #[test]
    fn loss_at_zero_is_ln_two() {
        let p = make_logistic(50, 5, &RngHandle::new(3, "logistic")).unwrap();
        let zero = ParamVector::zeros(5).unwrap();
        assert!((p.eval_f(&zero).unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn finite_sum_identity() {
        let p = make_logistic(20, 4, &RngHandle::new(11, "logistic")).unwrap();
        let mut stream = RngHandle::new(12, "points").stream();
        for _ in 0..5 {
            let x = ParamVector::new((0..4).map(|_| stream.normal()).collect()).unwrap();
            let full = p.eval_f(&x).unwrap();
            let sum: f64 = (0..20).map(|i| p.eval_component_f(i, &x).unwrap()).sum();
            assert!(
                (full - sum).abs() <= 1e-10 * full.abs().max(1.0),
                "value gap {}",
                (full - sum).abs()
            );

            let gfull = p.eval_grad(&x).unwrap();
            let mut gsum = vec![0.0; 4];
            for i in 0..20 {
                let gi = p.eval_component_grad(i, &x).unwrap();
                for (acc, v) in gsum.iter_mut().zip(gi.as_slice()) {
                    *acc += v;
                }
            }
            let gsum = GradientVector::new(gsum).unwrap();
            for (a, b) in gfull.as_slice().iter().zip(gsum.as_slice()) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn deterministic_generation() {
        let h = RngHandle::new(99, "logistic");
        let p1 = make_logistic(10, 3, &h).unwrap();
        let p2 = make_logistic(10, 3, &h).unwrap();
        let x = ParamVector::new(vec![0.3, -0.2, 0.7]).unwrap();
        assert_eq!(p1.eval_f(&x).unwrap(), p2.eval_f(&x).unwrap());
        assert_eq!(
            p1.eval_grad(&x).unwrap().as_slice(),
            p2.eval_grad(&x).unwrap().as_slice()
        );
    }
}
