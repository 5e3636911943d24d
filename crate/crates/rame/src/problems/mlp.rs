//! Small fully-connected classifier on a synthetic two-class spiral, with
//! hand-coded reverse-mode gradients.
//!
//! Hidden activations are tanh, so the objective is differentiable everywhere
//! and the finite-difference oracle stays clean. The loss is softmax
//! cross-entropy averaged over the dataset; minibatch components partition the
//! samples, each scaled by `1/n`, so component sums reproduce the full
//! objective exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Component, Problem};
use crate::core::{ParamVector, RngHandle};
use crate::error::{Error, Result};

/// Two-arm spiral dataset description. `turns` is the number of revolutions
/// each arm makes; `noise` is the standard deviation of the coordinate jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralSpec {
    pub samples: usize,
    pub noise: f64,
    pub turns: f64,
}

impl Default for SpiralSpec {
    fn default() -> Self {
        Self {
            samples: 400,
            noise: 0.08,
            turns: 1.5,
        }
    }
}

struct LabelledPoint {
    x: [f64; 2],
    label: usize,
}

fn gen_spiral(spec: &SpiralSpec, n: usize, rng: &RngHandle) -> Vec<LabelledPoint> {
    let mut stream = rng.stream();
    let per_class = (n / 2).max(1);
    let mut points = Vec::with_capacity(2 * per_class);
    for class in 0..2usize {
        for j in 0..per_class {
            let t = (j as f64 + 0.5) / per_class as f64;
            let r = t;
            let angle = spec.turns * std::f64::consts::TAU * t + class as f64 * std::f64::consts::PI;
            points.push(LabelledPoint {
                x: [
                    r * angle.cos() + spec.noise * stream.normal(),
                    r * angle.sin() + spec.noise * stream.normal(),
                ],
                label: class,
            });
        }
    }
    points
}

/// Network description plus flattened-parameter layout.
struct MlpCore {
    sizes: Vec<usize>,
    /// (weight offset, bias offset) per layer in the flat parameter vector.
    offsets: Vec<(usize, usize)>,
    dim: usize,
}

impl MlpCore {
    fn new(sizes: &[usize]) -> Self {
        let mut offsets = Vec::new();
        let mut cursor = 0;
        for l in 1..sizes.len() {
            let (fan_in, fan_out) = (sizes[l - 1], sizes[l]);
            offsets.push((cursor, cursor + fan_in * fan_out));
            cursor += fan_in * fan_out + fan_out;
        }
        Self {
            sizes: sizes.to_vec(),
            offsets,
            dim: cursor,
        }
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Forward pass returning all activations (input first, logits last).
    fn forward(&self, params: &[f64], input: &[f64; 2]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(input.to_vec());
        for l in 0..self.layers() {
            let (w_off, b_off) = self.offsets[l];
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let prev = &activations[l];
            let mut z = vec![0.0; fan_out];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &params[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                let mut acc = params[b_off + o];
                for (wi, ai) in row.iter().zip(prev) {
                    acc += wi * ai;
                }
                *zo = acc;
            }
            // hidden layers are tanh; the final layer stays linear (logits)
            if l != self.layers() - 1 {
                for zo in z.iter_mut() {
                    *zo = zo.tanh();
                }
            }
            activations.push(z);
        }
        activations
    }

    /// Cross-entropy of one sample from its logits.
    fn sample_loss(logits: &[f64], label: usize) -> f64 {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        lse - logits[label]
    }

    /// Accumulate `scale * d(loss_j)/d(params)` into `grad` for one sample.
    fn accumulate_grad(
        &self,
        params: &[f64],
        point: &LabelledPoint,
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        let activations = self.forward(params, &point.x);
        let logits = activations.last().expect("at least one layer");
        let loss = Self::sample_loss(logits, point.label);

        // delta at the output: softmax - onehot
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut delta: Vec<f64> = exps.iter().map(|e| e / total).collect();
        delta[point.label] -= 1.0;

        for l in (0..self.layers()).rev() {
            let (w_off, b_off) = self.offsets[l];
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let prev = &activations[l];
            for o in 0..fan_out {
                let d = delta[o];
                let row = &mut grad[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                for (gi, ai) in row.iter_mut().zip(prev) {
                    *gi += scale * d * ai;
                }
                grad[b_off + o] += scale * d;
            }
            if l > 0 {
                // back through tanh: delta_prev = (W' delta) .* (1 - a^2)
                let mut next_delta = vec![0.0; fan_in];
                for (i, nd) in next_delta.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (o, d) in delta.iter().enumerate() {
                        acc += params[w_off + o * fan_in + i] * d;
                    }
                    *nd = acc * (1.0 - prev[i] * prev[i]);
                }
                delta = next_delta;
            }
        }
        loss
    }

    fn subset_loss(&self, params: &[f64], data: &[LabelledPoint], idx: &[usize], n: f64) -> f64 {
        idx.iter()
            .map(|&j| {
                let acts = self.forward(params, &data[j].x);
                Self::sample_loss(acts.last().unwrap(), data[j].label)
            })
            .sum::<f64>()
            / n
    }

    fn subset_grad(
        &self,
        params: &[f64],
        data: &[LabelledPoint],
        idx: &[usize],
        n: f64,
    ) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim];
        for &j in idx {
            self.accumulate_grad(params, &data[j], 1.0 / n, &mut grad);
        }
        grad
    }

    fn accuracy(&self, params: &[f64], data: &[LabelledPoint]) -> f64 {
        let correct = data
            .iter()
            .filter(|p| {
                let acts = self.forward(params, &p.x);
                let logits = acts.last().unwrap();
                let predicted = logits
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite logits"))
                    .map(|(i, _)| i)
                    .unwrap();
                predicted == p.label
            })
            .count();
        correct as f64 / data.len() as f64
    }
}

/// Build the spiral classifier. `layer_sizes` must start at 2 (the plane) and
/// end at 2 (the classes); `batch` samples per minibatch component.
pub fn make_mlp(
    layer_sizes: &[usize],
    spiral: &SpiralSpec,
    batch: usize,
    rng: &RngHandle,
) -> Result<Problem> {
    if layer_sizes.len() < 2 {
        return Err(Error::config("mlp needs at least two layers".to_string()));
    }
    if layer_sizes[0] != 2 || *layer_sizes.last().unwrap() != 2 {
        return Err(Error::config(format!(
            "spiral mlp needs input size 2 and output size 2, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::config("layer sizes must be positive".to_string()));
    }
    if spiral.samples < 2 {
        return Err(Error::config("spiral needs at least 2 samples".to_string()));
    }
    if !(spiral.noise.is_finite() && spiral.noise >= 0.0 && spiral.turns.is_finite()) {
        return Err(Error::config("invalid spiral specification".to_string()));
    }
    if batch == 0 {
        return Err(Error::config("batch size must be >= 1".to_string()));
    }

    let core = Arc::new(MlpCore::new(layer_sizes));
    let train = Arc::new(gen_spiral(spiral, spiral.samples, &rng.derive("data")));
    let val = Arc::new(gen_spiral(
        spiral,
        (spiral.samples / 4).max(2),
        &rng.derive("val-data"),
    ));
    let n = train.len() as f64;

    // Seeded init: N(0, 1/fan_in) weights, zero biases.
    let default_x0 = {
        let mut stream = rng.derive("init").stream();
        let mut params = vec![0.0; core.dim];
        for l in 0..core.layers() {
            let (w_off, b_off) = core.offsets[l];
            let fan_in = core.sizes[l];
            let scale = (1.0 / fan_in as f64).sqrt();
            for w in params[w_off..b_off].iter_mut() {
                *w = scale * stream.normal();
            }
        }
        ParamVector::new(params)?
    };

    let all_idx: Vec<usize> = (0..train.len()).collect();
    let (core_f, train_f) = (Arc::clone(&core), Arc::clone(&train));
    let idx_f = all_idx.clone();
    let f = move |x: &[f64]| core_f.subset_loss(x, &train_f, &idx_f, n);
    let (core_g, train_g) = (Arc::clone(&core), Arc::clone(&train));
    let idx_g = all_idx;
    let grad = move |x: &[f64]| core_g.subset_grad(x, &train_g, &idx_g, n);

    let components: Vec<Component> = (0..train.len())
        .step_by(batch)
        .map(|start| {
            let idx: Vec<usize> = (start..(start + batch).min(train.len())).collect();
            let (cf, tf, i_f) = (Arc::clone(&core), Arc::clone(&train), idx.clone());
            let (cg, tg, i_g) = (Arc::clone(&core), Arc::clone(&train), idx);
            Component {
                f: Box::new(move |x: &[f64]| cf.subset_loss(x, &tf, &i_f, n)),
                grad: Box::new(move |x: &[f64]| cg.subset_grad(x, &tg, &i_g, n)),
            }
        })
        .collect();

    let dim = core.dim;
    let (core_v, val_v) = (Arc::clone(&core), Arc::clone(&val));
    let (core_t, train_t) = (Arc::clone(&core), Arc::clone(&train));
    Ok(Problem {
        name: "mlp_spiral".into(),
        dim,
        f: Box::new(f),
        grad: Box::new(grad),
        components: Some(components),
        lipschitz: None,
        grad_linf_bound: None,
        f_lower: Some(0.0),
        x_star_f: None,
        default_x0,
        val_metric: Some(Box::new(move |x: &[f64]| core_v.accuracy(x, &val_v))),
        train_metric: Some(Box::new(move |x: &[f64]| core_t.accuracy(x, &train_t))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn handle() -> RngHandle {
        RngHandle::new(5, "mlp")
    }

    #[test]
    fn zero_weights_give_ln_two_on_balanced_data() {
        let spec = SpiralSpec {
            samples: 40,
            ..SpiralSpec::default()
        };
        let p = make_mlp(&[2, 8, 2], &spec, 10, &handle()).unwrap();
        let zero = ParamVector::zeros(p.dim()).unwrap();
        assert!((p.eval_f(&zero).unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn finite_sum_identity() {
        let spec = SpiralSpec {
            samples: 30,
            ..SpiralSpec::default()
        };
        let p = make_mlp(&[2, 6, 2], &spec, 7, &handle()).unwrap();
        let k = p.component_count().unwrap();
        assert_eq!(k, 5); // ceil(30 / 7)
        let x = p.default_x0().clone();
        let full = p.eval_f(&x).unwrap();
        let sum: f64 = (0..k).map(|i| p.eval_component_f(i, &x).unwrap()).sum();
        assert!((full - sum).abs() <= 1e-12 * full.max(1.0));
    }

    #[test]
    fn hidden_unit_permutation_preserves_loss() {
        // Swapping two hidden units together with their in/out weights must
        // leave the network function unchanged.
        let spec = SpiralSpec {
            samples: 20,
            ..SpiralSpec::default()
        };
        let p = make_mlp(&[2, 5, 2], &spec, 5, &handle()).unwrap();
        let x = p.default_x0().to_vec();
        // layout: W1 (5x2) rows 0..5, b1 at 10..15, W2 (2x5) at 15..25, b2 at 25..27
        let mut permuted = x.clone();
        let (u, v) = (1usize, 3usize);
        for c in 0..2 {
            permuted.swap(u * 2 + c, v * 2 + c);
        }
        permuted.swap(10 + u, 10 + v);
        for r in 0..2 {
            permuted.swap(15 + r * 5 + u, 15 + r * 5 + v);
        }
        let a = p.eval_f(&ParamVector::new(x).unwrap()).unwrap();
        let b = p.eval_f(&ParamVector::new(permuted).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn layer_mismatch_is_error() {
        let spec = SpiralSpec::default();
        assert!(make_mlp(&[3, 8, 2], &spec, 10, &handle()).is_err());
        assert!(make_mlp(&[2, 8, 3], &spec, 10, &handle()).is_err());
        assert!(make_mlp(&[2], &spec, 10, &handle()).is_err());
    }
}
