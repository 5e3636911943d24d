//! Differentiable test objectives with hand-coded exact gradients, declared
//! smoothness data, finite-sum structure for minibatch mode, and a
//! finite-difference gradient oracle.

mod gradcheck;
mod logistic;
mod minibatch;
mod mlp;
mod pseudo_huber;
mod quadratic;

pub use gradcheck::finite_difference_gradient;
pub use logistic::make_logistic;
pub use minibatch::{minibatch_selector, MinibatchSelector, SelectorMode};
pub use mlp::{make_mlp, SpiralSpec};
pub use pseudo_huber::make_pseudo_huber;
pub use quadratic::{make_conditioned_quadratic, make_quadratic};

use crate::core::{vector_finite, GradientVector, ParamVector};
use crate::error::{Error, Result};
use crate::theory::SmoothnessSpec;

pub(crate) type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub(crate) type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// One term of a finite-sum objective.
pub struct Component {
    pub(crate) f: Box<ScalarFn>,
    pub(crate) grad: Box<GradFn>,
}

impl Component {
    pub fn eval_f(&self, x: &ParamVector) -> Result<f64> {
        let value = (self.f)(x.as_slice());
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::non_finite("component objective value"))
        }
    }

    pub fn eval_grad(&self, x: &ParamVector) -> Result<GradientVector> {
        let values = (self.grad)(x.as_slice());
        GradientVector::for_dim(values, x.dim())
    }
}

/// A differentiable objective: value, exact gradient, optional finite-sum
/// structure, declared smoothness data, and a default starting point.
pub struct Problem {
    pub(crate) name: String,
    pub(crate) dim: usize,
    pub(crate) f: Box<ScalarFn>,
    pub(crate) grad: Box<GradFn>,
    pub(crate) components: Option<Vec<Component>>,
    /// Declared gradient-Lipschitz constant, when known.
    pub(crate) lipschitz: Option<f64>,
    /// Declared uniform bound on the gradient l-infinity norm, when one
    /// holds globally.
    pub(crate) grad_linf_bound: Option<f64>,
    /// A lower bound on f, when one exists.
    pub(crate) f_lower: Option<f64>,
    /// Known optimal value, when available.
    pub(crate) x_star_f: Option<f64>,
    pub(crate) default_x0: ParamVector,
    /// Held-out classification accuracy in [0, 1], higher is better.
    pub(crate) val_metric: Option<Box<ScalarFn>>,
    /// Training-set classification accuracy in [0, 1].
    pub(crate) train_metric: Option<Box<ScalarFn>>,
}

impl Problem {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn default_x0(&self) -> &ParamVector {
        &self.default_x0
    }

    pub fn x_star_f(&self) -> Option<f64> {
        self.x_star_f
    }

    pub fn f_lower(&self) -> Option<f64> {
        self.f_lower
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn grad_linf_bound(&self) -> Option<f64> {
        self.grad_linf_bound
    }

    fn check_dim(&self, x: &ParamVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimMismatch {
                context: "problem evaluation",
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    pub fn eval_f(&self, x: &ParamVector) -> Result<f64> {
        self.check_dim(x)?;
        let value = (self.f)(x.as_slice());
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::non_finite("objective value"))
        }
    }

    pub fn eval_grad(&self, x: &ParamVector) -> Result<GradientVector> {
        self.check_dim(x)?;
        let values = (self.grad)(x.as_slice());
        vector_finite(&values, "gradient")?;
        GradientVector::for_dim(values, self.dim)
    }

    pub fn component_count(&self) -> Option<usize> {
        self.components.as_ref().map(|c| c.len())
    }

    pub fn component(&self, i: usize) -> Result<&Component> {
        let components = self
            .components
            .as_ref()
            .ok_or_else(|| Error::config(format!("problem {} has no finite-sum structure", self.name)))?;
        components.get(i).ok_or_else(|| {
            Error::config(format!(
                "component index {i} out of range for {} components",
                components.len()
            ))
        })
    }

    pub fn eval_component_f(&self, i: usize, x: &ParamVector) -> Result<f64> {
        self.check_dim(x)?;
        self.component(i)?.eval_f(x)
    }

    pub fn eval_component_grad(&self, i: usize, x: &ParamVector) -> Result<GradientVector> {
        self.check_dim(x)?;
        self.component(i)?.eval_grad(x)
    }

    pub fn val_metric(&self, x: &ParamVector) -> Option<f64> {
        self.val_metric.as_ref().map(|m| m(x.as_slice()))
    }

    pub fn has_val_metric(&self) -> bool {
        self.val_metric.is_some()
    }

    pub fn train_metric(&self, x: &ParamVector) -> Option<f64> {
        self.train_metric.as_ref().map(|m| m(x.as_slice()))
    }

    /// The full certification bundle, present only when the Lipschitz
    /// constant, the gradient bound and the lower bound are all declared.
    pub fn smoothness_spec(&self) -> Option<SmoothnessSpec> {
        match (self.lipschitz, self.grad_linf_bound, self.f_lower) {
            (Some(l), Some(sigma), Some(f_lower)) => Some(SmoothnessSpec {
                l,
                sigma,
                d: self.dim,
                f_lower,
            }),
            _ => None,
        }
    }
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("components", &self.component_count())
            .field("lipschitz", &self.lipschitz)
            .field("grad_linf_bound", &self.grad_linf_bound)
            .finish()
    }
}
