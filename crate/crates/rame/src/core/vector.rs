//! Dense parameter and gradient vectors plus the elementwise kernels used by
//! the step functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn ensure_finite(values: &[f64], context: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::non_finite(context))
    }
}

/// The iterate vector. Entries are finite at every API boundary and the
/// dimension is fixed for the lifetime of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("parameter vector needs dimension >= 1"));
        }
        ensure_finite(&values, "parameter vector")?;
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `x + delta`, gated on finiteness of the result. Every optimizer step
    /// lands here, so divergence is caught the moment it happens.
    pub fn add(&self, delta: &[f64]) -> Result<ParamVector> {
        if delta.len() != self.dim() {
            return Err(Error::DimMismatch {
                context: "iterate update",
                expected: self.dim(),
                found: delta.len(),
            });
        }
        let values: Vec<f64> = self.0.iter().zip(delta).map(|(x, d)| x + d).collect();
        ensure_finite(&values, "updated iterate")?;
        Ok(Self(values))
    }
}

/// Gradient evaluated at an iterate; always the same dimension as that iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("gradient vector needs dimension >= 1"));
        }
        ensure_finite(&values, "gradient vector")?;
        Ok(Self(values))
    }

    /// Constructor that also pins the dimension to the iterate it came from.
    pub fn for_dim(values: Vec<f64>, dim: usize) -> Result<Self> {
        if values.len() != dim {
            return Err(Error::DimMismatch {
                context: "gradient vector",
                expected: dim,
                found: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }
}

/// `|x|^p` with the `0^0 := 1` convention, plus exact fast paths for the two
/// exponents where `powf` must behave like plain arithmetic.
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        x.abs()
    } else {
        x.abs().powf(p)
    }
}

/// Sign with `sign(+-0) = 0`, so that `sign(m) .* |m|^(1-q)` vanishes exactly
/// at a zero moment.
pub(crate) fn sign0(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Elementwise `|v_i|^p` for `p` in `[0, 1)`; `p = 0` yields the all-ones
/// vector regardless of input.
pub fn ew_abs_pow(v: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::config(format!(
            "exponent p must satisfy 0 <= p < 1, got {p}"
        )));
    }
    ensure_finite(v, "ew_abs_pow input")?;
    Ok(v.iter().map(|&x| abs_pow(x, p)).collect())
}

/// Elementwise sign with signed zeros mapped to 0.
pub fn ew_sign(v: &[f64]) -> Result<Vec<f64>> {
    ensure_finite(v, "ew_sign input")?;
    Ok(v.iter().map(|&x| sign0(x)).collect())
}

/// The l1, l2 and l-infinity norms of a vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn norms(v: &[f64]) -> Result<Norms> {
    ensure_finite(v, "norms input")?;
    let l1 = v.iter().map(|x| x.abs()).sum();
    let l2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let linf = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    Ok(Norms { l1, l2, linf })
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
