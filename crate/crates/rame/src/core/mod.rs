//! Foundational numeric types shared by every other module: dense vectors and
//! elementwise kernels, the deterministic randomness contract, and per-step
//! trace recording.

mod rng;
mod trace;
mod vector;

pub use rng::{RngHandle, RngStream, RNG_ALGORITHM};
pub use trace::{StepRecord, Termination, Trace, TraceMeta};
pub use vector::{ew_abs_pow, ew_sign, norms, GradientVector, Norms, ParamVector};

pub(crate) use vector::{
    abs_pow as abs_pow_kernel, dot, ensure_finite as vector_finite, l2_norm, linf_norm,
    sign0 as sign_kernel,
};
