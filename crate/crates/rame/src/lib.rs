//! RAME — rapidly adapting moment estimation — and its momentum baselines.
//!
//! The library has five parts:
//!
//! * [`core`]: dense vectors, elementwise kernels, seeded portable randomness,
//!   and per-iteration trace recording.
//! * [`optimizers`]: explicit step functions for RAME, heavy-ball (SHB), Adam
//!   and RMSprop, plus the run driver for deterministic and minibatch modes.
//! * [`problems`]: differentiable test objectives with hand-coded gradients,
//!   finite-sum structure, and a finite-difference oracle.
//! * [`dynamics`]: the modulated steering-vector reformulation of RAME and the
//!   trajectory-equivalence checker.
//! * [`theory`]: admissible parameter bounds, optimal step sizes, per-step
//!   descent certificates, and the certified-convergence harness.
//!
//! All arithmetic is 64-bit IEEE floating point. Non-finite values are
//! rejected at API boundaries rather than propagated.

pub mod core;
pub mod dynamics;
pub mod error;
pub mod optimizers;
pub mod problems;
pub mod theory;

pub use error::{Error, Result};
