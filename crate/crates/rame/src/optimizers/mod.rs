//! The four optimization methods as explicit step functions over
//! `(state, gradient, schedule)`, plus the run driver and the heavy-ball
//! alternate-form cross-check.

mod driver;
mod schedule;
mod steps;

pub use driver::{run_optimizer, Method, Mode, RunSettings};
pub use schedule::{Schedule, Sequence};
pub use steps::{
    adam_step, hb_alt_step, rame_direction, rame_step, rmsprop_step, shb_step, AdamConfig,
    AdamState, RameConfig, RameState, ShbState,
};
