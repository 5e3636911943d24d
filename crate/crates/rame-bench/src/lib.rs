//! Harness internals behind the `rame-bench` binary: configuration,
//! trace serialization, the learning-rate grid, verification suites, and
//! plot-data emission.

pub mod config;
pub mod grid;
pub mod plot;
pub mod trace_io;
pub mod verify;

/// Exit code policy: configuration and usage mistakes are 2, runtime and
/// verification failures are 1.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<rame::Error>().is_some() {
        2
    } else {
        1
    }
}
