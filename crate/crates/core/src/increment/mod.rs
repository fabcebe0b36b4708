//! The density-increment engine.
//!
//! Each step either finds a configuration, certifies that the current
//! Bohr set has become too small, or moves to a translate of a smaller
//! (possibly one dimension larger) Bohr set on which the set is denser.
//! Every step emits a certificate that can be rechecked from the original
//! set alone.

mod certificate;
mod constants;
mod engine;
mod fourier;

pub use certificate::{recheck_certificate, AffineMap, Certificate, Exhaustion};
pub use constants::{ConstantTable, Mode, Overrides, CONSTANT_NAMES};
pub use engine::{
    iterate_step, recheck_trace, run, Bookkeeping, IterationState, RunOptions, RunTrace, Status,
    StepOutcome, StepRecord,
};
pub use fourier::{fourier_bounds, fourier_increment, FourierIncrement};
