//! Reproducible noise, SDE stepping and ensemble statistics shared by the
//! phase-space engines.

mod accumulate;
mod ensemble;
mod noise;
mod sde;

pub use accumulate::{Estimate, ExactSum, MomentAccumulator};
pub use ensemble::{run_ensemble, run_ensemble_blocks, EnsembleConfig, EnsembleResult, Reduction, TrajectoryModel, UNRELIABLE_FRACTION};
pub use noise::{gaussian_field_noise, NoiseStream};
pub use sde::{integrate, step, Interpretation, SchemeKind, SdeScheme, SdeSystem, StepOutcome, Workspace, DIVERGENCE_BOUND};
