//! Explicit and alternating-triangle time integrators for 2D diffusion and
//! wave problems on a rectangle, with numerical certification of their
//! energy estimates and time-accuracy orders.

pub mod cli;
pub mod error;
pub mod grid;
pub mod operators;
pub mod schemes;
pub mod sweeps;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{energy_norm, inner_product, norm, sample, Grid, GridFunction};
pub use operators::{Coefficient, SpectralBounds};
pub use schemes::{
    run, Forcing, HyperbolicProblem, Observer, ParabolicProblem, Problem, SchemeConfig, SchemeKind, SpaceData,
    StepState, Trajectory,
};
pub use sweeps::{SweepOrder, SweepWorkspace};
