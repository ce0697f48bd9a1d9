//! Numerical toolkit for a porous-medium chemotaxis system with logistic
//! source and signal consumption.
// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod oracles;
pub mod sampling;
pub mod semigroup;
pub mod solver;
pub mod stats;

pub use cutoff::{build_cutoff, CutoffFunction, CutoffReport};
pub use error::{Error, Result};
pub use grid::{Ball, BallCover, Boundary, FaceFluxField, GridSpec, Point, ScalarField};
pub use solver::{InitialData, ModelParams, PicardConfig, RunControl, StepReport};
