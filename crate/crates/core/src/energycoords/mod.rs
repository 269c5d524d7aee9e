//! Energy-dependent characteristic coordinates `(X, Y)`.
//!
//! The boundary curve is the image of `t = 0`. The solver marches the
//! semi-linear system from the curve over the region `Y >= phi(X)`.

pub mod curve;
pub mod grid;
pub mod system;

use thiserror::Error;

pub use curve::{forward_transform, BoundaryCurve, CurvePoint, DirectorInitialData};
pub use grid::{solve_region, solve_window, DensityBounds, EnergyGrid, GridNode, NodeStatus, Window};
pub use system::{invariant_residuals, project, system_rhs, Derivatives, InvariantResiduals, NodeState};

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum EnergyCoordError {
    #[error("invalid initial data: {0}")]
    InvalidData(String),
    #[error("invalid window: {0}")]
    Window(String),
    #[error("Picard iteration did not converge in cell (X = {x}, Y = {y}) after {iters} iterations (last change {change:e})")]
    PicardDiverged { x: f64, y: f64, iters: usize, change: f64 },
    #[error("non-positive density at (X = {x}, Y = {y}): p = {p}, q = {q}")]
    NonPositiveDensity { x: f64, y: f64, p: f64, q: f64 },
    #[error("{which} = {value} out of [0, 1] at (X = {x}, Y = {y})")]
    RangeOvershoot { which: &'static str, value: f64, x: f64, y: f64 },
    #[error("non-finite state at (X = {x}, Y = {y})")]
    NonFinite { x: f64, y: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}
