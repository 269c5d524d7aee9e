//! Material parameters, wave speeds and solver configuration shared by every
//! solver in the crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on `|n1| <= 1` before a director component is rejected.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Number of samples used by the dense scan for the derivative bound.
const DERIVATIVE_SCAN_SAMPLES: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid material parameter: {0}")]
    InvalidParams(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("director component n1 = {0} lies outside [-1, 1]")]
    Domain(f64),
}

/// Elastic constants and damping of the liquid crystal.
///
/// The wave speed is `c^2(n1) = alpha + (gamma - alpha) n1^2`; in the planar
/// reduction `n = (cos u, sin u, 0)` this is `gamma cos^2 u + alpha sin^2 u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
}

/// Bounds `C_L <= c <= C_U` and `|c'(u)| <= C_D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedBounds {
    pub lower: f64,
    pub upper: f64,
    pub derivative: f64,
}

impl MaterialParams {
    pub fn new(alpha: f64, gamma: f64, mu: f64) -> Result<Self, ModelError> {
        let params = Self { alpha, gamma, mu };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(ModelError::InvalidParams(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(ModelError::InvalidParams(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(ModelError::InvalidParams(format!("mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }

    /// `c(n1)`, rejecting components that violate the unit-length constraint.
    pub fn wave_speed(&self, n1: f64) -> Result<f64, ModelError> {
        if !n1.is_finite() || n1.abs() > 1.0 + UNIT_TOLERANCE {
            return Err(ModelError::Domain(n1));
        }
        Ok(self.speed_of_n1(n1))
    }

    /// `c(n1)` without the range check. Used inside the solvers where the
    /// constraint is monitored separately and may drift by rounding.
    #[inline]
    pub fn speed_of_n1(&self, n1: f64) -> f64 {
        (self.alpha + (self.gamma - self.alpha) * n1 * n1).sqrt()
    }

    /// `dc/dn1 = (gamma - alpha) n1 / c(n1)`.
    #[inline]
    pub fn speed_derivative_n1(&self, n1: f64) -> f64 {
        (self.gamma - self.alpha) * n1 / self.speed_of_n1(n1)
    }

    #[inline]
    pub fn wave_speed_planar(&self, u: f64) -> f64 {
        let (s, c) = u.sin_cos();
        (self.gamma * c * c + self.alpha * s * s).sqrt()
    }

    /// `c'(u) = (alpha - gamma) sin u cos u / c(u)`.
    #[inline]
    pub fn speed_derivative_planar(&self, u: f64) -> f64 {
        let (s, c) = u.sin_cos();
        (self.alpha - self.gamma) * s * c / self.wave_speed_planar(u)
    }

    /// `C_L = sqrt(min(alpha, gamma))`.
    #[inline]
    pub fn speed_lower(&self) -> f64 {
        self.alpha.min(self.gamma).sqrt()
    }

    /// `C_U = sqrt(max(alpha, gamma))`.
    #[inline]
    pub fn speed_upper(&self) -> f64 {
        self.alpha.max(self.gamma).sqrt()
    }

    pub fn speed_bounds(&self) -> SpeedBounds {
        let lower = self.speed_lower();
        let upper = self.speed_upper();
        let ceiling = (self.alpha - self.gamma).abs() / (2.0 * lower);
        let step = std::f64::consts::TAU / DERIVATIVE_SCAN_SAMPLES as f64;
        let scanned = (0..=DERIVATIVE_SCAN_SAMPLES)
            .map(|k| self.speed_derivative_planar(k as f64 * step).abs())
            .fold(0.0_f64, f64::max);
        SpeedBounds { lower, upper, derivative: scanned.min(ceiling) }
    }

    /// Bound on `|dc/dn1|` over the unit interval, attained at `|n1| = 1`.
    pub fn director_derivative_bound(&self) -> f64 {
        (self.gamma - self.alpha).abs() / self.gamma.sqrt()
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { alpha: 2.0, gamma: 1.0, mu: 0.0 }
    }
}

/// Numerical settings for the energy-coordinate solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Lattice spacing in `X` (and in `Y` unless `grid_step_y` is set).
    pub grid_step: f64,
    /// Optional separate spacing in `Y`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step_y: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub h_floor: f64,
    pub domain_radius: f64,
    /// Renormalize `n`, `(ell, h1)` and `(m, h2)` onto their constraint sets
    /// after every cell.
    #[serde(default)]
    pub project: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_step: 1e-2,
            grid_step_y: None,
            picard_tol: 1e-12,
            picard_max_iters: 50,
            h_floor: 1e-6,
            domain_radius: 2.0,
            project: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.grid_step) {
            return Err(ModelError::InvalidConfig(format!("grid_step must be > 0, got {}", self.grid_step)));
        }
        if let Some(dy) = self.grid_step_y {
            if !positive(dy) {
                return Err(ModelError::InvalidConfig(format!("grid_step_y must be > 0, got {dy}")));
            }
        }
        if !positive(self.picard_tol) {
            return Err(ModelError::InvalidConfig(format!("picard_tol must be > 0, got {}", self.picard_tol)));
        }
        if self.picard_max_iters == 0 {
            return Err(ModelError::InvalidConfig("picard_max_iters must be >= 1".into()));
        }
        if !(self.h_floor > 0.0 && self.h_floor < 1.0) {
            return Err(ModelError::InvalidConfig(format!("h_floor must lie in (0, 1), got {}", self.h_floor)));
        }
        if !positive(self.domain_radius) {
            return Err(ModelError::InvalidConfig(format!(
                "domain_radius must be > 0, got {}",
                self.domain_radius
            )));
        }
        Ok(())
    }

    pub fn step_x(&self) -> f64 {
        self.grid_step
    }

    pub fn step_y(&self) -> f64 {
        self.grid_step_y.unwrap_or(self.grid_step)
    }
}
