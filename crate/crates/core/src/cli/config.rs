//! Run configuration: a flat JSON object plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::initial::SmoothAngles;
use crate::model::{MaterialParams, ModelError, SolverConfig};
use crate::planar::BlowupProfileSpec;
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    BlowupDemo,
    Verify,
    CompareFd,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::BlowupDemo => "blowup-demo",
            Experiment::Verify => "verify",
            Experiment::CompareFd => "compare-fd",
        }
    }
}

/// Initial director field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Vacuum {
        #[serde(default = "default_director")]
        n: Vec3,
    },
    Smooth {
        /// Rescale amplitudes to this energy.
        #[serde(default)]
        energy: Option<f64>,
        #[serde(default = "SmoothAngles::default")]
        shape: SmoothAngles,
    },
    /// Planar gradient-blowup family; `amplitude` defaults to
    /// `DEFAULT_BLOWUP_AMPLITUDE`, raised to 1.25 times the smallest
    /// admissible value when that is larger.
    Blowup {
        #[serde(default = "default_u0")]
        u0: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default)]
        amplitude: Option<f64>,
        #[serde(default = "default_skew")]
        skew: f64,
    },
    /// Columns `x, n1, n2, n3, nt1, nt2, nt3`, or `x, u, ut` when `planar`.
    Csv {
        path: PathBuf,
        #[serde(default)]
        planar: bool,
    },
}

pub const DEFAULT_BLOWUP_AMPLITUDE: f64 = 60.0;

fn default_director() -> Vec3 {
    [1.0, 0.0, 0.0]
}
fn default_u0() -> f64 {
    std::f64::consts::FRAC_PI_4
}
fn default_eps() -> f64 {
    0.01
}
fn default_skew() -> f64 {
    0.5
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Smooth { energy: Some(0.1), shape: SmoothAngles::default() }
    }
}

impl InitialSpec {
    pub fn blowup_spec(&self, params: &MaterialParams) -> Option<BlowupProfileSpec> {
        match *self {
            InitialSpec::Blowup { u0, eps, amplitude, skew } => Some(match amplitude {
                Some(amplitude) => BlowupProfileSpec { u0, eps, amplitude, skew },
                None => {
                    let mut spec = BlowupProfileSpec::sized_for(params, u0, eps, skew, 1.25);
                    spec.amplitude = spec.amplitude.max(DEFAULT_BLOWUP_AMPLITUDE);
                    spec
                }
            }),
            _ => None,
        }
    }
}

/// Everything a run needs. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub grid_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step_y: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub h_floor: f64,
    pub domain_radius: f64,
    pub project: bool,
    /// Must match the subcommand when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub initial: InitialSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Output times; empty means ten evenly spaced times.
    pub times: Vec<f64>,
    /// Target energy-coordinate increment per initial sample; defaults to
    /// a quarter of the grid step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_step: Option<f64>,
    pub residual_gate: f64,
    pub energy_tolerance: f64,
    pub fd_dx: f64,
    pub fd_cfl: f64,
    pub fd_gate: f64,
    pub planar_cfl: f64,
    pub planar_t_max: f64,
    pub threshold_factor: f64,
    pub planar_fine_step: f64,
    pub planar_coarse_step: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MaterialParams::default();
        let s = SolverConfig::default();
        Self {
            alpha: m.alpha,
            gamma: m.gamma,
            mu: m.mu,
            grid_step: s.grid_step,
            grid_step_y: s.grid_step_y,
            picard_tol: s.picard_tol,
            picard_max_iters: s.picard_max_iters,
            h_floor: s.h_floor,
            domain_radius: s.domain_radius,
            project: s.project,
            experiment: None,
            initial: InitialSpec::default(),
            output_dir: None,
            times: Vec::new(),
            sample_step: None,
            residual_gate: 1e-4,
            energy_tolerance: 1e-4,
            fd_dx: 2e-3,
            fd_cfl: 0.45,
            fd_gate: 1e-3,
            planar_cfl: crate::planar::DEFAULT_CFL,
            planar_t_max: 10.0,
            threshold_factor: crate::planar::DEFAULT_THRESHOLD_FACTOR,
            planar_fine_step: 5e-5,
            planar_coarse_step: 0.05,
        }
    }
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|k| k + 1)
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError { line: Some(e.line()), message: e.to_string() })?;
        cfg.validate().map_err(|mut e| {
            if e.line.is_none() {
                e.line = key_of_message(&e.message).and_then(|k| line_of_key(text, k));
            }
            e
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn material(&self) -> MaterialParams {
        MaterialParams { alpha: self.alpha, gamma: self.gamma, mu: self.mu }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            grid_step: self.grid_step,
            grid_step_y: self.grid_step_y,
            picard_tol: self.picard_tol,
            picard_max_iters: self.picard_max_iters,
            h_floor: self.h_floor,
            domain_radius: self.domain_radius,
            project: self.project,
        }
    }

    /// Checks every value; messages start with the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.material().validate().map_err(model_error)?;
        self.solver().validate().map_err(model_error)?;
        let positive = [
            ("residual_gate", self.residual_gate),
            ("energy_tolerance", self.energy_tolerance),
            ("fd_dx", self.fd_dx),
            ("fd_cfl", self.fd_cfl),
            ("fd_gate", self.fd_gate),
            ("planar_cfl", self.planar_cfl),
            ("planar_t_max", self.planar_t_max),
            ("threshold_factor", self.threshold_factor),
            ("planar_fine_step", self.planar_fine_step),
            ("planar_coarse_step", self.planar_coarse_step),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(format!("{key} must be > 0, got {v}")));
            }
        }
        if let Some(v) = self.sample_step {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(format!("sample_step must be > 0, got {v}")));
            }
        }
        if self.fd_cfl >= 1.0 || self.planar_cfl >= 1.0 {
            return Err(ConfigError::new("fd_cfl and planar_cfl must be < 1"));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(ConfigError::new("times must be non-negative"));
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(ConfigError::new("times must be sorted"));
        }
        match &self.initial {
            InitialSpec::Vacuum { n } => {
                if (crate::vec3::norm(*n) - 1.0).abs() > 1e-12 {
                    return Err(ConfigError::new("initial: n must be a unit vector"));
                }
            }
            InitialSpec::Smooth { energy, shape } => {
                if energy.is_some_and(|e| !(e.is_finite() && e >= 0.0)) {
                    return Err(ConfigError::new("initial: energy must be >= 0"));
                }
                if !(shape.width > 0.0) {
                    return Err(ConfigError::new("initial: width must be > 0"));
                }
            }
            InitialSpec::Blowup { .. } => {
                let spec = self.initial.blowup_spec(&self.material()).expect("blowup spec");
                spec.validate(&self.material()).map_err(|e| ConfigError::new(format!("initial: {e}")))?;
            }
            InitialSpec::Csv { .. } => {}
        }
        Ok(())
    }
}

fn model_error(e: ModelError) -> ConfigError {
    match e {
        ModelError::InvalidParams(m) | ModelError::InvalidConfig(m) => ConfigError::new(m),
        other => ConfigError::new(other.to_string()),
    }
}

fn key_of_message(message: &str) -> Option<&str> {
    let word = message.split(|c: char| !(c.is_alphanumeric() || c == '_')).find(|w| !w.is_empty())?;
    const KEYS: [&str; 23] = [
        "alpha",
        "gamma",
        "mu",
        "grid_step",
        "grid_step_y",
        "picard_tol",
        "picard_max_iters",
        "h_floor",
        "domain_radius",
        "times",
        "initial",
        "sample_step",
        "residual_gate",
        "energy_tolerance",
        "fd_dx",
        "fd_cfl",
        "fd_gate",
        "planar_cfl",
        "planar_t_max",
        "threshold_factor",
        "planar_fine_step",
        "planar_coarse_step",
        "experiment",
    ];
    KEYS.iter().find(|k| **k == word).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(RunConfig::from_json_str("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn invalid_value_reports_its_line() {
        let text = "{\n  \"alpha\": 2.0,\n  \"gamma\": -1.0\n}";
        let err = RunConfig::from_json_str(text).unwrap_err();
        assert_eq!(err.line, Some(3), "{err}");
        let text = "{\n  \"grid_step\": 0.01,\n  \"h_floor\": 2.0\n}";
        assert_eq!(RunConfig::from_json_str(text).unwrap_err().line, Some(3));
    }

    #[test]
    fn syntax_and_unknown_keys_are_rejected() {
        let err = RunConfig::from_json_str("{\n \"alpha\": 2.0,\n \"colour\": 1\n}").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(RunConfig::from_json_str("{\n \"alpha\": ,\n}").unwrap_err().line.is_some());
    }

    #[test]
    fn initial_profiles_parse() {
        let cfg = RunConfig::from_json_str(r#"{"initial": {"profile": "vacuum", "n": [0, 1, 0]}}"#).unwrap();
        assert_eq!(cfg.initial, InitialSpec::Vacuum { n: [0.0, 1.0, 0.0] });
        let cfg = RunConfig::from_json_str(r#"{"mu": 1.0, "initial": {"profile": "blowup"}}"#).unwrap();
        let spec = cfg.initial.blowup_spec(&cfg.material()).unwrap();
        assert!(spec.validate(&cfg.material()).is_ok());
        let text = r#"{"initial": {"profile": "smooth", "energy": 0.01, "shape": {"width": 0.3}}}"#;
        let cfg = RunConfig::from_json_str(text).unwrap();
        assert!(matches!(cfg.initial, InitialSpec::Smooth { energy: Some(e), shape } if e == 0.01 && shape.width == 0.3));
        assert!(RunConfig::from_json_str(r#"{"initial": {"profile": "smooth", "widht": 0.3}}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"experiment": "blowup-demo"}"#).is_ok());
    }
}
