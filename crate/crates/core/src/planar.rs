//! Planar reduction `n = (cos u, sin u, 0)`: Riemann variables along
//! characteristics, the blowup initial-data family, and blowup detection.
//!
//! The state lives on a moving grid whose nodes ride forward characteristics
//! `dx/dt = c(u)`. Along them `u' = R` and `S' = k(S^2 - R^2) - mu/2 (R + S)`
//! with `k = c'(u) / (4 c(u))`. `R` travels on backward characteristics and is
//! recovered at every step by tracing the backward foot and interpolating the
//! previous `R` field with a monotone cubic.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::interp::{bracket, Pchip};
use crate::model::MaterialParams;

pub const DEFAULT_CFL: f64 = 0.45;
pub const OVERFLOW_GUARD: f64 = 1e9;
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 1e3;
/// Largest relative growth of `max |S|` accepted in one step before halving.
pub const MAX_STEP_GROWTH: f64 = 0.10;

#[derive(Debug, Error, PartialEq)]
pub enum PlanarError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("gradient blowup signalled at t = {time}, x = {x}")]
    Blowup { time: f64, x: f64 },
}

/// Sampled `(u, R, S)` on the characteristic grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarState {
    pub time: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Smallest node spacing of the grid the state was built on. Nodes
    /// compress as characteristics converge; the time step is measured
    /// against this spacing rather than the current one.
    pub reference_spacing: f64,
}

impl PlanarState {
    pub fn new(time: f64, x: Vec<f64>, u: Vec<f64>, r: Vec<f64>, s: Vec<f64>) -> Result<Self, PlanarError> {
        if u.len() != x.len() || r.len() != x.len() || s.len() != x.len() {
            return Err(PlanarError::Domain("field lengths differ from grid length".into()));
        }
        check_grid(&x)?;
        let reference_spacing = min_spacing(&x);
        Ok(Self { time, x, u, r, s, reference_spacing })
    }

    /// Builds the state from `(u, u_t, u_x)` with `R = u_t + c u_x`,
    /// `S = u_t - c u_x`.
    pub fn from_derivatives(
        params: &MaterialParams,
        time: f64,
        x: Vec<f64>,
        u: Vec<f64>,
        u_t: &[f64],
        u_x: &[f64],
    ) -> Result<Self, PlanarError> {
        if u.len() != x.len() || u_t.len() != x.len() || u_x.len() != x.len() {
            return Err(PlanarError::Domain("field lengths differ from grid length".into()));
        }
        let (r, s) = u
            .iter()
            .zip(u_t.iter().zip(u_x))
            .map(|(&u, (&ut, &ux))| {
                let c = params.wave_speed_planar(u);
                (ut + c * ux, ut - c * ux)
            })
            .unzip();
        Self::new(time, x, u, r, s)
    }

    /// Recovers `(u_t, u_x)` at node `i`.
    pub fn derivatives(&self, params: &MaterialParams, i: usize) -> (f64, f64) {
        let c = params.wave_speed_planar(self.u[i]);
        ((self.r[i] + self.s[i]) / 2.0, (self.r[i] - self.s[i]) / (2.0 * c))
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn min_spacing(&self) -> f64 {
        min_spacing(&self.x)
    }

    pub fn max_abs_r(&self) -> f64 {
        self.r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_s(&self) -> f64 {
        self.s.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn min_spacing(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn check_grid(x: &[f64]) -> Result<(), PlanarError> {
    if x.len() < 2 {
        return Err(PlanarError::Domain("need at least two nodes".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PlanarError::Domain("node positions must be strictly increasing".into()));
    }
    Ok(())
}

/// `A (1 - a^2)^2 (1 - s a)` on `|a| < 1`, zero elsewhere.
pub fn bump_profile(amplitude: f64, skew: f64, a: f64) -> f64 {
    if a.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - a * a;
    amplitude * w * w * (1.0 - skew * a)
}

pub fn bump_profile_derivative(amplitude: f64, skew: f64, a: f64) -> f64 {
    if a.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - a * a;
    amplitude * (-4.0 * a * w * (1.0 - skew * a) - skew * w * w)
}

/// Parameters of the blowup data
/// `u(0,x) = u0 + eps phi(x/eps) + eps^2 eta(eps^(2/3) x)`, `phi = eta = bump`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct BlowupProfileSpec {
    pub u0: f64,
    pub eps: f64,
    pub amplitude: f64,
    pub skew: f64,
}

impl BlowupProfileSpec {
    /// Smallest `A` with `A s > 8 mu C_U / (c'(u0) C_L)`, times `margin`.
    pub fn sized_for(params: &MaterialParams, u0: f64, eps: f64, skew: f64, margin: f64) -> Self {
        let needed = 8.0 * params.mu * params.speed_upper()
            / (params.speed_derivative_planar(u0) * params.speed_lower())
            / skew;
        let amplitude = (needed * margin).max(1.0);
        Self { u0, eps, amplitude, skew }
    }

    pub fn validate(&self, params: &MaterialParams) -> Result<(), PlanarError> {
        if !(self.amplitude > 0.0) {
            return Err(PlanarError::Precondition(format!("amplitude must be > 0, got {}", self.amplitude)));
        }
        if !(self.skew > 0.0 && self.skew <= 1.0) {
            return Err(PlanarError::Precondition(format!("skew must lie in (0, 1], got {}", self.skew)));
        }
        if !(self.eps > 0.0) {
            return Err(PlanarError::Precondition(format!("eps must be > 0, got {}", self.eps)));
        }
        let dc = params.speed_derivative_planar(self.u0);
        if !(dc > 0.0) {
            return Err(PlanarError::Precondition(format!("c'(u0) must be > 0, got {dc}")));
        }
        let needed = 8.0 * params.mu * params.speed_upper() / (dc * params.speed_lower());
        if params.mu > 0.0 && !(self.amplitude * self.skew > needed) {
            return Err(PlanarError::Precondition(format!(
                "-phi'(0) = {} must exceed 8 mu C_U / (c'(u0) C_L) = {needed}",
                self.amplitude * self.skew
            )));
        }
        Ok(())
    }

    /// Half-width `eps^(-2/3)` of the slow bump's support.
    pub fn outer_radius(&self) -> f64 {
        self.eps.powf(-2.0 / 3.0)
    }

    pub fn u(&self, x: f64) -> f64 {
        let e = self.eps;
        self.u0
            + e * bump_profile(self.amplitude, self.skew, x / e)
            + e * e * bump_profile(self.amplitude, self.skew, e.powf(2.0 / 3.0) * x)
    }

    pub fn u_x(&self, x: f64) -> f64 {
        let e = self.eps;
        bump_profile_derivative(self.amplitude, self.skew, x / e)
            + e.powf(8.0 / 3.0) * bump_profile_derivative(self.amplitude, self.skew, e.powf(2.0 / 3.0) * x)
    }

    pub fn u_t(&self, params: &MaterialParams, x: f64) -> f64 {
        (-params.wave_speed_planar(self.u(x)) + self.eps) * self.u_x(x)
    }

    /// Exact `S(0, 0) = (2 c(u(0,0)) - eps) |u_x(0,0)|`, including the slow bump.
    pub fn s00(&self, params: &MaterialParams) -> f64 {
        (-2.0 * params.wave_speed_planar(self.u(0.0)) + self.eps) * self.u_x(0.0)
    }
}

/// Samples the blowup data on `x_grid`.
pub fn blowup_initial_data(
    params: &MaterialParams,
    spec: &BlowupProfileSpec,
    x_grid: &[f64],
) -> Result<PlanarState, PlanarError> {
    spec.validate(params)?;
    let lower = params.speed_lower();
    if spec.eps >= lower {
        return Err(PlanarError::Precondition(format!("eps = {} must be below C_L = {lower}", spec.eps)));
    }
    check_grid(x_grid)?;
    let reach = spec.outer_radius() + 1.0;
    if x_grid[0] > -reach || x_grid[x_grid.len() - 1] < reach {
        return Err(PlanarError::Domain(format!("grid must cover [-{reach}, {reach}]")));
    }
    let u: Vec<f64> = x_grid.iter().map(|&x| spec.u(x)).collect();
    let u_x: Vec<f64> = x_grid.iter().map(|&x| spec.u_x(x)).collect();
    let r = u_x.iter().map(|&ux| spec.eps * ux).collect();
    let s = u
        .iter()
        .zip(&u_x)
        .map(|(&u, &ux)| (-2.0 * params.wave_speed_planar(u) + spec.eps) * ux)
        .collect();
    PlanarState::new(0.0, x_grid.to_vec(), u, r, s)
}

/// Graded grid for the blowup data: uniform `fine_step` on `[-eps, eps]`
/// (containing `x = 0` as a node), geometric growth up to `coarse_step`, then
/// uniform out to `eps^(-2/3) + 1 + pad`.
pub fn blowup_grid(spec: &BlowupProfileSpec, fine_step: f64, coarse_step: f64, pad: f64) -> Vec<f64> {
    let half = spec.eps;
    let reach = spec.outer_radius() + 1.0 + pad;
    let cells = (half / fine_step).ceil() as usize;
    let h = half / cells as f64;
    let mut right: Vec<f64> = (0..=cells).map(|k| k as f64 * h).collect();
    let mut step = h;
    let mut x = half;
    while x < reach {
        step = (step * 1.05).min(coarse_step);
        x += step;
        right.push(x);
    }
    let mut grid: Vec<f64> = right.iter().skip(1).rev().map(|v| -v).collect();
    grid.extend(right);
    grid
}

/// `E = 1/2 int (R^2 + S^2) dx` by the trapezoidal rule on the nodes.
pub fn planar_energy(state: &PlanarState) -> f64 {
    let dens = |i: usize| 0.5 * (state.r[i] * state.r[i] + state.s[i] * state.s[i]);
    state.x.windows(2).enumerate().map(|(i, w)| 0.5 * (w[1] - w[0]) * (dens(i) + dens(i + 1))).sum()
}

#[inline]
fn riccati_coeff(params: &MaterialParams, u: f64) -> f64 {
    params.speed_derivative_planar(u) / (4.0 * params.wave_speed_planar(u))
}

#[inline]
fn source_r(params: &MaterialParams, u: f64, r: f64, s: f64) -> f64 {
    riccati_coeff(params, u) * (r * r - s * s) - 0.5 * params.mu * (r + s)
}

#[inline]
fn source_s(params: &MaterialParams, u: f64, r: f64, s: f64) -> f64 {
    riccati_coeff(params, u) * (s * s - r * r) - 0.5 * params.mu * (r + s)
}

struct Sampler<'a> {
    x: &'a [f64],
    u: Pchip<'a>,
    r: Pchip<'a>,
    s: Pchip<'a>,
}

impl<'a> Sampler<'a> {
    fn new(state: &'a PlanarState) -> Self {
        Self {
            x: &state.x,
            u: Pchip::new(&state.x, &state.u),
            r: Pchip::new(&state.x, &state.r),
            s: Pchip::new(&state.x, &state.s),
        }
    }

    fn at(&self, x: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        if x <= self.x[0] {
            return (self.u.eval(x), self.r.eval(x), self.s.eval(x));
        }
        if x >= self.x[n - 1] {
            return (self.u.eval(x), self.r.eval(x), self.s.eval(x));
        }
        let i = bracket(self.x, x);
        (self.u.eval_in(i, x), self.r.eval_in(i, x), self.s.eval_in(i, x))
    }
}

/// Largest step allowed on the current grid: `cfl` times the smaller of the
/// reference spacing over `C_U` and the time for two neighbouring forward
/// characteristics to meet.
pub fn cfl_step(state: &PlanarState, params: &MaterialParams, cfl: f64) -> f64 {
    step_limit(state, params, cfl).0
}

/// As [`cfl_step`], also returning the cell whose closing characteristics bind
/// the step, if any.
fn step_limit(state: &PlanarState, params: &MaterialParams, cfl: f64) -> (f64, Option<usize>) {
    let mut limit = state.reference_spacing / params.speed_upper();
    let mut cell = None;
    let mut c_prev = params.wave_speed_planar(state.u[0]);
    for i in 1..state.len() {
        let c = params.wave_speed_planar(state.u[i]);
        let closing = c_prev - c;
        if closing > 0.0 {
            let meet = (state.x[i] - state.x[i - 1]) / closing;
            if meet < limit {
                limit = meet;
                cell = Some(i);
            }
        }
        c_prev = c;
    }
    (cfl * limit, cell)
}

/// One predictor–corrector step of size `dt` along both characteristic
/// families.
pub fn evolve_planar(state: &PlanarState, params: &MaterialParams, dt: f64) -> Result<PlanarState, PlanarError> {
    let limit = cfl_step(state, params, DEFAULT_CFL);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(PlanarError::Cfl { dt, limit });
    }
    step_unchecked(state, params, dt)
}

fn step_unchecked(state: &PlanarState, params: &MaterialParams, dt: f64) -> Result<PlanarState, PlanarError> {
    let sampler = Sampler::new(state);
    let speed = |u: f64| params.wave_speed_planar(u);
    let half = 0.5 * dt;

    let nodes: Vec<(f64, f64, f64, f64)> = (0..state.len())
        .into_par_iter()
        .map(|i| {
            let (x0, u0, r0, s0) = (state.x[i], state.u[i], state.r[i], state.s[i]);
            let c0 = speed(u0);
            let fs0 = source_s(params, u0, r0, s0);

            // predictor
            let x_p = x0 + dt * c0;
            let u_p = u0 + dt * r0;
            let s_p = s0 + dt * fs0;
            let (ub, rb, sb) = sampler.at(x_p + dt * c0);
            let r_p = rb + dt * source_r(params, ub, rb, sb);

            // corrector
            let x1 = x0 + half * (c0 + speed(u_p));
            let u1 = u0 + half * (r0 + r_p);
            let s1 = s0 + half * (fs0 + source_s(params, u_p, r_p, s_p));
            let c1 = speed(u1);
            let (uf, _, _) = sampler.at(x1 + dt * c1);
            let (ub, rb, sb) = sampler.at(x1 + half * (c1 + speed(uf)));
            let r1 = rb + half * (source_r(params, ub, rb, sb) + source_r(params, u1, r_p, s1));
            (x1, u1, r1, s1)
        })
        .collect();

    let time = state.time + dt;
    let mut next = PlanarState {
        time,
        reference_spacing: state.reference_spacing,
        x: Vec::with_capacity(nodes.len()),
        u: Vec::with_capacity(nodes.len()),
        r: Vec::with_capacity(nodes.len()),
        s: Vec::with_capacity(nodes.len()),
    };
    for (i, &(x, u, r, s)) in nodes.iter().enumerate() {
        let finite = x.is_finite() && u.is_finite() && r.is_finite() && s.is_finite();
        if !finite || r.abs() > OVERFLOW_GUARD || s.abs() > OVERFLOW_GUARD {
            return Err(PlanarError::Blowup { time, x: state.x[i] });
        }
        if i > 0 && x <= next.x[i - 1] {
            // forward characteristics crossed: the gradient became infinite
            return Err(PlanarError::Blowup { time, x });
        }
        next.x.push(x);
        next.u.push(u);
        next.r.push(r);
        next.s.push(s);
    }
    Ok(next)
}

/// Per-step diagnostics of a planar run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub time: f64,
    pub max_abs_r: f64,
    pub max_abs_s: f64,
    /// Position of the largest of `|R|`, `|S|`.
    pub argmax_x: f64,
    pub energy: f64,
}

impl TraceSample {
    pub fn of(state: &PlanarState) -> Self {
        let mut best = (0.0, state.x[0]);
        for i in 0..state.len() {
            let g = state.r[i].abs().max(state.s[i].abs());
            if g > best.0 {
                best = (g, state.x[i]);
            }
        }
        Self {
            time: state.time,
            max_abs_r: state.max_abs_r(),
            max_abs_s: state.max_abs_s(),
            argmax_x: best.1,
            energy: planar_energy(state),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub blew_up: bool,
    pub t_star: Option<f64>,
    pub x_star: Option<f64>,
    pub max_gradient: f64,
    pub theoretical_bound: Option<f64>,
}

/// First time `max(|R|, |S|)` exceeds `threshold`.
pub fn detect_blowup(run: &[TraceSample], threshold: f64, theoretical_bound: Option<f64>) -> BlowupReport {
    let max_gradient = run.iter().map(|s| s.max_abs_r.max(s.max_abs_s)).fold(0.0, f64::max);
    let hit = run.iter().find(|s| s.max_abs_r.max(s.max_abs_s) > threshold);
    BlowupReport {
        blew_up: hit.is_some(),
        t_star: hit.map(|s| s.time),
        x_star: hit.map(|s| s.argmax_x),
        max_gradient,
        theoretical_bound,
    }
}

/// Upper bound `16 C_U / (c'(u0) S(0,0))` on the blowup time.
pub fn blowup_time_bound(params: &MaterialParams, u0: f64, s00: f64) -> Result<f64, PlanarError> {
    let dc = params.speed_derivative_planar(u0);
    if !(dc > 0.0) {
        return Err(PlanarError::Precondition(format!("c'(u0) must be > 0, got {dc}")));
    }
    if !(s00 > 0.0) {
        return Err(PlanarError::Precondition(format!("S(0,0) must be > 0, got {s00}")));
    }
    Ok(16.0 * params.speed_upper() / (dc * s00))
}

#[derive(Debug, Clone)]
pub struct PlanarRunOptions {
    pub cfl: f64,
    pub t_max: f64,
    /// Blowup threshold as a multiple of the initial `max |S|`.
    pub threshold_factor: f64,
    /// Keep full states at these times (sorted).
    pub snapshot_times: Vec<f64>,
    /// Track the sign-invariant region bounded by the forward characteristic
    /// from `x = .0` and the backward characteristic from `.1`.
    pub sign_region: Option<(f64, f64)>,
    /// Characteristics are taken to have met once the step limit falls below
    /// this fraction of the reference step `cfl * reference_spacing / C_U`.
    pub collapse_ratio: f64,
}

impl Default for PlanarRunOptions {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            t_max: 10.0,
            threshold_factor: DEFAULT_THRESHOLD_FACTOR,
            snapshot_times: Vec::new(),
            sign_region: None,
            collapse_ratio: 1e-6,
        }
    }
}

/// Outcome of the sign-persistence check on the tracked region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignCheck {
    pub steps_checked: usize,
    pub nodes_checked: usize,
    pub violations: usize,
    pub max_r_inside: f64,
    pub min_s_inside: f64,
    /// Nodes inside the region at `t = 0` satisfying `u_x < 0, R < 0, S > 0`.
    pub initial_strict: bool,
}

#[derive(Debug, Clone)]
pub struct PlanarRun {
    pub trace: Vec<TraceSample>,
    pub snapshots: Vec<PlanarState>,
    pub final_state: PlanarState,
    pub threshold: f64,
    /// Set when the overflow guard tripped or neighbouring characteristics
    /// met before the threshold was reached.
    pub guard_tripped: Option<(f64, f64)>,
    pub signs: Option<SignCheck>,
}

/// Marches until the blowup threshold, the overflow guard, or `t_max`.
pub fn run_planar(initial: PlanarState, params: &MaterialParams, opts: &PlanarRunOptions) -> PlanarRun {
    let threshold = opts.threshold_factor * initial.max_abs_s().max(initial.max_abs_r());
    let mut trace = vec![TraceSample::of(&initial)];
    let mut snapshots = Vec::new();
    let mut pending = opts.snapshot_times.iter().copied().peekable();
    while let Some(&t) = pending.peek() {
        if t <= initial.time {
            snapshots.push(initial.clone());
            pending.next();
        } else {
            break;
        }
    }

    let mut tracker = opts.sign_region.map(|(left, right)| SignTracker::new(&initial, params, left, right));
    let min_dt = opts.collapse_ratio * opts.cfl * initial.reference_spacing / params.speed_upper();
    let mut state = initial;
    let mut guard_tripped = None;

    while state.time < opts.t_max {
        let current = state.max_abs_r().max(state.max_abs_s());
        if threshold > 0.0 && current > threshold {
            break;
        }
        let (limit, cell) = step_limit(&state, params, opts.cfl);
        if limit < min_dt {
            let i = cell.unwrap_or(0);
            guard_tripped = Some((state.time, 0.5 * (state.x[i] + state.x[i.saturating_sub(1)])));
            break;
        }
        let mut dt = limit.min(opts.t_max - state.time);
        if let Some(&t) = pending.peek() {
            if t > state.time {
                dt = dt.min(t - state.time);
            }
        }
        let old_max_s = state.max_abs_s();
        let next = loop {
            match step_unchecked(&state, params, dt) {
                Ok(next) => {
                    let grew = old_max_s > 0.0 && next.max_abs_s() > (1.0 + MAX_STEP_GROWTH) * old_max_s;
                    if grew && dt > min_dt {
                        dt *= 0.5;
                        continue;
                    }
                    break Some(next);
                }
                Err(PlanarError::Blowup { time, x }) => {
                    if dt > min_dt {
                        dt *= 0.5;
                        continue;
                    }
                    guard_tripped = Some((time, x));
                    break None;
                }
                Err(_) => unreachable!("unchecked step only reports blowup"),
            }
        };
        let Some(next) = next else { break };
        if let Some(tr) = tracker.as_mut() {
            tr.advance(&state, &next, params);
        }
        state = next;
        trace.push(TraceSample::of(&state));
        while let Some(&t) = pending.peek() {
            if t <= state.time + 1e-12 {
                snapshots.push(state.clone());
                pending.next();
            } else {
                break;
            }
        }
    }

    PlanarRun {
        trace,
        snapshots,
        final_state: state,
        threshold,
        guard_tripped,
        signs: tracker.map(|t| t.check),
    }
}

impl PlanarRun {
    pub fn report(&self, theoretical_bound: Option<f64>) -> BlowupReport {
        let mut report = detect_blowup(&self.trace, self.threshold, theoretical_bound);
        if !report.blew_up {
            if let Some((time, x)) = self.guard_tripped {
                report.blew_up = true;
                report.t_star = Some(time);
                report.x_star = Some(x);
            }
        }
        report
    }
}

struct SignTracker {
    /// Index of the node riding the forward characteristic from the left end.
    left_node: usize,
    right_x: f64,
    check: SignCheck,
}

impl SignTracker {
    fn new(state: &PlanarState, params: &MaterialParams, left: f64, right: f64) -> Self {
        let left_node = state
            .x
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - left).abs().total_cmp(&(b.1 - left).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut strict = true;
        for i in 0..state.len() {
            let x = state.x[i];
            if x >= state.x[left_node] && x < right {
                let (_, ux) = state.derivatives(params, i);
                strict &= ux < 0.0 && state.r[i] < 0.0 && state.s[i] > 0.0;
            }
        }
        let mut tracker = Self {
            left_node,
            right_x: right,
            check: SignCheck {
                steps_checked: 0,
                nodes_checked: 0,
                violations: 0,
                max_r_inside: f64::NEG_INFINITY,
                min_s_inside: f64::INFINITY,
                initial_strict: strict,
            },
        };
        tracker.inspect(state);
        tracker
    }

    fn advance(&mut self, old: &PlanarState, new: &PlanarState, params: &MaterialParams) {
        let dt = new.time - old.time;
        let u_old = Pchip::new(&old.x, &old.u);
        let u_new = Pchip::new(&new.x, &new.u);
        let c_old = params.wave_speed_planar(u_old.eval(self.right_x));
        let x_pred = self.right_x - dt * c_old;
        let c_new = params.wave_speed_planar(u_new.eval(x_pred));
        self.right_x -= 0.5 * dt * (c_old + c_new);
        self.inspect(new);
    }

    fn inspect(&mut self, state: &PlanarState) {
        let left = state.x[self.left_node];
        if self.right_x <= left {
            return;
        }
        self.check.steps_checked += 1;
        for i in self.left_node..state.len() {
            let x = state.x[i];
            if x > self.right_x {
                break;
            }
            self.check.nodes_checked += 1;
            self.check.max_r_inside = self.check.max_r_inside.max(state.r[i]);
            self.check.min_s_inside = self.check.min_s_inside.min(state.s[i]);
            if state.r[i] > 0.0 || state.s[i] < 0.0 {
                self.check.violations += 1;
            }
        }
    }
}
