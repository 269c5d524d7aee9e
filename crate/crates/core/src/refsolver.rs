//! Finite-difference reference solver in physical `(t, x)` for smooth data.
//!
//! Leapfrog in time, centered conservative differences in space, damping
//! averaged over the two outer time levels. Only meaningful before any
//! gradient blowup.

use serde::Serialize;
use thiserror::Error;

use crate::interp::Pchip;
use crate::model::MaterialParams;
use crate::vec3::{axpy, dot, norm, norm2, scale, sub, Vec3};

/// Abort once `max |u_x|` exceeds this multiple of its initial value.
pub const DEFAULT_GUARD_FACTOR: f64 = 1e3;

/// Tolerance for "constant" when locating the support of the data.
const FLAT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum FdError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("gradient guard tripped near t = {time} (last valid time {last_valid})")]
    NearBlowup { time: f64, last_valid: f64 },
    #[error("unit-norm correction {correction:e} exceeds dx^2 = {allowed:e} at t = {time}")]
    Consistency { time: f64, correction: f64, allowed: f64 },
    #[error("{0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdOptions {
    pub dx: f64,
    pub cfl: f64,
    pub guard_factor: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { dx: 2e-3, cfl: 0.45, guard_factor: DEFAULT_GUARD_FACTOR }
    }
}

/// Planar angle `u` and its rate on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarFdState {
    pub time: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
}

/// Director and its rate on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdState {
    pub time: f64,
    pub x: Vec<f64>,
    pub n: Vec<Vec3>,
    pub n_t: Vec<Vec3>,
}

/// Field values at one time on increasing positions, for comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub x: Vec<f64>,
    pub values: Vec<Vec3>,
}

impl PlanarFdState {
    /// `u` in the first component.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot { time: self.time, x: self.x.clone(), values: self.u.iter().map(|&u| [u, 0.0, 0.0]).collect() }
    }

    pub fn energy(&self, params: &MaterialParams) -> f64 {
        let dx = self.x[1] - self.x[0];
        let len = self.x.len();
        (1..len - 1)
            .map(|i| {
                let ux = (self.u[i + 1] - self.u[i - 1]) / (2.0 * dx);
                let c = params.wave_speed_planar(self.u[i]);
                0.5 * (self.u_t[i].powi(2) + c * c * ux * ux) * dx
            })
            .sum()
    }
}

impl FdState {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot { time: self.time, x: self.x.clone(), values: self.n.clone() }
    }

    /// `1/2 sum |n_t|^2 + c^2 |n_x|^2 dx` with centered `n_x`.
    pub fn energy(&self, params: &MaterialParams) -> f64 {
        let dx = self.x[1] - self.x[0];
        let len = self.x.len();
        (1..len - 1)
            .map(|i| {
                let nx = scale(0.5 / dx, sub(self.n[i + 1], self.n[i - 1]));
                let c = params.speed_of_n1(self.n[i][0]);
                0.5 * (norm2(self.n_t[i]) + c * c * norm2(nx)) * dx
            })
            .sum()
    }
}

fn check_uniform(x: &[f64]) -> Result<f64, FdError> {
    if x.len() < 3 {
        return Err(FdError::Input("need at least three grid points".into()));
    }
    let dx = x[1] - x[0];
    if !(dx > 0.0) {
        return Err(FdError::Input("grid spacing must be positive".into()));
    }
    for (k, w) in x.windows(2).enumerate() {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.max(1.0) {
            return Err(FdError::Input(format!("grid is not uniform at index {k}")));
        }
    }
    Ok(dx)
}

fn check_times(times: &[f64]) -> Result<(), FdError> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(FdError::Input("output times must be non-negative and sorted".into()));
    }
    Ok(())
}

/// Index range outside which every field equals its end value.
fn support<T: Copy>(values: &[T], differs: impl Fn(T, T) -> bool) -> Option<(usize, usize)> {
    let (first, last) = (values[0], values[values.len() - 1]);
    let lo = values.iter().position(|&v| differs(v, first))?;
    let hi = values.iter().rposition(|&v| differs(v, last))?;
    Some((lo, hi))
}

/// The constant extension used for padding is exact only if the data are
/// already constant at both ends.
fn check_flat_ends(span: Option<(usize, usize)>, len: usize) -> Result<(), FdError> {
    match span {
        Some((lo, hi)) if lo < 2 || hi + 3 > len => {
            Err(FdError::Input("data must be constant on the two outermost samples at each end".into()))
        }
        _ => Ok(()),
    }
}

/// Extends `values` by `pad` copies of the end values on each side.
fn pad_with<T: Copy>(values: &[T], pad: usize) -> Vec<T> {
    let mut out = vec![values[0]; pad];
    out.extend_from_slice(values);
    out.extend(std::iter::repeat(values[values.len() - 1]).take(pad));
    out
}

/// Number of extra cells per side so that the data's support, widened by
/// `speed * t_max` plus two cells, stays inside the grid.
fn padding(x: &[f64], dx: f64, span: Option<(usize, usize)>, speed: f64, t_max: f64) -> usize {
    let reach = speed * t_max + 2.0 * dx;
    let (lo, hi) = span.unwrap_or((0, x.len() - 1));
    let need_left = reach - (x[lo] - x[0]);
    let need_right = reach - (x[x.len() - 1] - x[hi]);
    (need_left.max(need_right).max(0.0) / dx).ceil() as usize
}

fn output_plan(times: &[f64], dt: f64) -> (f64, usize) {
    let t_max = times.last().copied().unwrap_or(0.0);
    (t_max, (t_max / dt).ceil() as usize + 1)
}

/// Quadratic through `(t0 - dt, a)`, `(t0, b)`, `(t0 + dt, c)` evaluated at
/// `t0 + s dt`: value and time derivative.
fn quadratic(a: f64, b: f64, c: f64, s: f64, dt: f64) -> (f64, f64) {
    let d1 = 0.5 * (c - a);
    let d2 = c - 2.0 * b + a;
    (b + s * d1 + 0.5 * s * s * d2, (d1 + s * d2) / dt)
}

/// Solves `u_tt + mu u_t - c(u) (c(u) u_x)_x = 0` and returns states at
/// `times`.
pub fn fd_solve_planar(
    initial: &PlanarFdState,
    params: &MaterialParams,
    times: &[f64],
    opts: &FdOptions,
) -> Result<Vec<PlanarFdState>, FdError> {
    params.validate().map_err(|e| FdError::Input(e.to_string()))?;
    check_times(times)?;
    let dx0 = check_uniform(&initial.x)?;
    let len0 = initial.x.len();
    if initial.u.len() != len0 || initial.u_t.len() != len0 {
        return Err(FdError::Input("u, u_t and x lengths differ".into()));
    }
    let dx = dx0;
    let cu = params.speed_upper();
    let dt = opts.cfl * dx / cu;
    let (t_max, steps) = output_plan(times, dt);
    let pairs: Vec<(f64, f64)> = initial.u.iter().copied().zip(initial.u_t.iter().copied()).collect();
    let span = support(&pairs, |a, b| (a.0 - b.0).abs().max((a.1 - b.1).abs()) > FLAT_TOLERANCE);
    check_flat_ends(span, len0)?;
    let pad = padding(&initial.x, dx, span, cu, t_max + dt);
    let x: Vec<f64> = (0..len0 + 2 * pad).map(|k| initial.x[0] + (k as f64 - pad as f64) * dx).collect();
    let len = x.len();
    let u0 = pad_with(&initial.u, pad);
    let ut0 = pad_with(&initial.u_t, pad);
    let mu = params.mu;

    let laplace = |u: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.resize(len, 0.0);
        let c: Vec<f64> = u.iter().map(|&v| params.wave_speed_planar(v)).collect();
        for i in 1..len - 1 {
            let cr = 0.5 * (c[i] + c[i + 1]);
            let cl = 0.5 * (c[i] + c[i - 1]);
            out[i] = c[i] * (cr * (u[i + 1] - u[i]) - cl * (u[i] - u[i - 1])) / (dx * dx);
        }
    };
    let max_grad = |u: &[f64]| u.windows(2).map(|w| (w[1] - w[0]).abs() / dx).fold(0.0, f64::max);
    let guard = opts.guard_factor * max_grad(&u0).max(1.0);

    let mut lap = Vec::new();
    laplace(&u0, &mut lap);
    let mut prev = u0.clone();
    let mut cur: Vec<f64> = (0..len).map(|i| u0[i] + dt * ut0[i] + 0.5 * dt * dt * (lap[i] - mu * ut0[i])).collect();
    let mut out = Vec::with_capacity(times.len());
    let mut pending = times.iter().copied().peekable();
    let mut older;
    let mut step = 1;
    while let Some(&t) = pending.peek() {
        if t == 0.0 {
            out.push(PlanarFdState { time: 0.0, x: x.clone(), u: u0.clone(), u_t: ut0.clone() });
            pending.next();
            continue;
        }
        if step > steps + 1 {
            break;
        }
        laplace(&cur, &mut lap);
        let next: Vec<f64> = (0..len)
            .map(|i| {
                (2.0 * cur[i] - (1.0 - 0.5 * mu * dt) * prev[i] + dt * dt * lap[i]) / (1.0 + 0.5 * mu * dt)
            })
            .collect();
        if !next.iter().all(|v| v.is_finite()) || max_grad(&next) > guard {
            return Err(FdError::NearBlowup { time: (step + 1) as f64 * dt, last_valid: step as f64 * dt });
        }
        older = std::mem::replace(&mut prev, std::mem::replace(&mut cur, next));
        step += 1;
        // levels: older = (step-2) dt, prev = (step-1) dt, cur = step dt
        while let Some(&t) = pending.peek() {
            if t > step as f64 * dt {
                break;
            }
            let s = t / dt - (step - 1) as f64;
            let (mut u, mut ut) = (vec![0.0; len], vec![0.0; len]);
            for i in 0..len {
                (u[i], ut[i]) = quadratic(older[i], prev[i], cur[i], s, dt);
            }
            out.push(PlanarFdState { time: t, x: x.clone(), u, u_t: ut });
            pending.next();
        }
    }
    Ok(out)
}

/// Samples a director field onto a uniform grid for the director solver.
pub fn uniform_director_state(x: Vec<f64>, field: impl Fn(f64) -> (Vec3, Vec3)) -> FdState {
    let (n, n_t) = x.iter().map(|&v| field(v)).unzip();
    FdState { time: 0.0, x, n, n_t }
}

/// Solves the director system with the full lower-order terms, followed by
/// renormalization onto the unit sphere after every step.
pub fn fd_solve_director(
    initial: &FdState,
    params: &MaterialParams,
    times: &[f64],
    opts: &FdOptions,
) -> Result<Vec<FdState>, FdError> {
    params.validate().map_err(|e| FdError::Input(e.to_string()))?;
    check_times(times)?;
    let dx = check_uniform(&initial.x)?;
    let len0 = initial.x.len();
    if initial.n.len() != len0 || initial.n_t.len() != len0 {
        return Err(FdError::Input("n, n_t and x lengths differ".into()));
    }
    for (i, (&n, &nt)) in initial.n.iter().zip(&initial.n_t).enumerate() {
        if (norm(n) - 1.0).abs() > 1e-12 || dot(n, nt).abs() > 1e-10 {
            return Err(FdError::Input(format!("sample {i} is not a unit director with orthogonal rate")));
        }
    }
    let cu = params.speed_upper();
    let dt = opts.cfl * dx / cu;
    let (t_max, steps) = output_plan(times, dt);
    let differs = |a: Vec3, b: Vec3| crate::vec3::max_abs_diff(a, b) > FLAT_TOLERANCE;
    let span = match (support(&initial.n, differs), support(&initial.n_t, differs)) {
        (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
        (a, b) => a.or(b),
    };
    check_flat_ends(span, len0)?;
    let pad = padding(&initial.x, dx, span, cu, t_max + dt);
    let x: Vec<f64> = (0..len0 + 2 * pad).map(|k| initial.x[0] + (k as f64 - pad as f64) * dx).collect();
    let len = x.len();
    let n0 = pad_with(&initial.n, pad);
    let nt0 = pad_with(&initial.n_t, pad);
    let mu = params.mu;
    let elastic = [params.gamma, params.alpha, params.alpha];

    // acceleration without the damping term
    let accel = |n: &[Vec3], nt: &[Vec3], out: &mut Vec<Vec3>| {
        out.clear();
        out.resize(len, [0.0; 3]);
        let c2: Vec<f64> = n.iter().map(|v| params.speed_of_n1(v[0]).powi(2)).collect();
        for i in 1..len - 1 {
            let cr = 0.5 * (c2[i] + c2[i + 1]);
            let cl = 0.5 * (c2[i] + c2[i - 1]);
            let flux = scale(
                1.0 / (dx * dx),
                sub(scale(cr, sub(n[i + 1], n[i])), scale(cl, sub(n[i], n[i - 1]))),
            );
            let nx = scale(0.5 / dx, sub(n[i + 1], n[i - 1]));
            let (a, g) = (norm2(nt[i]), norm2(nx));
            for k in 0..3 {
                out[i][k] = flux[k] + (-a + (2.0 * c2[i] - elastic[k]) * g) * n[i][k];
            }
        }
    };
    let max_grad =
        |n: &[Vec3]| n.windows(2).map(|w| norm(sub(w[1], w[0])) / dx).fold(0.0, f64::max);
    let guard = opts.guard_factor * max_grad(&n0).max(1.0);
    let allowed = dx * dx;
    let renormalize = |v: Vec3| -> (Vec3, f64) {
        let r = norm(v);
        (scale(1.0 / r, v), (r - 1.0).abs())
    };

    let mut acc = Vec::new();
    accel(&n0, &nt0, &mut acc);
    let mut levels: Vec<Vec<Vec3>> = Vec::with_capacity(3);
    levels.push(n0.clone());
    let first: Vec<Vec3> = (0..len)
        .map(|i| {
            let v = axpy(axpy(n0[i], dt, nt0[i]), 0.5 * dt * dt, sub(acc[i], scale(mu, nt0[i])));
            renormalize(v).0
        })
        .collect();
    levels.push(first);

    let mut out = Vec::with_capacity(times.len());
    let mut pending = times.iter().copied().peekable();
    let mut step = 1;
    let mut older = n0.clone();
    while let Some(&t) = pending.peek() {
        if t == 0.0 {
            out.push(FdState { time: 0.0, x: x.clone(), n: n0.clone(), n_t: nt0.clone() });
            pending.next();
            continue;
        }
        if step > steps + 1 {
            break;
        }
        let (prev, cur) = (&levels[levels.len() - 2], &levels[levels.len() - 1]);
        // n_t at the current level by one-sided second-order differences
        let nt: Vec<Vec3> = if step == 1 {
            (0..len).map(|i| scale(1.0 / dt, sub(cur[i], prev[i]))).collect()
        } else {
            (0..len)
                .map(|i| scale(0.5 / dt, axpy(sub(scale(3.0, cur[i]), scale(4.0, prev[i])), 1.0, older[i])))
                .collect()
        };
        accel(cur, &nt, &mut acc);
        let mut worst: f64 = 0.0;
        let next: Vec<Vec3> = (0..len)
            .map(|i| {
                let mut v = [0.0; 3];
                for k in 0..3 {
                    v[k] = (2.0 * cur[i][k] - (1.0 - 0.5 * mu * dt) * prev[i][k] + dt * dt * acc[i][k])
                        / (1.0 + 0.5 * mu * dt);
                }
                let (v, corr) = renormalize(v);
                worst = worst.max(corr);
                v
            })
            .collect();
        let time = (step + 1) as f64 * dt;
        if !next.iter().all(|v| v.iter().all(|c| c.is_finite())) || max_grad(&next) > guard {
            return Err(FdError::NearBlowup { time, last_valid: step as f64 * dt });
        }
        if worst > allowed {
            return Err(FdError::Consistency { time, correction: worst, allowed });
        }
        older = levels.remove(0);
        levels.push(next);
        step += 1;
        let (prev, cur) = (&levels[0], &levels[1]);
        while let Some(&t) = pending.peek() {
            if t > step as f64 * dt {
                break;
            }
            let s = t / dt - (step - 1) as f64;
            let mut n = vec![[0.0; 3]; len];
            let mut n_t = vec![[0.0; 3]; len];
            for i in 0..len {
                for k in 0..3 {
                    (n[i][k], n_t[i][k]) = quadratic(older[i][k], prev[i][k], cur[i][k], s, dt);
                }
                let (v, _) = renormalize(n[i]);
                n[i] = v;
                n_t[i] = crate::vec3::reject(n_t[i], v);
            }
            out.push(FdState { time: t, x: x.clone(), n, n_t });
            pending.next();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunDifference {
    pub time: f64,
    pub linf: f64,
    pub l2: f64,
}

/// Differences of `a` and `b` at each of `times`, with `b` interpolated
/// (monotone cubic, per component) onto `a`'s positions inside the common
/// range.
pub fn compare_runs(a: &[Snapshot], b: &[Snapshot], times: &[f64]) -> Result<Vec<RunDifference>, FdError> {
    let find = |run: &[Snapshot], t: f64| {
        run.iter()
            .find(|s| (s.time - t).abs() <= 1e-12 * t.abs().max(1.0))
            .cloned()
            .ok_or_else(|| FdError::Domain(format!("no snapshot at t = {t}")))
    };
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let (sa, sb) = (find(a, t)?, find(b, t)?);
        out.push(snapshot_difference(&sa, &sb)?);
    }
    Ok(out)
}

/// L-infinity and L2 difference of two snapshots on their common range.
pub fn snapshot_difference(a: &Snapshot, b: &Snapshot) -> Result<RunDifference, FdError> {
    if a.x.len() < 2 || b.x.len() < 2 {
        return Err(FdError::Domain("snapshots need at least two points".into()));
    }
    let lo = a.x[0].max(b.x[0]);
    let hi = a.x[a.x.len() - 1].min(b.x[b.x.len() - 1]);
    if !(hi > lo) {
        return Err(FdError::Domain(format!("snapshots at t = {} do not overlap", a.time)));
    }
    let columns: Vec<Vec<f64>> = (0..3).map(|k| b.values.iter().map(|v| v[k]).collect()).collect();
    let interp: Vec<Pchip> = columns.iter().map(|col| Pchip::new(&b.x, col)).collect();
    let mut xs = Vec::new();
    let mut d = Vec::new();
    for (i, &x) in a.x.iter().enumerate() {
        if x < lo || x > hi {
            continue;
        }
        let diff: f64 = (0..3).map(|k| (a.values[i][k] - interp[k].eval(x)).powi(2)).sum::<f64>().sqrt();
        xs.push(x);
        d.push(diff);
    }
    let linf = d.iter().copied().fold(0.0, f64::max);
    let l2 = xs
        .windows(2)
        .zip(d.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] * f[0] + f[1] * f[1]))
        .sum::<f64>()
        .sqrt();
    Ok(RunDifference { time: a.time, linf, l2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, dx: f64) -> Vec<f64> {
        let n = ((hi - lo) / dx).round() as usize;
        (0..=n).map(|k| lo + k as f64 * dx).collect()
    }

    #[test]
    fn constant_planar_state_is_stationary() {
        let x = grid(-1.0, 1.0, 0.01);
        let len = x.len();
        let init = PlanarFdState { time: 0.0, x, u: vec![0.7; len], u_t: vec![0.0; len] };
        let out = fd_solve_planar(&init, &MaterialParams::new(2.0, 1.0, 0.5).unwrap(), &[0.5, 1.0], &FdOptions::default())
            .unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|s| s.u.iter().all(|&u| u == 0.7)));
    }

    #[test]
    fn constant_director_is_stationary() {
        let n = crate::vec3::normalize([0.2, -0.4, 0.9]);
        let init = uniform_director_state(grid(-1.0, 1.0, 0.01), |_| (n, [0.0; 3]));
        let out =
            fd_solve_director(&init, &MaterialParams::new(2.0, 1.0, 0.5).unwrap(), &[0.3, 0.9], &FdOptions::default())
                .unwrap();
        for s in &out {
            assert!(s.n.iter().all(|v| crate::vec3::max_abs_diff(*v, n) < 1e-13));
        }
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let x = vec![0.0, 0.1, 0.25, 0.3];
        let init = PlanarFdState { time: 0.0, x, u: vec![0.0; 4], u_t: vec![0.0; 4] };
        assert!(fd_solve_planar(&init, &MaterialParams::default(), &[0.1], &FdOptions::default()).is_err());
    }

    #[test]
    fn identical_runs_compare_to_zero() {
        let x = grid(0.0, 1.0, 0.1);
        let s = Snapshot { time: 0.5, values: x.iter().map(|&v| [v.sin(), v, 0.0]).collect(), x };
        let d = compare_runs(&[s.clone()], &[s], &[0.5]).unwrap();
        assert_eq!((d[0].linf, d[0].l2), (0.0, 0.0));
    }
}
