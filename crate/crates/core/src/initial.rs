//! Built-in initial director fields and their sampling.

use serde::{Deserialize, Serialize};

use crate::energycoords::{DirectorInitialData, EnergyCoordError};
use crate::model::MaterialParams;
use crate::planar::BlowupProfileSpec;
use crate::vec3::{axpy, norm2, scale, Vec3};

/// A director field at `t = 0` given pointwise as `(n, n_t, n_x)`.
pub trait DirectorProfile: Sync {
    fn eval(&self, x: f64) -> (Vec3, Vec3, Vec3);

    /// Interval outside which the data are constant.
    fn support(&self) -> (f64, f64);
}

/// Constant director at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vacuum {
    pub n: Vec3,
}

impl DirectorProfile for Vacuum {
    fn eval(&self, _x: f64) -> (Vec3, Vec3, Vec3) {
        (self.n, [0.0; 3], [0.0; 3])
    }

    fn support(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// `(1 - (x/w)^2)^4` on `|x| < w`.
pub fn smooth_bump(w: f64, x: f64) -> f64 {
    let a = x / w;
    if a.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - a * a).powi(4)
    }
}

pub fn smooth_bump_derivative(w: f64, x: f64) -> f64 {
    let a = x / w;
    if a.abs() >= 1.0 {
        0.0
    } else {
        -8.0 * a * (1.0 - a * a).powi(3) / w
    }
}

/// `n = (cos th, sin th cos ps, sin th sin ps)` with
/// `th = theta0 + theta_amp b(x)`, `ps = psi0 + psi_amp b(x)`, initial
/// angular velocities `theta_rate b(x)`, `psi_rate b(x)` and `b` the smooth
/// bump of half-width `width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothAngles {
    pub width: f64,
    pub theta0: f64,
    pub psi0: f64,
    pub theta_amp: f64,
    pub psi_amp: f64,
    pub theta_rate: f64,
    pub psi_rate: f64,
}

impl Default for SmoothAngles {
    fn default() -> Self {
        Self { width: 0.4, theta0: 1.0, psi0: 0.3, theta_amp: 0.2, psi_amp: 0.15, theta_rate: 0.4, psi_rate: -0.3 }
    }
}

impl SmoothAngles {
    fn angles(&self, x: f64) -> (f64, f64, f64, f64, f64, f64) {
        let b = smooth_bump(self.width, x);
        let db = smooth_bump_derivative(self.width, x);
        (
            self.theta0 + self.theta_amp * b,
            self.psi0 + self.psi_amp * b,
            self.theta_rate * b,
            self.psi_rate * b,
            self.theta_amp * db,
            self.psi_amp * db,
        )
    }

    /// The same shape with amplitudes and rates scaled by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            theta_amp: k * self.theta_amp,
            psi_amp: k * self.psi_amp,
            theta_rate: k * self.theta_rate,
            psi_rate: k * self.psi_rate,
            ..*self
        }
    }

    /// Rescales the amplitudes so that `1/2 int |n_t|^2 + c^2 |n_x|^2`
    /// equals `target`.
    pub fn with_energy(&self, params: &MaterialParams, target: f64) -> Self {
        let energy = |k: f64| profile_energy(&self.scaled(k), params, 4000);
        let (mut lo, mut hi) = (0.0, 1.0);
        while energy(hi) < target {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if energy(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.scaled(0.5 * (lo + hi))
    }
}

impl DirectorProfile for SmoothAngles {
    fn eval(&self, x: f64) -> (Vec3, Vec3, Vec3) {
        let (th, ps, th_t, ps_t, th_x, ps_x) = self.angles(x);
        let (st, ct, sp, cp) = (th.sin(), th.cos(), ps.sin(), ps.cos());
        let n = [ct, st * cp, st * sp];
        let d_th = [-st, ct * cp, ct * sp];
        let d_ps = [0.0, -st * sp, st * cp];
        (n, axpy(scale(th_t, d_th), ps_t, d_ps), axpy(scale(th_x, d_th), ps_x, d_ps))
    }

    fn support(&self) -> (f64, f64) {
        (-self.width, self.width)
    }
}

/// Planar data `n = (cos u, sin u, 0)` of the blowup family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarBlowupProfile {
    pub spec: BlowupProfileSpec,
    pub params: MaterialParams,
}

impl DirectorProfile for PlanarBlowupProfile {
    fn eval(&self, x: f64) -> (Vec3, Vec3, Vec3) {
        planar_director(self.spec.u(x), self.spec.u_t(&self.params, x), self.spec.u_x(x))
    }

    fn support(&self) -> (f64, f64) {
        let r = self.spec.outer_radius();
        (-r, r)
    }
}

/// `(n, n_t, n_x)` of the planar director with angle `u`.
pub fn planar_director(u: f64, u_t: f64, u_x: f64) -> (Vec3, Vec3, Vec3) {
    let (s, c) = u.sin_cos();
    let tangent = [-s, c, 0.0];
    ([c, s, 0.0], scale(u_t, tangent), scale(u_x, tangent))
}

/// Planar director data from samples of `(u, u_t, u_x)`.
pub fn planar_data(x: &[f64], u: &[f64], u_t: &[f64], u_x: &[f64]) -> Result<DirectorInitialData, EnergyCoordError> {
    let len = x.len();
    if u.len() != len || u_t.len() != len || u_x.len() != len {
        return Err(EnergyCoordError::InvalidData("u, u_t, u_x and x lengths differ".into()));
    }
    let (mut n, mut nt, mut nx) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
    for k in 0..len {
        let (a, b, c) = planar_director(u[k], u_t[k], u_x[k]);
        n.push(a);
        nt.push(b);
        nx.push(c);
    }
    DirectorInitialData::new(x.to_vec(), n, nt, nx)
}

/// Energy of a profile by the trapezoidal rule on `samples` uniform cells
/// across its support.
pub fn profile_energy(profile: &dyn DirectorProfile, params: &MaterialParams, samples: usize) -> f64 {
    let (a, b) = profile.support();
    if !(b > a) {
        return 0.0;
    }
    let h = (b - a) / samples as f64;
    (0..=samples)
        .map(|k| {
            let (n, nt, nx) = profile.eval(a + k as f64 * h);
            let c = params.speed_of_n1(n[0]);
            let w = if k == 0 || k == samples { 0.5 } else { 1.0 };
            w * h * 0.5 * (norm2(nt) + c * c * norm2(nx))
        })
        .sum()
}

/// Sampling of a profile on `[x_min, x_max]`, which must contain `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub x_min: f64,
    pub x_max: f64,
    /// Target increment of `X + (-Y)` per cell, about `(2 + |R|^2 + |S|^2) dx`.
    pub arc_step: f64,
    /// Largest allowed `dx`.
    pub max_step: f64,
}

/// Samples `profile` with `dx = min(max_step, arc_step / (2 + |R|^2 + |S|^2))`
/// so that the boundary curve is resolved evenly in energy coordinates.
/// The origin is always a sample.
pub fn sample_profile(
    profile: &dyn DirectorProfile,
    params: &MaterialParams,
    sampling: &Sampling,
) -> Result<DirectorInitialData, EnergyCoordError> {
    let Sampling { x_min, x_max, arc_step, max_step } = *sampling;
    if !(x_min <= 0.0 && x_max >= 0.0 && x_max > x_min) {
        return Err(EnergyCoordError::InvalidData(format!("[{x_min}, {x_max}] must contain 0")));
    }
    if !(arc_step > 0.0 && max_step > 0.0) {
        return Err(EnergyCoordError::InvalidData("sampling steps must be positive".into()));
    }
    let step_at = |x: f64| {
        let (n, nt, nx) = profile.eval(x);
        let c = params.speed_of_n1(n[0]);
        let weight = 2.0 + norm2(axpy(nt, c, nx)) + norm2(axpy(nt, -c, nx));
        (arc_step / weight).min(max_step)
    };
    let march = |end: f64| {
        let dir = end.signum();
        let mut pts = vec![0.0];
        let mut x: f64 = 0.0;
        while (end - x).abs() > 0.0 {
            let mut dx = step_at(x);
            dx = dx.min(step_at(x + dir * dx));
            let left = (end - x).abs();
            x = if left <= 1.5 * dx { if left <= dx { end } else { x + dir * 0.5 * left } } else { x + dir * dx };
            pts.push(x);
        }
        pts
    };
    let mut x: Vec<f64> = march(x_min).into_iter().rev().collect();
    x.pop();
    x.extend(march(x_max));
    x.dedup();
    let (mut n, mut nt, mut nx) = (Vec::with_capacity(x.len()), Vec::with_capacity(x.len()), Vec::with_capacity(x.len()));
    for &xi in &x {
        let (a, b, c) = profile.eval(xi);
        n.push(a);
        nt.push(b);
        nx.push(c);
    }
    DirectorInitialData::new(x, n, nt, nx)
}
