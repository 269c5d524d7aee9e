//! Physical initial data and its image, the boundary curve `Y = phi(X)`.

use serde::Serialize;

use super::system::NodeState;
use super::EnergyCoordError;
use crate::model::MaterialParams;
use crate::vec3::{axpy, dot, lerp, norm, norm2, normalize, reject, sub, Vec3};

/// Tolerance on `|n| = 1` for initial samples.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Tolerance on `n . n_t = n . n_x = 0`, relative to `1 + |v|`.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

/// Samples of `(n, n_t, n_x)` at `t = 0` on increasing positions `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorInitialData {
    pub x: Vec<f64>,
    pub n: Vec<Vec3>,
    pub n_t: Vec<Vec3>,
    pub n_x: Vec<Vec3>,
}

impl DirectorInitialData {
    pub fn new(x: Vec<f64>, n: Vec<Vec3>, n_t: Vec<Vec3>, n_x: Vec<Vec3>) -> Result<Self, EnergyCoordError> {
        let data = Self { x, n, n_t, n_x };
        data.validate()?;
        Ok(data)
    }

    /// Renormalizes `n` and removes the components of `n_t`, `n_x` along `n`.
    pub fn projected(x: Vec<f64>, n: Vec<Vec3>, n_t: Vec<Vec3>, n_x: Vec<Vec3>) -> Result<Self, EnergyCoordError> {
        let n: Vec<Vec3> = n.into_iter().map(normalize).collect();
        let n_t = n_t.iter().zip(&n).map(|(&v, &d)| reject(v, d)).collect();
        let n_x = n_x.iter().zip(&n).map(|(&v, &d)| reject(v, d)).collect();
        Self::new(x, n, n_t, n_x)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<(), EnergyCoordError> {
        let len = self.x.len();
        if len < 2 || self.n.len() != len || self.n_t.len() != len || self.n_x.len() != len {
            return Err(EnergyCoordError::InvalidData("need at least two samples of equal length".into()));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EnergyCoordError::InvalidData("positions must be strictly increasing".into()));
        }
        for i in 0..len {
            let (n, nt, nx) = (self.n[i], self.n_t[i], self.n_x[i]);
            let finite = n.iter().chain(&nt).chain(&nx).all(|v| v.is_finite());
            if !finite {
                return Err(EnergyCoordError::InvalidData(format!("non-finite value at sample {i}")));
            }
            if (norm(n) - 1.0).abs() > NORM_TOLERANCE {
                return Err(EnergyCoordError::InvalidData(format!(
                    "|n| = {} at sample {i} (x = {})",
                    norm(n),
                    self.x[i]
                )));
            }
            for (name, v) in [("n_t", nt), ("n_x", nx)] {
                if dot(n, v).abs() > ORTHOGONALITY_TOLERANCE * (1.0 + norm(v)) {
                    return Err(EnergyCoordError::InvalidData(format!(
                        "n . {name} = {} at sample {i} (x = {})",
                        dot(n, v),
                        self.x[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(R, S) = (n_t + c n_x, n_t - c n_x)` at sample `i`.
    pub fn riemann(&self, params: &MaterialParams, i: usize) -> (Vec3, Vec3) {
        let c = params.speed_of_n1(self.n[i][0]);
        (axpy(self.n_t[i], c, self.n_x[i]), axpy(self.n_t[i], -c, self.n_x[i]))
    }

    /// `1/2 int |n_t|^2 + c^2 |n_x|^2 dx` by the trapezoidal rule.
    pub fn energy(&self, params: &MaterialParams) -> f64 {
        let dens = |i: usize| {
            let c = params.speed_of_n1(self.n[i][0]);
            0.5 * (norm2(self.n_t[i]) + c * c * norm2(self.n_x[i]))
        };
        trapezoid(&self.x, dens)
    }
}

fn trapezoid(x: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    x.windows(2).enumerate().map(|(i, w)| 0.5 * (w[1] - w[0]) * (f(i) + f(i + 1))).sum()
}

/// One sample of the boundary curve with its source position `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub coord_x: f64,
    pub coord_y: f64,
    pub state: NodeState,
}

/// The image of `t = 0` in energy coordinates, carrying the boundary data
/// `p = q = 1`, `h1 = 1/(1+|R|^2)`, `ell = R h1`, `h2 = 1/(1+|S|^2)`, `m = S h2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub points: Vec<CurvePoint>,
    riemann: Vec<(Vec3, Vec3)>,
    /// `1/4 int |R|^2 + |S|^2 dx`.
    pub energy0: f64,
    /// `1/2 int |n_t|^2 + c^2 |n_x|^2 dx` on the same samples. Equal to
    /// `energy0` up to rounding.
    pub physical_energy0: f64,
}

/// `X(x) = int_0^x (1 + |R|^2)`, `Y(x) = int_x^0 (1 + |S|^2)` by cumulative
/// trapezoidal quadrature, and the boundary data on the curve.
pub fn forward_transform(data: &DirectorInitialData, params: &MaterialParams) -> Result<BoundaryCurve, EnergyCoordError> {
    data.validate()?;
    let len = data.len();
    if !(data.x[0] <= 0.0 && data.x[len - 1] >= 0.0) {
        return Err(EnergyCoordError::InvalidData("samples must contain x = 0 in their range".into()));
    }
    let riemann: Vec<(Vec3, Vec3)> = (0..len).map(|i| data.riemann(params, i)).collect();
    if riemann.iter().any(|(r, s)| !(norm2(*r).is_finite() && norm2(*s).is_finite())) {
        return Err(EnergyCoordError::InvalidData("R or S is not finite".into()));
    }
    let dens_x: Vec<f64> = riemann.iter().map(|(r, _)| 1.0 + norm2(*r)).collect();
    let dens_y: Vec<f64> = riemann.iter().map(|(_, s)| 1.0 + norm2(*s)).collect();
    let mut cx = vec![0.0; len];
    let mut cy = vec![0.0; len];
    for i in 1..len {
        let dx = data.x[i] - data.x[i - 1];
        cx[i] = cx[i - 1] + 0.5 * dx * (dens_x[i] + dens_x[i - 1]);
        cy[i] = cy[i - 1] - 0.5 * dx * (dens_y[i] + dens_y[i - 1]);
    }
    // shift so that X(0) = Y(0) = 0
    let k = crate::interp::bracket(&data.x, 0.0);
    let w = (0.0 - data.x[k]) / (data.x[k + 1] - data.x[k]);
    let x0 = cx[k] + w * (cx[k + 1] - cx[k]);
    let y0 = cy[k] + w * (cy[k + 1] - cy[k]);

    let points = (0..len)
        .map(|i| {
            let (r, s) = riemann[i];
            CurvePoint {
                x: data.x[i],
                coord_x: cx[i] - x0,
                coord_y: cy[i] - y0,
                state: NodeState::from_riemann(data.n[i], r, s, 1.0, 1.0),
            }
        })
        .collect();
    let energy0 = 0.25 * trapezoid(&data.x, |i| norm2(riemann[i].0) + norm2(riemann[i].1));
    Ok(BoundaryCurve { points, riemann, energy0, physical_energy0: data.energy(params) })
}

impl BoundaryCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &CurvePoint {
        &self.points[0]
    }

    pub fn last(&self) -> &CurvePoint {
        &self.points[self.points.len() - 1]
    }

    /// Largest `|X + Y| - 4 E0` over the samples; non-positive when the
    /// curve stays in its admissible strip.
    pub fn strip_excess(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p.coord_x + p.coord_y).abs() - 4.0 * self.energy0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Data between samples `k` and `k + 1` at weight `w`: positions and
    /// Riemann vectors interpolated linearly, `n` renormalized, `R`, `S`
    /// projected orthogonal to `n`.
    pub fn interpolate(&self, k: usize, w: f64) -> CurvePoint {
        let (a, b) = (&self.points[k], &self.points[k + 1]);
        if w == 0.0 {
            return *a;
        }
        if w == 1.0 {
            return *b;
        }
        let n = normalize(lerp(a.state.n, b.state.n, w));
        let r = reject(lerp(self.riemann[k].0, self.riemann[k + 1].0, w), n);
        let s = reject(lerp(self.riemann[k].1, self.riemann[k + 1].1, w), n);
        CurvePoint {
            x: a.x + w * (b.x - a.x),
            coord_x: a.coord_x + w * (b.coord_x - a.coord_x),
            coord_y: a.coord_y + w * (b.coord_y - a.coord_y),
            state: NodeState::from_riemann(n, r, s, 1.0, 1.0),
        }
    }

    /// The curve point with `X = cx`, if `cx` lies in the sampled range.
    pub fn at_coord_x(&self, cx: f64) -> Option<CurvePoint> {
        let pts = &self.points;
        if cx < pts[0].coord_x || cx > pts[pts.len() - 1].coord_x {
            return None;
        }
        let k = pts.partition_point(|p| p.coord_x <= cx).clamp(1, pts.len() - 1) - 1;
        let (a, b) = (pts[k].coord_x, pts[k + 1].coord_x);
        let mut pt = self.interpolate(k, ((cx - a) / (b - a)).clamp(0.0, 1.0));
        pt.coord_x = cx;
        Some(pt)
    }

    /// The curve point with `Y = cy`, if `cy` lies in the sampled range.
    pub fn at_coord_y(&self, cy: f64) -> Option<CurvePoint> {
        let pts = &self.points;
        if cy > pts[0].coord_y || cy < pts[pts.len() - 1].coord_y {
            return None;
        }
        let k = pts.partition_point(|p| p.coord_y >= cy).clamp(1, pts.len() - 1) - 1;
        let (a, b) = (pts[k].coord_y, pts[k + 1].coord_y);
        let mut pt = self.interpolate(k, ((cy - a) / (b - a)).clamp(0.0, 1.0));
        pt.coord_y = cy;
        Some(pt)
    }

    /// `phi(X)`.
    pub fn phi(&self, cx: f64) -> Option<f64> {
        self.at_coord_x(cx).map(|p| p.coord_y)
    }

    /// `phi^{-1}(Y)`.
    pub fn phi_inverse(&self, cy: f64) -> Option<f64> {
        self.at_coord_y(cy).map(|p| p.coord_x)
    }

    /// Source position of the point with energy coordinate `X = cx`.
    pub fn source_of_coord_x(&self, cx: f64) -> Option<f64> {
        self.at_coord_x(cx).map(|p| p.x)
    }

    /// The curve point whose source position is `x`.
    pub fn at_source(&self, x: f64) -> Option<CurvePoint> {
        let pts = &self.points;
        if x < pts[0].x || x > pts[pts.len() - 1].x {
            return None;
        }
        let k = pts.partition_point(|p| p.x <= x).clamp(1, pts.len() - 1) - 1;
        Some(self.interpolate(k, ((x - pts[k].x) / (pts[k + 1].x - pts[k].x)).clamp(0.0, 1.0)))
    }

    /// Change of `R` between neighbouring samples, largest over the curve.
    pub fn max_riemann_jump(&self) -> f64 {
        self.riemann
            .windows(2)
            .map(|w| norm(sub(w[1].0, w[0].0)).max(norm(sub(w[1].1, w[0].1))))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energycoords::system::invariant_residuals;

    fn constant(n: Vec3, len: usize) -> DirectorInitialData {
        let x: Vec<f64> = (0..len).map(|k| -1.0 + 2.0 * k as f64 / (len - 1) as f64).collect();
        DirectorInitialData::new(x, vec![n; len], vec![[0.0; 3]; len], vec![[0.0; 3]; len]).unwrap()
    }

    #[test]
    fn constant_data_maps_to_the_antidiagonal() {
        let p = MaterialParams::new(2.0, 1.0, 0.3).unwrap();
        let curve = forward_transform(&constant([0.0, 1.0, 0.0], 21), &p).unwrap();
        assert_eq!(curve.energy0, 0.0);
        for pt in &curve.points {
            assert!((pt.coord_x - pt.x).abs() < 1e-15);
            assert!((pt.coord_y + pt.x).abs() < 1e-15);
            assert_eq!(pt.state, NodeState::vacuum([0.0, 1.0, 0.0]));
        }
    }

    #[test]
    fn rejects_non_unit_director() {
        let mut d = constant([1.0, 0.0, 0.0], 5);
        d.n[2] = [1.0 + 1e-9, 0.0, 0.0];
        assert!(d.validate().is_err());
        let mut d = constant([1.0, 0.0, 0.0], 5);
        d.n_t[1] = [0.1, 0.0, 0.0];
        assert!(d.validate().is_err());
    }

    #[test]
    fn requires_origin_in_range() {
        let p = MaterialParams::default();
        let x = vec![0.5, 1.0];
        let d = DirectorInitialData::new(x, vec![[1.0, 0.0, 0.0]; 2], vec![[0.0; 3]; 2], vec![[0.0; 3]; 2]).unwrap();
        assert!(forward_transform(&d, &p).is_err());
    }

    #[test]
    fn interpolated_points_satisfy_constraints() {
        let p = MaterialParams::new(2.0, 1.0, 0.0).unwrap();
        let len = 41;
        let x: Vec<f64> = (0..len).map(|k| -1.0 + 2.0 * k as f64 / (len - 1) as f64).collect();
        let u: Vec<f64> = x.iter().map(|x| 0.5 + x.sin()).collect();
        let n = u.iter().map(|u| [u.cos(), u.sin(), 0.0]).collect();
        let n_t = x.iter().zip(&u).map(|(x, u)| crate::vec3::scale(0.3 * x, [-u.sin(), u.cos(), 0.0])).collect();
        let n_x = x.iter().zip(&u).map(|(x, u)| crate::vec3::scale(x.cos(), [-u.sin(), u.cos(), 0.0])).collect();
        let curve = forward_transform(&DirectorInitialData::new(x, n, n_t, n_x).unwrap(), &p).unwrap();
        assert!(curve.strip_excess() <= 0.0);
        for k in 0..len - 1 {
            let pt = curve.interpolate(k, 0.37);
            assert!(invariant_residuals(&pt.state).max_abs() < 1e-14);
        }
        let pt = curve.at_coord_x(0.3).unwrap();
        assert!((pt.coord_x - 0.3).abs() < 1e-15);
        assert!(curve.at_coord_y(pt.coord_y).unwrap().x - pt.x < 1e-12);
        assert!((curve.energy0 - curve.physical_energy0).abs() < 1e-14 * (1.0 + curve.energy0));
    }
}
