//! Mapping the energy-coordinate solution back to physical `(t, x)`.

use serde::Serialize;
use thiserror::Error;

use crate::energycoords::{EnergyGrid, NodeState};
use crate::model::MaterialParams;
use crate::vec3::{add, norm2, scale, sub, Vec3};

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("coordinate paths disagree by {gap:e} at (X = {x}, Y = {y}), allowed {allowed:e}")]
    Consistency { x: f64, y: f64, gap: f64, allowed: f64 },
    #[error("time {tau} outside the attainable span [0, {max})")]
    Range { tau: f64, max: f64 },
    #[error("coordinates have not been integrated")]
    MissingCoordinates,
    #[error("{0}")]
    Domain(String),
}

/// `t_X`, `t_Y`, `x_X`, `x_Y` at a node.
fn coordinate_rates(s: &NodeState, params: &MaterialParams) -> (f64, f64, f64, f64) {
    let c = params.speed_of_n1(s.n[0]);
    let a = s.p * s.h1 / 2.0;
    let b = s.q * s.h2 / 2.0;
    (a / c, b / c, a, -b)
}

/// Fills `t` and `x` at every node by trapezoidal integration of
/// `t_X = p h1/(2c)`, `t_Y = q h2/(2c)`, `x_X = p h1/2`, `x_Y = -q h2/2`
/// from `t = 0`, `x = x0` on the curve. The routes from below and from the
/// left are averaged; their mismatch is stored in `coord_gap`.
pub fn integrate_coordinates(mut grid: EnergyGrid) -> Result<EnergyGrid, ReconstructError> {
    let params = grid.params;
    let allowed = 10.0 * grid.step_x.max(grid.step_y).powi(2);
    for i in 0..grid.ncols {
        for j in grid.first_row(i)..grid.nrows {
            let (cx, cy) = (grid.coord_x(i), grid.coord_y(j));
            let node = *grid.node(i, j);
            let (tx, ty, xx, xy) = coordinate_rates(&node.state, &params);

            let (bs, bt, bx, by) = if j > 0 && grid.is_active(i, j - 1) {
                let b = grid.node(i, j - 1);
                (b.state, b.t, b.x, grid.coord_y(j - 1))
            } else {
                let f = grid.column_foot(i);
                (f.state, 0.0, f.x, f.coord_y)
            };
            let (ls, lt, lx, lxc) = if i > 0 && grid.is_active(i - 1, j) {
                let l = grid.node(i - 1, j);
                (l.state, l.t, l.x, grid.coord_x(i - 1))
            } else {
                let f = grid.row_foot(j);
                (f.state, 0.0, f.x, f.coord_x)
            };
            let (_, bty, _, bxy) = coordinate_rates(&bs, &params);
            let (ltx, _, lxx, _) = coordinate_rates(&ls, &params);
            let dy = cy - by;
            let dx = cx - lxc;
            let t_b = bt + 0.5 * dy * (bty + ty);
            let x_b = bx + 0.5 * dy * (bxy + xy);
            let t_l = lt + 0.5 * dx * (ltx + tx);
            let x_l = lx + 0.5 * dx * (lxx + xx);
            let gap = (t_b - t_l).abs().max((x_b - x_l).abs());
            if gap > allowed {
                return Err(ReconstructError::Consistency { x: cx, y: cy, gap, allowed });
            }
            let idx = grid.index(i, j);
            let n = &mut grid.nodes_mut()[idx];
            n.t = 0.5 * (t_b + t_l);
            n.x = 0.5 * (x_b + x_l);
            n.coord_gap = gap;
        }
    }
    grid.has_coordinates = true;
    Ok(grid)
}

/// Physical fields at a node: `n`, and `n_t`, `n_x` unless the node is
/// singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalFields {
    pub n: Vec3,
    pub n_t: Option<Vec3>,
    pub n_x: Option<Vec3>,
}

/// `n_t = ell/(2 h1) + m/(2 h2)`, `n_x = (ell/h1 - m/h2)/(2c)`; derivatives
/// are withheld when `h1` or `h2` is below `h_floor`.
pub fn physical_fields(node: &NodeState, params: &MaterialParams, h_floor: f64) -> PhysicalFields {
    if node.h1 < h_floor || node.h2 < h_floor {
        return PhysicalFields { n: node.n, n_t: None, n_x: None };
    }
    let (r, s) = node.riemann();
    let c = params.speed_of_n1(node.n[0]);
    PhysicalFields { n: node.n, n_t: Some(scale(0.5, add(r, s))), n_x: Some(scale(0.5 / c, sub(r, s))) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlicePoint {
    pub x: f64,
    pub coord_x: f64,
    pub coord_y: f64,
    pub n: Vec3,
    pub n_t: Option<Vec3>,
    pub n_x: Option<Vec3>,
    pub singular: bool,
    pub h1: f64,
    pub h2: f64,
    #[serde(skip)]
    state: NodeState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSlice {
    pub tau: f64,
    pub points: Vec<SlicePoint>,
    /// Line integral of the energy form along the level set.
    pub energy: f64,
}

impl TimeSlice {
    pub fn min_h(&self) -> f64 {
        self.points.iter().map(|p| p.h1.min(p.h2)).fold(1.0, f64::min)
    }

    pub fn x(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    /// Points whose derivatives are withheld.
    pub fn singular_positions(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.singular).map(|p| p.x).collect()
    }

    /// Director at `x` by linear interpolation.
    pub fn director_at(&self, x: f64) -> Vec3 {
        let xs: Vec<f64> = self.x();
        let k = crate::interp::bracket(&xs, x);
        let (a, b) = (&self.points[k], &self.points[k + 1]);
        let w = ((x - a.x) / (b.x - a.x)).clamp(0.0, 1.0);
        crate::vec3::lerp(a.n, b.n, w)
    }
}

struct Crossing {
    coord_x: f64,
    coord_y: f64,
    x: f64,
    state: NodeState,
}

fn crossing(
    (ta, xa, ca, sa): (f64, f64, (f64, f64), &NodeState),
    (tb, xb, cb, sb): (f64, f64, (f64, f64), &NodeState),
    tau: f64,
) -> Crossing {
    let w = if tb > ta { ((tau - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 1.0 };
    Crossing {
        coord_x: ca.0 + w * (cb.0 - ca.0),
        coord_y: ca.1 + w * (cb.1 - ca.1),
        x: xa + w * (xb - xa),
        state: sa.lerp(sb, w),
    }
}

fn require_coordinates(grid: &EnergyGrid) -> Result<(), ReconstructError> {
    if grid.has_coordinates {
        Ok(())
    } else {
        Err(ReconstructError::MissingCoordinates)
    }
}

/// Time at the upper-right corner of the grid. Every level set below it
/// runs from the top edge to the right edge of the window.
pub fn attainable_time(grid: &EnergyGrid) -> f64 {
    grid.node(grid.ncols - 1, grid.nrows - 1).t
}

/// The level set `t = tau`, contoured edge by edge: every lattice edge with
/// `t_a < tau <= t_b` contributes one linearly interpolated point. Points
/// are ordered along the level set; repeated positions (the many-to-one part
/// of the map near singular sets) are merged.
pub fn extract_time_slice(grid: &EnergyGrid, tau: f64) -> Result<TimeSlice, ReconstructError> {
    require_coordinates(grid)?;
    let max = attainable_time(grid);
    if !(tau >= 0.0 && tau < max) {
        return Err(ReconstructError::Range { tau, max });
    }
    let floor = grid.config.h_floor;
    let mut raw: Vec<Crossing> = Vec::new();
    if tau == 0.0 {
        for pt in &grid.curve.points {
            if pt.coord_x <= grid.window.x_max && pt.coord_y <= grid.window.y_max {
                raw.push(Crossing { coord_x: pt.coord_x, coord_y: pt.coord_y, x: pt.x, state: pt.state });
            }
        }
    } else {
        let node = |i: usize, j: usize| {
            let n = grid.node(i, j);
            (n.t, n.x, (grid.coord_x(i), grid.coord_y(j)), &n.state)
        };
        // vertical edges, starting from the curve below each column
        for i in 0..grid.ncols {
            let f = grid.column_foot(i);
            let mut prev = (0.0, f.x, (f.coord_x, f.coord_y), &f.state);
            for j in grid.first_row(i)..grid.nrows {
                let cur = node(i, j);
                if prev.0 < tau && tau <= cur.0 {
                    raw.push(crossing(prev, cur, tau));
                    break;
                }
                prev = cur;
            }
        }
        // horizontal edges, starting from the curve left of each row
        for j in 0..grid.nrows {
            let f = grid.row_foot(j);
            let mut prev = (0.0, f.x, (f.coord_x, f.coord_y), &f.state);
            for i in 0..grid.ncols {
                if !grid.is_active(i, j) {
                    continue;
                }
                let cur = node(i, j);
                if prev.0 < tau && tau <= cur.0 {
                    raw.push(crossing(prev, cur, tau));
                    break;
                }
                prev = cur;
            }
        }
    }
    raw.sort_by(|a, b| (a.coord_x - a.coord_y).total_cmp(&(b.coord_x - b.coord_y)));

    let mut points: Vec<SlicePoint> = Vec::with_capacity(raw.len());
    for c in raw {
        let f = physical_fields(&c.state, &grid.params, floor);
        let singular = f.n_t.is_none();
        if let Some(last) = points.last_mut() {
            if c.x <= last.x {
                last.singular |= singular;
                if last.singular {
                    last.n_t = None;
                    last.n_x = None;
                }
                continue;
            }
        }
        points.push(SlicePoint {
            x: c.x,
            coord_x: c.coord_x,
            coord_y: c.coord_y,
            n: c.state.n,
            n_t: f.n_t,
            n_x: f.n_x,
            singular,
            h1: c.state.h1,
            h2: c.state.h2,
            state: c.state,
        });
    }
    if points.len() < 2 {
        return Err(ReconstructError::Domain(format!("level set t = {tau} has fewer than two points")));
    }
    let energy = form_integral(&points);
    Ok(TimeSlice { tau, points, energy })
}

/// `int p (1 - h1)/4 dX - q (1 - h2)/4 dY` along consecutive slice points.
fn form_integral(points: &[SlicePoint]) -> f64 {
    let a = |s: &NodeState| s.p * (1.0 - s.h1) / 4.0;
    let b = |s: &NodeState| s.q * (1.0 - s.h2) / 4.0;
    points
        .windows(2)
        .map(|w| {
            let (u, v) = (&w[0].state, &w[1].state);
            0.5 * (a(u) + a(v)) * (w[1].coord_x - w[0].coord_x) - 0.5 * (b(u) + b(v)) * (w[1].coord_y - w[0].coord_y)
        })
        .sum()
}

/// Energy `1/2 int |n_t|^2 + c^2 |n_x|^2 dx` at time `tau`, through the
/// energy form on the level set.
pub fn slice_energy(grid: &EnergyGrid, tau: f64) -> Result<f64, ReconstructError> {
    extract_time_slice(grid, tau).map(|s| s.energy)
}

/// L2 distance of the directors over the common `x` range, with both
/// slices interpolated linearly onto the merged positions.
pub fn l2_distance(a: &TimeSlice, b: &TimeSlice) -> Result<f64, ReconstructError> {
    let lo = a.points[0].x.max(b.points[0].x);
    let hi = a.points.last().unwrap().x.min(b.points.last().unwrap().x);
    if !(hi > lo) {
        return Err(ReconstructError::Domain(format!("slices do not overlap ([{lo}, {hi}])")));
    }
    let mut xs: Vec<f64> = a.points.iter().chain(&b.points).map(|p| p.x).filter(|&x| x > lo && x < hi).collect();
    xs.push(lo);
    xs.push(hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let d: Vec<f64> = xs.iter().map(|&x| norm2(sub(a.director_at(x), b.director_at(x)))).collect();
    let sum: f64 = xs.windows(2).zip(d.windows(2)).map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1])).sum();
    Ok(sum.sqrt())
}

/// Fit of `|n(x1) - n(x2)| <= H |x1 - x2|^(1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoelderFit {
    /// Largest ratio among pairs of even-indexed sample points.
    pub constant: f64,
    /// Largest ratio over all pairs divided by `constant`. Pairs of
    /// neighbouring points are only in the second set, so a modulus worse
    /// than `|dx|^(1/2)` at the finest scale shows up here.
    pub worst_excess: f64,
    pub pairs: usize,
}

/// Evaluates the Hoelder-1/2 ratio on all pairs among at most `max_points`
/// evenly chosen slice points, fitting `H` on the even-indexed half.
pub fn hoelder_fit(slice: &TimeSlice, max_points: usize) -> HoelderFit {
    let stride = slice.points.len().div_ceil(max_points.max(2)).max(1);
    let pts: Vec<&SlicePoint> = slice.points.iter().step_by(stride).collect();
    let (mut fitted, mut worst, mut pairs) = (0.0f64, 0.0f64, 0usize);
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let dx = (pts[b].x - pts[a].x).abs();
            if dx > 0.0 {
                let ratio = norm2(sub(pts[a].n, pts[b].n)).sqrt() / dx.sqrt();
                worst = worst.max(ratio);
                if a % 2 == 0 && b % 2 == 0 {
                    fitted = fitted.max(ratio);
                }
                pairs += 1;
            }
        }
    }
    HoelderFit { constant: fitted, worst_excess: if fitted > 0.0 { worst / fitted } else { 0.0 }, pairs }
}

/// `int |R|^2 dt` along lattice row `j` from the curve up to time `tau`,
/// computed in physical time and in the coordinate `X`, with the bound
/// `int p/(2c) dX`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicIntegral {
    pub in_time: f64,
    pub in_coordinate: f64,
    pub bound: f64,
}

pub fn characteristic_integral(grid: &EnergyGrid, j: usize, tau: f64) -> Result<CharacteristicIntegral, ReconstructError> {
    require_coordinates(grid)?;
    let params = &grid.params;
    let f = grid.row_foot(j);
    let mut prev = (0.0, f.coord_x, f.state);
    let mut out = CharacteristicIntegral { in_time: 0.0, in_coordinate: 0.0, bound: 0.0 };
    let r2 = |s: &NodeState| norm2(s.ell) / (s.h1 * s.h1);
    let dens = |s: &NodeState| s.p / (2.0 * params.speed_of_n1(s.n[0]));
    for i in 0..grid.ncols {
        if !grid.is_active(i, j) {
            continue;
        }
        let n = grid.node(i, j);
        if n.t > tau {
            break;
        }
        let (t0, x0, s0) = prev;
        let s1 = n.state;
        if s0.h1 < grid.config.h_floor || s1.h1 < grid.config.h_floor {
            return Err(ReconstructError::Domain(format!("row {j} meets a singular node before t = {tau}")));
        }
        let dx = grid.coord_x(i) - x0;
        out.in_time += 0.5 * (n.t - t0) * (r2(&s0) + r2(&s1));
        out.in_coordinate += 0.5 * dx * (dens(&s0) * norm2(s0.ell) / s0.h1 + dens(&s1) * norm2(s1.ell) / s1.h1);
        out.bound += 0.5 * dx * (dens(&s0) + dens(&s1));
        prev = (n.t, grid.coord_x(i), s1);
    }
    Ok(out)
}

/// Where a Riemann variable blows up: the lattice minimum of `h2` along a
/// row (or of `h1` along a column) that falls below a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityOnset {
    pub t: f64,
    pub x: f64,
    pub coord_x: f64,
    pub coord_y: f64,
    pub h: f64,
    /// 1 for `h1` (the `R` family), 2 for `h2` (the `S` family).
    pub family: u8,
}

/// Earliest physical time among the row minima of `h2` and column minima of
/// `h1` that lie below `threshold`. `h2` is transported along rows and `h1`
/// along columns, so each such minimum marks one characteristic reaching
/// `h = 0`.
pub fn singularity_onset(grid: &EnergyGrid, threshold: f64) -> Result<Option<SingularityOnset>, ReconstructError> {
    require_coordinates(grid)?;
    let mut best: Option<SingularityOnset> = None;
    let mut consider = |i: usize, j: usize, h: f64, family: u8| {
        let n = grid.node(i, j);
        if h < threshold && best.map_or(true, |b| n.t < b.t) {
            best = Some(SingularityOnset { t: n.t, x: n.x, coord_x: grid.coord_x(i), coord_y: grid.coord_y(j), h, family });
        }
    };
    for j in 0..grid.nrows {
        let arg = (0..grid.ncols)
            .filter(|&i| grid.is_active(i, j))
            .map(|i| (i, grid.node(i, j).state.h2))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, h)) = arg {
            consider(i, j, h, 2);
        }
    }
    for i in 0..grid.ncols {
        let arg = (grid.first_row(i)..grid.nrows)
            .map(|j| (j, grid.node(i, j).state.h1))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, h)) = arg {
            consider(i, j, h, 1);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energycoords::{forward_transform, solve_region, DirectorInitialData};
    use crate::model::SolverConfig;

    fn vacuum_grid(n: Vec3) -> EnergyGrid {
        let len = 161;
        let x: Vec<f64> = (0..len).map(|k| -2.0 + 4.0 * k as f64 / (len - 1) as f64).collect();
        let data = DirectorInitialData::new(x, vec![n; len], vec![[0.0; 3]; len], vec![[0.0; 3]; len]).unwrap();
        let params = MaterialParams::new(2.0, 1.0, 0.3).unwrap();
        let curve = forward_transform(&data, &params).unwrap();
        let config = SolverConfig { grid_step: 0.05, domain_radius: 1.5, ..Default::default() };
        integrate_coordinates(solve_region(&curve, &params, &config).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_coordinates_are_exact() {
        let n = [0.6, 0.8, 0.0];
        let grid = vacuum_grid(n);
        let c = grid.params.speed_of_n1(0.6);
        for (i, j) in grid.active_indices() {
            let node = grid.node(i, j);
            let (cx, cy) = (grid.coord_x(i), grid.coord_y(j));
            assert!((node.t - (cx + cy) / (2.0 * c)).abs() < 1e-13);
            assert!((node.x - (cx - cy) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn vacuum_slices_carry_no_energy() {
        let n = [0.0, 0.0, 1.0];
        let grid = vacuum_grid(n);
        for tau in [0.0, 0.1, 0.4] {
            let s = extract_time_slice(&grid, tau).unwrap();
            assert_eq!(s.energy, 0.0);
            assert!(s.points.windows(2).all(|w| w[1].x > w[0].x));
            assert!(s.points.iter().all(|p| p.n == n && p.n_t == Some([0.0; 3]) && !p.singular));
        }
        let max = attainable_time(&grid);
        assert!(matches!(extract_time_slice(&grid, max), Err(ReconstructError::Range { .. })));
        assert!(matches!(extract_time_slice(&grid, -0.1), Err(ReconstructError::Range { .. })));
    }

    #[test]
    fn physical_fields_invert_the_definitions() {
        let params = MaterialParams::new(2.0, 1.0, 0.0).unwrap();
        let n = crate::vec3::normalize([0.3, 0.4, -0.5]);
        let nt = crate::vec3::reject([0.2, -1.0, 0.7], n);
        let nx = crate::vec3::reject([1.5, 0.1, 0.3], n);
        let c = params.speed_of_n1(n[0]);
        let node = NodeState::from_riemann(n, crate::vec3::axpy(nt, c, nx), crate::vec3::axpy(nt, -c, nx), 1.0, 1.0);
        let f = physical_fields(&node, &params, 1e-6);
        for k in 0..3 {
            assert!((f.n_t.unwrap()[k] - nt[k]).abs() < 1e-14);
            assert!((f.n_x.unwrap()[k] - nx[k]).abs() < 1e-14);
        }
        let singular = NodeState { h2: 1e-7, ..node };
        assert_eq!(physical_fields(&singular, &params, 1e-6).n_x, None);
    }

    fn angle_slice(theta: impl Fn(f64) -> f64) -> TimeSlice {
        let points = (0..=400)
            .map(|k| {
                let x = -1.0 + k as f64 / 200.0;
                let n = [theta(x).cos(), theta(x).sin(), 0.0];
                SlicePoint {
                    x,
                    coord_x: 0.0,
                    coord_y: 0.0,
                    n,
                    n_t: None,
                    n_x: None,
                    singular: false,
                    h1: 1.0,
                    h2: 1.0,
                    state: NodeState::vacuum(n),
                }
            })
            .collect();
        TimeSlice { tau: 0.0, points, energy: 0.0 }
    }

    #[test]
    fn hoelder_fit_separates_cusps_from_jumps() {
        let cusp = hoelder_fit(&angle_slice(|x: f64| 0.5 * x.abs().sqrt()), 401);
        assert!(cusp.worst_excess <= 1.2, "{cusp:?}");
        let smooth = hoelder_fit(&angle_slice(|x: f64| x.sin()), 401);
        assert!(smooth.worst_excess <= 1.2, "{smooth:?}");
        let jump = hoelder_fit(&angle_slice(|x: f64| if x < 0.0025 { 0.0 } else { 0.5 }), 401);
        assert!(jump.worst_excess > 1.3, "{jump:?}");
    }
}
