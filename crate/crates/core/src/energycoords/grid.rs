//! Goursat marcher for the semi-linear system on the lattice
//! `X_i = i hx`, `Y_j = j hy` above the boundary curve.

use rayon::prelude::*;
use serde::Serialize;

use super::curve::{BoundaryCurve, CurvePoint};
use super::system::{invariant_residuals, project, system_rhs, Derivatives, InvariantResiduals, NodeState};
use super::EnergyCoordError;
use crate::model::{MaterialParams, SolverConfig};
use crate::vec3::{add, axpy, max_abs_diff, scale, Vec3};

/// Upper bound on lattice size, to fail early on absurd windows.
pub const MAX_NODES: usize = 40_000_000;

const PARALLEL_MIN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeStatus {
    /// Below the curve or outside the window; never computed.
    Outside,
    /// Computed with at least one source on the boundary curve.
    Boundary,
    Interior,
    /// `h1` or `h2` below the configured floor.
    Singular,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Outside => "outside",
            NodeStatus::Boundary => "boundary",
            NodeStatus::Interior => "interior",
            NodeStatus::Singular => "singular",
        }
    }

    pub fn is_computed(self) -> bool {
        self != NodeStatus::Outside
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridNode {
    pub state: NodeState,
    pub status: NodeStatus,
    /// Physical time, filled by coordinate integration.
    pub t: f64,
    /// Physical position, filled by coordinate integration.
    pub x: f64,
    /// Difference of the two trapezoid routes for `n` in this cell.
    pub route_gap: f64,
    /// Mismatch of the two path integrals for `(t, x)`.
    pub coord_gap: f64,
}

impl GridNode {
    fn outside() -> Self {
        Self {
            state: NodeState::vacuum([f64::NAN; 3]),
            status: NodeStatus::Outside,
            t: f64::NAN,
            x: f64::NAN,
            route_gap: 0.0,
            coord_gap: 0.0,
        }
    }
}

/// Upper-right corner of the computed region. The lower-left corner follows
/// from the curve: `X >= phi^{-1}(y_max)`, `Y >= phi(x_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub x_max: f64,
    pub y_max: f64,
}

impl Window {
    /// The part of `|X|, |Y| <= r` covered by the curve.
    pub fn for_radius(curve: &BoundaryCurve, r: f64) -> Self {
        Self { x_max: r.min(curve.last().coord_x), y_max: r.min(curve.first().coord_y) }
    }
}

/// Counters gathered while marching.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub computed_nodes: usize,
    pub singular_nodes: usize,
    pub max_picard_iters: usize,
    pub clamped_values: usize,
    pub max_route_gap: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyGrid {
    pub params: MaterialParams,
    pub config: SolverConfig,
    pub curve: BoundaryCurve,
    pub window: Window,
    pub step_x: f64,
    pub step_y: f64,
    pub ncols: usize,
    pub nrows: usize,
    pub stats: SolveStats,
    /// True once `t` and `x` are filled.
    pub has_coordinates: bool,
    i0: i64,
    j0: i64,
    first_row: Vec<usize>,
    col_curve: Vec<CurvePoint>,
    row_curve: Vec<CurvePoint>,
    nodes: Vec<GridNode>,
}

/// Solves on the part of `|X|, |Y| <= config.domain_radius` above the curve.
pub fn solve_region(
    curve: &BoundaryCurve,
    params: &MaterialParams,
    config: &SolverConfig,
) -> Result<EnergyGrid, EnergyCoordError> {
    solve_window(curve, params, config, Window::for_radius(curve, config.domain_radius))
}

/// Solves on the region above the curve below-left of `window`.
pub fn solve_window(
    curve: &BoundaryCurve,
    params: &MaterialParams,
    config: &SolverConfig,
    window: Window,
) -> Result<EnergyGrid, EnergyCoordError> {
    params.validate()?;
    config.validate()?;
    let mut grid = EnergyGrid::layout(curve, params, config, window)?;
    grid.march()?;
    Ok(grid)
}

struct Source {
    state: NodeState,
    coord: f64,
    on_curve: bool,
}

struct CellResult {
    state: NodeState,
    iters: usize,
    route_gap: f64,
    clamped: usize,
}

impl EnergyGrid {
    fn layout(
        curve: &BoundaryCurve,
        params: &MaterialParams,
        config: &SolverConfig,
        window: Window,
    ) -> Result<Self, EnergyCoordError> {
        if curve.len() < 2 {
            return Err(EnergyCoordError::Window("curve has fewer than two samples".into()));
        }
        let (hx, hy) = (config.step_x(), config.step_y());
        if !(window.x_max <= curve.last().coord_x && window.y_max <= curve.first().coord_y) {
            return Err(EnergyCoordError::Window(format!(
                "corner ({}, {}) exceeds the curve's reach ({}, {})",
                window.x_max,
                window.y_max,
                curve.last().coord_x,
                curve.first().coord_y
            )));
        }
        let x_min = curve
            .phi_inverse(window.y_max)
            .ok_or_else(|| EnergyCoordError::Window(format!("Y = {} not on the curve", window.y_max)))?;
        let y_min = curve
            .phi(window.x_max)
            .ok_or_else(|| EnergyCoordError::Window(format!("X = {} not on the curve", window.x_max)))?;
        if !(window.x_max > x_min && window.y_max > y_min) {
            return Err(EnergyCoordError::Window("window lies below the curve".into()));
        }
        let i0 = (x_min / hx).ceil() as i64;
        let i1 = (window.x_max / hx).floor() as i64;
        let j0 = (y_min / hy).ceil() as i64;
        let j1 = (window.y_max / hy).floor() as i64;
        if i1 < i0 || j1 < j0 {
            return Err(EnergyCoordError::Window("no lattice lines inside the window".into()));
        }
        let ncols = (i1 - i0 + 1) as usize;
        let nrows = (j1 - j0 + 1) as usize;
        if ncols.saturating_mul(nrows) > MAX_NODES {
            return Err(EnergyCoordError::Window(format!("{ncols} x {nrows} lattice exceeds {MAX_NODES} nodes")));
        }
        let coord = |k: i64, h: f64| k as f64 * h;
        let col_curve = (0..ncols)
            .map(|i| {
                let cx = coord(i0 + i as i64, hx).min(curve.last().coord_x);
                curve.at_coord_x(cx).ok_or_else(|| EnergyCoordError::Window(format!("X = {cx} not on the curve")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let row_curve = (0..nrows)
            .map(|j| {
                let cy = coord(j0 + j as i64, hy).min(curve.first().coord_y);
                curve.at_coord_y(cy).ok_or_else(|| EnergyCoordError::Window(format!("Y = {cy} not on the curve")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let first_row = col_curve
            .iter()
            .map(|pt| {
                let mut k = (pt.coord_y / hy).floor() as i64 + 1;
                if coord(k - 1, hy) > pt.coord_y {
                    k -= 1;
                }
                (k - j0).clamp(0, nrows as i64) as usize
            })
            .collect();
        Ok(Self {
            params: *params,
            config: *config,
            curve: curve.clone(),
            window,
            step_x: hx,
            step_y: hy,
            ncols,
            nrows,
            stats: SolveStats::default(),
            has_coordinates: false,
            i0,
            j0,
            first_row,
            col_curve,
            row_curve,
            nodes: vec![GridNode::outside(); ncols * nrows],
        })
    }

    pub fn coord_x(&self, i: usize) -> f64 {
        (self.i0 + i as i64) as f64 * self.step_x
    }

    pub fn coord_y(&self, j: usize) -> f64 {
        (self.j0 + j as i64) as f64 * self.step_y
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nrows + j
    }

    pub fn node(&self, i: usize, j: usize) -> &GridNode {
        &self.nodes[self.index(i, j)]
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [GridNode] {
        &mut self.nodes
    }

    /// Whether lattice point `(i, j)` lies strictly above the curve.
    pub fn is_active(&self, i: usize, j: usize) -> bool {
        j >= self.first_row[i]
    }

    /// Lowest active row of column `i` (`nrows` if none).
    pub fn first_row(&self, i: usize) -> usize {
        self.first_row[i]
    }

    /// Curve point directly below column `i`, at `X = X_i`.
    pub fn column_foot(&self, i: usize) -> &CurvePoint {
        &self.col_curve[i]
    }

    /// Curve point left of row `j`, at `Y = Y_j`.
    pub fn row_foot(&self, j: usize) -> &CurvePoint {
        &self.row_curve[j]
    }

    /// Indices `(i, j)` of all computed nodes, column by column.
    pub fn active_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ncols).flat_map(move |i| (self.first_row[i]..self.nrows).map(move |j| (i, j)))
    }

    fn below(&self, i: usize, j: usize) -> Source {
        if j > 0 && self.is_active(i, j - 1) {
            Source { state: self.node(i, j - 1).state, coord: self.coord_y(j - 1), on_curve: false }
        } else {
            let pt = &self.col_curve[i];
            Source { state: pt.state, coord: pt.coord_y, on_curve: true }
        }
    }

    fn left(&self, i: usize, j: usize) -> Source {
        if i > 0 && self.is_active(i - 1, j) {
            Source { state: self.node(i - 1, j).state, coord: self.coord_x(i - 1), on_curve: false }
        } else {
            let pt = &self.row_curve[j];
            Source { state: pt.state, coord: pt.coord_x, on_curve: true }
        }
    }

    fn march(&mut self) -> Result<(), EnergyCoordError> {
        let (ncols, nrows) = (self.ncols, self.nrows);
        for d in 0..ncols + nrows - 1 {
            let lo = d.saturating_sub(nrows - 1);
            let hi = d.min(ncols - 1);
            let cells: Vec<(usize, usize)> =
                (lo..=hi).map(|i| (i, d - i)).filter(|&(i, j)| self.is_active(i, j)).collect();
            if cells.is_empty() {
                continue;
            }
            let this = &*self;
            let solve = |&(i, j): &(usize, usize)| this.solve_cell(i, j).map(|r| (i, j, r));
            let results: Vec<Result<_, _>> = if cells.len() >= PARALLEL_MIN {
                cells.par_iter().map(solve).collect()
            } else {
                cells.iter().map(solve).collect()
            };
            for res in results {
                let (i, j, cell) = res?;
                let on_curve = self.below(i, j).on_curve || self.left(i, j).on_curve;
                let floor = self.config.h_floor;
                let status = if cell.state.h1 < floor || cell.state.h2 < floor {
                    self.stats.singular_nodes += 1;
                    NodeStatus::Singular
                } else if on_curve {
                    NodeStatus::Boundary
                } else {
                    NodeStatus::Interior
                };
                self.stats.computed_nodes += 1;
                self.stats.max_picard_iters = self.stats.max_picard_iters.max(cell.iters);
                self.stats.clamped_values += cell.clamped;
                self.stats.max_route_gap = self.stats.max_route_gap.max(cell.route_gap);
                let idx = self.index(i, j);
                self.nodes[idx] = GridNode { state: cell.state, status, route_gap: cell.route_gap, ..GridNode::outside() };
            }
        }
        Ok(())
    }

    /// Trapezoidal closure of one cell with Picard iteration: `ell`, `h1`,
    /// `p` integrate from the node below, `m`, `h2`, `q` from the node to
    /// the left, and `n` is the mean of both routes.
    fn solve_cell(&self, i: usize, j: usize) -> Result<CellResult, EnergyCoordError> {
        let params = &self.params;
        let (cx, cy) = (self.coord_x(i), self.coord_y(j));
        let below = self.below(i, j);
        let left = self.left(i, j);
        let (b, l) = (&below.state, &left.state);
        let dy = cy - below.coord;
        let dx = cx - left.coord;
        let db = system_rhs(b, params);
        let dl = system_rhs(l, params);

        let close = |dp_y: Option<(&Derivatives, f64)>, dp_x: Option<(&Derivatives, f64)>| {
            // explicit Euler predictor when no derivative at the new point is given
            let (ell_y, h1_y, p_y, n_y, wy) = match dp_y {
                Some((d, w)) => (d.ell_y, d.h1_y, d.p_y, d.n_y, w),
                None => (db.ell_y, db.h1_y, db.p_y, db.n_y, 1.0),
            };
            let (m_x, h2_x, q_x, n_x, wx) = match dp_x {
                Some((d, w)) => (d.m_x, d.h2_x, d.q_x, d.n_x, w),
                None => (dl.m_x, dl.h2_x, dl.q_x, dl.n_x, 1.0),
            };
            let tr = |base: f64, d0: f64, d1: f64, h: f64, w: f64| base + h * ((1.0 - w) * d0 + w * d1);
            let trv = |base: Vec3, d0: Vec3, d1: Vec3, h: f64, w: f64| {
                axpy(axpy(base, h * (1.0 - w), d0), h * w, d1)
            };
            let route_y = trv(b.n, db.n_y, n_y, dy, wy);
            let route_x = trv(l.n, dl.n_x, n_x, dx, wx);
            let state = NodeState {
                n: scale(0.5, add(route_y, route_x)),
                ell: trv(b.ell, db.ell_y, ell_y, dy, wy),
                h1: tr(b.h1, db.h1_y, h1_y, dy, wy),
                p: tr(b.p, db.p_y, p_y, dy, wy),
                m: trv(l.m, dl.m_x, m_x, dx, wx),
                h2: tr(l.h2, dl.h2_x, h2_x, dx, wx),
                q: tr(l.q, dl.q_x, q_x, dx, wx),
            };
            (state, max_abs_diff(route_y, route_x))
        };

        let (mut cur, _) = close(None, None);
        let mut gap = 0.0;
        let mut iters = 0;
        let mut change = f64::INFINITY;
        while iters < self.config.picard_max_iters {
            iters += 1;
            let d = system_rhs(&cur, params);
            let (next, g) = close(Some((&d, 0.5)), Some((&d, 0.5)));
            if !next.is_finite() {
                return Err(EnergyCoordError::NonFinite { x: cx, y: cy });
            }
            change = next.distance(&cur);
            cur = next;
            gap = g;
            if change <= self.config.picard_tol {
                break;
            }
        }
        if change > self.config.picard_tol {
            return Err(EnergyCoordError::PicardDiverged { x: cx, y: cy, iters, change });
        }

        if self.config.project {
            cur = project(&cur);
        }
        let slack = self.step_x.max(self.step_y).powi(2);
        let mut clamped = 0;
        for (which, h) in [("h1", &mut cur.h1), ("h2", &mut cur.h2)] {
            if *h < 0.0 || *h > 1.0 {
                let over = if *h < 0.0 { -*h } else { *h - 1.0 };
                if over > slack {
                    return Err(EnergyCoordError::RangeOvershoot { which, value: *h, x: cx, y: cy });
                }
                *h = h.clamp(0.0, 1.0);
                clamped += 1;
            }
        }
        if !(cur.p > 0.0 && cur.q > 0.0) {
            return Err(EnergyCoordError::NonPositiveDensity { x: cx, y: cy, p: cur.p, q: cur.q });
        }
        Ok(CellResult { state: cur, iters, route_gap: gap, clamped })
    }
}

/// `C0` in the a-priori bound `p, q <= exp(2 C0 (|X| + |Y| + 4 E0))`,
/// built from the speed bounds and the damping.
pub fn growth_constant(params: &MaterialParams) -> f64 {
    let cl = params.speed_lower();
    (params.director_derivative_bound() / (2.0 * cl) + 1.25 * params.mu) / (2.0 * cl)
}

/// Checks of the densities `p`, `q` against their a-priori bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityBounds {
    pub min_p: f64,
    pub min_q: f64,
    pub max_p: f64,
    pub max_q: f64,
    pub growth_constant: f64,
    /// Largest `max(p, q) / exp(2 C0 (|X| + |Y| + 4 E0))`.
    pub max_exponential_ratio: f64,
    /// Largest `(int p dX + int q dY) / (2 (|X| + |Y| + 4 E0))`, integrals
    /// taken along the row and column from the curve to the node.
    pub max_integral_ratio: f64,
    /// Largest `(int p dX + int q dY) / (X - phi^{-1}(Y) + Y - phi(X))`.
    pub max_sharp_ratio: f64,
}

impl EnergyGrid {
    /// Componentwise largest absolute residual of the conserved quantities
    /// over all computed nodes.
    pub fn max_invariant_residuals(&self) -> InvariantResiduals {
        let mut acc = [0.0f64; 5];
        for (i, j) in self.active_indices() {
            let r = invariant_residuals(&self.node(i, j).state).as_array();
            for k in 0..5 {
                acc[k] = acc[k].max(r[k].abs());
            }
        }
        InvariantResiduals {
            ell_dot_n: acc[0],
            m_dot_n: acc[1],
            unit_norm: acc[2],
            ell_constraint: acc[3],
            m_constraint: acc[4],
        }
    }

    /// `(min h1, min h2)` over computed nodes.
    pub fn min_h(&self) -> (f64, f64) {
        self.active_indices().fold((1.0f64, 1.0f64), |(a, b), (i, j)| {
            let s = &self.node(i, j).state;
            (a.min(s.h1), b.min(s.h2))
        })
    }

    pub fn density_bounds(&self) -> DensityBounds {
        let e0 = self.curve.energy0;
        let c0 = growth_constant(&self.params);
        // int p dX along each row from the curve, int q dY along each column
        let mut row_int = vec![0.0; self.nodes.len()];
        let mut col_int = vec![0.0; self.nodes.len()];
        for i in 0..self.ncols {
            let foot = &self.col_curve[i];
            let (mut prev_y, mut prev_q, mut acc) = (foot.coord_y, foot.state.q, 0.0);
            for j in self.first_row[i]..self.nrows {
                let q = self.node(i, j).state.q;
                acc += 0.5 * (self.coord_y(j) - prev_y) * (q + prev_q);
                col_int[self.index(i, j)] = acc;
                (prev_y, prev_q) = (self.coord_y(j), q);
            }
        }
        for j in 0..self.nrows {
            let foot = &self.row_curve[j];
            let (mut prev_x, mut prev_p, mut acc) = (foot.coord_x, foot.state.p, 0.0);
            for i in 0..self.ncols {
                if !self.is_active(i, j) {
                    continue;
                }
                let p = self.node(i, j).state.p;
                acc += 0.5 * (self.coord_x(i) - prev_x) * (p + prev_p);
                row_int[self.index(i, j)] = acc;
                (prev_x, prev_p) = (self.coord_x(i), p);
            }
        }
        let mut out = DensityBounds {
            min_p: f64::INFINITY,
            min_q: f64::INFINITY,
            max_p: 0.0,
            max_q: 0.0,
            growth_constant: c0,
            max_exponential_ratio: 0.0,
            max_integral_ratio: 0.0,
            max_sharp_ratio: 0.0,
        };
        for (i, j) in self.active_indices() {
            let s = &self.node(i, j).state;
            let (cx, cy) = (self.coord_x(i), self.coord_y(j));
            let reach = cx.abs() + cy.abs() + 4.0 * e0;
            out.min_p = out.min_p.min(s.p);
            out.min_q = out.min_q.min(s.q);
            out.max_p = out.max_p.max(s.p);
            out.max_q = out.max_q.max(s.q);
            let cap = (2.0 * c0 * reach).exp();
            out.max_exponential_ratio = out.max_exponential_ratio.max(s.p.max(s.q) / cap);
            let k = self.index(i, j);
            let total = row_int[k] + col_int[k];
            out.max_integral_ratio = out.max_integral_ratio.max(total / (2.0 * reach));
            let sharp = cx - self.row_curve[j].coord_x + cy - self.col_curve[i].coord_y;
            if sharp > 0.0 {
                out.max_sharp_ratio = out.max_sharp_ratio.max(total / sharp);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energycoords::curve::{forward_transform, DirectorInitialData};

    fn vacuum_curve(n: Vec3) -> BoundaryCurve {
        let len = 81;
        let x: Vec<f64> = (0..len).map(|k| -2.0 + 4.0 * k as f64 / (len - 1) as f64).collect();
        let data = DirectorInitialData::new(x, vec![n; len], vec![[0.0; 3]; len], vec![[0.0; 3]; len]).unwrap();
        forward_transform(&data, &MaterialParams::default()).unwrap()
    }

    #[test]
    fn vacuum_grid_is_constant() {
        let n = [0.6, 0.0, 0.8];
        let curve = vacuum_curve(n);
        let config = SolverConfig { grid_step: 0.05, domain_radius: 1.0, ..Default::default() };
        let grid = solve_region(&curve, &MaterialParams::new(2.0, 1.0, 0.7).unwrap(), &config).unwrap();
        assert!(grid.stats.computed_nodes > 100);
        for (i, j) in grid.active_indices() {
            assert_eq!(grid.node(i, j).state, NodeState::vacuum(n));
        }
        assert_eq!(grid.max_invariant_residuals().max_abs(), 0.0);
        let b = grid.density_bounds();
        assert_eq!((b.min_p, b.max_q), (1.0, 1.0));
        assert!((b.max_sharp_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn active_set_lies_above_the_curve() {
        let curve = vacuum_curve([1.0, 0.0, 0.0]);
        let config = SolverConfig { grid_step: 0.1, grid_step_y: Some(0.07), domain_radius: 1.0, ..Default::default() };
        let grid = solve_region(&curve, &MaterialParams::default(), &config).unwrap();
        for i in 0..grid.ncols {
            for j in 0..grid.nrows {
                let above = grid.coord_y(j) > -grid.coord_x(i) + 1e-12;
                let on = (grid.coord_y(j) + grid.coord_x(i)).abs() <= 1e-12;
                if !on {
                    assert_eq!(grid.is_active(i, j), above, "({i}, {j})");
                }
                assert_eq!(grid.node(i, j).status.is_computed(), grid.is_active(i, j));
            }
        }
    }

    #[test]
    fn rejects_window_beyond_the_curve() {
        let curve = vacuum_curve([1.0, 0.0, 0.0]);
        let res = solve_window(
            &curve,
            &MaterialParams::default(),
            &SolverConfig::default(),
            Window { x_max: 5.0, y_max: 1.0 },
        );
        assert!(matches!(res, Err(EnergyCoordError::Window(_))));
    }
}
