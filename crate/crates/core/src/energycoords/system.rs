//! Right-hand sides of the semi-linear system in energy-dependent
//! coordinates `(X, Y)`, and the quantities it conserves.

use serde::{Deserialize, Serialize};

use crate::model::MaterialParams;
use crate::vec3::{dot, norm2, scale, Vec3};

/// The unknowns at one point of the `(X, Y)` plane.
///
/// `ell = R h1`, `m = S h2` with `h1 = 1/(1 + |R|^2)`, `h2 = 1/(1 + |S|^2)`
/// where `R = n_t + c n_x` and `S = n_t - c n_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub n: Vec3,
    pub ell: Vec3,
    pub m: Vec3,
    pub h1: f64,
    pub h2: f64,
    pub p: f64,
    pub q: f64,
}

impl NodeState {
    /// Constant director, no gradients, unit densities.
    pub fn vacuum(n: Vec3) -> Self {
        Self { n, ell: [0.0; 3], m: [0.0; 3], h1: 1.0, h2: 1.0, p: 1.0, q: 1.0 }
    }

    /// Builds the node from the Riemann vectors `R`, `S`.
    pub fn from_riemann(n: Vec3, r: Vec3, s: Vec3, p: f64, q: f64) -> Self {
        let h1 = 1.0 / (1.0 + norm2(r));
        let h2 = 1.0 / (1.0 + norm2(s));
        Self { n, ell: scale(h1, r), m: scale(h2, s), h1, h2, p, q }
    }

    /// `(R, S) = (ell / h1, m / h2)`; only meaningful away from `h = 0`.
    pub fn riemann(&self) -> (Vec3, Vec3) {
        (scale(1.0 / self.h1, self.ell), scale(1.0 / self.h2, self.m))
    }

    pub fn is_finite(&self) -> bool {
        let v = [self.h1, self.h2, self.p, self.q];
        self.n.iter().chain(&self.ell).chain(&self.m).chain(&v).all(|x| x.is_finite())
    }

    /// `a + w (b - a)` on every unknown.
    pub fn lerp(&self, other: &Self, w: f64) -> Self {
        let f = |a: f64, b: f64| a + w * (b - a);
        let v = |a: Vec3, b: Vec3| crate::vec3::lerp(a, b, w);
        Self {
            n: v(self.n, other.n),
            ell: v(self.ell, other.ell),
            m: v(self.m, other.m),
            h1: f(self.h1, other.h1),
            h2: f(self.h2, other.h2),
            p: f(self.p, other.p),
            q: f(self.q, other.q),
        }
    }

    /// Largest absolute difference over all unknowns, each scaled by
    /// `1 + |value|`.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        let mut push = |a: f64, b: f64| d = d.max((a - b).abs() / (1.0 + a.abs()));
        for k in 0..3 {
            push(self.n[k], other.n[k]);
            push(self.ell[k], other.ell[k]);
            push(self.m[k], other.m[k]);
        }
        push(self.h1, other.h1);
        push(self.h2, other.h2);
        push(self.p, other.p);
        push(self.q, other.q);
        d
    }
}

/// Derivatives prescribed by the system at one node. `ell`, `h1`, `p` evolve
/// in `Y`; `m`, `h2`, `q` evolve in `X`; `n` has both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub ell_y: Vec3,
    pub h1_y: f64,
    pub p_y: f64,
    pub n_y: Vec3,
    pub m_x: Vec3,
    pub h2_x: f64,
    pub q_x: f64,
    pub n_x: Vec3,
}

/// Evaluates every right-hand side of the system at `node`.
pub fn system_rhs(node: &NodeState, params: &MaterialParams) -> Derivatives {
    let NodeState { n, ell, m, h1, h2, p, q } = *node;
    let mu = params.mu;
    let c = params.speed_of_n1(n[0]);
    let c2 = c * c;
    let dc = params.speed_derivative_n1(n[0]);
    let lm = dot(ell, m);
    let hh = h1 + h2 - 2.0 * h1 * h2;

    // gamma for the first component, alpha for the other two
    let elastic = [params.gamma, params.alpha, params.alpha];
    let mut ell_y = [0.0; 3];
    let mut m_x = [0.0; 3];
    for k in 0..3 {
        let g = elastic[k];
        let bracket = ((c2 - g) * hh - 2.0 * (3.0 * c2 - g) * lm) * n[k] / (8.0 * c2 * c);
        let diff = ell[k] - m[k];
        let damp_mix = ell[k] * h2 + m[k] * h1;
        ell_y[k] = q * bracket
            + dc / (4.0 * c2) * ell[0] * q * diff
            + mu * q / (4.0 * c) * (2.0 * ell[k] * (h2 - h1 * h2 + lm) - damp_mix);
        m_x[k] = p * bracket - dc / (4.0 * c2) * m[0] * p * diff
            + mu * p / (4.0 * c) * (2.0 * m[k] * (h1 - h1 * h2 + lm) - damp_mix);
    }

    let h1_y = dc / (4.0 * c2) * q * ell[0] * (h1 - h2) + mu / (2.0 * c) * q * h1 * (h2 - h1 * h2 + lm);
    let h2_x = dc / (4.0 * c2) * p * m[0] * (h2 - h1) + mu / (2.0 * c) * p * h2 * (h1 - h1 * h2 + lm);
    let tilt = dc / (2.0 * c) * (ell[0] - m[0]);
    let p_y = p * q / (2.0 * c) * (-tilt - mu * (h2 - h1 * h2 + lm));
    let q_x = p * q / (2.0 * c) * (tilt - mu * (h1 - h1 * h2 + lm));

    Derivatives {
        ell_y,
        h1_y,
        p_y,
        n_y: scale(q / (2.0 * c), m),
        m_x,
        h2_x,
        q_x,
        n_x: scale(p / (2.0 * c), ell),
    }
}

/// Deviations from the conserved relations
/// `ell.n = m.n = 0`, `|n| = 1`, `|ell|^2 + h1^2 = h1`, `|m|^2 + h2^2 = h2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct InvariantResiduals {
    pub ell_dot_n: f64,
    pub m_dot_n: f64,
    pub unit_norm: f64,
    pub ell_constraint: f64,
    pub m_constraint: f64,
}

impl InvariantResiduals {
    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.ell_dot_n, self.m_dot_n, self.unit_norm, self.ell_constraint, self.m_constraint]
    }
}

pub fn invariant_residuals(node: &NodeState) -> InvariantResiduals {
    InvariantResiduals {
        ell_dot_n: dot(node.ell, node.n),
        m_dot_n: dot(node.m, node.n),
        unit_norm: norm2(node.n) - 1.0,
        ell_constraint: norm2(node.ell) + node.h1 * node.h1 - node.h1,
        m_constraint: norm2(node.m) + node.h2 * node.h2 - node.h2,
    }
}

/// `-mu p q / (2c) (h1 + h2 - 2 h1 h2 + 2 ell.m)`, the value of
/// `(p(1-h1))_Y + (q(1-h2))_X` and of `p_Y + q_X` on the constraint set.
pub fn dissipation_density(node: &NodeState, params: &MaterialParams) -> f64 {
    let c = params.speed_of_n1(node.n[0]);
    let NodeState { ell, m, h1, h2, p, q, .. } = *node;
    -params.mu * p * q / (2.0 * c) * (h1 + h2 - 2.0 * h1 * h2 + 2.0 * dot(ell, m))
}

/// Moves a node back onto the constraint set: `n` to the unit sphere,
/// `ell`, `m` orthogonal to `n`, and `(ell, h1)`, `(m, h2)` radially onto
/// `|v|^2 + (h - 1/2)^2 = 1/4`.
pub fn project(node: &NodeState) -> NodeState {
    let n = crate::vec3::normalize(node.n);
    let fit = |v: Vec3, h: f64| -> (Vec3, f64) {
        let v = crate::vec3::reject(v, n);
        let dh = h - 0.5;
        let r = (norm2(v) + dh * dh).sqrt();
        if r == 0.0 {
            return (v, 1.0);
        }
        let k = 0.5 / r;
        (scale(k, v), 0.5 + k * dh)
    };
    let (ell, h1) = fit(node.ell, node.h1);
    let (m, h2) = fit(node.m, node.h2);
    NodeState { n, ell, m, h1, h2, p: node.p, q: node.q }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::{add, norm, normalize, reject};
    use proptest::prelude::*;

    fn admissible(n: Vec3, r: Vec3, s: Vec3, p: f64, q: f64) -> NodeState {
        let n = normalize(n);
        NodeState::from_riemann(n, reject(r, n), reject(s, n), p, q)
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        [-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0]
    }

    #[test]
    fn vacuum_is_stationary() {
        let p = MaterialParams::new(2.0, 1.0, 0.8).unwrap();
        let node = NodeState::vacuum(normalize([0.3, -0.5, 0.8]));
        let d = system_rhs(&node, &p);
        let all = [d.ell_y, d.m_x, d.n_y, d.n_x].concat();
        assert!(all.iter().all(|v| v.abs() < 1e-16));
        assert!(d.h1_y.abs() < 1e-16 && d.h2_x.abs() < 1e-16 && d.p_y.abs() < 1e-16 && d.q_x.abs() < 1e-16);
        assert!(invariant_residuals(&node).max_abs() < 1e-15);
    }

    #[test]
    fn projection_lands_on_constraint_set() {
        let node = NodeState {
            n: [0.6, 0.81, 0.01],
            ell: [0.1, 0.2, -0.3],
            m: [0.0, 0.1, 0.2],
            h1: 0.7,
            h2: 0.95,
            p: 1.0,
            q: 1.0,
        };
        let pr = project(&node);
        assert!(invariant_residuals(&pr).max_abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn undamped_sum_of_density_derivatives_vanishes(n in vec3(), r in vec3(), s in vec3(), p in 0.1f64..3.0, q in 0.1f64..3.0) {
            prop_assume!(norm(n) > 0.1);
            let params = MaterialParams::new(2.0, 1.0, 0.0).unwrap();
            let d = system_rhs(&admissible(n, r, s, p, q), &params);
            prop_assert!((d.p_y + d.q_x).abs() < 1e-13 * p * q);
        }

        #[test]
        fn density_derivatives_match_damping_of_riemann_sum(n in vec3(), r in vec3(), s in vec3(), p in 0.1f64..3.0, q in 0.1f64..3.0, mu in 0.0f64..2.0) {
            prop_assume!(norm(n) > 0.1);
            let params = MaterialParams::new(1.0, 3.0, mu).unwrap();
            let node = admissible(n, r, s, p, q);
            let d = system_rhs(&node, &params);
            // evaluated from R and S directly: -(mu p q h1 h2 / 2c) |R + S|^2
            let nn = normalize(n);
            let (rr, ss) = (reject(r, nn), reject(s, nn));
            let h1 = 1.0 / (1.0 + norm2(rr));
            let h2 = 1.0 / (1.0 + norm2(ss));
            let c = (1.0 + 2.0 * nn[0] * nn[0]).sqrt();
            let expected = -mu * p * q * h1 * h2 / (2.0 * c) * norm2(add(rr, ss));
            prop_assert!((d.p_y + d.q_x - expected).abs() < 1e-12 * (1.0 + expected.abs()));
            prop_assert!((dissipation_density(&node, &params) - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }

        #[test]
        fn energy_form_derivative_matches_dissipation(n in vec3(), r in vec3(), s in vec3(), p in 0.1f64..3.0, q in 0.1f64..3.0, mu in 0.0f64..2.0) {
            prop_assume!(norm(n) > 0.1);
            let params = MaterialParams::new(2.0, 1.0, mu).unwrap();
            let node = admissible(n, r, s, p, q);
            let d = system_rhs(&node, &params);
            let lhs = d.p_y * (1.0 - node.h1) - node.p * d.h1_y + d.q_x * (1.0 - node.h2) - node.q * d.h2_x;
            let c = params.speed_of_n1(node.n[0]);
            let rhs = -mu * p * q / (2.0 * c)
                * (norm2(add(node.ell, node.m)) + (node.h1 - node.h2).powi(2));
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
            prop_assert!(lhs <= 1e-12);
        }

        #[test]
        fn constraints_are_preserved_to_first_order(n in vec3(), r in vec3(), s in vec3(), p in 0.1f64..3.0, q in 0.1f64..3.0, mu in 0.0f64..2.0) {
            prop_assume!(norm(n) > 0.1);
            let params = MaterialParams::new(2.0, 1.0, mu).unwrap();
            let node = admissible(n, r, s, p, q);
            let d = system_rhs(&node, &params);
            let tol = 1e-12 * (1.0 + p + q);
            prop_assert!((dot(d.ell_y, node.n) + dot(node.ell, d.n_y)).abs() < tol);
            prop_assert!((dot(d.m_x, node.n) + dot(node.m, d.n_x)).abs() < tol);
            prop_assert!(dot(node.n, d.n_y).abs() < tol && dot(node.n, d.n_x).abs() < tol);
            prop_assert!((2.0 * dot(node.ell, d.ell_y) + (2.0 * node.h1 - 1.0) * d.h1_y).abs() < tol);
            prop_assert!((2.0 * dot(node.m, d.m_x) + (2.0 * node.h2 - 1.0) * d.h2_x).abs() < tol);
        }
    }
}
