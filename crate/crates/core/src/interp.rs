//! One-dimensional interpolation on strictly increasing abscissae.
//!
//! [`Pchip`] is the Fritsch–Carlson monotone cubic Hermite interpolant: on
//! every interval the interpolant stays inside the range of the two endpoint
//! values, so sign information carried by sampled fields survives resampling.

/// Index `i` such that `xs[i] <= x < xs[i + 1]`, clamped to `[0, len - 2]`.
pub fn bracket(xs: &[f64], x: f64) -> usize {
    debug_assert!(xs.len() >= 2);
    let n = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    // partition_point returns the first index with xs[i] > x.
    let i = xs.partition_point(|&v| v <= x);
    (i - 1).min(n - 2)
}

/// Piecewise-linear interpolation with constant extension outside the data.
pub fn linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = bracket(xs, x);
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Monotone piecewise-cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct Pchip<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    slopes: Vec<f64>,
}

impl<'a> Pchip<'a> {
    pub fn new(xs: &'a [f64], ys: &'a [f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "pchip needs at least two points");
        let n = xs.len();
        let secant: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            let (a, b) = (secant[i - 1], secant[i]);
            if a * b > 0.0 {
                // weighted harmonic mean (Fritsch–Butland form)
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        slopes[0] = end_slope(xs[1] - xs[0], xs.get(2).map_or(0.0, |x2| x2 - xs[1]), secant[0], secant.get(1).copied());
        slopes[n - 1] = end_slope(
            xs[n - 1] - xs[n - 2],
            if n > 2 { xs[n - 2] - xs[n - 3] } else { 0.0 },
            secant[n - 2],
            if n > 2 { Some(secant[n - 3]) } else { None },
        );
        Self { xs, ys, slopes }
    }

    /// Value at `x`; constant extension outside the sampled range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        self.eval_in(bracket(self.xs, x), x)
    }

    /// Value at `x` assuming `xs[i] <= x <= xs[i + 1]`.
    pub fn eval_in(&self, i: usize, x: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

// Three-point end formula, limited so the end interval stays monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: Option<f64>) -> f64 {
    let Some(d1) = d1 else { return d0 };
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let xs = [0.0, 0.3, 1.0, 1.7, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let p = Pchip::new(&xs, &ys);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-14);
        }
        for k in 0..=30 {
            let x = 0.1 * k as f64;
            assert!((p.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn bracket_clamps() {
        let xs = [0.0, 1.0, 2.0];
        assert_eq!(bracket(&xs, -1.0), 0);
        assert_eq!(bracket(&xs, 0.5), 0);
        assert_eq!(bracket(&xs, 1.0), 1);
        assert_eq!(bracket(&xs, 5.0), 1);
    }

    #[test]
    fn smooth_data_converges_at_second_order_or_better() {
        let err = |n: usize| {
            let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin()).collect();
            let p = Pchip::new(&xs, &ys);
            (0..1000)
                .map(|k| {
                    let x = (k as f64 + 0.5) / 1000.0;
                    (p.eval(x) - (3.0 * x).sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 3.0, "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn stays_within_cell_range(ys in proptest::collection::vec(-5.0f64..5.0, 4..20), t in 0.0f64..1.0) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64 * 0.7 + (i as f64).sqrt()).collect();
            let p = Pchip::new(&xs, &ys);
            for i in 0..xs.len() - 1 {
                let x = xs[i] + t * (xs[i + 1] - xs[i]);
                let v = p.eval_in(i, x);
                let lo = ys[i].min(ys[i + 1]);
                let hi = ys[i].max(ys[i + 1]);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
