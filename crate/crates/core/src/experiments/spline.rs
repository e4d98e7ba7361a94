//! Monotone cubic Hermite interpolation with Fritsch–Carlson tangents.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    tangents: Vec<f64>,
}

impl MonotoneCubic {
    /// Interpolates strictly increasing `xs` and non-decreasing `ys`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidInput("a spline needs at least two knots".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput(
                "knots must have increasing x and non-decreasing y".into(),
            ));
        }
        let secant: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])).collect();
        let mut m = vec![0.0; n];
        m[0] = secant[0];
        m[n - 1] = secant[n - 2];
        for k in 1..n - 1 {
            m[k] = if secant[k - 1] * secant[k] > 0.0 {
                0.5 * (secant[k - 1] + secant[k])
            } else {
                0.0
            };
        }
        for k in 0..n - 1 {
            if secant[k] == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            let (a, b) = (m[k] / secant[k], m[k + 1] / secant[k]);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m[k] = tau * a * secant[k];
                m[k + 1] = tau * b * secant[k];
            }
        }
        Ok(MonotoneCubic { xs, ys, tangents: m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value at `x`, clamped to the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let k = (self.xs.partition_point(|&v| v <= x)).clamp(1, n - 1) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.tangents[k] + h01 * self.ys[k + 1] + h11 * h * self.tangents[k + 1]
    }

    /// Smallest `x` with `eval(x) ≥ y`, by bisection.
    pub fn inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = self.domain();
        if y <= self.eval(lo) {
            return lo;
        }
        if y >= self.eval(hi) {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 5.0, 5.0, 9.0];
        let s = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x) - y).abs() < 1e-12);
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let v = s.eval(i as f64 / 1000.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        // Flat between equal knots.
        assert!((s.eval(2.5) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let s = MonotoneCubic::new(vec![0.0, 3.0, 6.0, 9.0], vec![0.0, 3.0, 6.0, 9.0]).unwrap();
        for x in [0.0, 0.7, 4.4, 8.9] {
            assert!((s.eval(x) - x).abs() < 1e-12);
            assert!((s.inverse(x) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(MonotoneCubic::new(vec![0.0], vec![0.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
    }
}
