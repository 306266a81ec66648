//! Shape-preserving interpolation of fitted quantiles.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Monotone piecewise-cubic Hermite inverse CDF through `(τ, q)` knots
/// with Fritsch–Carlson slopes and flat extrapolation outside the knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneQuantileCurve {
    taus: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneQuantileCurve {
    /// Builds the curve. Crossing quantiles are first rearranged into
    /// non-decreasing order.
    pub fn new(taus: &[f64], q_fitted: &[f64]) -> Result<Self, ModelError> {
        let n = taus.len();
        if n == 0 || n != q_fitted.len() {
            return Err(ModelError::InvalidSpec("quantile knots and values differ in length".into()));
        }
        if taus.windows(2).any(|w| !(w[0] < w[1])) || !(taus[0] > 0.0 && taus[n - 1] < 1.0) {
            return Err(ModelError::InvalidSpec("quantile levels must increase strictly within (0,1)".into()));
        }
        if q_fitted.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidSpec("non-finite fitted quantile".into()));
        }
        let mut values = q_fitted.to_vec();
        values.sort_by(f64::total_cmp);

        let mut slopes = alloc::vec![0.0; n];
        if n > 1 {
            let secants: Vec<f64> = (0..n - 1)
                .map(|k| (values[k + 1] - values[k]) / (taus[k + 1] - taus[k]))
                .collect();
            slopes[0] = secants[0];
            slopes[n - 1] = secants[n - 2];
            for k in 1..n - 1 {
                slopes[k] = if secants[k - 1] * secants[k] <= 0.0 {
                    0.0
                } else {
                    0.5 * (secants[k - 1] + secants[k])
                };
            }
            for k in 0..n - 1 {
                if secants[k] == 0.0 {
                    slopes[k] = 0.0;
                    slopes[k + 1] = 0.0;
                    continue;
                }
                let a = slopes[k] / secants[k];
                let b = slopes[k + 1] / secants[k];
                let s = a * a + b * b;
                if s > 9.0 {
                    let t = 3.0 / s.sqrt();
                    slopes[k] = t * a * secants[k];
                    slopes[k + 1] = t * b * secants[k];
                }
            }
        }
        Ok(MonotoneQuantileCurve { taus: taus.to_vec(), values, slopes })
    }

    /// A curve that returns `c` at every level.
    pub fn constant(c: f64) -> Self {
        MonotoneQuantileCurve { taus: alloc::vec![0.5], values: alloc::vec![c], slopes: alloc::vec![0.0] }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.taus, &self.values)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let n = self.taus.len();
        if u <= self.taus[0] {
            return self.values[0];
        }
        if u >= self.taus[n - 1] {
            return self.values[n - 1];
        }
        let k = self.taus.partition_point(|&t| t <= u) - 1;
        let h = self.taus[k + 1] - self.taus[k];
        let s = (u - self.taus[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[k] + h10 * h * self.slopes[k] + h01 * self.values[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

pub fn monotone_quantile_curve(taus: &[f64], q_fitted: &[f64]) -> Result<MonotoneQuantileCurve, ModelError> {
    MonotoneQuantileCurve::new(taus, q_fitted)
}
