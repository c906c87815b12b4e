use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KNOTS: usize = 33;

/// Piecewise-linear empirical CDF: knot `j` holds the distance at quantile
/// level `j / (KNOTS - 1)`. Values below the first knot map to 0, above the
/// last to 1, and non-finite distances to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    knots: Vec<f64>,
}

impl Default for QuantileMap {
    /// Identity on [0, 1].
    fn default() -> Self {
        QuantileMap {
            knots: (0..KNOTS).map(|j| j as f64 / (KNOTS - 1) as f64).collect(),
        }
    }
}

impl QuantileMap {
    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2
            || knots.iter().any(|k| !k.is_finite())
            || knots.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::Model("quantile knots must be finite and sorted".into()));
        }
        Ok(QuantileMap { knots })
    }

    /// Compresses a sample of distances to `KNOTS` evenly spaced quantiles.
    /// Infinite samples are dropped; an all-infinite sample gives the default.
    pub fn fit(samples: &[f64]) -> Self {
        let mut v: Vec<f64> = samples.iter().copied().filter(|d| d.is_finite()).collect();
        if v.is_empty() {
            return Self::default();
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let knots = (0..KNOTS)
            .map(|j| {
                let pos = j as f64 / (KNOTS - 1) as f64 * (n - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(n - 1);
                v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
            })
            .collect();
        QuantileMap { knots }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn eval(&self, d: f64) -> f64 {
        let k = &self.knots;
        if !(d < f64::INFINITY) {
            return 1.0;
        }
        if d < k[0] {
            return 0.0;
        }
        let last = k.len() - 1;
        if d >= k[last] {
            return 1.0;
        }
        // the last knot not above d; d < k[last] so j < last
        let j = k.partition_point(|&x| x <= d) - 1;
        let step = 1.0 / last as f64;
        let span = k[j + 1] - k[j];
        let t = if span > 0.0 { (d - k[j]) / span } else { 0.0 };
        (j as f64 + t) * step
    }
}
