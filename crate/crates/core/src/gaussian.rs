//! Incremental Gaussian approximation of a numeric attribute, the baseline
//! estimator the quantile tracker is compared against.

use serde::{Deserialize, Serialize};

/// Running mean and variance of a weighted stream.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GaussianStats {
    weight_sum: f64,
    mean: f64,
    variance_sum: f64,
    initialized: bool,
}

impl GaussianStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one observation. The first call seeds the mean.
    pub fn update(&mut self, x: f64, weight: f64) {
        debug_assert!(weight > 0.0);
        if !self.initialized {
            self.weight_sum = weight;
            self.mean = x;
            self.variance_sum = 0.0;
            self.initialized = true;
            return;
        }
        self.weight_sum += weight;
        let prior = self.mean;
        self.mean += (x - prior) / self.weight_sum;
        self.variance_sum += (x - prior) * (x - self.mean);
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance_sum(&self) -> f64 {
        self.variance_sum
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Sample variance, defined once more than one unit of weight was seen.
    pub fn variance(&self) -> Option<f64> {
        (self.weight_sum > 1.0).then(|| self.variance_sum / (self.weight_sum - 1.0))
    }

    /// `P(X <= pt)` under the fitted normal. Degenerate fits (no spread, or
    /// too little weight) give a step at the mean.
    pub fn cdf(&self, pt: f64) -> f64 {
        match self.variance() {
            Some(v) if v > 0.0 => normal_cdf((pt - self.mean) / v.sqrt()),
            _ => {
                if pt < self.mean {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Standard normal CDF.
///
/// Uses the Taylor series `Φ(x) = 1/2 + φ(x)·(x + x³/3 + x⁵/(3·5) + …)`,
/// summed until the terms stop changing the result. Absolute error is around
/// 1e-15 on `[-8, 8]`; outside that range the tails are below 1e-15 and
/// clamp to 0 or 1.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -8.0 {
        return 0.0;
    }
    if x > 8.0 {
        return 1.0;
    }
    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
    let sq = x * x;
    let mut sum = x;
    let mut term = x;
    let mut odd = 1.0;
    loop {
        odd += 2.0;
        term *= sq / odd;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    (0.5 + sum * (-0.5 * sq - LN_SQRT_2PI).exp()).clamp(0.0, 1.0)
}
