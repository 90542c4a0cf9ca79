//! Incremental quantile tracking with asymmetric signum steps.
//!
//! Each tracked quantile `Q(α)` moves by a fixed step toward the incoming
//! sample: up by `λ·α` when the sample lies above it, down by `λ·(1-α)`
//! otherwise. In equilibrium the fraction of samples below `Q(α)` is `α`.
//! The CDF at a point is then recovered by counting how many tracked
//! quantiles fall strictly below it, which rounds the mass down to the
//! nearest `1/|Q|` step.
//!
//! The slice-level functions ([`track`], [`count_below`], [`cdf_below`]) are
//! what leaf elements use on their flat storage; [`QuantileSet`] bundles the
//! same thing as a standalone value.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::fixed::Fixed30;

/// Asymmetric signum: `-alpha` for `z < 0`, `1 - alpha` for `z >= 0`.
pub fn asym_signum(z: f64, alpha: f64) -> f64 {
    if z < 0.0 {
        -alpha
    } else {
        1.0 - alpha
    }
}

/// Evenly spaced interior probabilities `k / (count + 1)`, `k = 1..=count`.
pub fn default_targets(count: usize) -> Vec<f64> {
    let denom = (count + 1) as f64;
    (1..=count).map(|k| k as f64 / denom).collect()
}

/// Checks that `targets` is non-empty, strictly increasing and inside (0, 1).
pub fn validate_targets(targets: &[f64]) -> bool {
    !targets.is_empty()
        && targets.iter().all(|&a| a > 0.0 && a < 1.0)
        && targets.windows(2).all(|w| w[0] < w[1])
}

/// A number type that quantile values can be stored in.
pub trait TrackedValue: Copy + PartialOrd + Debug {
    fn from_real(x: f64) -> Self;
    fn to_real(self) -> f64;
    /// `self + step`, reporting saturation.
    fn raise(self, step: Self) -> (Self, bool);
    /// `self - step`, reporting saturation.
    fn lower(self, step: Self) -> (Self, bool);
}

impl TrackedValue for f64 {
    fn from_real(x: f64) -> Self {
        x
    }

    fn to_real(self) -> f64 {
        self
    }

    fn raise(self, step: Self) -> (Self, bool) {
        (self + step, false)
    }

    fn lower(self, step: Self) -> (Self, bool) {
        (self - step, false)
    }
}

impl TrackedValue for Fixed30 {
    fn from_real(x: f64) -> Self {
        Fixed30::from_f64(x)
    }

    fn to_real(self) -> f64 {
        self.to_f64()
    }

    fn raise(self, step: Self) -> (Self, bool) {
        self.add_flagged(step)
    }

    fn lower(self, step: Self) -> (Self, bool) {
        self.sub_flagged(step)
    }
}

/// Precomputed per-quantile step sizes `λ·α_k` (up) and `λ·(1-α_k)` (down).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSteps<T> {
    up: Vec<T>,
    down: Vec<T>,
}

impl<T: TrackedValue> QuantileSteps<T> {
    pub fn new(targets: &[f64], lambda: f64) -> Self {
        // -λ·sgn(z) for z < 0 is +λα; for z >= 0 it is -λ(1-α).
        let up = targets
            .iter()
            .map(|&a| T::from_real(-lambda * asym_signum(-1.0, a)))
            .collect();
        let down = targets
            .iter()
            .map(|&a| T::from_real(lambda * asym_signum(0.0, a)))
            .collect();
        QuantileSteps { up, down }
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }
}

/// Moves every quantile in `values` one step toward `x`. Returns the number
/// of saturation events (always zero for `f64`).
pub fn track<T: TrackedValue>(values: &mut [T], steps: &QuantileSteps<T>, x: T) -> u64 {
    debug_assert_eq!(values.len(), steps.len());
    let mut saturated = 0;
    for ((q, &up), &down) in values.iter_mut().zip(&steps.up).zip(&steps.down) {
        let (next, sat) = if *q < x { q.raise(up) } else { q.lower(down) };
        *q = next;
        saturated += sat as u64;
    }
    saturated
}

/// Number of tracked quantiles strictly below `pt`.
pub fn count_below<T: TrackedValue>(values: &[T], pt: T) -> usize {
    values.iter().filter(|&&q| q < pt).count()
}

/// Round-down CDF estimate at `pt`: the fraction of quantiles strictly below it.
pub fn cdf_below<T: TrackedValue>(values: &[T], pt: T) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    count_below(values, pt) as f64 / values.len() as f64
}

/// A standalone set of tracked quantiles for one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSet {
    values: Vec<f64>,
    targets: Vec<f64>,
    seen_count: u64,
    initialized: bool,
}

impl QuantileSet {
    /// Creates an uninitialized set. Panics if `targets` is invalid.
    pub fn new(targets: Vec<f64>) -> Self {
        assert!(validate_targets(&targets), "quantile targets must be strictly increasing in (0, 1)");
        QuantileSet {
            values: vec![0.0; targets.len()],
            targets,
            seen_count: 0,
            initialized: false,
        }
    }

    /// `count` quantiles at the default targets.
    pub fn with_count(count: usize) -> Self {
        Self::new(default_targets(count))
    }

    /// Builds an initialized set directly from quantile values.
    pub fn from_values(values: Vec<f64>, targets: Vec<f64>) -> Self {
        assert_eq!(values.len(), targets.len());
        let mut qs = Self::new(targets);
        qs.values = values;
        qs.initialized = true;
        qs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn seen_count(&self) -> u64 {
        self.seen_count
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Feeds one observation. The first observation seeds every quantile.
    pub fn update(&mut self, x: f64, lambda: f64) {
        self.seen_count += 1;
        if !self.initialized {
            self.values.fill(x);
            self.initialized = true;
            return;
        }
        self.step(x, lambda);
    }

    /// Applies one calibration step regardless of initialization state.
    pub fn step(&mut self, x: f64, lambda: f64) {
        for (q, &alpha) in self.values.iter_mut().zip(&self.targets) {
            *q -= lambda * asym_signum(*q - x, alpha);
        }
    }

    pub fn cdf_below(&self, pt: f64) -> f64 {
        cdf_below(&self.values, pt)
    }
}
