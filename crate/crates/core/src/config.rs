use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How numeric attributes are summarized at a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Per-class tracked quantiles with round-down CDF reconstruction.
    #[default]
    Quantile,
    /// Per-class incremental normal fits.
    Gaussian,
}

/// Number representation on the per-sample learning path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericBackend {
    #[default]
    Float,
    /// Q2.30 fixed point.
    Fixed,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantile" => Ok(Method::Quantile),
            "gaussian" => Ok(Method::Gaussian),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quantile => "quantile",
            Method::Gaussian => "gaussian",
        })
    }
}

impl FromStr for NumericBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(NumericBackend::Float),
            "fixed" => Ok(NumericBackend::Fixed),
            _ => Err(Error::Config(format!("unknown numeric backend {s:?}"))),
        }
    }
}

impl fmt::Display for NumericBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NumericBackend::Float => "float",
            NumericBackend::Fixed => "fixed",
        })
    }
}

/// Learner parameters. [`TreeConfig::default`] gives the reference settings:
/// `δ = 1e-3`, `τ = 0.05`, `n_min = 200`, 10 split points, 8 quantiles,
/// `λ = 0.01`, at most 1024 leaves and depth 15.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// Hoeffding bound confidence parameter.
    pub delta: f64,
    /// Tie threshold.
    pub tau: f64,
    /// Samples between split trials at a leaf.
    pub n_min: u64,
    /// Candidate split points per numeric attribute.
    pub split_points: usize,
    pub quantile_count: usize,
    /// Quantile tracker step size.
    pub lambda: f64,
    pub max_leaves: usize,
    pub max_depth: u32,
    pub method: Method,
    pub numeric_backend: NumericBackend,
    /// Range of the split measure in the Hoeffding bound.
    pub range: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            delta: 1e-3,
            tau: 0.05,
            n_min: 200,
            split_points: 10,
            quantile_count: 8,
            lambda: 0.01,
            max_leaves: 1024,
            max_depth: 15,
            method: Method::Quantile,
            numeric_backend: NumericBackend::Float,
            range: 1.0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(what.to_string()))
            }
        };
        check(self.delta > 0.0 && self.delta < 1.0, "delta must be in (0, 1)")?;
        check(self.tau > 0.0, "tau must be positive")?;
        check(self.n_min >= 1, "n_min must be at least 1")?;
        check(self.split_points >= 1, "split_points must be at least 1")?;
        check(self.quantile_count >= 2, "quantile_count must be at least 2")?;
        check(self.lambda > 0.0 && self.lambda.is_finite(), "lambda must be positive")?;
        check(self.max_leaves >= 2, "max_leaves must be at least 2")?;
        check(self.max_depth >= 1, "max_depth must be at least 1")?;
        check(self.range > 0.0 && self.range.is_finite(), "range must be positive")?;
        Ok(())
    }
}
