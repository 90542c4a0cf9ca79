//! Streaming Hoeffding trees whose numeric split candidates are scored from
//! tracked quantiles instead of per-class normal fits.
//!
//! A [`HoeffdingTree`] learns one [`Sample`] at a time. Each active leaf keeps,
//! for every numeric attribute and class, a small set of quantile estimates
//! updated by an asymmetric signum step; a candidate threshold's left mass is
//! read off by counting the quantiles that fall below it. Categorical
//! attributes use exact histograms. Every `n_min` samples a leaf compares its
//! two best candidates by gini reduction and splits once the gap exceeds the
//! Hoeffding bound, or once the bound drops below the tie threshold.
//!
//! ```
//! use qtree::synth::{samples, SynthKind};
//! use qtree::{HoeffdingTree, TreeConfig};
//!
//! let mut tree = HoeffdingTree::new(&SynthKind::Separable.schema(), TreeConfig::default()).unwrap();
//! for s in samples(SynthKind::Separable, 7).take(5_000) {
//!     tree.train_one(&s);
//! }
//! assert!(tree.leaf_count() > 1);
//! ```
//!
//! The learning path can run in Q2.30 fixed point
//! ([`NumericBackend::Fixed`]), and [`eval`] provides the interleaved
//! test-then-train harness used by the `qtree` command-line tool.

pub mod config;
pub mod error;
pub mod eval;
pub mod fixed;
pub mod gaussian;
pub mod leaf;
pub mod quantile;
pub mod schema;
pub mod split;
pub mod synth;
pub mod tree;

pub use config::{Method, NumericBackend, TreeConfig};
pub use error::{Error, Result};
pub use eval::{interleaved_test_then_train, Metrics};
pub use fixed::Fixed30;
pub use gaussian::GaussianStats;
pub use leaf::{LeafElement, SplitPoint};
pub use quantile::QuantileSet;
pub use schema::{AttributeSpec, DatasetSchema, Sample};
pub use split::SplitDecision;
pub use tree::HoeffdingTree;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/schemas.md")]
    mod schemas {}
    #[doc = include_str!("../../../book/src/quantiles.md")]
    mod quantiles {}
    #[doc = include_str!("../../../book/src/gaussian.md")]
    mod gaussian {}
    #[doc = include_str!("../../../book/src/splits.md")]
    mod splits {}
    #[doc = include_str!("../../../book/src/tree.md")]
    mod tree {}
    #[doc = include_str!("../../../book/src/fixed-point.md")]
    mod fixed_point {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
