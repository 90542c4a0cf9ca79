//! Interleaved test-then-train evaluation, quantile-count sweeps, method
//! comparison and CDF approximation export.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Method, TreeConfig};
use crate::error::{Error, Result};
use crate::gaussian::GaussianStats;
use crate::quantile::{default_targets, QuantileSet};
use crate::schema::{open_stream, DatasetSchema, Sample};
use crate::tree::HoeffdingTree;

/// Samples per point of the windowed accuracy series.
pub const DEFAULT_WINDOW: u64 = 1000;

/// Outcome of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub samples_seen: u64,
    pub correct: u64,
    /// `correct / samples_seen` over the whole stream.
    pub accuracy: f64,
    pub splits_taken: u64,
    pub frozen_leaves: u64,
    pub split_trials: u64,
    pub leaf_count: usize,
    pub depth: u32,
    /// Raw values clamped into their declared range during ingestion.
    pub clamped_values: u64,
    /// Fixed-point operations that saturated.
    pub saturations: u64,
    pub wall_time_secs: f64,
    pub window: u64,
    /// Accuracy of each consecutive window; a trailing partial window is included.
    pub windowed_accuracy: Vec<f64>,
}

impl Metrics {
    /// Copy with the timing zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Metrics {
        Metrics {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// Flat view for tabulation.
    pub fn row(&self, label: &str, config: &TreeConfig) -> MetricsRow {
        MetricsRow {
            run: label.to_string(),
            method: config.method.to_string(),
            backend: config.numeric_backend.to_string(),
            quantiles: config.quantile_count,
            samples_seen: self.samples_seen,
            correct: self.correct,
            accuracy: self.accuracy,
            splits_taken: self.splits_taken,
            frozen_leaves: self.frozen_leaves,
            leaf_count: self.leaf_count,
            depth: self.depth,
            clamped_values: self.clamped_values,
            saturations: self.saturations,
            wall_time_secs: self.wall_time_secs,
        }
    }
}

/// One CSV row of metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run: String,
    pub method: String,
    pub backend: String,
    pub quantiles: usize,
    pub samples_seen: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub splits_taken: u64,
    pub frozen_leaves: u64,
    pub leaf_count: usize,
    pub depth: u32,
    pub clamped_values: u64,
    pub saturations: u64,
    pub wall_time_secs: f64,
}

/// Writes rows as CSV with a header line.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Predicts each sample before training on it. Accuracy covers every sample.
pub fn interleaved_test_then_train<I>(tree: &mut HoeffdingTree, stream: I, window: u64) -> Result<Metrics>
where
    I: IntoIterator<Item = Result<Sample>>,
{
    let window = window.max(1);
    let start = Instant::now();
    let before = tree.counters();
    let (mut seen, mut correct) = (0u64, 0u64);
    let mut window_correct = 0u64;
    let mut series = Vec::new();
    for sample in stream {
        let sample = sample?;
        let hit = tree.predict(&sample) == sample.label;
        correct += hit as u64;
        window_correct += hit as u64;
        seen += 1;
        tree.train_one(&sample);
        if seen % window == 0 {
            series.push(window_correct as f64 / window as f64);
            window_correct = 0;
        }
    }
    if seen % window != 0 {
        series.push(window_correct as f64 / (seen % window) as f64);
    }
    let after = tree.counters();
    Ok(Metrics {
        samples_seen: seen,
        correct,
        accuracy: if seen == 0 { 0.0 } else { correct as f64 / seen as f64 },
        splits_taken: after.splits - before.splits,
        frozen_leaves: after.frozen_leaves - before.frozen_leaves,
        split_trials: after.trials - before.trials,
        leaf_count: tree.leaf_count(),
        depth: tree.depth(),
        clamped_values: 0,
        saturations: after.saturations - before.saturations,
        wall_time_secs: start.elapsed().as_secs_f64(),
        window,
        windowed_accuracy: series,
    })
}

/// Trains a fresh tree on the CSV at `path` and returns it with its metrics.
pub fn evaluate_file(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    config: &TreeConfig,
    window: u64,
) -> Result<(Metrics, HoeffdingTree)> {
    let mut tree = HoeffdingTree::new(schema, config.clone())?;
    let mut stream = open_stream(path, schema)?;
    let mut metrics = interleaved_test_then_train(&mut tree, stream.by_ref(), window)?;
    metrics.clamped_values = stream.clamped();
    Ok((metrics, tree))
}

/// One cell of a quantile-count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub quantiles: usize,
    pub accuracy: f64,
    pub metrics: Metrics,
}

/// One independent run per entry of `counts`, in parallel, rows in input order.
pub fn sweep_quantiles(
    path: impl AsRef<Path> + Sync,
    schema: &DatasetSchema,
    counts: &[usize],
    config: &TreeConfig,
) -> Result<Vec<SweepRow>> {
    if counts.is_empty() {
        return Err(Error::Config("quantile sweep needs at least one count".into()));
    }
    counts
        .par_iter()
        .map(|&q| {
            let config = TreeConfig {
                quantile_count: q,
                ..config.clone()
            };
            let (metrics, _) = evaluate_file(path.as_ref(), schema, &config, DEFAULT_WINDOW)?;
            Ok(SweepRow {
                quantiles: q,
                accuracy: metrics.accuracy,
                metrics,
            })
        })
        .collect()
}

/// Both methods run on the same stream with otherwise equal settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantile: Metrics,
    pub gaussian: Metrics,
}

impl Comparison {
    /// Quantile accuracy minus Gaussian accuracy.
    pub fn gap(&self) -> f64 {
        self.quantile.accuracy - self.gaussian.accuracy
    }
}

pub fn compare_methods(path: impl AsRef<Path> + Sync, schema: &DatasetSchema, config: &TreeConfig) -> Result<Comparison> {
    let run = |method| {
        let config = TreeConfig {
            method,
            ..config.clone()
        };
        evaluate_file(path.as_ref(), schema, &config, DEFAULT_WINDOW).map(|(m, _)| m)
    };
    let (quantile, gaussian) = rayon::join(|| run(Method::Quantile), || run(Method::Gaussian));
    Ok(Comparison {
        quantile: quantile?,
        gaussian: gaussian?,
    })
}

/// One evaluation point of a CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub x: f64,
    pub exact: f64,
    pub quantile: f64,
    pub gaussian: f64,
}

/// Empirical, quantile-reconstructed and Gaussian CDFs of one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSeries {
    pub attribute: usize,
    pub name: String,
    pub samples: usize,
    pub quantile_values: Vec<f64>,
    pub gaussian_mean: f64,
    pub gaussian_sd: f64,
    pub points: Vec<CdfPoint>,
}

impl CdfSeries {
    /// Largest deviation of the quantile reconstruction from the exact CDF.
    pub fn quantile_sup_error(&self) -> f64 {
        self.points.iter().map(|p| (p.quantile - p.exact).abs()).fold(0.0, f64::max)
    }

    pub fn gaussian_sup_error(&self) -> f64 {
        self.points.iter().map(|p| (p.gaussian - p.exact).abs()).fold(0.0, f64::max)
    }

    /// Writes whitespace-aligned `x exact quantile gaussian` columns.
    pub fn write_columns<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{:>14} {:>10} {:>10} {:>10}", "x", "exact", "quantile", "gaussian")?;
        for p in &self.points {
            writeln!(
                out,
                "{:>14.8} {:>10.6} {:>10.6} {:>10.6}",
                p.x, p.exact, p.quantile, p.gaussian
            )?;
        }
        Ok(())
    }
}

/// Number of samples the root absorbs before its first split, or the stream
/// length when it never splits.
pub fn root_subset_size<I>(stream: I, schema: &DatasetSchema, config: &TreeConfig) -> Result<usize>
where
    I: IntoIterator<Item = Result<Sample>>,
{
    let mut tree = HoeffdingTree::new(schema, config.clone())?;
    let mut n = 0;
    for sample in stream {
        n += 1;
        if tree.train_one(&sample?).is_some() {
            break;
        }
    }
    Ok(n)
}

/// Summarizes attribute `attr` over the first `sample_limit` samples with
/// both methods (all classes pooled) and evaluates the three CDFs at every
/// distinct observed value.
pub fn export_cdf_comparison<I>(
    stream: I,
    schema: &DatasetSchema,
    attr: usize,
    sample_limit: usize,
    config: &TreeConfig,
) -> Result<CdfSeries>
where
    I: IntoIterator<Item = Result<Sample>>,
{
    let spec = schema
        .attributes
        .get(attr)
        .ok_or_else(|| Error::Config(format!("attribute {attr} does not exist")))?;
    if !spec.is_numeric() {
        return Err(Error::NotNumeric(attr));
    }
    config.validate()?;
    let mut quantiles = QuantileSet::new(default_targets(config.quantile_count));
    let mut gaussian = GaussianStats::default();
    let mut xs = Vec::with_capacity(sample_limit.min(1 << 20));
    for sample in stream.into_iter().take(sample_limit) {
        let x = sample?.values[attr];
        quantiles.update(x, config.lambda);
        gaussian.update(x, 1.0);
        xs.push(x);
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let x = xs[i];
        while i < n && xs[i] == x {
            i += 1;
        }
        points.push(CdfPoint {
            x,
            exact: i as f64 / n as f64,
            quantile: quantiles.cdf_below(x),
            gaussian: gaussian.cdf(x),
        });
    }
    Ok(CdfSeries {
        attribute: attr,
        name: spec.name.clone(),
        samples: n,
        quantile_values: quantiles.values().to_vec(),
        gaussian_mean: gaussian.mean(),
        gaussian_sd: gaussian.variance().unwrap_or(0.0).sqrt(),
        points,
    })
}
