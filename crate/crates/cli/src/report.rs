//! Aligned plain-text reports.

use std::fmt::Write;
use std::path::Path;

use qtree::config::TreeConfig;
use qtree::eval::{CdfSeries, Comparison, Metrics, SweepRow};
use qtree::schema::{DatasetSchema, EncodingReport};
use qtree::synth::SynthKind;

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

pub fn metrics(label: &str, m: &Metrics, config: &TreeConfig) -> String {
    let rows = [
        ("dataset", label.to_string()),
        ("method", config.method.to_string()),
        ("backend", config.numeric_backend.to_string()),
        ("quantiles", config.quantile_count.to_string()),
        ("samples", m.samples_seen.to_string()),
        ("correct", m.correct.to_string()),
        ("accuracy", pct(m.accuracy)),
        ("splits", m.splits_taken.to_string()),
        ("frozen leaves", m.frozen_leaves.to_string()),
        ("leaves", m.leaf_count.to_string()),
        ("depth", m.depth.to_string()),
        ("clamped values", m.clamped_values.to_string()),
        ("saturations", m.saturations.to_string()),
        ("wall time", format!("{:.3} s", m.wall_time_secs)),
    ];
    let mut s = String::new();
    for (k, v) in rows {
        writeln!(s, "{k:<16}{v:>14}").unwrap();
    }
    s
}

pub fn sweep(label: &str, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{label}").unwrap();
    writeln!(s, "{:>10} {:>10} {:>8} {:>8} {:>10}", "quantiles", "accuracy", "leaves", "depth", "time").unwrap();
    for r in rows {
        writeln!(
            s,
            "{:>10} {:>10} {:>8} {:>8} {:>8.3} s",
            r.quantiles,
            pct(r.accuracy),
            r.metrics.leaf_count,
            r.metrics.depth,
            r.metrics.wall_time_secs
        )
        .unwrap();
    }
    s
}

pub fn comparison(label: &str, c: &Comparison) -> String {
    let mut s = String::new();
    writeln!(s, "{:<16}{:>12}{:>12}", label, "quantile", "gaussian").unwrap();
    let line = |s: &mut String, k: &str, a: String, b: String| writeln!(s, "{k:<16}{a:>12}{b:>12}").unwrap();
    line(&mut s, "accuracy", pct(c.quantile.accuracy), pct(c.gaussian.accuracy));
    line(&mut s, "splits", c.quantile.splits_taken.to_string(), c.gaussian.splits_taken.to_string());
    line(&mut s, "leaves", c.quantile.leaf_count.to_string(), c.gaussian.leaf_count.to_string());
    line(&mut s, "depth", c.quantile.depth.to_string(), c.gaussian.depth.to_string());
    writeln!(s, "{:<16}{:>+11.2} points", "gap", 100.0 * c.gap()).unwrap();
    s
}

pub fn cdf_summary(series: &CdfSeries) -> String {
    let mut s = String::new();
    writeln!(s, "{:<24}{:>12}", "attribute", series.name).unwrap();
    writeln!(s, "{:<24}{:>12}", "samples", series.samples).unwrap();
    writeln!(s, "{:<24}{:>12.6}", "quantile sup error", series.quantile_sup_error()).unwrap();
    writeln!(s, "{:<24}{:>12.6}", "gaussian sup error", series.gaussian_sup_error()).unwrap();
    s
}

pub fn encoding(rep: &EncodingReport, schema: &DatasetSchema) -> String {
    let mut s = String::new();
    writeln!(s, "rows encoded: {}", rep.rows).unwrap();
    for (attr, values) in &rep.attribute_values {
        writeln!(s, "{:<20} {}", schema.attributes[*attr].name, values.join(", ")).unwrap();
    }
    writeln!(s, "{:<20} {}", "class", rep.class_values.join(", ")).unwrap();
    s
}

pub fn synth(kind: SynthKind, rows: usize, seed: u64, out: &Path) -> String {
    let mut s = String::new();
    writeln!(s, "{:<16}{}", "stream", kind).unwrap();
    writeln!(s, "{:<16}{}", "rows", rows).unwrap();
    writeln!(s, "{:<16}{}", "seed", seed).unwrap();
    writeln!(s, "{:<16}{}", "rule", kind.describe()).unwrap();
    writeln!(s, "{:<16}{}", "bayes accuracy", pct(kind.bayes_accuracy())).unwrap();
    writeln!(s, "{:<16}{}", "written to", out.display()).unwrap();
    s
}
