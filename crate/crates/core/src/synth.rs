//! Synthetic benchmark streams with known ground truth.
//!
//! Each [`SynthKind`] fixes a schema and a labelling rule. Rows are produced
//! in raw units (within the declared attribute ranges) by a seeded ChaCha
//! generator, so a `(kind, seed)` pair always yields the same stream.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schema::{normalize, AttributeSpec, DatasetSchema, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Two numeric attributes; the label is `a > 0.25`, `b` is noise.
    Separable,
    /// Four numeric attributes independent of a uniform binary label.
    Noise,
    /// Two numeric attributes and a label that is always 1.
    Constant,
    /// Two numeric attributes and one categorical attribute of cardinality 4
    /// with three classes and 5% label noise.
    Mixed,
    /// Uniform(0, 1), truncated Normal(0, 0.25²) and a two-component
    /// mixture; the label is the mixture component.
    Shapes,
}

impl SynthKind {
    pub const ALL: [SynthKind; 5] = [
        SynthKind::Separable,
        SynthKind::Noise,
        SynthKind::Constant,
        SynthKind::Mixed,
        SynthKind::Shapes,
    ];

    pub fn schema(self) -> DatasetSchema {
        let num = |name: &str| AttributeSpec::numeric(name, -1.0, 1.0);
        let (attributes, classes) = match self {
            SynthKind::Separable => (vec![num("a"), num("b")], 2),
            SynthKind::Noise => ((0..4).map(|i| num(&format!("x{i}"))).collect(), 2),
            SynthKind::Constant => (vec![num("a"), num("b")], 2),
            SynthKind::Mixed => (vec![num("x0"), num("x1"), AttributeSpec::categorical("c", 4)], 3),
            SynthKind::Shapes => (
                vec![
                    AttributeSpec::numeric("uniform", 0.0, 1.0),
                    num("normal"),
                    num("bimodal"),
                ],
                2,
            ),
        };
        let mut schema = DatasetSchema::new(attributes, classes).expect("built-in schemas are valid");
        schema.has_header = true;
        schema
    }

    /// Accuracy of the Bayes-optimal classifier for this stream.
    pub fn bayes_accuracy(self) -> f64 {
        match self {
            SynthKind::Separable | SynthKind::Constant => 1.0,
            SynthKind::Noise => 0.5,
            SynthKind::Mixed => 1.0 - MIXED_NOISE + MIXED_NOISE / 3.0,
            // Components N(∓0.5, 0.15²) overlap beyond 0.5/0.15 standard deviations.
            SynthKind::Shapes => crate::gaussian::normal_cdf(0.5 / BIMODAL_SD),
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            SynthKind::Separable => "label = a > 0.25; b is independent noise",
            SynthKind::Noise => "labels independent of all attributes",
            SynthKind::Constant => "label is always 1",
            SynthKind::Mixed => "label = 2 if c == 0, else x0 + x1 > 0; 5% of labels redrawn uniformly",
            SynthKind::Shapes => "label = mixture component of the bimodal attribute",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthKind::Separable => "separable",
            SynthKind::Noise => "noise",
            SynthKind::Constant => "constant",
            SynthKind::Mixed => "mixed",
            SynthKind::Shapes => "shapes",
        })
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic stream {s:?}")))
    }
}

const MIXED_NOISE: f64 = 0.05;
const BIMODAL_SD: f64 = 0.15;

/// One raw row: attribute values in schema units and the class label.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRow {
    pub values: Vec<f64>,
    pub label: usize,
}

/// Endless seeded stream of raw rows.
pub struct SynthRows {
    kind: SynthKind,
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl SynthRows {
    pub fn new(kind: SynthKind, seed: u64) -> Self {
        SynthRows {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: Normal::new(0.0, 1.0).expect("unit normal"),
        }
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random_range(-1.0..1.0)
    }

    /// `N(mean, sd²)` restricted to [-1, 1] by rejection.
    fn truncated(&mut self, mean: f64, sd: f64) -> f64 {
        loop {
            let x = mean + sd * self.normal.sample(&mut self.rng);
            if (-1.0..=1.0).contains(&x) {
                return x;
            }
        }
    }
}

impl Iterator for SynthRows {
    type Item = SynthRow;

    fn next(&mut self) -> Option<SynthRow> {
        let row = match self.kind {
            SynthKind::Separable => {
                let (a, b) = (self.uniform(), self.uniform());
                SynthRow { values: vec![a, b], label: (a > 0.25) as usize }
            }
            SynthKind::Noise => {
                let values = (0..4).map(|_| self.uniform()).collect();
                SynthRow { values, label: self.rng.random_range(0..2) }
            }
            SynthKind::Constant => {
                let (a, b) = (self.uniform(), self.uniform());
                SynthRow { values: vec![a, b], label: 1 }
            }
            SynthKind::Mixed => {
                let (x0, x1) = (self.uniform(), self.uniform());
                let c = self.rng.random_range(0..4usize);
                let mut label = if c == 0 { 2 } else { (x0 + x1 > 0.0) as usize };
                if self.rng.random_bool(MIXED_NOISE) {
                    label = self.rng.random_range(0..3);
                }
                SynthRow { values: vec![x0, x1, c as f64], label }
            }
            SynthKind::Shapes => {
                let u = self.rng.random_range(0.0..1.0);
                let n = self.truncated(0.0, 0.25);
                let label = self.rng.random_range(0..2usize);
                let centre = if label == 0 { -0.5 } else { 0.5 };
                let m = self.truncated(centre, BIMODAL_SD);
                SynthRow { values: vec![u, n, m], label }
            }
        };
        Some(row)
    }
}

/// Endless stream of normalized samples for in-memory use.
pub fn samples(kind: SynthKind, seed: u64) -> impl Iterator<Item = Sample> {
    let schema = kind.schema();
    SynthRows::new(kind, seed).map(move |row| to_sample(&schema, row))
}

/// Normalizes a raw row with the schema's declared ranges.
pub fn to_sample(schema: &DatasetSchema, row: SynthRow) -> Sample {
    let values = row
        .values
        .iter()
        .zip(&schema.attributes)
        .map(|(&v, spec)| match spec.kind {
            crate::schema::AttributeKind::Numeric { min, max } => normalize(v, min, max).0,
            crate::schema::AttributeKind::Categorical { .. } => v,
        })
        .collect();
    Sample::new(values, row.label)
}

/// Writes `rows` rows of `kind` as CSV with a header, label last.
pub fn write_csv<W: Write>(kind: SynthKind, rows: usize, seed: u64, out: W) -> Result<()> {
    let schema = kind.schema();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = schema.attributes.iter().map(|a| a.name.as_str()).collect();
    header.push("class");
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for row in SynthRows::new(kind, seed).take(rows) {
        record.clear();
        for (v, spec) in row.values.iter().zip(&schema.attributes) {
            record.push(if spec.is_numeric() {
                format!("{v:?}")
            } else {
                format!("{}", *v as usize)
            });
        }
        record.push(row.label.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
