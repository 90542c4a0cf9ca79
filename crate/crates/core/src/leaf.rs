//! Training statistics for one active leaf and the partition deduction
//! used by split trials.
//!
//! A [`LeafElement`] keeps, for the samples that reached its leaf since it
//! was allocated:
//!
//! * the total count `n_f` and per-class counts `n_fj`;
//! * per numeric attribute, the observed min and max and one summary per
//!   class (tracked quantiles, or a normal fit in Gaussian mode);
//! * per categorical attribute, a `cardinality × classes` histogram.
//!
//! Storage is flat. Numeric summaries are laid out as
//! `[numeric slot][class][quantile]`, histograms as `[value][class]` at a
//! per-attribute offset. The shape is described by an [`ElementLayout`]
//! shared by every element of a tree.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{Method, NumericBackend, TreeConfig};
use crate::fixed::Fixed30;
use crate::gaussian::GaussianStats;
use crate::quantile::{self, QuantileSteps};
use crate::schema::{AttributeKind, DatasetSchema, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttrSlot {
    Numeric { slot: usize },
    Categorical { offset: usize, cardinality: usize },
}

/// Shape and learning parameters shared by all elements of one tree.
#[derive(Debug, Clone)]
pub struct ElementLayout {
    attrs: Vec<AttrSlot>,
    numeric_count: usize,
    histogram_len: usize,
    classes: usize,
    quantile_count: usize,
    method: Method,
    backend: NumericBackend,
    targets: Vec<f64>,
    steps_float: QuantileSteps<f64>,
    steps_fixed: QuantileSteps<Fixed30>,
}

impl ElementLayout {
    pub fn new(schema: &DatasetSchema, config: &TreeConfig) -> Self {
        let targets = quantile::default_targets(config.quantile_count);
        Self::with_targets(schema, config, targets)
    }

    /// Like [`ElementLayout::new`] with explicit quantile targets.
    pub fn with_targets(schema: &DatasetSchema, config: &TreeConfig, targets: Vec<f64>) -> Self {
        assert!(quantile::validate_targets(&targets));
        let mut numeric_count = 0;
        let mut histogram_len = 0;
        let attrs = schema
            .attributes
            .iter()
            .map(|a| match a.kind {
                AttributeKind::Numeric { .. } => {
                    numeric_count += 1;
                    AttrSlot::Numeric { slot: numeric_count - 1 }
                }
                AttributeKind::Categorical { cardinality, .. } => {
                    let offset = histogram_len;
                    histogram_len += cardinality * schema.class_count;
                    AttrSlot::Categorical { offset, cardinality }
                }
            })
            .collect();
        ElementLayout {
            attrs,
            numeric_count,
            histogram_len,
            classes: schema.class_count,
            quantile_count: targets.len(),
            method: config.method,
            backend: config.numeric_backend,
            steps_float: QuantileSteps::new(&targets, config.lambda),
            steps_fixed: QuantileSteps::new(&targets, config.lambda),
            targets,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn attribute_count(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_numeric(&self, attr: usize) -> bool {
        matches!(self.attrs[attr], AttrSlot::Numeric { .. })
    }

    /// Cardinality of a categorical attribute.
    pub fn cardinality(&self, attr: usize) -> Option<usize> {
        match self.attrs[attr] {
            AttrSlot::Categorical { cardinality, .. } => Some(cardinality),
            AttrSlot::Numeric { .. } => None,
        }
    }

    pub fn quantile_count(&self) -> usize {
        self.quantile_count
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn backend(&self) -> NumericBackend {
        self.backend
    }

    fn numeric_slot(&self, attr: usize) -> usize {
        match self.attrs[attr] {
            AttrSlot::Numeric { slot } => slot,
            AttrSlot::Categorical { .. } => panic!("attribute {attr} is not numeric"),
        }
    }

    /// Number of per-class summaries across all numeric attributes.
    fn summary_count(&self) -> usize {
        self.numeric_count * self.classes
    }

    fn blank_store(&self) -> NumericStore {
        let n = self.summary_count();
        match (self.method, self.backend) {
            (Method::Gaussian, _) => NumericStore::Gaussian(vec![GaussianStats::new(); n]),
            (Method::Quantile, NumericBackend::Float) => {
                NumericStore::Quantile(vec![0.0; n * self.quantile_count])
            }
            (Method::Quantile, NumericBackend::Fixed) => {
                NumericStore::QuantileFixed(vec![Fixed30::ZERO; n * self.quantile_count])
            }
        }
    }
}

/// Per-class numeric summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum NumericStore {
    Quantile(Vec<f64>),
    QuantileFixed(Vec<Fixed30>),
    Gaussian(Vec<GaussianStats>),
}

/// The serializable state of a [`LeafElement`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementData {
    generation: u32,
    inherited_majority: usize,
    n_f: u64,
    class_counts: Vec<u64>,
    #[serde(with = "unbounded::low")]
    min: Vec<f64>,
    #[serde(with = "unbounded::high")]
    max: Vec<f64>,
    seeded: Vec<bool>,
    numeric: NumericStore,
    histograms: Vec<u64>,
    saturations: u64,
}

/// Range bounds with the empty-range sentinels written as `null`.
mod unbounded {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    fn save<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|x| x.is_finite().then_some(*x))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    fn load<'de, D: Deserializer<'de>>(d: D, empty: f64) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(empty)).collect())
    }

    pub mod low {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            save(v, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            load(d, f64::INFINITY)
        }
    }

    pub mod high {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            save(v, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            load(d, f64::NEG_INFINITY)
        }
    }
}

/// Statistics of one active leaf.
#[derive(Debug, Clone)]
pub struct LeafElement {
    layout: Arc<ElementLayout>,
    data: ElementData,
}

/// Where a binary split sends samples left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPoint {
    /// Numeric: `value <= threshold` goes left.
    Threshold(f64),
    /// Categorical: `code == category` goes left.
    Category(usize),
}

/// Per-class sample mass on each side of a candidate split.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistPair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub split_point: SplitPoint,
}

impl ClassDistPair {
    /// Builds a pair from left counts and class totals, `right = total - left`.
    pub fn from_left(left: Vec<f64>, totals: &[u64], split_point: SplitPoint) -> Self {
        let right = left.iter().zip(totals).map(|(l, &t)| t as f64 - l).collect();
        ClassDistPair {
            left,
            right,
            split_point,
        }
    }
}

impl LeafElement {
    pub fn new(layout: Arc<ElementLayout>) -> Self {
        let data = ElementData {
            generation: 0,
            inherited_majority: 0,
            n_f: 0,
            class_counts: vec![0; layout.classes],
            min: vec![f64::INFINITY; layout.numeric_count],
            max: vec![f64::NEG_INFINITY; layout.numeric_count],
            seeded: vec![false; layout.summary_count()],
            numeric: layout.blank_store(),
            histograms: vec![0; layout.histogram_len],
            saturations: 0,
        };
        LeafElement { layout, data }
    }

    /// Re-attaches serialized state to a layout. Fails if the shapes differ.
    pub fn from_data(layout: Arc<ElementLayout>, data: ElementData) -> Result<Self, String> {
        let summaries = layout.summary_count();
        let q = layout.quantile_count;
        let store_ok = match (&data.numeric, layout.method, layout.backend) {
            (NumericStore::Gaussian(v), Method::Gaussian, _) => v.len() == summaries,
            (NumericStore::Quantile(v), Method::Quantile, NumericBackend::Float) => {
                v.len() == summaries * q
            }
            (NumericStore::QuantileFixed(v), Method::Quantile, NumericBackend::Fixed) => {
                v.len() == summaries * q
            }
            _ => false,
        };
        let ok = store_ok
            && data.class_counts.len() == layout.classes
            && data.min.len() == layout.numeric_count
            && data.max.len() == layout.numeric_count
            && data.seeded.len() == summaries
            && data.histograms.len() == layout.histogram_len
            && data.inherited_majority < layout.classes;
        if ok {
            Ok(LeafElement { layout, data })
        } else {
            Err("element statistics do not match the schema and configuration".into())
        }
    }

    pub fn data(&self) -> &ElementData {
        &self.data
    }

    pub fn layout(&self) -> &ElementLayout {
        &self.layout
    }

    /// Clears all statistics for reuse by a new leaf and bumps the generation.
    pub fn reset(&mut self, inherited_majority: usize) {
        let d = &mut self.data;
        d.generation = d.generation.wrapping_add(1);
        d.inherited_majority = inherited_majority;
        d.n_f = 0;
        d.class_counts.fill(0);
        d.min.fill(f64::INFINITY);
        d.max.fill(f64::NEG_INFINITY);
        d.seeded.fill(false);
        match &mut d.numeric {
            NumericStore::Quantile(v) => v.fill(0.0),
            NumericStore::QuantileFixed(v) => v.fill(Fixed30::ZERO),
            NumericStore::Gaussian(v) => v.fill(GaussianStats::new()),
        }
        d.histograms.fill(0);
    }

    pub fn generation(&self) -> u32 {
        self.data.generation
    }

    pub fn n_f(&self) -> u64 {
        self.data.n_f
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.data.class_counts
    }

    /// Saturation events on the fixed-point path since allocation.
    pub fn saturations(&self) -> u64 {
        self.data.saturations
    }

    /// Observed `(min, max)` of a numeric attribute, `None` before any sample.
    pub fn range(&self, attr: usize) -> Option<(f64, f64)> {
        let slot = self.layout.numeric_slot(attr);
        let (lo, hi) = (self.data.min[slot], self.data.max[slot]);
        (lo <= hi).then_some((lo, hi))
    }

    /// Current quantile values for `(attr, class)` as reals, `None` if that
    /// class has not been seen or the element is in Gaussian mode.
    pub fn quantiles(&self, attr: usize, class: usize) -> Option<Vec<f64>> {
        let s = self.summary_index(attr, class);
        if !self.data.seeded[s] {
            return None;
        }
        let q = self.layout.quantile_count;
        let range = s * q..(s + 1) * q;
        match &self.data.numeric {
            NumericStore::Quantile(v) => Some(v[range].to_vec()),
            NumericStore::QuantileFixed(v) => Some(v[range].iter().map(|x| x.to_f64()).collect()),
            NumericStore::Gaussian(_) => None,
        }
    }

    /// The normal fit for `(attr, class)` in Gaussian mode.
    pub fn gaussian(&self, attr: usize, class: usize) -> Option<&GaussianStats> {
        match &self.data.numeric {
            NumericStore::Gaussian(v) => Some(&v[self.summary_index(attr, class)]),
            _ => None,
        }
    }

    /// Histogram count for categorical attribute `attr`, value `v`, class `class`.
    pub fn histogram(&self, attr: usize, v: usize, class: usize) -> u64 {
        match self.layout.attrs[attr] {
            AttrSlot::Categorical { offset, .. } => {
                self.data.histograms[offset + v * self.layout.classes + class]
            }
            AttrSlot::Numeric { .. } => panic!("attribute {attr} is not categorical"),
        }
    }

    fn summary_index(&self, attr: usize, class: usize) -> usize {
        self.layout.numeric_slot(attr) * self.layout.classes + class
    }

    /// Folds one sample into the statistics. Only the summaries of the
    /// sample's own class are touched.
    pub fn observe(&mut self, s: &Sample) {
        let layout = &*self.layout;
        let d = &mut self.data;
        let label = s.label;
        d.n_f += 1;
        d.class_counts[label] += 1;
        for (attr, &value) in s.values.iter().enumerate() {
            match layout.attrs[attr] {
                AttrSlot::Numeric { slot } => {
                    let s_idx = slot * layout.classes + label;
                    let q = layout.quantile_count;
                    let seeded = d.seeded[s_idx];
                    let x = match &mut d.numeric {
                        NumericStore::Quantile(v) => {
                            let qs = &mut v[s_idx * q..(s_idx + 1) * q];
                            if seeded {
                                quantile::track(qs, &layout.steps_float, value);
                            } else {
                                qs.fill(value);
                            }
                            value
                        }
                        NumericStore::QuantileFixed(v) => {
                            let (x, sat) = Fixed30::from_f64_flagged(value);
                            d.saturations += sat as u64;
                            let qs = &mut v[s_idx * q..(s_idx + 1) * q];
                            if seeded {
                                d.saturations += quantile::track(qs, &layout.steps_fixed, x);
                            } else {
                                qs.fill(x);
                            }
                            x.to_f64()
                        }
                        NumericStore::Gaussian(v) => {
                            // The fixed backend only quantizes inputs here.
                            let x = match layout.backend {
                                NumericBackend::Float => value,
                                NumericBackend::Fixed => {
                                    let (x, sat) = Fixed30::from_f64_flagged(value);
                                    d.saturations += sat as u64;
                                    x.to_f64()
                                }
                            };
                            v[s_idx].update(x, 1.0);
                            x
                        }
                    };
                    d.seeded[s_idx] = true;
                    if x > d.max[slot] {
                        d.max[slot] = x;
                    }
                    if x < d.min[slot] {
                        d.min[slot] = x;
                    }
                }
                AttrSlot::Categorical { offset, .. } => {
                    d.histograms[offset + (value as usize) * layout.classes + label] += 1;
                }
            }
        }
    }

    /// `count` evenly spaced candidate thresholds strictly inside the observed
    /// range of a numeric attribute; empty while the range is degenerate.
    pub fn split_points(&self, attr: usize, count: usize) -> Vec<f64> {
        let Some((lo, hi)) = self.range(attr) else {
            return Vec::new();
        };
        if self.data.n_f < 2 || hi <= lo {
            return Vec::new();
        }
        let width = (hi - lo) / (count + 1) as f64;
        let mut points: Vec<f64> = (1..=count).map(|p| width * p as f64 + lo).collect();
        if self.layout.backend == NumericBackend::Fixed {
            for pt in &mut points {
                *pt = Fixed30::from_f64(*pt).to_f64();
            }
            points.dedup();
        }
        points.retain(|&pt| pt > lo && pt < hi);
        points
    }

    /// Estimated per-class mass at or below `pt` (left) and above it (right)
    /// for numeric attribute `attr`.
    pub fn deduce_partitions(&self, attr: usize, pt: f64) -> ClassDistPair {
        let classes = self.layout.classes;
        let q = self.layout.quantile_count;
        let slot = self.layout.numeric_slot(attr);
        let mut left = vec![0.0; classes];
        for (j, l) in left.iter_mut().enumerate() {
            let n_fj = self.data.class_counts[j];
            let s = slot * classes + j;
            if n_fj == 0 || !self.data.seeded[s] {
                continue;
            }
            let fraction = match &self.data.numeric {
                NumericStore::Quantile(v) => quantile::cdf_below(&v[s * q..(s + 1) * q], pt),
                NumericStore::QuantileFixed(v) => {
                    quantile::cdf_below(&v[s * q..(s + 1) * q], Fixed30::from_f64(pt))
                }
                NumericStore::Gaussian(v) => v[s].cdf(pt),
            };
            *l = fraction * n_fj as f64;
        }
        ClassDistPair::from_left(left, &self.data.class_counts, SplitPoint::Threshold(pt))
    }

    /// Exact per-class counts for the one-vs-rest split `code == v`.
    pub fn categorical_partitions(&self, attr: usize, v: usize) -> ClassDistPair {
        let left = (0..self.layout.classes)
            .map(|j| self.histogram(attr, v, j) as f64)
            .collect();
        ClassDistPair::from_left(left, &self.data.class_counts, SplitPoint::Category(v))
    }

    /// Most frequent class, lowest index on ties; the inherited class when
    /// the element has seen nothing.
    pub fn majority_class(&self) -> usize {
        if self.data.n_f == 0 {
            return self.data.inherited_majority;
        }
        argmax(&self.data.class_counts)
    }

    /// Checks the counting invariants, returning a description of the first
    /// violation.
    pub fn check(&self) -> Result<(), String> {
        let d = &self.data;
        let sum: u64 = d.class_counts.iter().sum();
        if sum != d.n_f {
            return Err(format!("class counts sum to {sum}, n_f is {}", d.n_f));
        }
        if d.n_f > 0 {
            for slot in 0..self.layout.numeric_count {
                if d.min[slot] > d.max[slot] {
                    return Err(format!("numeric slot {slot}: min > max"));
                }
            }
        }
        for (attr, a) in self.layout.attrs.iter().enumerate() {
            if let AttrSlot::Categorical { cardinality, .. } = *a {
                for j in 0..self.layout.classes {
                    let total: u64 = (0..cardinality).map(|v| self.histogram(attr, v, j)).sum();
                    if total != d.class_counts[j] {
                        return Err(format!(
                            "attribute {attr}, class {j}: histogram holds {total}, n_fj is {}",
                            d.class_counts[j]
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Index of the largest count, lowest index on ties.
pub fn argmax(counts: &[u64]) -> usize {
    let mut best = 0;
    for (j, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = j;
        }
    }
    best
}
