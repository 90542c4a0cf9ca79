//! Dataset schemas, normalization and CSV sample streams.
//!
//! A schema file is JSON:
//!
//! ```json
//! {
//!   "attributes": [
//!     {"name": "price", "kind": "numeric", "min": 0.0, "max": 1.0},
//!     {"name": "day", "kind": "categorical", "cardinality": 7}
//!   ],
//!   "classes": 2,
//!   "label_column": "last",
//!   "has_header": true
//! }
//! ```
//!
//! Attributes map onto the non-label CSV columns in order. Numeric values are
//! mapped affinely from `[min, max]` onto `[-1, 1]` and clamped; categorical
//! values and labels must already be integer codes (see [`encode_csv`] for
//! turning string-valued files into coded ones).

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric {
        min: f64,
        max: f64,
    },
    Categorical {
        cardinality: usize,
        /// Optional string values in code order, used by [`encode_csv`].
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>, min: f64, max: f64) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric { min, max },
        }
    }

    pub fn categorical(name: impl Into<String>, cardinality: usize) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Categorical {
                cardinality,
                values: None,
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric { .. })
    }

    /// Cardinality of a categorical attribute, `None` for numeric ones.
    pub fn cardinality(&self) -> Option<usize> {
        match self.kind {
            AttributeKind::Categorical { cardinality, .. } => Some(cardinality),
            AttributeKind::Numeric { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            AttributeKind::Numeric { min, max } => {
                if !(min.is_finite() && max.is_finite() && min < max) {
                    return Err(Error::Schema(format!(
                        "attribute {:?}: need finite min < max, got [{min}, {max}]",
                        self.name
                    )));
                }
            }
            AttributeKind::Categorical { cardinality, values } => {
                if *cardinality < 2 {
                    return Err(Error::Schema(format!(
                        "attribute {:?}: cardinality must be at least 2",
                        self.name
                    )));
                }
                if let Some(values) = values {
                    if values.len() > *cardinality {
                        return Err(Error::Schema(format!(
                            "attribute {:?}: {} values listed for cardinality {cardinality}",
                            self.name,
                            values.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
}

impl Serialize for LabelColumn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LabelColumn::Last => s.serialize_str("last"),
            LabelColumn::Index(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for LabelColumn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(LabelColumn::Index(i)),
            Raw::Name(s) if s == "last" => Ok(LabelColumn::Last),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "label_column must be an integer or \"last\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub attributes: Vec<AttributeSpec>,
    #[serde(rename = "classes")]
    pub class_count: usize,
    #[serde(default)]
    pub label_column: LabelColumn,
    #[serde(default)]
    pub has_header: bool,
    /// Optional class names in code order, used by [`encode_csv`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_values: Option<Vec<String>>,
}

impl DatasetSchema {
    pub fn new(attributes: Vec<AttributeSpec>, class_count: usize) -> Result<Self> {
        let schema = DatasetSchema {
            attributes,
            class_count,
            label_column: LabelColumn::Last,
            has_header: false,
            class_values: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::Schema("at least one attribute is required".into()));
        }
        if self.class_count < 2 {
            return Err(Error::Schema("at least two classes are required".into()));
        }
        for attr in &self.attributes {
            attr.validate()?;
        }
        if let LabelColumn::Index(i) = self.label_column {
            if i > self.attributes.len() {
                return Err(Error::Schema(format!(
                    "label_column {i} is outside the {} CSV columns",
                    self.column_count()
                )));
            }
        }
        if let Some(names) = &self.class_values {
            if names.len() != self.class_count {
                return Err(Error::Schema(format!(
                    "{} class_values listed for {} classes",
                    names.len(),
                    self.class_count
                )));
            }
        }
        Ok(())
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// CSV columns per row: attributes plus the label.
    pub fn column_count(&self) -> usize {
        self.attributes.len() + 1
    }

    pub fn label_index(&self) -> usize {
        match self.label_column {
            LabelColumn::Last => self.attributes.len(),
            LabelColumn::Index(i) => i,
        }
    }

    /// Attribute index for CSV column `col`, `None` for the label column.
    pub fn attribute_for_column(&self, col: usize) -> Option<usize> {
        let label = self.label_index();
        match col.cmp(&label) {
            std::cmp::Ordering::Less => Some(col),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(col - 1),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_schema(&text)
    }
}

/// Parses and validates a JSON schema.
pub fn parse_schema(text: &str) -> Result<DatasetSchema> {
    let schema: DatasetSchema =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    schema.validate()?;
    Ok(schema)
}

/// Maps `raw` from `[min, max]` onto `[-1, 1]`, clamping. The flag reports
/// whether clamping was needed.
pub fn normalize(raw: f64, min: f64, max: f64) -> (f64, bool) {
    let y = 2.0 * (raw - min) / (max - min) - 1.0;
    if y < -1.0 {
        (-1.0, true)
    } else if y > 1.0 {
        (1.0, true)
    } else {
        (y, false)
    }
}

/// Inverse of [`normalize`] for in-range values.
pub fn denormalize(y: f64, min: f64, max: f64) -> f64 {
    (y + 1.0) * (max - min) / 2.0 + min
}

/// One labeled observation. Numeric values are normalized to `[-1, 1]`;
/// categorical values hold their integer code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub values: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(values: Vec<f64>, label: usize) -> Self {
        Sample { values, label }
    }

    /// Categorical code of attribute `attr`.
    pub fn code(&self, attr: usize) -> usize {
        self.values[attr] as usize
    }
}

/// Streams samples from a CSV source one record at a time.
pub struct SampleStream<R: Read = File> {
    reader: csv::Reader<R>,
    record: csv::StringRecord,
    schema: DatasetSchema,
    clamped: u64,
    done: bool,
}

/// Opens `path` as a sample stream under `schema`.
pub fn open_stream(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<SampleStream<File>> {
    let file = File::open(path)?;
    Ok(SampleStream::from_reader(file, schema))
}

impl<R: Read> SampleStream<R> {
    pub fn from_reader(reader: R, schema: &DatasetSchema) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(schema.has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        SampleStream {
            reader,
            record: csv::StringRecord::new(),
            schema: schema.clone(),
            clamped: 0,
            done: false,
        }
    }

    /// Number of numeric values clamped into `[-1, 1]` so far.
    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    fn parse_record(&mut self) -> Result<Sample> {
        let row = self.record.position().map_or(0, |p| p.line());
        let expected = self.schema.column_count();
        if self.record.len() != expected {
            return Err(Error::Arity {
                row,
                expected,
                found: self.record.len(),
            });
        }
        let mut values = Vec::with_capacity(self.schema.attribute_count());
        let mut label = 0;
        for (col, field) in self.record.iter().enumerate() {
            match self.schema.attribute_for_column(col) {
                None => label = parse_code(field, row, col, self.schema.class_count)?,
                Some(a) => match self.schema.attributes[a].kind {
                    AttributeKind::Numeric { min, max } => {
                        let raw: f64 = field.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                            Error::Field {
                                row,
                                column: col,
                                value: field.to_string(),
                                expected: "a finite number",
                            }
                        })?;
                        let (v, clamped) = normalize(raw, min, max);
                        self.clamped += clamped as u64;
                        values.push(v);
                    }
                    AttributeKind::Categorical { cardinality, .. } => {
                        values.push(parse_code(field, row, col, cardinality)? as f64);
                    }
                },
            }
        }
        Ok(Sample { values, label })
    }
}

fn parse_code(field: &str, row: u64, column: usize, limit: usize) -> Result<usize> {
    let code: u64 = field.parse().map_err(|_| Error::Field {
        row,
        column,
        value: field.to_string(),
        expected: "an integer code",
    })?;
    if code as usize >= limit {
        return Err(Error::UnknownCode {
            row,
            column,
            code,
            limit,
        });
    }
    Ok(code as usize)
}

impl<R: Read> Iterator for SampleStream<R> {
    type Item = Result<Sample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.reader.read_record(&mut self.record) {
            Ok(true) => {
                let item = self.parse_record();
                if item.is_err() {
                    self.done = true;
                }
                Some(item)
            }
            Ok(false) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e.into()))
            }
        }
    }
}

/// Summary of an [`encode_csv`] run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub rows: u64,
    /// For each categorical attribute (by index), its values in code order.
    pub attribute_values: Vec<(usize, Vec<String>)>,
    pub class_values: Vec<String>,
}

/// Rewrites a string-valued CSV into the coded form [`SampleStream`] reads.
///
/// Categorical columns and the label column are mapped to integer codes.
/// When the schema lists `values` (or `class_values`), that order is used and
/// unlisted strings are an error; otherwise codes follow the sorted distinct
/// values of the column. Numeric columns are copied through unchanged. The
/// header, if any, is preserved. This reads the input twice and is meant as
/// a one-off preprocessing step.
pub fn encode_csv(
    input: impl AsRef<Path>,
    output: &mut impl Write,
    schema: &DatasetSchema,
) -> Result<EncodingReport> {
    let label_col = schema.label_index();
    let columns = schema.column_count();

    let mut dictionaries: Vec<Option<Vec<String>>> = vec![None; columns];
    let mut pending: Vec<(usize, usize, BTreeSet<String>)> = Vec::new();
    for col in 0..columns {
        let (fixed, limit) = match schema.attribute_for_column(col) {
            None => (schema.class_values.clone(), schema.class_count),
            Some(a) => match &schema.attributes[a].kind {
                AttributeKind::Categorical { cardinality, values } => (values.clone(), *cardinality),
                AttributeKind::Numeric { .. } => continue,
            },
        };
        match fixed {
            Some(values) => dictionaries[col] = Some(values),
            None => pending.push((col, limit, BTreeSet::new())),
        }
    }

    let open = || -> Result<csv::Reader<File>> {
        Ok(csv::ReaderBuilder::new()
            .has_headers(schema.has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(input.as_ref())?)
    };

    if !pending.is_empty() {
        let mut reader = open()?;
        for record in reader.records() {
            let record = record?;
            let row = record.position().map_or(0, |p| p.line());
            if record.len() != columns {
                return Err(Error::Arity {
                    row,
                    expected: columns,
                    found: record.len(),
                });
            }
            for (col, limit, seen) in pending.iter_mut() {
                if !seen.contains(&record[*col]) {
                    seen.insert(record[*col].to_string());
                    if seen.len() > *limit {
                        return Err(Error::TooManyValues {
                            column: *col,
                            limit: *limit,
                        });
                    }
                }
            }
        }
        for (col, _, seen) in pending {
            dictionaries[col] = Some(seen.into_iter().collect());
        }
    }

    let lookup: Vec<Option<std::collections::HashMap<&str, usize>>> = dictionaries
        .iter()
        .map(|d| {
            d.as_ref()
                .map(|values| values.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect())
        })
        .collect();

    let mut reader = open()?;
    let mut writer = csv::Writer::from_writer(output);
    if schema.has_header {
        writer.write_record(reader.headers()?)?;
    }
    let mut rows = 0;
    let mut out = csv::StringRecord::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != columns {
            return Err(Error::Arity {
                row,
                expected: columns,
                found: record.len(),
            });
        }
        out.clear();
        for (col, field) in record.iter().enumerate() {
            match &lookup[col] {
                None => out.push_field(field),
                Some(map) => {
                    let code = map.get(field).ok_or_else(|| Error::Field {
                        row,
                        column: col,
                        value: field.to_string(),
                        expected: "a listed categorical value",
                    })?;
                    out.push_field(&code.to_string());
                }
            }
        }
        writer.write_record(&out)?;
        rows += 1;
    }
    writer.flush()?;

    let attribute_values = (0..columns)
        .filter(|&c| c != label_col)
        .filter_map(|c| {
            let a = schema.attribute_for_column(c)?;
            dictionaries[c].clone().map(|v| (a, v))
        })
        .collect();
    let class_values = dictionaries[label_col].clone().unwrap_or_default();
    Ok(EncodingReport {
        rows,
        attribute_values,
        class_values,
    })
}
