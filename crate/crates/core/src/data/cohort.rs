//! Samples, cohorts and the CSV wire format.
//!
//! CSV format: UTF-8, comma-separated with a header row naming every schema
//! feature in order followed by the label column. Quoted fields are allowed,
//! an empty cell is the missing marker, and label cells are `0`/`1`.

use super::schema::{FeatureKind, FeatureSchema};
use super::DataError;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One typed cell value, matching its feature's declared kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureValue {
    Numerical(f64),
    /// Index into the feature's declared category list.
    Categorical(usize),
    Binary(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// One slot per schema feature, in schema order; `None` marks missing.
    pub values: Vec<Option<FeatureValue>>,
    /// 0 = no recurrence, 1 = recurrence.
    pub label: u8,
    /// True for SMOTE-generated samples.
    #[serde(default)]
    pub synthetic: bool,
}

impl Sample {
    pub fn complete(values: Vec<FeatureValue>, label: u8) -> Self {
        Sample {
            values: values.into_iter().map(Some).collect(),
            label,
            synthetic: false,
        }
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(Option::is_none)
    }

    fn conforms(&self, schema: &FeatureSchema) -> Result<(), DataError> {
        if self.values.len() != schema.len() {
            return Err(DataError::Schema(format!(
                "sample has {} values, schema declares {} features",
                self.values.len(),
                schema.len()
            )));
        }
        if self.label > 1 {
            return Err(DataError::Schema(format!("label {} is not 0/1", self.label)));
        }
        for (value, feature) in self.values.iter().zip(&schema.features) {
            let Some(value) = value else { continue };
            let ok = match (value, feature.kind) {
                (FeatureValue::Numerical(v), FeatureKind::Numerical) => v.is_finite(),
                (FeatureValue::Categorical(i), FeatureKind::Categorical) => {
                    *i < feature.categories.len()
                }
                (FeatureValue::Binary(b), FeatureKind::Binary) => *b <= 1,
                _ => false,
            };
            if !ok {
                return Err(DataError::Schema(format!(
                    "value {value:?} does not conform to feature '{}' ({:?})",
                    feature.name, feature.kind
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub schema: FeatureSchema,
    pub samples: Vec<Sample>,
    /// Free-text provenance note: raw / cleaned / oversampled / synthetic.
    pub provenance: String,
}

impl Cohort {
    pub fn new(
        schema: FeatureSchema,
        samples: Vec<Sample>,
        provenance: &str,
    ) -> Result<Self, DataError> {
        for s in &samples {
            s.conforms(&schema)?;
        }
        Ok(Cohort {
            schema,
            samples,
            provenance: provenance.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// (negatives, positives).
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.label == 1).count();
        (self.samples.len() - pos, pos)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
        let mut header: Vec<&str> = self.schema.feature_names();
        header.push(&self.schema.label_name);
        writer
            .write_record(&header)
            .map_err(|e| DataError::Io(e.to_string()))?;
        for sample in &self.samples {
            let mut record: Vec<String> = Vec::with_capacity(self.schema.len() + 1);
            for (value, feature) in sample.values.iter().zip(&self.schema.features) {
                record.push(match value {
                    None => String::new(),
                    Some(FeatureValue::Numerical(v)) => format!("{v}"),
                    Some(FeatureValue::Categorical(i)) => feature.categories[*i].clone(),
                    Some(FeatureValue::Binary(b)) => format!("{b}"),
                });
            }
            record.push(format!("{}", sample.label));
            writer
                .write_record(&record)
                .map_err(|e| DataError::Io(e.to_string()))?;
        }
        writer.flush().map_err(|e| DataError::Io(e.to_string()))
    }
}

/// Parse a cohort CSV against a schema. Header names must match the schema's
/// feature order plus the label column exactly.
pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<Cohort, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| DataError::Format(format!("missing or unreadable header: {e}")))?
        .clone();
    let mut expected: Vec<&str> = schema.feature_names();
    expected.push(&schema.label_name);
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(DataError::HeaderMismatch {
            expected: expected.join(","),
            found: found.join(","),
        });
    }

    let mut samples = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1; // 1-based data row for error reporting
        let record = record.map_err(|e| DataError::Format(format!("row {row}: {e}")))?;
        if record.len() != expected.len() {
            return Err(DataError::Format(format!(
                "row {row}: expected {} fields, found {}",
                expected.len(),
                record.len()
            )));
        }
        let mut values = Vec::with_capacity(schema.len());
        for (col, feature) in schema.features.iter().enumerate() {
            let cell = record.get(col).unwrap_or("");
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            let value = match feature.kind {
                FeatureKind::Numerical => {
                    let v: f64 = cell.parse().map_err(|_| DataError::Parse {
                        row,
                        column: feature.name.clone(),
                        message: format!("'{cell}' is not numeric"),
                    })?;
                    if !v.is_finite() {
                        return Err(DataError::Parse {
                            row,
                            column: feature.name.clone(),
                            message: format!("'{cell}' is not finite"),
                        });
                    }
                    FeatureValue::Numerical(v)
                }
                FeatureKind::Categorical => {
                    let i = feature
                        .categories
                        .iter()
                        .position(|c| c == cell)
                        .ok_or_else(|| DataError::UnknownCategory {
                            row,
                            column: feature.name.clone(),
                            label: cell.to_string(),
                        })?;
                    FeatureValue::Categorical(i)
                }
                FeatureKind::Binary => match cell {
                    "0" => FeatureValue::Binary(0),
                    "1" => FeatureValue::Binary(1),
                    _ => {
                        return Err(DataError::Parse {
                            row,
                            column: feature.name.clone(),
                            message: format!("'{cell}' is not 0/1"),
                        })
                    }
                },
            };
            values.push(Some(value));
        }
        let label_cell = record.get(schema.len()).unwrap_or("");
        let label = match label_cell {
            "0" => 0,
            "1" => 1,
            _ => {
                return Err(DataError::Parse {
                    row,
                    column: schema.label_name.clone(),
                    message: format!("label '{label_cell}' is not 0/1"),
                })
            }
        };
        samples.push(Sample {
            values,
            label,
            synthetic: false,
        });
    }

    Cohort::new(schema.clone(), samples, "raw")
}
