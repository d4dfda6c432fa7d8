//! Feature schema: the ordered declaration of variables that drives CSV
//! parsing, embedding-table construction and every downstream column order.

use super::DataError;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numerical,
    Categorical,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    /// Ordered category labels; non-empty only for categorical features.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl FeatureDescriptor {
    pub fn numerical(name: &str, unit: Option<&str>) -> Self {
        FeatureDescriptor {
            name: name.to_string(),
            kind: FeatureKind::Numerical,
            categories: Vec::new(),
            unit: unit.map(str::to_string),
        }
    }

    pub fn categorical(name: &str, categories: &[&str]) -> Self {
        FeatureDescriptor {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            categories: categories.iter().map(|c| c.to_string()).collect(),
            unit: None,
        }
    }

    pub fn binary(name: &str) -> Self {
        FeatureDescriptor {
            name: name.to_string(),
            kind: FeatureKind::Binary,
            categories: Vec::new(),
            unit: None,
        }
    }

    /// Number of distinct values an embedding table must cover.
    pub fn cardinality(&self) -> usize {
        match self.kind {
            FeatureKind::Numerical => 0,
            FeatureKind::Categorical => self.categories.len(),
            FeatureKind::Binary => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureDescriptor>,
    pub label_name: String,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDescriptor>, label_name: &str) -> Result<Self, DataError> {
        let schema = FeatureSchema {
            features,
            label_name: label_name.to_string(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(DataError::Schema(format!(
                    "duplicate feature name '{}'",
                    f.name
                )));
            }
            if f.kind == FeatureKind::Categorical && f.categories.len() < 2 {
                return Err(DataError::Schema(format!(
                    "categorical feature '{}' declares fewer than 2 categories",
                    f.name
                )));
            }
            if f.kind != FeatureKind::Categorical && !f.categories.is_empty() {
                return Err(DataError::Schema(format!(
                    "feature '{}' of kind {:?} must not declare categories",
                    f.name, f.kind
                )));
            }
        }
        if seen.contains(self.label_name.as_str()) {
            return Err(DataError::Schema(format!(
                "label name '{}' collides with a feature",
                self.label_name
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn count_kind(&self, kind: FeatureKind) -> usize {
        self.features.iter().filter(|f| f.kind == kind).count()
    }

    /// Indices of numerical features in schema order.
    pub fn numerical_indices(&self) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FeatureKind::Numerical)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_json_file(&self, path: &Path) -> Result<(), DataError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| DataError::Format(format!("schema serialization failed: {e}")))?;
        std::fs::write(path, text).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
        let schema: FeatureSchema = serde_json::from_str(&text)
            .map_err(|e| DataError::Format(format!("{}: {e}", path.display())))?;
        schema.validate()?;
        Ok(schema)
    }
}

/// The default 23-variable cohort schema: 5 numerical, 6 categorical and
/// 12 binary features, plus a binary recurrence label. Variable names
/// beyond the clinically documented ones are generic comorbidity and
/// procedure flags.
pub fn default_schema() -> FeatureSchema {
    use FeatureDescriptor as F;
    FeatureSchema::new(
        vec![
            F::numerical("Age", Some("years")),
            F::categorical("SmokingStatus", &["Never", "Previous", "Current"]),
            F::binary("Gender"),
            F::numerical("TotalCigarettesSmoked", None),
            F::categorical("EQ5DBand", &["Low", "Medium", "High"]),
            F::categorical("TumourGrade", &["G1", "G2", "G3"]),
            F::categorical("TumourStage", &["Ta", "T1", "Tis"]),
            F::categorical("TumourNumberCategory", &["Single", "TwoToSeven", "EightPlus"]),
            F::numerical("TumourDiameter", Some("cm")),
            F::binary("PTA"),
            F::categorical(
                "IntravesicalTreatment",
                &["None", "BCG Induction Only", "BCG Induction and Maintenance"],
            ),
            F::numerical("SurgicalTime", Some("minutes")),
            F::numerical("TotalDaysInHospital", Some("days")),
            F::binary("Diabetes"),
            F::binary("Hypertension"),
            F::binary("IschaemicHeartDisease"),
            F::binary("ChronicKidneyDisease"),
            F::binary("COPD"),
            F::binary("PriorPelvicRadiotherapy"),
            F::binary("AnticoagulantUse"),
            F::binary("PerioperativeComplication"),
            F::binary("ReTURPerformed"),
            F::binary("PostOpChemoInstillation"),
        ],
        "Recurrence",
    )
    .expect("default schema is valid")
}
