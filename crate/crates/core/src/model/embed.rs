//! Per-feature embedders: lookup tables for categorical and binary features,
//! learned affine rays for numerical ones. All features embed into the same
//! dimension so the shared attention block can operate uniformly.

use super::ModelError;
use crate::data::{FeatureKind, FeatureSchema, FeatureValue, Sample};
use crate::numerics::{Matrix, Vector};
use serde::{Deserialize, Serialize};

/// Trainable embedding matrix; row `i` is the vector for category `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub weights: Matrix,
}

impl EmbeddingTable {
    pub fn cardinality(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn lookup(&self, index: usize) -> Result<Vector, ModelError> {
        if index >= self.cardinality() {
            return Err(ModelError::Lookup {
                index,
                cardinality: self.cardinality(),
            });
        }
        Vector::from_vec(self.weights.row(index).to_vec()).map_err(ModelError::from)
    }
}

/// Embedder for one numerical feature: value `v` maps to `v * scale + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericEmbedder {
    pub scale: Vector,
    pub offset: Vector,
}

impl NumericEmbedder {
    pub fn embed(&self, value: f64) -> Vector {
        let mut out = self.scale.map(|s| s * value);
        out.axpy(1.0, &self.offset).expect("scale/offset same dim");
        out
    }
}

/// One embedder per schema feature, in schema order. Binary features use a
/// 2-row table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureEmbedder {
    Table(EmbeddingTable),
    Affine(NumericEmbedder),
}

/// A sample reduced to model inputs: a table row index per categorical or
/// binary feature, a standardized value per numerical feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncodedValue {
    Row(usize),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub features: Vec<EncodedValue>,
    pub label: f64,
}

/// Encode a complete sample against its schema. Numerical values are
/// expected to be standardized already.
pub fn encode_sample(sample: &Sample, schema: &FeatureSchema) -> Result<EncodedSample, ModelError> {
    let mut features = Vec::with_capacity(schema.len());
    for (idx, (value, feature)) in sample.values.iter().zip(&schema.features).enumerate() {
        let value = value.as_ref().ok_or(ModelError::MissingValue {
            feature_index: idx,
        })?;
        let encoded = match (value, feature.kind) {
            (FeatureValue::Numerical(v), FeatureKind::Numerical) => EncodedValue::Value(*v),
            (FeatureValue::Categorical(i), FeatureKind::Categorical) => EncodedValue::Row(*i),
            (FeatureValue::Binary(b), FeatureKind::Binary) => EncodedValue::Row(*b as usize),
            _ => {
                return Err(ModelError::Shape(format!(
                    "value kind mismatch at feature '{}'",
                    feature.name
                )))
            }
        };
        features.push(encoded);
    }
    Ok(EncodedSample {
        features,
        label: f64::from(sample.label),
    })
}

pub fn encode_cohort(
    samples: &[Sample],
    schema: &FeatureSchema,
) -> Result<Vec<EncodedSample>, ModelError> {
    samples.iter().map(|s| encode_sample(s, schema)).collect()
}

/// Embed every feature of an encoded sample; output order equals schema
/// order.
pub fn embed_sample(
    embedders: &[FeatureEmbedder],
    sample: &EncodedSample,
) -> Result<Vec<Vector>, ModelError> {
    if embedders.len() != sample.features.len() {
        return Err(ModelError::Shape(format!(
            "sample has {} features, model has {} embedders",
            sample.features.len(),
            embedders.len()
        )));
    }
    embedders
        .iter()
        .zip(&sample.features)
        .map(|(embedder, value)| match (embedder, value) {
            (FeatureEmbedder::Table(t), EncodedValue::Row(r)) => t.lookup(*r),
            (FeatureEmbedder::Affine(e), EncodedValue::Value(v)) => Ok(e.embed(*v)),
            _ => Err(ModelError::Shape(
                "encoded value kind does not match embedder kind".into(),
            )),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[Vec<f64>]) -> FeatureEmbedder {
        FeatureEmbedder::Table(EmbeddingTable {
            weights: Matrix::from_rows(rows).unwrap(),
        })
    }

    #[test]
    fn numeric_zero_maps_to_offset_exactly() {
        let e = NumericEmbedder {
            scale: Vector::from_vec(vec![2.0, -1.0]).unwrap(),
            offset: Vector::from_vec(vec![0.25, 0.75]).unwrap(),
        };
        assert_eq!(e.embed(0.0).as_slice(), &[0.25, 0.75]);
        assert_eq!(e.embed(1.0).as_slice(), &[2.25, -0.25]);
    }

    #[test]
    fn binary_flip_switches_table_rows() {
        let embedders = vec![table(&[vec![1.0, 2.0], vec![3.0, 4.0]])];
        let zero = EncodedSample {
            features: vec![EncodedValue::Row(0)],
            label: 0.0,
        };
        let one = EncodedSample {
            features: vec![EncodedValue::Row(1)],
            label: 0.0,
        };
        assert_eq!(embed_sample(&embedders, &zero).unwrap()[0].as_slice(), &[1.0, 2.0]);
        assert_eq!(embed_sample(&embedders, &one).unwrap()[0].as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn out_of_range_lookup_errors() {
        let t = EmbeddingTable {
            weights: Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        };
        assert!(matches!(
            t.lookup(2).unwrap_err(),
            ModelError::Lookup { index: 2, cardinality: 2 }
        ));
    }

    #[test]
    fn encode_routes_by_kind_and_rejects_missing() {
        use crate::data::{default_schema, FeatureValue};
        let schema = default_schema();
        let mut values: Vec<FeatureValue> = Vec::new();
        for f in &schema.features {
            values.push(match f.kind {
                FeatureKind::Numerical => FeatureValue::Numerical(0.5),
                FeatureKind::Categorical => FeatureValue::Categorical(0),
                FeatureKind::Binary => FeatureValue::Binary(1),
            });
        }
        let sample = Sample::complete(values, 1);
        let encoded = encode_sample(&sample, &schema).unwrap();
        assert_eq!(encoded.features.len(), 23);
        assert_eq!(encoded.label, 1.0);
        assert!(matches!(encoded.features[0], EncodedValue::Value(v) if v == 0.5));
        assert!(matches!(encoded.features[1], EncodedValue::Row(0)));

        let mut incomplete = sample;
        incomplete.values[3] = None;
        assert!(matches!(
            encode_sample(&incomplete, &schema).unwrap_err(),
            ModelError::MissingValue { feature_index: 3 }
        ));
    }
}
