//! Synthetic cohort generation with planted signal.
//!
//! Stands in for the private clinical cohort: feature values are drawn from
//! per-kind base distributions and labels from a logistic model over a
//! declared subset of features, optionally including one interaction pair.
//! The planted feature set is the ground truth that recovery tests and the
//! gen-data sidecar report.

use super::cohort::{Cohort, FeatureValue, Sample};
use super::schema::{FeatureKind, FeatureSchema};
use super::DataError;
use crate::numerics::{sigmoid, RandomSource};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    pub feature: String,
    pub weight: f64,
}

/// Interaction between two features: contributes `weight` when exactly one
/// of the pair's signed values is positive, `-weight` otherwise (an XOR on
/// sign for binary features).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub first: String,
    pub second: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub effects: Vec<PlantedEffect>,
    pub interaction: Option<Interaction>,
    pub bias: f64,
    pub noise_stddev: f64,
}

impl PlantedSignal {
    /// No signal at all: labels are independent coin flips.
    pub fn null() -> Self {
        PlantedSignal {
            effects: Vec::new(),
            interaction: None,
            bias: 0.0,
            noise_stddev: 0.0,
        }
    }

    /// Default planted signal for the standard schema: a linear effect on
    /// surgical time plus an XOR interaction between two comorbidity flags.
    /// Three informative features among 23.
    pub fn default_xor() -> Self {
        PlantedSignal {
            effects: vec![PlantedEffect {
                feature: "SurgicalTime".into(),
                weight: 2.5,
            }],
            interaction: Some(Interaction {
                first: "Diabetes".into(),
                second: "Hypertension".into(),
                weight: 4.0,
            }),
            bias: 0.0,
            noise_stddev: 0.25,
        }
    }

    /// XOR interaction as the sole signal; no linear effects.
    pub fn pure_xor() -> Self {
        PlantedSignal {
            effects: Vec::new(),
            interaction: Some(Interaction {
                first: "Diabetes".into(),
                second: "Hypertension".into(),
                weight: 4.0,
            }),
            bias: 0.0,
            noise_stddev: 0.25,
        }
    }

    /// Names of all informative features (effects plus interaction pair).
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.effects.iter().map(|e| e.feature.clone()).collect();
        if let Some(inter) = &self.interaction {
            for name in [&inter.first, &inter.second] {
                if !names.contains(name) {
                    names.push(name.clone());
                }
            }
        }
        names
    }

    pub fn validate(&self, schema: &FeatureSchema) -> Result<(), DataError> {
        for name in self.feature_names() {
            if schema.index_of(&name).is_none() {
                return Err(DataError::Schema(format!(
                    "planted feature '{name}' is not in the schema"
                )));
            }
        }
        Ok(())
    }
}

/// Raw-value profile (mean, stddev) for a numerical feature. The label model
/// operates on the standardized latent, so these only set the printed scale.
fn raw_profile(name: &str) -> (f64, f64) {
    match name {
        "Age" => (68.0, 9.0),
        "TotalCigarettesSmoked" => (30_000.0, 12_000.0),
        "TumourDiameter" => (2.8, 1.1),
        "SurgicalTime" => (45.0, 12.0),
        "TotalDaysInHospital" => (4.0, 1.5),
        _ => (0.0, 1.0),
    }
}

/// Signed value in [-1, 1] used by the label model: the standardized latent
/// for numericals, +-1 for binaries, and a centered rank for categoricals.
fn signed_value(value: &FeatureValue, latent: f64, cardinality: usize) -> f64 {
    match value {
        FeatureValue::Numerical(_) => latent,
        FeatureValue::Binary(b) => 2.0 * f64::from(*b) - 1.0,
        FeatureValue::Categorical(i) => {
            if cardinality < 2 {
                0.0
            } else {
                2.0 * (*i as f64) / (cardinality as f64 - 1.0) - 1.0
            }
        }
    }
}

pub const MIN_SYNTHETIC_COHORT: usize = 50;

pub fn generate_synthetic_cohort(
    schema: &FeatureSchema,
    n: usize,
    planted: &PlantedSignal,
    rng: &mut RandomSource,
) -> Result<Cohort, DataError> {
    if n < MIN_SYNTHETIC_COHORT {
        return Err(DataError::Parameter(format!(
            "synthetic cohort size {n} is below the minimum {MIN_SYNTHETIC_COHORT}"
        )));
    }
    planted.validate(schema)?;

    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let mut values = Vec::with_capacity(schema.len());
        let mut signed = Vec::with_capacity(schema.len());
        for feature in &schema.features {
            let (value, latent) = match feature.kind {
                FeatureKind::Numerical => {
                    let latent = rng.standard_normal();
                    let (mean, stddev) = raw_profile(&feature.name);
                    (FeatureValue::Numerical(mean + stddev * latent), latent)
                }
                FeatureKind::Categorical => {
                    (FeatureValue::Categorical(rng.below(feature.categories.len())), 0.0)
                }
                FeatureKind::Binary => (FeatureValue::Binary(rng.below(2) as u8), 0.0),
            };
            signed.push(signed_value(&value, latent, feature.cardinality()));
            values.push(Some(value));
        }

        let mut score = planted.bias;
        for effect in &planted.effects {
            let idx = schema.index_of(&effect.feature).unwrap();
            score += effect.weight * signed[idx];
        }
        if let Some(inter) = &planted.interaction {
            let a = signed[schema.index_of(&inter.first).unwrap()];
            let b = signed[schema.index_of(&inter.second).unwrap()];
            let xor = if (a > 0.0) != (b > 0.0) { 1.0 } else { -1.0 };
            score += inter.weight * xor;
        }
        score += planted.noise_stddev * rng.standard_normal();

        let label = u8::from(rng.next_f64() < sigmoid(score));
        samples.push(Sample {
            values,
            label,
            synthetic: false,
        });
    }

    Cohort::new(schema.clone(), samples, "synthetic")
}
