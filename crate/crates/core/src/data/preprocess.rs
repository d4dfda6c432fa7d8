//! Cleaning, scaling and outlier removal.

use super::cohort::{Cohort, FeatureValue, Sample};
use super::DataError;
use serde::{Deserialize, Serialize};

/// Per-numerical-feature mean and population standard deviation, in
/// `FeatureSchema::numerical_indices` order. Stored with the trained model so
/// validation and inference reuse training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl ScalerStats {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Remove every sample containing at least one missing value, preserving the
/// order (and exact field values) of survivors.
pub fn listwise_delete(cohort: &Cohort) -> Result<Cohort, DataError> {
    let survivors: Vec<Sample> = cohort
        .samples
        .iter()
        .filter(|s| !s.has_missing())
        .cloned()
        .collect();
    if survivors.is_empty() {
        return Err(DataError::DegenerateCohort(
            "no samples remain after listwise deletion".into(),
        ));
    }
    Ok(Cohort {
        schema: cohort.schema.clone(),
        samples: survivors,
        provenance: "cleaned".into(),
    })
}

fn numeric_at(sample: &Sample, idx: usize) -> f64 {
    match sample.values[idx] {
        Some(FeatureValue::Numerical(v)) => v,
        _ => unreachable!("checked by caller"),
    }
}

/// Map each numerical feature to `(x - mean) / stddev`. With `stats` given
/// (the inference path) the provided statistics are reused; otherwise they
/// are computed from this cohort with the population convention. Columns
/// with zero variance map to 0 and record a stddev of 0.
pub fn standardize(
    cohort: &Cohort,
    stats: Option<&ScalerStats>,
) -> Result<(Cohort, ScalerStats), DataError> {
    if cohort.samples.iter().any(Sample::has_missing) {
        return Err(DataError::Parameter(
            "standardize requires a cohort without missing values".into(),
        ));
    }
    let num_idx = cohort.schema.numerical_indices();
    let stats = match stats {
        Some(s) => {
            if s.len() != num_idx.len() {
                return Err(DataError::Parameter(format!(
                    "scaler stats cover {} features, schema has {} numerical",
                    s.len(),
                    num_idx.len()
                )));
            }
            s.clone()
        }
        None => {
            let n = cohort.len() as f64;
            let mut means = Vec::with_capacity(num_idx.len());
            let mut stddevs = Vec::with_capacity(num_idx.len());
            for &idx in &num_idx {
                let mean = cohort.samples.iter().map(|s| numeric_at(s, idx)).sum::<f64>() / n;
                let var = cohort
                    .samples
                    .iter()
                    .map(|s| (numeric_at(s, idx) - mean).powi(2))
                    .sum::<f64>()
                    / n;
                means.push(mean);
                stddevs.push(var.sqrt());
            }
            ScalerStats { means, stddevs }
        }
    };

    let mut samples = cohort.samples.clone();
    for sample in &mut samples {
        for (pos, &idx) in num_idx.iter().enumerate() {
            let v = numeric_at(sample, idx);
            let z = if stats.stddevs[pos] > 0.0 {
                (v - stats.means[pos]) / stats.stddevs[pos]
            } else {
                0.0
            };
            sample.values[idx] = Some(FeatureValue::Numerical(z));
        }
    }
    Ok((
        Cohort {
            schema: cohort.schema.clone(),
            samples,
            provenance: cohort.provenance.clone(),
        },
        stats,
    ))
}

/// Inverse of [`standardize`] using stored statistics: `x = z * stddev + mean`.
pub fn destandardize(cohort: &Cohort, stats: &ScalerStats) -> Result<Cohort, DataError> {
    let num_idx = cohort.schema.numerical_indices();
    if stats.len() != num_idx.len() {
        return Err(DataError::Parameter(format!(
            "scaler stats cover {} features, schema has {} numerical",
            stats.len(),
            num_idx.len()
        )));
    }
    let mut samples = cohort.samples.clone();
    for sample in &mut samples {
        for (pos, &idx) in num_idx.iter().enumerate() {
            if let Some(FeatureValue::Numerical(z)) = sample.values[idx] {
                let v = z * stats.stddevs[pos] + stats.means[pos];
                sample.values[idx] = Some(FeatureValue::Numerical(v));
            }
        }
    }
    Ok(Cohort {
        schema: cohort.schema.clone(),
        samples,
        provenance: cohort.provenance.clone(),
    })
}

/// Drop samples whose standardized numerical values exceed `z_threshold` in
/// absolute value on any feature. Expects an already standardized cohort.
pub fn remove_outliers(cohort: &Cohort, z_threshold: f64) -> Result<Cohort, DataError> {
    if !(z_threshold > 0.0) {
        return Err(DataError::Parameter(format!(
            "z threshold must be positive, got {z_threshold}"
        )));
    }
    let num_idx = cohort.schema.numerical_indices();
    let survivors: Vec<Sample> = cohort
        .samples
        .iter()
        .filter(|s| {
            num_idx
                .iter()
                .all(|&idx| numeric_at(s, idx).abs() <= z_threshold)
        })
        .cloned()
        .collect();
    if survivors.is_empty() {
        return Err(DataError::DegenerateCohort(
            "no samples remain after outlier removal".into(),
        ));
    }
    Ok(Cohort {
        schema: cohort.schema.clone(),
        samples: survivors,
        provenance: cohort.provenance.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{FeatureDescriptor, FeatureSchema};

    fn numeric_schema() -> FeatureSchema {
        FeatureSchema::new(
            vec![
                FeatureDescriptor::numerical("X", None),
                FeatureDescriptor::binary("B"),
            ],
            "y",
        )
        .unwrap()
    }

    fn numeric_cohort(values: &[f64]) -> Cohort {
        let samples = values
            .iter()
            .map(|&v| {
                Sample::complete(
                    vec![FeatureValue::Numerical(v), FeatureValue::Binary(0)],
                    0,
                )
            })
            .collect();
        Cohort::new(numeric_schema(), samples, "raw").unwrap()
    }

    fn numeric_values(cohort: &Cohort) -> Vec<f64> {
        cohort.samples.iter().map(|s| numeric_at(s, 0)).collect()
    }

    #[test]
    fn standardize_population_convention() {
        // Hand computation: mean 2, population stddev sqrt(2/3) = 0.8165.
        let cohort = numeric_cohort(&[1.0, 2.0, 3.0]);
        let (z, stats) = standardize(&cohort, None).unwrap();
        assert!((stats.means[0] - 2.0).abs() < 1e-15);
        assert!((stats.stddevs[0] - 0.816496580927726).abs() < 1e-12);
        let zs = numeric_values(&z);
        assert!((zs[0] + 1.224744871391589).abs() < 1e-12);
        assert!(zs[1].abs() < 1e-15);
        assert!((zs[2] - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn standardize_constant_column_maps_to_zero() {
        let cohort = numeric_cohort(&[4.0, 4.0, 4.0]);
        let (z, stats) = standardize(&cohort, None).unwrap();
        assert_eq!(stats.stddevs[0], 0.0);
        assert!(numeric_values(&z).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_reuses_provided_stats() {
        let train = numeric_cohort(&[1.0, 2.0, 3.0]);
        let (_, stats) = standardize(&train, None).unwrap();
        let val = numeric_cohort(&[2.0]);
        let (z, echoed) = standardize(&val, Some(&stats)).unwrap();
        assert_eq!(stats, echoed);
        assert!(numeric_values(&z)[0].abs() < 1e-15);
    }

    #[test]
    fn standardize_then_destandardize_round_trips() {
        let cohort = numeric_cohort(&[10.5, -3.25, 88.0, 12.125]);
        let (z, stats) = standardize(&cohort, None).unwrap();
        let back = destandardize(&z, &stats).unwrap();
        for (orig, rec) in numeric_values(&cohort).iter().zip(numeric_values(&back)) {
            assert!((orig - rec).abs() < 1e-9);
        }
    }

    #[test]
    fn listwise_delete_counts_and_identity() {
        let mut cohort = numeric_cohort(&[1.0; 10]);
        for i in 0..3 {
            cohort.samples[i].values[0] = None;
        }
        let cleaned = listwise_delete(&cohort).unwrap();
        assert_eq!(cleaned.len(), 7);
        // Survivors keep bit-identical field values.
        assert_eq!(&cleaned.samples[..], &cohort.samples[3..]);

        let intact = numeric_cohort(&[1.0, 2.0]);
        let cleaned = listwise_delete(&intact).unwrap();
        assert_eq!(cleaned.samples, intact.samples);
    }

    #[test]
    fn listwise_delete_all_missing_is_degenerate() {
        let mut cohort = numeric_cohort(&[1.0, 2.0]);
        for s in &mut cohort.samples {
            s.values[1] = None;
        }
        assert!(matches!(
            listwise_delete(&cohort).unwrap_err(),
            DataError::DegenerateCohort(_)
        ));
    }

    #[test]
    fn outlier_removal_drops_extreme_z() {
        let mut z_values = vec![0.1, -0.5, 1.2, -2.9];
        z_values.push(10.0);
        let cohort = numeric_cohort(&z_values);
        let kept = remove_outliers(&cohort, 3.0).unwrap();
        assert_eq!(kept.len(), 4);
        assert!(numeric_values(&kept).iter().all(|v| v.abs() <= 3.0));

        let identity = remove_outliers(&cohort, f64::INFINITY).unwrap();
        assert_eq!(identity.samples, cohort.samples);

        let mild = numeric_cohort(&[0.0, 1.0, -1.0]);
        assert_eq!(remove_outliers(&mild, 3.0).unwrap().samples, mild.samples);
    }
}
