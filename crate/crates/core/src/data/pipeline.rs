//! Preprocessing pipeline: clean -> standardize -> outlier removal ->
//! SMOTE -> split, shared by the CLI and the test suites.

use super::cohort::Cohort;
use super::preprocess::{listwise_delete, remove_outliers, standardize, ScalerStats};
use super::smote::smote;
use super::split::stratified_split;
use super::DataError;
use crate::numerics::RandomSource;
use serde::{Deserialize, Serialize};

/// Whether SMOTE runs on the full cohort before splitting (reproducing the
/// published cohort arithmetic, at the cost of synthetic validation rows
/// interpolated from training data) or on the training part only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoteMode {
    FullCohort,
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub smote_mode: SmoteMode,
    pub smote_k: usize,
    pub z_threshold: f64,
    pub val_fraction: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            smote_mode: SmoteMode::FullCohort,
            smote_k: 5,
            z_threshold: 3.0,
            val_fraction: 0.2,
        }
    }
}

/// Standardized training and validation cohorts plus the scaler statistics
/// needed to map new raw data into the same space.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Cohort,
    pub val: Cohort,
    pub stats: ScalerStats,
}

pub fn prepare(
    cohort: &Cohort,
    config: &PrepConfig,
    rng: &mut RandomSource,
) -> Result<Prepared, DataError> {
    let cleaned = listwise_delete(cohort)?;
    let (standardized, stats) = standardize(&cleaned, None)?;
    let inliers = remove_outliers(&standardized, config.z_threshold)?;
    let (train, val) = match config.smote_mode {
        SmoteMode::FullCohort => {
            let balanced = smote(&inliers, config.smote_k, rng)?;
            stratified_split(&balanced, config.val_fraction, rng)?
        }
        SmoteMode::TrainOnly => {
            let (train_raw, val) = stratified_split(&inliers, config.val_fraction, rng)?;
            (smote(&train_raw, config.smote_k, rng)?, val)
        }
    };
    Ok(Prepared { train, val, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::default_schema;
    use crate::data::synthetic::{generate_synthetic_cohort, PlantedSignal};

    #[test]
    fn pipeline_is_deterministic() {
        let schema = default_schema();
        let mut rng = RandomSource::new(3);
        let cohort =
            generate_synthetic_cohort(&schema, 300, &PlantedSignal::default_xor(), &mut rng)
                .unwrap();
        let run = |seed| {
            let mut rng = RandomSource::new(seed);
            prepare(&cohort, &PrepConfig::default(), &mut rng).unwrap()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a.train.samples, b.train.samples);
        assert_eq!(a.val.samples, b.val.samples);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn full_cohort_mode_balances_both_parts_together() {
        let schema = default_schema();
        let mut rng = RandomSource::new(11);
        let cohort =
            generate_synthetic_cohort(&schema, 400, &PlantedSignal::default_xor(), &mut rng)
                .unwrap();
        let prepared = prepare(&cohort, &PrepConfig::default(), &mut rng).unwrap();
        let (tn, tp) = prepared.train.class_counts();
        let (vn, vp) = prepared.val.class_counts();
        assert_eq!(tn + vn, tp + vp);
        assert!((tn as i64 - tp as i64).abs() <= 1);
        assert!((vn as i64 - vp as i64).abs() <= 1);
    }

    #[test]
    fn train_only_mode_leaves_validation_untouched() {
        let schema = default_schema();
        let mut rng = RandomSource::new(19);
        let cohort =
            generate_synthetic_cohort(&schema, 400, &PlantedSignal::default_xor(), &mut rng)
                .unwrap();
        let config = PrepConfig {
            smote_mode: SmoteMode::TrainOnly,
            ..PrepConfig::default()
        };
        let prepared = prepare(&cohort, &config, &mut rng).unwrap();
        let (tn, tp) = prepared.train.class_counts();
        assert_eq!(tn, tp);
        assert!(prepared.val.samples.iter().all(|s| !s.synthetic));
    }
}
