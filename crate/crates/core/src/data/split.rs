//! Seeded stratified train/validation splitting.

use super::cohort::Cohort;
use super::DataError;
use crate::numerics::RandomSource;

/// Split a cohort so each class lands in the validation part at the
/// requested fraction (rounded to the nearest sample). Membership is a
/// seeded shuffle per class; both parts keep cohort sample order.
pub fn stratified_split(
    cohort: &Cohort,
    val_fraction: f64,
    rng: &mut RandomSource,
) -> Result<(Cohort, Cohort), DataError> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(DataError::Parameter(format!(
            "validation fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    let mut val_indices = Vec::new();
    for class in [0u8, 1u8] {
        let mut class_indices: Vec<usize> = cohort
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect();
        let take = (class_indices.len() as f64 * val_fraction).round() as usize;
        rng.shuffle(&mut class_indices);
        val_indices.extend(class_indices.into_iter().take(take));
    }
    val_indices.sort_unstable();

    let mut in_val = vec![false; cohort.len()];
    for &i in &val_indices {
        in_val[i] = true;
    }
    let train: Vec<_> = cohort
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| !in_val[*i])
        .map(|(_, s)| s.clone())
        .collect();
    let val: Vec<_> = val_indices
        .iter()
        .map(|&i| cohort.samples[i].clone())
        .collect();
    if train.is_empty() || val.is_empty() {
        return Err(DataError::Parameter(format!(
            "validation fraction {val_fraction} produces an empty part \
             (cohort of {})",
            cohort.len()
        )));
    }
    let make = |samples| Cohort {
        schema: cohort.schema.clone(),
        samples,
        provenance: cohort.provenance.clone(),
    };
    Ok((make(train), make(val)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cohort::{FeatureValue, Sample};
    use crate::data::schema::{FeatureDescriptor, FeatureSchema};

    fn cohort_with_counts(neg: usize, pos: usize) -> Cohort {
        let schema = FeatureSchema::new(
            vec![FeatureDescriptor::numerical("X", None)],
            "y",
        )
        .unwrap();
        let mut samples = Vec::new();
        for i in 0..neg {
            samples.push(Sample::complete(vec![FeatureValue::Numerical(i as f64)], 0));
        }
        for i in 0..pos {
            samples.push(Sample::complete(
                vec![FeatureValue::Numerical(1000.0 + i as f64)],
                1,
            ));
        }
        Cohort::new(schema, samples, "cleaned").unwrap()
    }

    #[test]
    fn exact_stratification_on_balanced_cohort() {
        let cohort = cohort_with_counts(50, 50);
        let mut rng = RandomSource::new(4);
        let (train, val) = stratified_split(&cohort, 0.2, &mut rng).unwrap();
        assert_eq!(val.class_counts(), (10, 10));
        assert_eq!(train.class_counts(), (40, 40));
    }

    #[test]
    fn deterministic_membership_and_partition() {
        let cohort = cohort_with_counts(30, 20);
        let split = |seed| {
            let mut rng = RandomSource::new(seed);
            stratified_split(&cohort, 0.25, &mut rng).unwrap()
        };
        let (t1, v1) = split(99);
        let (t2, v2) = split(99);
        assert_eq!(t1.samples, t2.samples);
        assert_eq!(v1.samples, v2.samples);

        // Disjoint with union equal to the cohort.
        assert_eq!(t1.len() + v1.len(), cohort.len());
        let mut all: Vec<f64> = t1
            .samples
            .iter()
            .chain(&v1.samples)
            .map(|s| match s.values[0] {
                Some(FeatureValue::Numerical(x)) => x,
                _ => panic!(),
            })
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected: Vec<f64> = (0..30)
            .map(|i| i as f64)
            .chain((0..20).map(|i| 1000.0 + i as f64))
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all, expected);
    }

    #[test]
    fn class_proportions_within_one_sample() {
        let cohort = cohort_with_counts(61, 39);
        let mut rng = RandomSource::new(17);
        let (_, val) = stratified_split(&cohort, 0.3, &mut rng).unwrap();
        let (vneg, vpos) = val.class_counts();
        assert!((vneg as f64 - 61.0 * 0.3).abs() <= 1.0);
        assert!((vpos as f64 - 39.0 * 0.3).abs() <= 1.0);
    }

    #[test]
    fn degenerate_fractions_error() {
        let cohort = cohort_with_counts(5, 5);
        let mut rng = RandomSource::new(0);
        assert!(stratified_split(&cohort, 0.999, &mut rng).is_err());
        assert!(stratified_split(&cohort, 0.0, &mut rng).is_err());
        assert!(stratified_split(&cohort, 1.0, &mut rng).is_err());
    }
}
