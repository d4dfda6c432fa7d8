//! Synthetic minority oversampling for mixed-type tables.
//!
//! Numerical coordinates of a synthetic sample are interpolated between a
//! minority base sample and one of its k nearest minority neighbors;
//! categorical and binary coordinates are set by majority vote among those k
//! neighbors with ties broken by the base sample's value (the SMOTE-NC
//! convention). Neighbor distance is Euclidean over numerical features plus
//! a contribution of 1 per differing categorical or binary value.

use super::cohort::{Cohort, FeatureValue, Sample};
use super::schema::FeatureKind;
use super::DataError;
use crate::numerics::RandomSource;

fn distance(a: &Sample, b: &Sample, kinds: &[FeatureKind]) -> f64 {
    let mut acc = 0.0;
    for ((va, vb), kind) in a.values.iter().zip(&b.values).zip(kinds) {
        match (va, vb, kind) {
            (
                Some(FeatureValue::Numerical(x)),
                Some(FeatureValue::Numerical(y)),
                FeatureKind::Numerical,
            ) => acc += (x - y) * (x - y),
            (Some(x), Some(y), _) => {
                if x != y {
                    acc += 1.0;
                }
            }
            _ => unreachable!("smote requires complete samples"),
        }
    }
    acc.sqrt()
}

/// Indices (into `minority`) of the k nearest neighbors of `minority[base]`,
/// excluding the base itself. Distance ties resolve by index order.
fn k_nearest(minority: &[&Sample], base: usize, k: usize, kinds: &[FeatureKind]) -> Vec<usize> {
    let mut dists: Vec<(f64, usize)> = minority
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != base)
        .map(|(i, s)| (distance(minority[base], s, kinds), i))
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    dists.into_iter().take(k).map(|(_, i)| i).collect()
}

fn vote(
    neighbors: &[&Sample],
    base_value: &FeatureValue,
    feature_idx: usize,
    cardinality: usize,
) -> FeatureValue {
    let mut counts = vec![0usize; cardinality];
    for n in neighbors {
        let idx = match n.values[feature_idx].as_ref().unwrap() {
            FeatureValue::Categorical(i) => *i,
            FeatureValue::Binary(b) => *b as usize,
            FeatureValue::Numerical(_) => unreachable!(),
        };
        counts[idx] += 1;
    }
    let top = *counts.iter().max().unwrap();
    let base_idx = match base_value {
        FeatureValue::Categorical(i) => *i,
        FeatureValue::Binary(b) => *b as usize,
        FeatureValue::Numerical(_) => unreachable!(),
    };
    let winner = if counts[base_idx] == top {
        base_idx
    } else {
        counts.iter().position(|&c| c == top).unwrap()
    };
    match base_value {
        FeatureValue::Categorical(_) => FeatureValue::Categorical(winner),
        FeatureValue::Binary(_) => FeatureValue::Binary(winner as u8),
        FeatureValue::Numerical(_) => unreachable!(),
    }
}

/// Append synthetic minority samples until class counts are equal. A cohort
/// that is already balanced is returned unchanged.
pub fn smote(cohort: &Cohort, k_neighbors: usize, rng: &mut RandomSource) -> Result<Cohort, DataError> {
    if cohort.samples.iter().any(Sample::has_missing) {
        return Err(DataError::Parameter(
            "smote requires a cohort without missing values".into(),
        ));
    }
    let (neg, pos) = cohort.class_counts();
    if neg == 0 || pos == 0 {
        return Err(DataError::SingleClass);
    }
    if neg == pos {
        let mut out = cohort.clone();
        out.provenance = "oversampled".into();
        return Ok(out);
    }
    let minority_label: u8 = if pos < neg { 1 } else { 0 };
    let deficit = neg.abs_diff(pos);
    let minority: Vec<&Sample> = cohort
        .samples
        .iter()
        .filter(|s| s.label == minority_label)
        .collect();
    if minority.len() <= k_neighbors {
        return Err(DataError::Parameter(format!(
            "minority class has {} samples; need more than k_neighbors = {k_neighbors}",
            minority.len()
        )));
    }

    let kinds: Vec<FeatureKind> = cohort.schema.features.iter().map(|f| f.kind).collect();
    let neighbor_sets: Vec<Vec<usize>> = (0..minority.len())
        .map(|i| k_nearest(&minority, i, k_neighbors, &kinds))
        .collect();

    let mut synthetic = Vec::with_capacity(deficit);
    for t in 0..deficit {
        let base_idx = t % minority.len();
        let base = minority[base_idx];
        let knn = &neighbor_sets[base_idx];
        let neighbor = minority[knn[rng.below(knn.len())]];
        let u = rng.next_f64();
        let voters: Vec<&Sample> = knn.iter().map(|&i| minority[i]).collect();

        let mut values = Vec::with_capacity(base.values.len());
        for (idx, feature) in cohort.schema.features.iter().enumerate() {
            let bv = base.values[idx].as_ref().unwrap();
            let value = match feature.kind {
                FeatureKind::Numerical => {
                    let (FeatureValue::Numerical(b), Some(FeatureValue::Numerical(n))) =
                        (bv, neighbor.values[idx].as_ref())
                    else {
                        unreachable!()
                    };
                    FeatureValue::Numerical(b + u * (n - b))
                }
                _ => vote(&voters, bv, idx, feature.cardinality()),
            };
            values.push(Some(value));
        }
        synthetic.push(Sample {
            values,
            label: minority_label,
            synthetic: true,
        });
    }

    let mut samples = cohort.samples.clone();
    samples.extend(synthetic);
    Ok(Cohort {
        schema: cohort.schema.clone(),
        samples,
        provenance: "oversampled".into(),
    })
}
