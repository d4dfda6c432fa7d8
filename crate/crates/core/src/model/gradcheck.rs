//! Gradient verification: analytic backpropagation against central finite
//! differences over randomly drawn tiny model configurations. Covers every
//! trainable group: embedding tables, numeric embedders, attention
//! parameters, batch-norm gamma/beta and all dense layers.

use super::{
    backward, bce_loss, forward, init_params, EncodedSample, EncodedValue, Mode, ModelConfig,
    ModelParams, Pooling,
};
use crate::data::{FeatureDescriptor, FeatureKind, FeatureSchema};
use crate::numerics::{finite_diff_grad, RandomSource, Vector};

pub const DEFAULT_CASES: usize = 20;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_SEED: u64 = 2024;
const FD_STEP: f64 = 1e-5;
const LOSS_CLAMP: f64 = 1e-7;
/// Scale floor for the relative-error denominator; keeps noise on exactly-
/// zero gradients (e.g. untouched embedding rows) from registering as error.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradCheckOutcome {
    pub cases: usize,
    pub tolerance: f64,
    pub worst_rel_error: f64,
    pub worst_group: String,
    pub worst_case: usize,
}

impl GradCheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst_rel_error < self.tolerance
    }
}

fn random_case(case: usize, rng: &mut RandomSource) -> (FeatureSchema, ModelConfig, Vec<EncodedSample>) {
    let n = 2 + rng.below(5); // 2..=6 features
    let mut features = Vec::with_capacity(n);
    for i in 0..n {
        let name = format!("f{i}");
        let feature = match rng.below(3) {
            0 => FeatureDescriptor::numerical(&name, None),
            1 => {
                let cards = ["a", "b", "c", "d"];
                let k = 2 + rng.below(3); // 2..=4 categories
                FeatureDescriptor::categorical(&name, &cards[..k])
            }
            _ => FeatureDescriptor::binary(&name),
        };
        features.push(feature);
    }
    let schema = FeatureSchema::new(features, "y").expect("generated schema is valid");

    let mut hidden = vec![1 + rng.below(8)];
    if rng.below(2) == 1 {
        hidden.push(1 + rng.below(8));
    }
    let config = ModelConfig {
        embed_dim: 1 + rng.below(4),
        attn_dim: 1 + rng.below(3),
        hidden,
        dropout: 0.0,
        pooling: if case % 7 == 3 { Pooling::Mean } else { Pooling::Attention },
        seed: case as u64,
        ..ModelConfig::default()
    };

    let batch_len = 2 + rng.below(7); // 2..=8
    let mut batch = Vec::with_capacity(batch_len);
    for _ in 0..batch_len {
        let values = schema
            .features
            .iter()
            .map(|f| match f.kind {
                FeatureKind::Numerical => {
                    EncodedValue::Value(rng.gaussian(0.0, 1.0).expect("valid stddev"))
                }
                FeatureKind::Categorical => EncodedValue::Row(rng.below(f.categories.len())),
                FeatureKind::Binary => EncodedValue::Row(rng.below(2)),
            })
            .collect();
        batch.push(EncodedSample {
            features: values,
            label: rng.below(2) as f64,
        });
    }
    (schema, config, batch)
}

fn loss_of(params: &ModelParams, batch: &[EncodedSample], labels: &Vector) -> f64 {
    let out = forward(params, batch, Mode::Train, None).expect("forward on checked shapes");
    bce_loss(&out.probs, labels, LOSS_CLAMP).expect("loss on checked shapes")
}

/// Run `cases` random configurations; `corrupt_gradient` is a negative-
/// control hook that perturbs one analytic gradient entry so the check must
/// fail.
pub fn run_gradient_check(
    cases: usize,
    seed: u64,
    tolerance: f64,
    corrupt_gradient: bool,
) -> GradCheckOutcome {
    let mut rng = RandomSource::new(seed);
    let mut outcome = GradCheckOutcome {
        cases,
        tolerance,
        worst_rel_error: 0.0,
        worst_group: String::new(),
        worst_case: 0,
    };

    for case in 0..cases {
        let (schema, config, batch) = random_case(case, &mut rng);
        let mut init_rng = rng.fork();
        let params = init_params(&schema, &config, &mut init_rng).expect("valid tiny config");
        let labels = Vector::from_vec_unchecked(batch.iter().map(|s| s.label).collect());

        let out = forward(&params, &batch, Mode::Train, None).expect("forward");
        let grads = backward(&params, &out.cache, labels.as_slice(), LOSS_CLAMP).expect("backward");
        let mut analytic = grads.flatten();
        if corrupt_gradient && case == 0 {
            analytic[0] += 0.05 * (1.0 + analytic[0].abs());
        }

        let flat = Vector::from_vec_unchecked(params.flatten());
        let mut probe = params.clone();
        let numeric = finite_diff_grad(
            |x| {
                probe.set_from_flat(x.as_slice()).expect("same length");
                loss_of(&probe, &batch, &labels)
            },
            &flat,
            FD_STEP,
        )
        .expect("finite differences stay finite");

        let spans = params.group_spans();
        for (a, (n, idx)) in analytic.iter().zip(numeric.iter().zip(0..)) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR);
            if rel > outcome.worst_rel_error {
                outcome.worst_rel_error = rel;
                outcome.worst_case = case;
                outcome.worst_group = spans
                    .iter()
                    .find(|(_, range)| range.contains(&idx))
                    .map(|(name, _)| name.clone())
                    .unwrap_or_else(|| "unknown".into());
            }
        }
    }
    outcome
}
