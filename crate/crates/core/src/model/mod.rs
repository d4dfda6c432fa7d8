//! The embedding-attention network: per-feature embeddings, a shared
//! feature-level attention block, and an MLP head with batch normalization,
//! dropout and a sigmoid output. Backpropagation is hand-derived and checked
//! against central finite differences (see [`gradcheck`]).

mod attention;
mod embed;
pub mod gradcheck;
mod mlp;

pub use attention::{attention_forward, mean_pool, AttentionCache, AttentionParams};
pub use embed::{
    embed_sample, encode_cohort, encode_sample, EmbeddingTable, EncodedSample, EncodedValue,
    FeatureEmbedder, NumericEmbedder,
};
pub use mlp::{
    mlp_forward, update_running_stats, BatchNorm, DenseLayer, HeadGrads, MlpCache, MlpHead,
};

use crate::data::{FeatureKind, FeatureSchema};
use crate::numerics::{Matrix, NumericsError, RandomSource, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("embedding lookup index {index} out of range for a table of {cardinality} rows")]
    Lookup { index: usize, cardinality: usize },
    #[error("train mode requires a batch of at least 2 samples, got {0}")]
    BatchSize(usize),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("stale or mismatched cache: {0}")]
    State(String),
    #[error("feature {feature_index} is missing; clean the cohort before encoding")]
    MissingValue { feature_index: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// How feature embeddings pool into the representation fed to the MLP head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Learned feature-level attention.
    Attention,
    /// Uniform mean pooling; the no-attention ablation.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub pooling: Pooling,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 8,
            attn_dim: 16,
            hidden: vec![32, 16],
            dropout: 0.3,
            bn_momentum: 0.1,
            bn_epsilon: 1e-5,
            pooling: Pooling::Attention,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.embed_dim == 0 {
            return Err(ModelError::Config("embedding dimension must be >= 1".into()));
        }
        if self.attn_dim == 0 {
            return Err(ModelError::Config("attention dimension must be >= 1".into()));
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(ModelError::Config("hidden layer sizes must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(ModelError::Config("batch-norm momentum must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// All trainable state plus the configuration it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// One embedder per schema feature, in schema order.
    pub embedders: Vec<FeatureEmbedder>,
    pub attention: AttentionParams,
    pub head: MlpHead,
}

impl ModelParams {
    pub fn feature_count(&self) -> usize {
        self.embedders.len()
    }

    /// Shape self-consistency check, used when loading persisted artifacts.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.config.validate()?;
        let d = self.config.embed_dim;
        for (i, e) in self.embedders.iter().enumerate() {
            let dim = match e {
                FeatureEmbedder::Table(t) => {
                    if t.cardinality() < 2 {
                        return Err(ModelError::Config(format!(
                            "embedder {i}: table needs at least 2 rows"
                        )));
                    }
                    t.dim()
                }
                FeatureEmbedder::Affine(a) => {
                    if a.scale.len() != a.offset.len() {
                        return Err(ModelError::Config(format!(
                            "embedder {i}: scale/offset length mismatch"
                        )));
                    }
                    a.scale.len()
                }
            };
            if dim != d {
                return Err(ModelError::Config(format!(
                    "embedder {i} has dimension {dim}, config says {d}"
                )));
            }
        }
        if self.attention.embed_dim() != d || self.attention.attn_dim() != self.config.attn_dim {
            return Err(ModelError::Config("attention shapes do not match config".into()));
        }
        if self.attention.bias.len() != self.config.attn_dim
            || self.attention.context.len() != self.config.attn_dim
        {
            return Err(ModelError::Config("attention bias/context length mismatch".into()));
        }
        let mut prev = d;
        if self.head.hidden.len() != self.config.hidden.len() {
            return Err(ModelError::Config("hidden layer count does not match config".into()));
        }
        for (j, (layer, bn)) in self.head.hidden.iter().enumerate() {
            if layer.in_dim() != prev || layer.out_dim() != self.config.hidden[j] {
                return Err(ModelError::Config(format!(
                    "hidden layer {j} has shape {}x{}, expected {}x{prev}",
                    layer.out_dim(),
                    layer.in_dim(),
                    self.config.hidden[j]
                )));
            }
            if bn.width() != layer.out_dim()
                || bn.running_mean.len() != bn.width()
                || bn.running_var.len() != bn.width()
            {
                return Err(ModelError::Config(format!("batch norm {j} width mismatch")));
            }
            if bn.running_var.iter().any(|&v| v < 0.0) {
                return Err(ModelError::Config(format!(
                    "batch norm {j} has negative running variance"
                )));
            }
            prev = layer.out_dim();
        }
        if self.head.output.in_dim() != prev || self.head.output.out_dim() != 1 {
            return Err(ModelError::Config("output layer shape mismatch".into()));
        }
        Ok(())
    }
}

/// Initialize parameters: embeddings and numeric embedders ~ Gaussian(0, 0.1);
/// dense and attention weights Xavier-uniform by fan-in/fan-out; biases zero;
/// batch-norm gamma 1, beta 0, running stats (0, 1).
pub fn init_params(
    schema: &FeatureSchema,
    config: &ModelConfig,
    rng: &mut RandomSource,
) -> Result<ModelParams, ModelError> {
    config.validate()?;
    if schema.is_empty() {
        return Err(ModelError::Config("schema declares no features".into()));
    }
    let d = config.embed_dim;
    let k = config.attn_dim;

    let gauss = |n: usize, stddev: f64, rng: &mut RandomSource| -> Vec<f64> {
        (0..n)
            .map(|_| rng.gaussian(0.0, stddev).expect("valid stddev"))
            .collect()
    };
    let xavier = |fan_in: usize, fan_out: usize, n: usize, rng: &mut RandomSource| -> Vec<f64> {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        (0..n)
            .map(|_| rng.uniform(-limit, limit).expect("valid range"))
            .collect()
    };

    let mut embedders = Vec::with_capacity(schema.len());
    for feature in &schema.features {
        let embedder = match feature.kind {
            FeatureKind::Numerical => FeatureEmbedder::Affine(NumericEmbedder {
                scale: Vector::from_vec_unchecked(gauss(d, 0.1, rng)),
                offset: Vector::from_vec_unchecked(gauss(d, 0.1, rng)),
            }),
            _ => {
                let rows = feature.cardinality();
                FeatureEmbedder::Table(EmbeddingTable {
                    weights: Matrix::from_vec(rows, d, gauss(rows * d, 0.1, rng))
                        .expect("finite init"),
                })
            }
        };
        embedders.push(embedder);
    }

    let attention = AttentionParams {
        proj: Matrix::from_vec(k, d, xavier(d, k, k * d, rng)).expect("finite init"),
        bias: Vector::zeros(k),
        context: Vector::from_vec_unchecked(xavier(k, 1, k, rng)),
    };

    let mut hidden = Vec::with_capacity(config.hidden.len());
    let mut prev = d;
    for &width in &config.hidden {
        let layer = DenseLayer {
            weight: Matrix::from_vec(width, prev, xavier(prev, width, width * prev, rng))
                .expect("finite init"),
            bias: Vector::zeros(width),
        };
        hidden.push((layer, BatchNorm::new(width, config.bn_momentum, config.bn_epsilon)));
        prev = width;
    }
    let output = DenseLayer {
        weight: Matrix::from_vec(1, prev, xavier(prev, 1, prev, rng)).expect("finite init"),
        bias: Vector::zeros(1),
    };

    Ok(ModelParams {
        config: config.clone(),
        embedders,
        attention,
        head: MlpHead {
            hidden,
            output,
            dropout: config.dropout,
        },
    })
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ForwardCache {
    mode: Mode,
    batch: Vec<EncodedSample>,
    embeds: Vec<Vec<Vector>>,
    attn: Vec<Option<AttentionCache>>,
    pub mlp: MlpCache,
}

impl ForwardCache {
    pub fn batch_len(&self) -> usize {
        self.batch.len()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Predicted recurrence probability per sample, strictly inside (0, 1).
    pub probs: Vector,
    /// Attention weights per sample, each on the probability simplex.
    pub alphas: Vec<Vector>,
    pub cache: ForwardCache,
}

/// Full forward pass: embed -> pool (attention or mean) -> MLP head.
pub fn forward(
    params: &ModelParams,
    batch: &[EncodedSample],
    mode: Mode,
    rng: Option<&mut RandomSource>,
) -> Result<ForwardOutput, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Shape("empty batch".into()));
    }
    if mode == Mode::Train && batch.len() < 2 {
        return Err(ModelError::BatchSize(batch.len()));
    }
    let d = params.config.embed_dim;
    let mut embeds = Vec::with_capacity(batch.len());
    let mut attn_caches = Vec::with_capacity(batch.len());
    let mut alphas = Vec::with_capacity(batch.len());
    let mut pooled = Matrix::zeros(batch.len(), d);
    for (b, sample) in batch.iter().enumerate() {
        let x = embed_sample(&params.embedders, sample)?;
        let (h, alpha, cache) = match params.config.pooling {
            Pooling::Attention => {
                let (h, alpha, cache) = attention_forward(&params.attention, &x)?;
                (h, alpha, Some(cache))
            }
            Pooling::Mean => {
                let (h, alpha) = mean_pool(&x)?;
                (h, alpha, None)
            }
        };
        pooled.row_mut(b).copy_from_slice(h.as_slice());
        embeds.push(x);
        alphas.push(alpha);
        attn_caches.push(cache);
    }

    let (probs, mlp_cache) = mlp_forward(&params.head, &pooled, mode, rng)?;
    Ok(ForwardOutput {
        probs,
        alphas,
        cache: ForwardCache {
            mode,
            batch: batch.to_vec(),
            embeds,
            attn: attn_caches,
            mlp: mlp_cache,
        },
    })
}

/// Mean binary cross-entropy with predictions clamped to
/// `[clamp, 1 - clamp]`, keeping the loss finite for saturated outputs.
pub fn bce_loss(probs: &Vector, labels: &Vector, clamp: f64) -> Result<f64, ModelError> {
    if probs.len() != labels.len() {
        return Err(ModelError::Shape(format!(
            "{} predictions vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(ModelError::Shape("empty prediction vector".into()));
    }
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(labels.iter()) {
        let p = p.clamp(clamp, 1.0 - clamp);
        total += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    }
    Ok(total / probs.len() as f64)
}

/// Gradient mirror of [`ModelParams`]. Batch-norm running statistics are not
/// trainable and carry no gradient slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedders: Vec<EmbedderGrad>,
    pub attn_proj: Matrix,
    pub attn_bias: Vector,
    pub attn_context: Vector,
    pub head: HeadGrads,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderGrad {
    Table(Matrix),
    Affine { scale: Vector, offset: Vector },
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            embedders: params
                .embedders
                .iter()
                .map(|e| match e {
                    FeatureEmbedder::Table(t) => {
                        EmbedderGrad::Table(Matrix::zeros(t.cardinality(), t.dim()))
                    }
                    FeatureEmbedder::Affine(a) => EmbedderGrad::Affine {
                        scale: Vector::zeros(a.scale.len()),
                        offset: Vector::zeros(a.offset.len()),
                    },
                })
                .collect(),
            attn_proj: Matrix::zeros(params.attention.proj.rows(), params.attention.proj.cols()),
            attn_bias: Vector::zeros(params.attention.bias.len()),
            attn_context: Vector::zeros(params.attention.context.len()),
            head: HeadGrads::zeros_like(&params.head),
        }
    }
}

/// Analytic gradients of the mean clamped binary cross-entropy with respect
/// to every trainable parameter. Requires a train-mode cache from the same
/// parameters and batch.
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    labels: &[f64],
    clamp: f64,
) -> Result<Gradients, ModelError> {
    if cache.mode != Mode::Train {
        return Err(ModelError::State(
            "backward requires a train-mode forward cache".into(),
        ));
    }
    let batch = cache.batch.len();
    if labels.len() != batch {
        return Err(ModelError::State(format!(
            "cache covers {batch} samples, got {} labels",
            labels.len()
        )));
    }

    let mut grads = Gradients::zeros_like(params);

    // d(mean BCE)/d(logit) = (p - y) / B inside the clamp, 0 where clamped.
    let mut logit_grad = Vector::zeros(batch);
    for b in 0..batch {
        let p = cache.mlp.probs[b];
        logit_grad[b] = if p <= clamp || p >= 1.0 - clamp {
            0.0
        } else {
            (p - labels[b]) / batch as f64
        };
    }

    let (pooled_grad, head_grads) = mlp::mlp_backward(&params.head, &cache.mlp, &logit_grad)?;
    grads.head = head_grads;

    for b in 0..batch {
        let dh = Vector::from_vec_unchecked(pooled_grad.row(b).to_vec());
        let inputs = &cache.embeds[b];
        let input_grads = match (&cache.attn[b], params.config.pooling) {
            (Some(attn_cache), Pooling::Attention) => {
                let mut sink = attention::AttentionGradSink {
                    proj: &mut grads.attn_proj,
                    bias: &mut grads.attn_bias,
                    context: &mut grads.attn_context,
                };
                attention::attention_backward(
                    &params.attention,
                    inputs,
                    attn_cache,
                    &dh,
                    &mut sink,
                )?
            }
            (None, Pooling::Mean) => {
                let n = inputs.len() as f64;
                inputs.iter().map(|_| dh.map(|g| g / n)).collect()
            }
            _ => {
                return Err(ModelError::State(
                    "cache pooling does not match model pooling".into(),
                ))
            }
        };

        for (i, dx) in input_grads.iter().enumerate() {
            match (&mut grads.embedders[i], &cache.batch[b].features[i]) {
                (EmbedderGrad::Table(g), EncodedValue::Row(r)) => {
                    for (slot, &v) in g.row_mut(*r).iter_mut().zip(dx.as_slice()) {
                        *slot += v;
                    }
                }
                (EmbedderGrad::Affine { scale, offset }, EncodedValue::Value(v)) => {
                    scale.axpy(*v, dx)?;
                    offset.axpy(1.0, dx)?;
                }
                _ => return Err(ModelError::State("cache/embedder kind mismatch".into())),
            }
        }
    }
    Ok(grads)
}

// ---------------------------------------------------------------------------
// Flat parameter views (optimizer and gradient-check plumbing)
// ---------------------------------------------------------------------------

impl ModelParams {
    pub fn visit_groups(&self, f: &mut dyn FnMut(String, &[f64])) {
        for (i, e) in self.embedders.iter().enumerate() {
            match e {
                FeatureEmbedder::Table(t) => f(format!("embed[{i}].table"), t.weights.as_slice()),
                FeatureEmbedder::Affine(a) => {
                    f(format!("embed[{i}].scale"), a.scale.as_slice());
                    f(format!("embed[{i}].offset"), a.offset.as_slice());
                }
            }
        }
        f("attention.proj".into(), self.attention.proj.as_slice());
        f("attention.bias".into(), self.attention.bias.as_slice());
        f("attention.context".into(), self.attention.context.as_slice());
        for (j, (layer, bn)) in self.head.hidden.iter().enumerate() {
            f(format!("head.hidden[{j}].weight"), layer.weight.as_slice());
            f(format!("head.hidden[{j}].bias"), layer.bias.as_slice());
            f(format!("head.hidden[{j}].bn_gamma"), bn.gamma.as_slice());
            f(format!("head.hidden[{j}].bn_beta"), bn.beta.as_slice());
        }
        f("head.output.weight".into(), self.head.output.weight.as_slice());
        f("head.output.bias".into(), self.head.output.bias.as_slice());
    }

    pub fn visit_groups_mut(&mut self, f: &mut dyn FnMut(String, &mut [f64])) {
        for (i, e) in self.embedders.iter_mut().enumerate() {
            match e {
                FeatureEmbedder::Table(t) => {
                    f(format!("embed[{i}].table"), t.weights.as_mut_slice())
                }
                FeatureEmbedder::Affine(a) => {
                    f(format!("embed[{i}].scale"), a.scale.as_mut_slice());
                    f(format!("embed[{i}].offset"), a.offset.as_mut_slice());
                }
            }
        }
        f("attention.proj".into(), self.attention.proj.as_mut_slice());
        f("attention.bias".into(), self.attention.bias.as_mut_slice());
        f("attention.context".into(), self.attention.context.as_mut_slice());
        for (j, (layer, bn)) in self.head.hidden.iter_mut().enumerate() {
            f(format!("head.hidden[{j}].weight"), layer.weight.as_mut_slice());
            f(format!("head.hidden[{j}].bias"), layer.bias.as_mut_slice());
            f(format!("head.hidden[{j}].bn_gamma"), bn.gamma.as_mut_slice());
            f(format!("head.hidden[{j}].bn_beta"), bn.beta.as_mut_slice());
        }
        f("head.output.weight".into(), self.head.output.weight.as_mut_slice());
        f("head.output.bias".into(), self.head.output.bias.as_mut_slice());
    }

    pub fn param_count(&self) -> usize {
        let mut count = 0;
        self.visit_groups(&mut |_, s| count += s.len());
        count
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        self.visit_groups(&mut |_, s| flat.extend_from_slice(s));
        flat
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<(), ModelError> {
        if flat.len() != self.param_count() {
            return Err(ModelError::Shape(format!(
                "flat parameter vector has {} entries, model has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        self.visit_groups_mut(&mut |_, s| {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        });
        Ok(())
    }

    /// Named index ranges into the flat parameter vector.
    pub fn group_spans(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let mut spans = Vec::new();
        let mut offset = 0;
        self.visit_groups(&mut |name, s| {
            spans.push((name, offset..offset + s.len()));
            offset += s.len();
        });
        spans
    }
}

impl Gradients {
    pub(crate) fn visit_groups(&self, f: &mut dyn FnMut(String, &[f64])) {
        for (i, e) in self.embedders.iter().enumerate() {
            match e {
                EmbedderGrad::Table(t) => f(format!("embed[{i}].table"), t.as_slice()),
                EmbedderGrad::Affine { scale, offset } => {
                    f(format!("embed[{i}].scale"), scale.as_slice());
                    f(format!("embed[{i}].offset"), offset.as_slice());
                }
            }
        }
        f("attention.proj".into(), self.attn_proj.as_slice());
        f("attention.bias".into(), self.attn_bias.as_slice());
        f("attention.context".into(), self.attn_context.as_slice());
        for (j, (layer, bn)) in self.head.hidden.iter().enumerate() {
            f(format!("head.hidden[{j}].weight"), layer.weight.as_slice());
            f(format!("head.hidden[{j}].bias"), layer.bias.as_slice());
            f(format!("head.hidden[{j}].bn_gamma"), bn.gamma.as_slice());
            f(format!("head.hidden[{j}].bn_beta"), bn.beta.as_slice());
        }
        f("head.output.weight".into(), self.head.output.weight.as_slice());
        f("head.output.bias".into(), self.head.output.bias.as_slice());
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        self.visit_groups(&mut |_, s| flat.extend_from_slice(s));
        flat
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_schema;

    fn tiny_schema() -> FeatureSchema {
        use crate::data::FeatureDescriptor as F;
        FeatureSchema::new(
            vec![
                F::numerical("X", None),
                F::categorical("C", &["a", "b", "c"]),
                F::binary("B"),
            ],
            "y",
        )
        .unwrap()
    }

    fn tiny_batch() -> Vec<EncodedSample> {
        vec![
            EncodedSample {
                features: vec![
                    EncodedValue::Value(0.5),
                    EncodedValue::Row(0),
                    EncodedValue::Row(1),
                ],
                label: 1.0,
            },
            EncodedSample {
                features: vec![
                    EncodedValue::Value(-1.25),
                    EncodedValue::Row(2),
                    EncodedValue::Row(0),
                ],
                label: 0.0,
            },
        ]
    }

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            embed_dim: 3,
            attn_dim: 2,
            hidden: vec![4],
            dropout: 0.0,
            seed: 9,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let schema = default_schema();
        let config = ModelConfig {
            embed_dim: 4,
            attn_dim: 3,
            ..ModelConfig::default()
        };
        let a = init_params(&schema, &config, &mut RandomSource::new(1)).unwrap();
        let b = init_params(&schema, &config, &mut RandomSource::new(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.embedders.len(), 23);
        assert_eq!(a.attention.proj.rows(), 3);
        assert_eq!(a.attention.proj.cols(), 4);
        assert!(a.attention.bias.iter().all(|&v| v == 0.0));
        a.validate().unwrap();

        let bad = ModelConfig {
            hidden: vec![32, 0],
            ..ModelConfig::default()
        };
        assert!(matches!(
            init_params(&schema, &bad, &mut RandomSource::new(1)).unwrap_err(),
            ModelError::Config(_)
        ));
    }

    #[test]
    fn infer_forward_is_deterministic_with_simplex_alphas() {
        let schema = tiny_schema();
        let params = init_params(&schema, &tiny_config(), &mut RandomSource::new(3)).unwrap();
        let batch = tiny_batch();
        let out1 = forward(&params, &batch, Mode::Infer, None).unwrap();
        let out2 = forward(&params, &batch, Mode::Infer, None).unwrap();
        assert_eq!(out1.probs, out2.probs);
        for (a1, a2) in out1.alphas.iter().zip(&out2.alphas) {
            assert_eq!(a1, a2);
        }
        for alpha in &out1.alphas {
            assert!((alpha.sum() - 1.0).abs() < 1e-9);
            assert!(alpha.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn scalar_pipeline_matches_hand_evaluation() {
        // d = k = 1, one feature, one hidden unit; every intermediate is a
        // scalar reproduced here step by step.
        use crate::data::FeatureDescriptor as F;
        let schema = FeatureSchema::new(vec![F::numerical("X", None)], "y").unwrap();
        let config = ModelConfig {
            embed_dim: 1,
            attn_dim: 1,
            hidden: vec![1],
            dropout: 0.0,
            ..ModelConfig::default()
        };
        let mut params = init_params(&schema, &config, &mut RandomSource::new(0)).unwrap();
        let (scale, offset, w1, b1, gamma, beta, w2, b2) =
            (1.5, -0.25, 0.8, 0.1, 1.2, -0.05, -2.0, 0.3);
        params.embedders[0] = FeatureEmbedder::Affine(NumericEmbedder {
            scale: Vector::from_vec(vec![scale]).unwrap(),
            offset: Vector::from_vec(vec![offset]).unwrap(),
        });
        params.head.hidden[0].0.weight = Matrix::from_vec(1, 1, vec![w1]).unwrap();
        params.head.hidden[0].0.bias = Vector::from_vec(vec![b1]).unwrap();
        params.head.hidden[0].1.gamma = Vector::from_vec(vec![gamma]).unwrap();
        params.head.hidden[0].1.beta = Vector::from_vec(vec![beta]).unwrap();
        params.head.output.weight = Matrix::from_vec(1, 1, vec![w2]).unwrap();
        params.head.output.bias = Vector::from_vec(vec![b2]).unwrap();

        let v = 0.8;
        let batch = vec![EncodedSample {
            features: vec![EncodedValue::Value(v)],
            label: 1.0,
        }];
        let out = forward(&params, &batch, Mode::Infer, None).unwrap();

        // Hand evaluation: single feature means alpha = 1 and h = embedding.
        let h = v * scale + offset;
        let a1 = w1 * h + b1;
        let xhat = (a1 - 0.0) / (1.0_f64 + 1e-5).sqrt(); // running stats (0, 1)
        let y1 = (gamma * xhat + beta).max(0.0);
        let logit = w2 * y1 + b2;
        let expected = 1.0 / (1.0 + (-logit).exp());
        assert_eq!(out.alphas[0].as_slice(), &[1.0]);
        assert!((out.probs[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn duplicated_batch_gradient_equals_original() {
        let schema = tiny_schema();
        let params = init_params(&schema, &tiny_config(), &mut RandomSource::new(5)).unwrap();
        let batch = tiny_batch();
        let labels: Vec<f64> = batch.iter().map(|s| s.label).collect();

        let out = forward(&params, &batch, Mode::Train, None).unwrap();
        let g1 = backward(&params, &out.cache, &labels, 1e-7).unwrap();

        let mut doubled = batch.clone();
        doubled.extend(batch.clone());
        let mut labels2 = labels.clone();
        labels2.extend(labels.clone());
        let out2 = forward(&params, &doubled, Mode::Train, None).unwrap();
        let g2 = backward(&params, &out2.cache, &labels2, 1e-7).unwrap();

        for (a, b) in g1.flatten().iter().zip(g2.flatten()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn untouched_embedding_rows_get_zero_gradient() {
        let schema = tiny_schema();
        let params = init_params(&schema, &tiny_config(), &mut RandomSource::new(7)).unwrap();
        // Neither sample uses category index 1 of feature C.
        let batch = tiny_batch();
        let labels: Vec<f64> = batch.iter().map(|s| s.label).collect();
        let out = forward(&params, &batch, Mode::Train, None).unwrap();
        let grads = backward(&params, &out.cache, &labels, 1e-7).unwrap();
        let EmbedderGrad::Table(t) = &grads.embedders[1] else {
            panic!("feature C is a table");
        };
        assert!(t.row(1).iter().all(|&v| v == 0.0));
        assert!(t.row(0).iter().any(|&v| v != 0.0));
        assert!(t.row(2).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn backward_rejects_infer_cache_and_label_mismatch() {
        let schema = tiny_schema();
        let params = init_params(&schema, &tiny_config(), &mut RandomSource::new(2)).unwrap();
        let batch = tiny_batch();
        let out = forward(&params, &batch, Mode::Infer, None).unwrap();
        assert!(matches!(
            backward(&params, &out.cache, &[1.0, 0.0], 1e-7).unwrap_err(),
            ModelError::State(_)
        ));
        let out = forward(&params, &batch, Mode::Train, None).unwrap();
        assert!(backward(&params, &out.cache, &[1.0], 1e-7).is_err());
    }

    #[test]
    fn bce_known_values() {
        let labels = Vector::from_vec(vec![0.0, 1.0]).unwrap();
        let p = Vector::from_vec(vec![0.5, 0.5]).unwrap();
        assert!((bce_loss(&p, &labels, 1e-7).unwrap() - 2.0_f64.ln()).abs() < 1e-12);

        // Direct formula evaluation oracle: y = 0, p = 0.9.
        let p = Vector::from_vec(vec![0.9]).unwrap();
        let y = Vector::from_vec(vec![0.0]).unwrap();
        assert!((bce_loss(&p, &y, 1e-7).unwrap() - 2.302585092994046).abs() < 1e-9);

        // Perfect prediction saturates at the clamp.
        let p = Vector::from_vec(vec![1.0 - f64::EPSILON, f64::MIN_POSITIVE]).unwrap();
        let y = Vector::from_vec(vec![1.0, 0.0]).unwrap();
        let loss = bce_loss(&p, &y, 1e-7).unwrap();
        assert!(loss <= -(1.0_f64 - 1e-7).ln());

        assert!(bce_loss(&p, &Vector::zeros(1), 1e-7).is_err());
    }

    #[test]
    fn flat_views_align_between_params_and_gradients() {
        let schema = tiny_schema();
        let params = init_params(&schema, &tiny_config(), &mut RandomSource::new(4)).unwrap();
        let grads = Gradients::zeros_like(&params);
        let mut grad_spans = Vec::new();
        let mut offset = 0;
        grads.visit_groups(&mut |name, s| {
            grad_spans.push((name, offset..offset + s.len()));
            offset += s.len();
        });
        assert_eq!(params.group_spans(), grad_spans);
        assert_eq!(params.flatten().len(), grads.flatten().len());

        // Round trip through the flat view.
        let mut copy = params.clone();
        let mut flat = params.flatten();
        for v in &mut flat {
            *v += 1.0;
        }
        copy.set_from_flat(&flat).unwrap();
        for (orig, bumped) in params.flatten().iter().zip(copy.flatten()) {
            assert!((bumped - orig - 1.0).abs() < 1e-15);
        }
        assert!(copy.set_from_flat(&flat[1..]).is_err());
    }
}
