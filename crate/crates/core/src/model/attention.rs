//! Feature-level attention.
//!
//! Each feature embedding `x_i` receives an alignment score
//! `s_i = context . tanh(proj * x_i + bias)` with parameters shared across
//! all feature positions. Scores normalize through softmax into weights
//! `alpha`, and the pooled representation is `h = sum_i alpha_i * x_i`, a
//! convex combination of the embeddings.

use super::ModelError;
use crate::numerics::{softmax, Matrix, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    /// Projection into the attention space, `attn_dim x embed_dim`.
    pub proj: Matrix,
    /// Bias in the attention space, length `attn_dim`.
    pub bias: Vector,
    /// Context vector producing the scalar score, length `attn_dim`.
    pub context: Vector,
}

impl AttentionParams {
    pub fn attn_dim(&self) -> usize {
        self.proj.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.proj.cols()
    }
}

/// Intermediates retained for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// tanh activations per feature, each of length `attn_dim`.
    pub activations: Vec<Vector>,
    /// Raw alignment scores, length `n`.
    pub scores: Vector,
    /// Softmax weights, length `n`.
    pub alpha: Vector,
}

/// Forward pass over one sample's feature embeddings. Returns the pooled
/// representation, the attention weights and the cache.
pub fn attention_forward(
    params: &AttentionParams,
    inputs: &[Vector],
) -> Result<(Vector, Vector, AttentionCache), ModelError> {
    if inputs.is_empty() {
        return Err(ModelError::Shape("attention requires at least one feature".into()));
    }
    let dim = params.embed_dim();
    let mut activations = Vec::with_capacity(inputs.len());
    let mut scores = Vec::with_capacity(inputs.len());
    for x in inputs {
        if x.len() != dim {
            return Err(ModelError::Shape(format!(
                "embedding length {} does not match attention input dim {dim}",
                x.len()
            )));
        }
        let mut pre = params.proj.matvec(x)?;
        pre.axpy(1.0, &params.bias)?;
        let act = pre.map(f64::tanh);
        scores.push(params.context.dot(&act)?);
        activations.push(act);
    }
    let scores = Vector::from_vec(scores).map_err(ModelError::from)?;
    let alpha = softmax(&scores)?;
    let pooled = pool(inputs, &alpha);
    Ok((
        pooled,
        alpha.clone(),
        AttentionCache {
            activations,
            scores,
            alpha,
        },
    ))
}

/// Uniform mean pooling used by the no-attention ablation: `alpha = 1/n`.
pub fn mean_pool(inputs: &[Vector]) -> Result<(Vector, Vector), ModelError> {
    if inputs.is_empty() {
        return Err(ModelError::Shape("pooling requires at least one feature".into()));
    }
    let n = inputs.len();
    let alpha = Vector::from_vec(vec![1.0 / n as f64; n]).map_err(ModelError::from)?;
    Ok((pool(inputs, &alpha), alpha))
}

fn pool(inputs: &[Vector], alpha: &Vector) -> Vector {
    let mut pooled = Vector::zeros(inputs[0].len());
    for (x, &a) in inputs.iter().zip(alpha.iter()) {
        pooled.axpy(a, x).expect("embedding dims agree");
    }
    pooled
}

/// Gradient contributions accumulated by the backward pass.
#[derive(Debug)]
pub struct AttentionGradSink<'a> {
    pub proj: &'a mut Matrix,
    pub bias: &'a mut Vector,
    pub context: &'a mut Vector,
}

/// Backward pass for one sample. `pooled_grad` is dL/dh; returns dL/dx_i per
/// feature and accumulates parameter gradients into the sink.
pub fn attention_backward(
    params: &AttentionParams,
    inputs: &[Vector],
    cache: &AttentionCache,
    pooled_grad: &Vector,
    sink: &mut AttentionGradSink<'_>,
) -> Result<Vec<Vector>, ModelError> {
    let n = inputs.len();
    let alpha = &cache.alpha;

    // dL/dalpha_i = dh . x_i; dL/dx_i starts at alpha_i * dh.
    let mut alpha_grad = Vec::with_capacity(n);
    let mut input_grads: Vec<Vector> = Vec::with_capacity(n);
    for (x, &a) in inputs.iter().zip(alpha.iter()) {
        alpha_grad.push(pooled_grad.dot(x)?);
        input_grads.push(pooled_grad.map(|g| a * g));
    }

    // Softmax backward: ds_i = alpha_i * (dalpha_i - sum_j alpha_j dalpha_j).
    let weighted: f64 = alpha
        .iter()
        .zip(&alpha_grad)
        .map(|(&a, &g)| a * g)
        .sum();
    for i in 0..n {
        let score_grad = alpha[i] * (alpha_grad[i] - weighted);
        if score_grad == 0.0 {
            continue;
        }
        let act = &cache.activations[i];
        // dcontext += ds_i * t_i; dt_i = ds_i * context.
        sink.context.axpy(score_grad, act)?;
        // du_i = dt_i (1 - t_i^2), the tanh derivative on the pre-activation.
        let mut pre_grad = Vector::zeros(act.len());
        for j in 0..act.len() {
            pre_grad[j] = score_grad * params.context[j] * (1.0 - act[j] * act[j]);
        }
        sink.proj.add_outer(1.0, &pre_grad, &inputs[i])?;
        sink.bias.axpy(1.0, &pre_grad)?;
        input_grads[i].axpy(1.0, &params.proj.transpose_matvec(&pre_grad)?)?;
    }
    Ok(input_grads)
}
