//! MLP head: hidden layers of affine -> batch norm -> ReLU -> dropout,
//! then a single-logit output layer under a sigmoid.
//!
//! Batch normalization uses batch statistics (population variance) in train
//! mode and running statistics at inference, so an inference prediction is a
//! pure per-row function independent of batch companions. Dropout is
//! inverted: surviving activations scale by 1/(1-rate) at train time.

use super::{Mode, ModelError};
use crate::numerics::{sigmoid, Matrix, RandomSource, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out x in`.
    pub weight: Matrix,
    pub bias: Vector,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Row-wise affine map of a `B x in` matrix to `B x out`.
    fn forward(&self, input: &Matrix) -> Result<Matrix, ModelError> {
        if input.cols() != self.in_dim() {
            return Err(ModelError::Shape(format!(
                "dense layer expects input dim {}, got {}",
                self.in_dim(),
                input.cols()
            )));
        }
        let mut out = Matrix::zeros(input.rows(), self.out_dim());
        for b in 0..input.rows() {
            let row = Vector::from_vec_unchecked(input.row(b).to_vec());
            let mut y = self.weight.matvec(&row)?;
            y.axpy(1.0, &self.bias)?;
            out.row_mut(b).copy_from_slice(y.as_slice());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vector,
    pub beta: Vector,
    pub running_mean: Vector,
    pub running_var: Vector,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNorm {
    pub fn new(width: usize, momentum: f64, epsilon: f64) -> Self {
        BatchNorm {
            gamma: Vector::from_vec_unchecked(vec![1.0; width]),
            beta: Vector::zeros(width),
            running_mean: Vector::zeros(width),
            running_var: Vector::from_vec_unchecked(vec![1.0; width]),
            momentum,
            epsilon,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHead {
    pub hidden: Vec<(DenseLayer, BatchNorm)>,
    pub output: DenseLayer,
    pub dropout: f64,
}

#[derive(Debug, Clone)]
pub struct BnCache {
    pub mean: Vector,
    pub var: Vector,
    pub normalized: Matrix,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each hidden layer, then the input to the output layer.
    pub layer_inputs: Vec<Matrix>,
    /// Batch statistics per hidden layer; train mode only.
    pub bn: Vec<BnCache>,
    /// Post-ReLU activations per hidden layer; train mode only.
    pub relu_out: Vec<Matrix>,
    /// Inverted-dropout masks (entries 0 or 1/(1-rate)); train mode only.
    pub dropout_masks: Vec<Option<Matrix>>,
    pub logits: Vector,
    pub probs: Vector,
}

pub fn mlp_forward(
    head: &MlpHead,
    input: &Matrix,
    mode: Mode,
    mut rng: Option<&mut RandomSource>,
) -> Result<(Vector, MlpCache), ModelError> {
    let batch = input.rows();
    if batch == 0 {
        return Err(ModelError::Shape("empty batch".into()));
    }
    if mode == Mode::Train && batch < 2 {
        return Err(ModelError::BatchSize(batch));
    }

    let mut cache = MlpCache {
        layer_inputs: Vec::with_capacity(head.hidden.len() + 1),
        bn: Vec::new(),
        relu_out: Vec::new(),
        dropout_masks: Vec::new(),
        logits: Vector::zeros(0),
        probs: Vector::zeros(0),
    };

    let mut current = input.clone();
    for (layer, bn) in &head.hidden {
        cache.layer_inputs.push(current.clone());
        let affine = layer.forward(&current)?;
        let normed = match mode {
            Mode::Train => {
                let (y, bn_cache) = batch_norm_train(bn, &affine)?;
                cache.bn.push(bn_cache);
                y
            }
            Mode::Infer => batch_norm_infer(bn, &affine)?,
        };
        let activated = normed.map(crate::numerics::relu);
        if mode == Mode::Train {
            cache.relu_out.push(activated.clone());
        }
        current = if mode == Mode::Train && head.dropout > 0.0 {
            let rng = rng
                .as_deref_mut()
                .ok_or_else(|| ModelError::Config("dropout requires a random source".into()))?;
            let keep_scale = 1.0 / (1.0 - head.dropout);
            let mut mask = Matrix::zeros(activated.rows(), activated.cols());
            for v in mask.as_mut_slice() {
                *v = if rng.next_f64() >= head.dropout { keep_scale } else { 0.0 };
            }
            let mut dropped = activated.clone();
            for (d, m) in dropped.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                *d *= m;
            }
            if mode == Mode::Train {
                cache.dropout_masks.push(Some(mask));
            }
            dropped
        } else {
            if mode == Mode::Train {
                cache.dropout_masks.push(None);
            }
            activated
        };
    }
    cache.layer_inputs.push(current.clone());

    let logit_mat = head.output.forward(&current)?;
    if logit_mat.cols() != 1 {
        return Err(ModelError::Shape(format!(
            "output layer must emit one logit, emits {}",
            logit_mat.cols()
        )));
    }
    let logits = Vector::from_vec_unchecked((0..batch).map(|b| logit_mat[(b, 0)]).collect());
    let probs = logits.map(sigmoid);
    cache.logits = logits;
    cache.probs = probs.clone();
    Ok((probs, cache))
}

fn batch_norm_train(bn: &BatchNorm, affine: &Matrix) -> Result<(Matrix, BnCache), ModelError> {
    let (batch, width) = (affine.rows(), affine.cols());
    if width != bn.width() {
        return Err(ModelError::Shape(format!(
            "batch norm width {} does not match affine width {width}",
            bn.width()
        )));
    }
    let mut mean = Vector::zeros(width);
    for b in 0..batch {
        for c in 0..width {
            mean[c] += affine[(b, c)];
        }
    }
    mean.scale(1.0 / batch as f64);
    let mut var = Vector::zeros(width);
    for b in 0..batch {
        for c in 0..width {
            let d = affine[(b, c)] - mean[c];
            var[c] += d * d;
        }
    }
    var.scale(1.0 / batch as f64);

    let mut normalized = Matrix::zeros(batch, width);
    let mut out = Matrix::zeros(batch, width);
    for b in 0..batch {
        for c in 0..width {
            let xhat = (affine[(b, c)] - mean[c]) / (var[c] + bn.epsilon).sqrt();
            normalized[(b, c)] = xhat;
            out[(b, c)] = bn.gamma[c] * xhat + bn.beta[c];
        }
    }
    Ok((out, BnCache { mean, var, normalized }))
}

fn batch_norm_infer(bn: &BatchNorm, affine: &Matrix) -> Result<Matrix, ModelError> {
    let (batch, width) = (affine.rows(), affine.cols());
    if width != bn.width() {
        return Err(ModelError::Shape(format!(
            "batch norm width {} does not match affine width {width}",
            bn.width()
        )));
    }
    let mut out = Matrix::zeros(batch, width);
    for b in 0..batch {
        for c in 0..width {
            let xhat = (affine[(b, c)] - bn.running_mean[c]) / (bn.running_var[c] + bn.epsilon).sqrt();
            out[(b, c)] = bn.gamma[c] * xhat + bn.beta[c];
        }
    }
    Ok(out)
}

/// Fold the cached batch statistics into the running statistics:
/// `running = (1 - momentum) * running + momentum * batch`.
pub fn update_running_stats(head: &mut MlpHead, cache: &MlpCache) -> Result<(), ModelError> {
    if cache.bn.len() != head.hidden.len() {
        return Err(ModelError::State(
            "cache does not come from a train-mode forward pass".into(),
        ));
    }
    for ((_, bn), stats) in head.hidden.iter_mut().zip(&cache.bn) {
        let m = bn.momentum;
        for c in 0..bn.width() {
            bn.running_mean[c] = (1.0 - m) * bn.running_mean[c] + m * stats.mean[c];
            bn.running_var[c] = (1.0 - m) * bn.running_var[c] + m * stats.var[c];
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weight: Matrix,
    pub bias: Vector,
}

impl DenseGrad {
    fn zeros_like(layer: &DenseLayer) -> Self {
        DenseGrad {
            weight: Matrix::zeros(layer.weight.rows(), layer.weight.cols()),
            bias: Vector::zeros(layer.bias.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnGrad {
    pub gamma: Vector,
    pub beta: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    pub hidden: Vec<(DenseGrad, BnGrad)>,
    pub output: DenseGrad,
}

impl HeadGrads {
    pub fn zeros_like(head: &MlpHead) -> Self {
        HeadGrads {
            hidden: head
                .hidden
                .iter()
                .map(|(layer, bn)| {
                    (
                        DenseGrad::zeros_like(layer),
                        BnGrad {
                            gamma: Vector::zeros(bn.width()),
                            beta: Vector::zeros(bn.width()),
                        },
                    )
                })
                .collect(),
            output: DenseGrad::zeros_like(&head.output),
        }
    }
}

fn dense_backward(
    layer: &DenseLayer,
    input: &Matrix,
    out_grad: &Matrix,
    grad: &mut DenseGrad,
) -> Result<Matrix, ModelError> {
    let batch = input.rows();
    let mut in_grad = Matrix::zeros(batch, layer.in_dim());
    for b in 0..batch {
        let dy = Vector::from_vec_unchecked(out_grad.row(b).to_vec());
        let x = Vector::from_vec_unchecked(input.row(b).to_vec());
        grad.weight.add_outer(1.0, &dy, &x)?;
        grad.bias.axpy(1.0, &dy)?;
        let dx = layer.weight.transpose_matvec(&dy)?;
        in_grad.row_mut(b).copy_from_slice(dx.as_slice());
    }
    Ok(in_grad)
}

/// Backward pass of the head given dL/dlogit per batch row. Returns dL/dinput
/// (the gradient flowing to the pooled representation) plus parameter grads.
pub fn mlp_backward(
    head: &MlpHead,
    cache: &MlpCache,
    logit_grad: &Vector,
) -> Result<(Matrix, HeadGrads), ModelError> {
    let batch = cache.probs.len();
    if cache.bn.len() != head.hidden.len() || cache.relu_out.len() != head.hidden.len() {
        return Err(ModelError::State(
            "cache does not come from a train-mode forward pass".into(),
        ));
    }
    if logit_grad.len() != batch {
        return Err(ModelError::Shape(format!(
            "logit gradient has {} entries for batch of {batch}",
            logit_grad.len()
        )));
    }

    let mut grads = HeadGrads::zeros_like(head);
    let mut dz = Matrix::zeros(batch, 1);
    for b in 0..batch {
        dz[(b, 0)] = logit_grad[b];
    }
    let last_input = cache.layer_inputs.last().expect("cache has inputs");
    let mut current = dense_backward(&head.output, last_input, &dz, &mut grads.output)?;

    for j in (0..head.hidden.len()).rev() {
        let (layer, bn) = &head.hidden[j];
        let (_, bn_grad) = &mut grads.hidden[j];

        // Dropout backward.
        if let Some(mask) = &cache.dropout_masks[j] {
            for (g, m) in current.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                *g *= m;
            }
        }
        // ReLU backward: pass where the activation survived.
        for (g, &r) in current
            .as_mut_slice()
            .iter_mut()
            .zip(cache.relu_out[j].as_slice())
        {
            if r <= 0.0 {
                *g = 0.0;
            }
        }
        // Batch-norm backward through the batch statistics.
        let stats = &cache.bn[j];
        let width = bn.width();
        let n = batch as f64;
        let mut dx = Matrix::zeros(batch, width);
        for c in 0..width {
            let inv_std = 1.0 / (stats.var[c] + bn.epsilon).sqrt();
            let mut sum_dxhat = 0.0;
            let mut sum_dxhat_xhat = 0.0;
            for b in 0..batch {
                let dy = current[(b, c)];
                bn_grad.beta[c] += dy;
                bn_grad.gamma[c] += dy * stats.normalized[(b, c)];
                let dxhat = dy * bn.gamma[c];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * stats.normalized[(b, c)];
            }
            for b in 0..batch {
                let dxhat = current[(b, c)] * bn.gamma[c];
                dx[(b, c)] = inv_std / n
                    * (n * dxhat - sum_dxhat - stats.normalized[(b, c)] * sum_dxhat_xhat);
            }
        }
        let (dense_grad, _) = &mut grads.hidden[j];
        current = dense_backward(layer, &cache.layer_inputs[j], &dx, dense_grad)?;
    }
    Ok((current, grads))
}
