//! From-scratch dense feed-forward regressor.
//!
//! Hidden layers run affine → optional batch normalization → tanh →
//! inverted dropout; the output layer is a single linear unit. Training
//! uses mini-batch Adam on mean squared error plus an L1 penalty on the
//! dense weight matrices. Everything is deterministic given the config
//! seed: initialization, the train/validation split, epoch shuffles and
//! dropout masks each draw from their own counter-mode RNG stream.

pub mod matrix;
pub mod model;
pub mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MatraError, Result};
pub use matrix::Matrix;
pub use model::{TrainedModel, MODEL_FORMAT_VERSION};
pub use train::{train, write_trace, EpochTrace, TrainHyper, TrainOutcome};

/// RNG stream ids deriving independent deterministic sequences from one
/// seed (ChaCha streams): parameter initialization, the
/// train/validation split, per-epoch shuffles, and dropout masks.
pub(crate) const INIT_STREAM: u64 = 0;
pub(crate) const SPLIT_STREAM: u64 = 1;
pub(crate) const SHUFFLE_STREAM: u64 = 2;
pub(crate) const DROPOUT_STREAM: u64 = 3;

/// Batch-norm running statistics move toward each batch's statistics by
/// this factor per training batch.
pub const BATCH_NORM_MOMENTUM: f64 = 0.1;

/// Numerical floor inside batch-norm's standard deviation.
pub const BATCH_NORM_EPSILON: f64 = 1e-8;

/// Architecture and regularization settings for one regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Width of the input feature vector.
    pub input_dim: usize,
    /// Hidden layer widths, input side first.
    pub hidden_widths: Vec<usize>,
    /// Inverted-dropout rate applied after each hidden activation
    /// during training; must lie in [0,1).
    pub dropout_rate: f64,
    /// L1 penalty coefficient on dense weight matrices (biases and
    /// batch-norm parameters are never penalized).
    pub l1_lambda: f64,
    /// Insert a batch-normalization step between each hidden affine and
    /// its tanh.
    pub use_batch_norm: bool,
    /// Seed for every random choice the model makes.
    pub seed: u64,
}

impl ModelConfig {
    /// The six-hidden-layer MaTrA-1 architecture.
    pub fn matra1() -> Self {
        ModelConfig {
            input_dim: 24,
            hidden_widths: vec![256, 128, 64, 32, 16, 8],
            dropout_rate: 0.2,
            l1_lambda: 1e-5,
            use_batch_norm: false,
            seed: 42,
        }
    }

    /// The ten-hidden-layer MaTrA-2 architecture.
    pub fn matra2() -> Self {
        ModelConfig {
            input_dim: 24,
            hidden_widths: vec![256, 256, 128, 128, 64, 64, 32, 32, 16, 8],
            dropout_rate: 0.2,
            l1_lambda: 1e-5,
            use_batch_norm: false,
            seed: 42,
        }
    }

    /// Look up a preset by its command-line name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "matra1" => Ok(Self::matra1()),
            "matra2" => Ok(Self::matra2()),
            other => Err(MatraError::invalid(format!(
                "unknown preset {other:?}; expected matra1 or matra2"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(MatraError::invalid("input_dim must be positive"));
        }
        if self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(MatraError::invalid("hidden widths must be positive"));
        }
        if !self.dropout_rate.is_finite() || !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(MatraError::invalid(format!(
                "dropout_rate must lie in [0,1), got {}",
                self.dropout_rate
            )));
        }
        if !self.l1_lambda.is_finite() || self.l1_lambda < 0.0 {
            return Err(MatraError::invalid(format!(
                "l1_lambda must be a nonnegative real, got {}",
                self.l1_lambda
            )));
        }
        Ok(())
    }

    /// (fan_in, fan_out) of every dense layer, hidden layers first,
    /// then the single-unit output layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.input_dim;
        for &w in &self.hidden_widths {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims.push((fan_in, 1));
        dims
    }
}

/// Parameters of each dense layer: `fan_in·fan_out + fan_out`.
pub fn layer_param_counts(config: &ModelConfig) -> Vec<usize> {
    config
        .layer_dims()
        .iter()
        .map(|&(fi, fo)| fi * fo + fo)
        .collect()
}

/// Total dense parameter count (weights plus biases).
pub fn param_count(config: &ModelConfig) -> usize {
    layer_param_counts(config).iter().sum()
}

/// One affine layer: weights are fan_in × fan_out, bias has fan_out.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Learnable scale/shift plus running statistics for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

/// All weights of one model. `batch_norm` holds one entry per hidden
/// layer when the config enables it and is empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub dense: Vec<DenseLayer>,
    pub batch_norm: Vec<BatchNormLayer>,
}

impl ModelParameters {
    /// Glorot-uniform initialization: each weight is drawn from
    /// U(−L, L) with L = √(6/(fan_in+fan_out)), in row-major order,
    /// layer by layer; biases start at zero, batch-norm at identity.
    /// Draws come from the seed's initialization stream only, so
    /// parameters do not depend on training settings.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(INIT_STREAM);
        let mut dense = Vec::new();
        for (fan_in, fan_out) in config.layer_dims() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            dense.push(DenseLayer {
                weights: Matrix::from_vec(fan_in, fan_out, data),
                bias: vec![0.0; fan_out],
            });
        }
        let batch_norm = if config.use_batch_norm {
            config
                .hidden_widths
                .iter()
                .map(|&w| BatchNormLayer {
                    scale: vec![1.0; w],
                    shift: vec![0.0; w],
                    running_mean: vec![0.0; w],
                    running_var: vec![1.0; w],
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(ModelParameters { dense, batch_norm })
    }

    /// Recount dense parameters from the actual stored shapes.
    pub fn dense_param_count(&self) -> usize {
        self.dense
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    /// Check this parameter set fits `config`'s layer shapes.
    pub fn validate_against(&self, config: &ModelConfig) -> Result<()> {
        let dims = config.layer_dims();
        if self.dense.len() != dims.len() {
            return Err(MatraError::dimension(format!(
                "model has {} dense layers, config expects {}",
                self.dense.len(),
                dims.len()
            )));
        }
        for (i, (layer, &(fi, fo))) in self.dense.iter().zip(&dims).enumerate() {
            if layer.weights.rows() != fi || layer.weights.cols() != fo || layer.bias.len() != fo {
                return Err(MatraError::dimension(format!(
                    "dense layer {i} is {}x{} with bias {}, config expects {fi}x{fo}",
                    layer.weights.rows(),
                    layer.weights.cols(),
                    layer.bias.len()
                )));
            }
        }
        let expected_bn = if config.use_batch_norm {
            config.hidden_widths.len()
        } else {
            0
        };
        if self.batch_norm.len() != expected_bn {
            return Err(MatraError::dimension(format!(
                "model has {} batch-norm layers, config expects {expected_bn}",
                self.batch_norm.len()
            )));
        }
        for (i, (bn, &w)) in self.batch_norm.iter().zip(&config.hidden_widths).enumerate() {
            if bn.scale.len() != w
                || bn.shift.len() != w
                || bn.running_mean.len() != w
                || bn.running_var.len() != w
            {
                return Err(MatraError::dimension(format!(
                    "batch-norm layer {i} width mismatch, config expects {w}"
                )));
            }
        }
        Ok(())
    }

    /// Trainable slabs in canonical order: per dense layer weights then
    /// bias, then per batch-norm layer scale then shift. Running
    /// statistics are not trainable and are excluded.
    fn trainable_slabs_mut(&mut self) -> Vec<&mut [f64]> {
        let mut slabs = Vec::new();
        for layer in &mut self.dense {
            slabs.push(layer.weights.data_mut());
            slabs.push(layer.bias.as_mut_slice());
        }
        for bn in &mut self.batch_norm {
            slabs.push(bn.scale.as_mut_slice());
            slabs.push(bn.shift.as_mut_slice());
        }
        slabs
    }
}

/// Whether a forward pass samples dropout and batch statistics (train)
/// or runs the deterministic inference path (infer).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Batch statistics cached by a train-mode batch-norm step.
#[derive(Debug, Clone)]
pub(crate) struct BnCache {
    pub xhat: Matrix,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Everything backward needs about one hidden layer.
#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// Input to the layer's affine step.
    pub input: Matrix,
    pub bn: Option<BnCache>,
    /// tanh output, before dropout.
    pub tanh_out: Matrix,
    /// Inverted-dropout mask of 0 / (1−p)⁻¹ entries, when sampled.
    pub mask: Option<Matrix>,
}

/// Result of [`forward`]: predictions plus (in train mode) the cached
/// activations backpropagation consumes.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub predictions: Vec<f64>,
    pub(crate) layers: Vec<LayerCache>,
    /// Input to the output affine layer.
    pub(crate) output_input: Matrix,
    pub(crate) mode: Mode,
}

fn affine(input: &Matrix, layer: &DenseLayer) -> Matrix {
    let mut z = input.matmul(&layer.weights);
    let cols = z.cols();
    for r in 0..z.rows() {
        let row = &mut z.data_mut()[r * cols..(r + 1) * cols];
        for (v, b) in row.iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    z
}

fn batch_statistics(z: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let m = z.rows() as f64;
    let mut mean = z.column_sums();
    for v in &mut mean {
        *v /= m;
    }
    let mut var = vec![0.0; z.cols()];
    for r in 0..z.rows() {
        for ((s, v), mu) in var.iter_mut().zip(z.row(r)).zip(&mean) {
            let d = v - mu;
            *s += d * d;
        }
    }
    for v in &mut var {
        *v /= m;
    }
    (mean, var)
}

fn normalize_columns(z: &Matrix, mean: &[f64], var: &[f64]) -> Matrix {
    let mut xhat = z.clone();
    let cols = xhat.cols();
    for r in 0..xhat.rows() {
        let row = &mut xhat.data_mut()[r * cols..(r + 1) * cols];
        for ((v, mu), s2) in row.iter_mut().zip(mean).zip(var) {
            *v = (*v - mu) / (s2 + BATCH_NORM_EPSILON).sqrt();
        }
    }
    xhat
}

fn scale_shift(xhat: &Matrix, bn: &BatchNormLayer) -> Matrix {
    let mut y = xhat.clone();
    let cols = y.cols();
    for r in 0..y.rows() {
        let row = &mut y.data_mut()[r * cols..(r + 1) * cols];
        for ((v, g), b) in row.iter_mut().zip(&bn.scale).zip(&bn.shift) {
            *v = *v * g + b;
        }
    }
    y
}

/// Run the network on a batch.
///
/// Train mode samples dropout masks from `rng` (mask entries are 0 with
/// probability p, else 1/(1−p), drawn row-major per layer) and
/// normalizes with batch statistics; infer mode applies no dropout and
/// uses the stored running statistics. The pass itself never mutates
/// parameters — the training loop folds cached batch statistics into
/// the running values afterwards.
pub fn forward(
    params: &ModelParameters,
    config: &ModelConfig,
    batch: &Matrix,
    mode: Mode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardPass> {
    params.validate_against(config)?;
    if batch.cols() != config.input_dim {
        return Err(MatraError::dimension(format!(
            "batch width {} does not match input_dim {}",
            batch.cols(),
            config.input_dim
        )));
    }
    if batch.rows() == 0 {
        return Err(MatraError::invalid("empty batch"));
    }
    let sample_dropout = mode == Mode::Train && config.dropout_rate > 0.0;
    if sample_dropout && rng.is_none() {
        return Err(MatraError::invalid(
            "train-mode forward with dropout needs an RNG",
        ));
    }
    let keep = 1.0 - config.dropout_rate;
    let mut layers = Vec::with_capacity(config.hidden_widths.len());
    let mut current = batch.clone();
    for (idx, layer) in params.dense[..config.hidden_widths.len()].iter().enumerate() {
        let z = affine(&current, layer);
        let (pre_activation, bn_cache) = if config.use_batch_norm {
            let bn = &params.batch_norm[idx];
            match mode {
                Mode::Train => {
                    let (mean, var) = batch_statistics(&z);
                    let xhat = normalize_columns(&z, &mean, &var);
                    let y = scale_shift(&xhat, bn);
                    (y, Some(BnCache { xhat, mean, var }))
                }
                Mode::Infer => {
                    let xhat = normalize_columns(&z, &bn.running_mean, &bn.running_var);
                    (scale_shift(&xhat, bn), None)
                }
            }
        } else {
            (z, None)
        };
        let mut tanh_out = pre_activation;
        tanh_out.map_in_place(f64::tanh);
        let (next, mask) = if sample_dropout {
            let rng = rng.as_mut().expect("checked above");
            let mut mask = Matrix::zeros(tanh_out.rows(), tanh_out.cols());
            for v in mask.data_mut() {
                *v = if rng.gen::<f64>() < config.dropout_rate {
                    0.0
                } else {
                    1.0 / keep
                };
            }
            let mut dropped = tanh_out.clone();
            for (v, m) in dropped.data_mut().iter_mut().zip(mask.data()) {
                *v *= m;
            }
            (dropped, Some(mask))
        } else {
            (tanh_out.clone(), None)
        };
        if mode == Mode::Train {
            layers.push(LayerCache {
                input: current,
                bn: bn_cache,
                tanh_out,
                mask,
            });
        }
        current = next;
    }
    let output = affine(&current, params.dense.last().expect("output layer"));
    let predictions = (0..output.rows()).map(|r| output.get(r, 0)).collect();
    Ok(ForwardPass {
        predictions,
        layers,
        output_input: current,
        mode,
    })
}

/// Mean squared error over a batch.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(MatraError::dimension(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(MatraError::invalid("empty batch in loss"));
    }
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Training loss: batch MSE plus `l1_lambda · Σ|w|` over dense weight
/// matrices. Biases and batch-norm parameters are not penalized.
pub fn loss(
    predictions: &[f64],
    targets: &[f64],
    params: &ModelParameters,
    l1_lambda: f64,
) -> Result<f64> {
    let mut total = mse(predictions, targets)?;
    if l1_lambda > 0.0 {
        let weight_l1: f64 = params
            .dense
            .iter()
            .map(|l| l.weights.data().iter().map(|w| w.abs()).sum::<f64>())
            .sum();
        total += l1_lambda * weight_l1;
    }
    Ok(total)
}

/// L1 subgradient with the zero-weight case pinned to 0. (`f64::signum`
/// would return ±1 at ±0.0, which is not a subgradient of |·| there.)
fn l1_sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of every trainable parameter, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub dense: Vec<DenseGradient>,
    pub batch_norm: Vec<BatchNormGradient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGradient {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl Gradients {
    /// All-zero gradients shaped like `params`.
    pub fn zeros_like(params: &ModelParameters) -> Self {
        Gradients {
            dense: params
                .dense
                .iter()
                .map(|l| DenseGradient {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            batch_norm: params
                .batch_norm
                .iter()
                .map(|bn| BatchNormGradient {
                    scale: vec![0.0; bn.scale.len()],
                    shift: vec![0.0; bn.shift.len()],
                })
                .collect(),
        }
    }

    /// Slabs in the same canonical order as the trainable parameters.
    fn slabs(&self) -> Vec<&[f64]> {
        let mut slabs: Vec<&[f64]> = Vec::new();
        for layer in &self.dense {
            slabs.push(layer.weights.data());
            slabs.push(&layer.bias);
        }
        for bn in &self.batch_norm {
            slabs.push(&bn.scale);
            slabs.push(&bn.shift);
        }
        slabs
    }

    fn slabs_mut(&mut self) -> Vec<&mut [f64]> {
        let mut slabs: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.dense {
            slabs.push(layer.weights.data_mut());
            slabs.push(layer.bias.as_mut_slice());
        }
        for bn in &mut self.batch_norm {
            slabs.push(bn.scale.as_mut_slice());
            slabs.push(bn.shift.as_mut_slice());
        }
        slabs
    }
}

/// Exact gradients of [`loss`] for the batch behind `pass`, including
/// the L1 subgradient on dense weights.
///
/// Requires a train-mode pass: only those carry the activation caches.
pub fn backward(
    pass: &ForwardPass,
    params: &ModelParameters,
    config: &ModelConfig,
    targets: &[f64],
) -> Result<Gradients> {
    if pass.mode != Mode::Train {
        return Err(MatraError::invalid(
            "backward needs a train-mode forward pass",
        ));
    }
    let m = pass.predictions.len();
    if targets.len() != m {
        return Err(MatraError::dimension(format!(
            "{m} predictions vs {} targets",
            targets.len()
        )));
    }
    let mut grads = Gradients::zeros_like(params);
    // d(MSE)/d(prediction_i) = 2(p_i − t_i)/m.
    let dpred = Matrix::from_vec(
        m,
        1,
        pass.predictions
            .iter()
            .zip(targets)
            .map(|(p, t)| 2.0 * (p - t) / m as f64)
            .collect(),
    );
    // Output affine layer.
    let out_idx = params.dense.len() - 1;
    grads.dense[out_idx].weights = pass.output_input.t_matmul(&dpred);
    grads.dense[out_idx].bias = dpred.column_sums();
    let mut dcurrent = dpred.matmul_t(&params.dense[out_idx].weights);
    // Hidden layers, last to first.
    for idx in (0..config.hidden_widths.len()).rev() {
        let cache = &pass.layers[idx];
        // Dropout: gradient flows through the same scaled mask.
        if let Some(mask) = &cache.mask {
            for (d, mk) in dcurrent.data_mut().iter_mut().zip(mask.data()) {
                *d *= mk;
            }
        }
        // tanh'(z) = 1 − tanh(z)².
        for (d, t) in dcurrent.data_mut().iter_mut().zip(cache.tanh_out.data()) {
            *d *= 1.0 - t * t;
        }
        // Batch normalization.
        let dz = if let Some(bn_cache) = &cache.bn {
            let bn = &params.batch_norm[idx];
            let width = bn.scale.len();
            let rows = dcurrent.rows();
            let mf = rows as f64;
            let mut dscale = vec![0.0; width];
            let mut dshift = vec![0.0; width];
            let mut dxhat = dcurrent.clone();
            for r in 0..rows {
                let drow = &mut dxhat.data_mut()[r * width..(r + 1) * width];
                let xrow = bn_cache.xhat.row(r);
                for (((d, x), g), (ds, db)) in drow
                    .iter_mut()
                    .zip(xrow)
                    .zip(&bn.scale)
                    .zip(dscale.iter_mut().zip(dshift.iter_mut()))
                {
                    *ds += *d * x;
                    *db += *d;
                    *d *= g;
                }
            }
            let sum_dxhat = dxhat.column_sums();
            let mut sum_dxhat_xhat = vec![0.0; width];
            for r in 0..rows {
                for ((s, d), x) in sum_dxhat_xhat
                    .iter_mut()
                    .zip(dxhat.row(r))
                    .zip(bn_cache.xhat.row(r))
                {
                    *s += d * x;
                }
            }
            let mut dz = dxhat;
            for r in 0..rows {
                let zrow = &mut dz.data_mut()[r * width..(r + 1) * width];
                let xrow = bn_cache.xhat.row(r);
                for j in 0..width {
                    let s = (bn_cache.var[j] + BATCH_NORM_EPSILON).sqrt();
                    zrow[j] = (mf * zrow[j] - sum_dxhat[j] - xrow[j] * sum_dxhat_xhat[j])
                        / (mf * s);
                }
            }
            grads.batch_norm[idx].scale = dscale;
            grads.batch_norm[idx].shift = dshift;
            dz
        } else {
            dcurrent
        };
        grads.dense[idx].weights = cache.input.t_matmul(&dz);
        grads.dense[idx].bias = dz.column_sums();
        dcurrent = dz.matmul_t(&params.dense[idx].weights);
    }
    // L1 subgradient on dense weights.
    if config.l1_lambda > 0.0 {
        for (g, p) in grads.dense.iter_mut().zip(&params.dense) {
            for (gw, w) in g.weights.data_mut().iter_mut().zip(p.weights.data()) {
                *gw += config.l1_lambda * l1_sign(*w);
            }
        }
    }
    Ok(grads)
}

/// Adam optimizer state: first/second moment estimates per trainable
/// parameter plus the step counter and hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Gradients,
    second_moment: Gradients,
}

impl TrainState {
    pub fn new(
        params: &ModelParameters,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(MatraError::invalid("learning rate must be positive"));
        }
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !b.is_finite() || !(0.0..1.0).contains(&b) {
                return Err(MatraError::invalid(format!("{name} must lie in [0,1)")));
            }
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(MatraError::invalid("epsilon must be positive"));
        }
        Ok(TrainState {
            step: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon,
            first_moment: Gradients::zeros_like(params),
            second_moment: Gradients::zeros_like(params),
        })
    }
}

/// One Adam update with bias correction:
/// m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², then
/// p ← p − lr · (m/(1−β₁ᵗ)) / (√(v/(1−β₂ᵗ)) + ε).
pub fn adam_step(
    state: &mut TrainState,
    params: &mut ModelParameters,
    grads: &Gradients,
) -> Result<()> {
    state.step += 1;
    let t = i32::try_from(state.step)
        .map_err(|_| MatraError::numeric("Adam step counter overflowed"))?;
    let corr1 = 1.0 - state.beta1.powi(t);
    let corr2 = 1.0 - state.beta2.powi(t);
    let param_slabs = params.trainable_slabs_mut();
    let grad_slabs = grads.slabs();
    let m_slabs = state.first_moment.slabs_mut();
    let v_slabs = state.second_moment.slabs_mut();
    if param_slabs.len() != grad_slabs.len() {
        return Err(MatraError::dimension(
            "gradient structure does not match parameters".to_string(),
        ));
    }
    for (((p_slab, g_slab), m_slab), v_slab) in param_slabs
        .into_iter()
        .zip(grad_slabs)
        .zip(m_slabs)
        .zip(v_slabs)
    {
        if p_slab.len() != g_slab.len() {
            return Err(MatraError::dimension(
                "gradient slab does not match parameter slab".to_string(),
            ));
        }
        for (((p, &g), m), v) in p_slab
            .iter_mut()
            .zip(g_slab)
            .zip(m_slab.iter_mut())
            .zip(v_slab.iter_mut())
        {
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
