//! Trained-model artifact: prediction and versioned serialization.
//!
//! Models are stored as JSON with base64-encoded little-endian 64-bit
//! weight blobs per layer, so a save/load round trip reproduces every
//! prediction bit for bit. The loader verifies the format version,
//! every layer shape, and — for full feature-vector models — the
//! feature-order fingerprint.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{forward, BatchNormLayer, DenseLayer, Matrix, Mode, ModelConfig, ModelParameters};
use crate::basemetrics::clamp01;
use crate::corpus::write_atomic;
use crate::error::{MatraError, Result};
use crate::features::{
    apply_normalization, FeatureNormalization, FeatureVector, FEATURE_COUNT, FEATURE_LABELS,
};

/// Format version written to and required from model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A ready-to-score regressor: architecture, weights, and the feature
/// normalization fitted at training time. Immutable after loading, so
/// prediction is safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub params: ModelParameters,
    pub normalization: FeatureNormalization,
    /// Column labels the model was trained on; present exactly when the
    /// input is the full feature vector.
    pub feature_order: Option<Vec<String>>,
}

impl TrainedModel {
    /// Assemble a model from training products, deriving the
    /// feature-order fingerprint from the input width.
    pub fn new(
        config: ModelConfig,
        params: ModelParameters,
        normalization: FeatureNormalization,
    ) -> Result<Self> {
        config.validate()?;
        params.validate_against(&config)?;
        if normalization.mean.len() != config.input_dim
            || normalization.stddev.len() != config.input_dim
        {
            return Err(MatraError::dimension(format!(
                "normalization covers {} components, model expects {}",
                normalization.mean.len(),
                config.input_dim
            )));
        }
        let feature_order = (config.input_dim == FEATURE_COUNT)
            .then(|| FEATURE_LABELS.iter().map(|s| s.to_string()).collect());
        Ok(TrainedModel {
            config,
            params,
            normalization,
            feature_order,
        })
    }

    /// Score one raw feature row: normalize, run the inference pass,
    /// clamp to [0,1].
    pub fn predict_row(&self, features: &[f64]) -> Result<f64> {
        Ok(self.predict_batch(&[features.to_vec()])?[0])
    }

    /// Score a full feature vector; requires a 24-input model.
    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        if self.config.input_dim != FEATURE_COUNT {
            return Err(MatraError::dimension(format!(
                "model takes {} inputs, not a full feature vector",
                self.config.input_dim
            )));
        }
        self.predict_row(&features.as_array())
    }

    /// Score many rows in one forward pass.
    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let normalized: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| apply_normalization(r, &self.normalization))
            .collect::<Result<_>>()?;
        let batch = Matrix::from_rows(&normalized);
        let pass = forward(&self.params, &self.config, &batch, Mode::Infer, None)?;
        Ok(pass.predictions.into_iter().map(clamp01).collect())
    }

    /// Serialize to versioned JSON at `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            config: self.config.clone(),
            feature_order: self.feature_order.clone(),
            normalization: self.normalization.clone(),
            layers: self
                .params
                .dense
                .iter()
                .map(|l| LayerBlob {
                    fan_in: l.weights.rows(),
                    fan_out: l.weights.cols(),
                    weights: encode(l.weights.data()),
                    bias: encode(&l.bias),
                })
                .collect(),
            batch_norm: self
                .params
                .batch_norm
                .iter()
                .map(|bn| BatchNormBlob {
                    scale: encode(&bn.scale),
                    shift: encode(&bn.shift),
                    running_mean: encode(&bn.running_mean),
                    running_var: encode(&bn.running_var),
                })
                .collect(),
        };
        let mut json = serde_json::to_string_pretty(&file)
            .map_err(|e| MatraError::numeric(format!("model serialization failed: {e}")))?;
        json.push('\n');
        write_atomic(path, json.as_bytes())
    }

    /// Load and fully verify a model file.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&content).map_err(|e| {
            MatraError::ArtifactFormat {
                path: path.to_path_buf(),
                message: format!("not a model file: {e}"),
            }
        })?;
        let bad = |message: String| MatraError::ArtifactFormat {
            path: path.to_path_buf(),
            message,
        };
        if file.version != MODEL_FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported model format version {} (this build reads {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        file.config.validate()?;
        let dims = file.config.layer_dims();
        if file.layers.len() != dims.len() {
            return Err(bad(format!(
                "{} layers stored, architecture needs {}",
                file.layers.len(),
                dims.len()
            )));
        }
        let mut dense = Vec::with_capacity(dims.len());
        for (i, (blob, &(fan_in, fan_out))) in file.layers.iter().zip(&dims).enumerate() {
            if blob.fan_in != fan_in || blob.fan_out != fan_out {
                return Err(bad(format!(
                    "layer {i} is {}x{}, architecture needs {fan_in}x{fan_out}",
                    blob.fan_in, blob.fan_out
                )));
            }
            dense.push(DenseLayer {
                weights: Matrix::from_vec(
                    fan_in,
                    fan_out,
                    decode(&blob.weights, fan_in * fan_out, path, &format!("layer {i} weights"))?,
                ),
                bias: decode(&blob.bias, fan_out, path, &format!("layer {i} bias"))?,
            });
        }
        let expected_bn = if file.config.use_batch_norm {
            file.config.hidden_widths.len()
        } else {
            0
        };
        if file.batch_norm.len() != expected_bn {
            return Err(bad(format!(
                "{} batch-norm layers stored, architecture needs {expected_bn}",
                file.batch_norm.len()
            )));
        }
        let mut batch_norm = Vec::with_capacity(expected_bn);
        for (i, (blob, &width)) in file
            .batch_norm
            .iter()
            .zip(&file.config.hidden_widths)
            .enumerate()
        {
            batch_norm.push(BatchNormLayer {
                scale: decode(&blob.scale, width, path, &format!("batch-norm {i} scale"))?,
                shift: decode(&blob.shift, width, path, &format!("batch-norm {i} shift"))?,
                running_mean: decode(
                    &blob.running_mean,
                    width,
                    path,
                    &format!("batch-norm {i} running mean"),
                )?,
                running_var: decode(
                    &blob.running_var,
                    width,
                    path,
                    &format!("batch-norm {i} running variance"),
                )?,
            });
        }
        if file.normalization.mean.len() != file.config.input_dim
            || file.normalization.stddev.len() != file.config.input_dim
        {
            return Err(bad(format!(
                "normalization covers {} components, model expects {}",
                file.normalization.mean.len(),
                file.config.input_dim
            )));
        }
        if file
            .normalization
            .mean
            .iter()
            .chain(&file.normalization.stddev)
            .any(|v| !v.is_finite())
        {
            return Err(bad("normalization contains non-finite values".to_string()));
        }
        // Fingerprint: full feature-vector models must declare the
        // canonical column order, narrower models must not.
        match (&file.feature_order, file.config.input_dim == FEATURE_COUNT) {
            (Some(order), true) => {
                if order.len() != FEATURE_LABELS.len()
                    || order.iter().zip(FEATURE_LABELS).any(|(a, b)| a != b)
                {
                    return Err(bad("feature order does not match this build".to_string()));
                }
            }
            (None, false) => {}
            (Some(_), false) => {
                return Err(bad(format!(
                    "feature order declared for a {}-input model",
                    file.config.input_dim
                )));
            }
            (None, true) => {
                return Err(bad(
                    "full feature-vector model is missing its feature order".to_string(),
                ));
            }
        }
        let model = TrainedModel {
            config: file.config,
            params: ModelParameters { dense, batch_norm },
            normalization: file.normalization,
            feature_order: file.feature_order,
        };
        model.params.validate_against(&model.config)?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    config: ModelConfig,
    feature_order: Option<Vec<String>>,
    normalization: FeatureNormalization,
    layers: Vec<LayerBlob>,
    batch_norm: Vec<BatchNormBlob>,
}

#[derive(Serialize, Deserialize)]
struct LayerBlob {
    fan_in: usize,
    fan_out: usize,
    weights: String,
    bias: String,
}

#[derive(Serialize, Deserialize)]
struct BatchNormBlob {
    scale: String,
    shift: String,
    running_mean: String,
    running_var: String,
}

fn encode(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode(blob: &str, expected_len: usize, path: &Path, what: &str) -> Result<Vec<f64>> {
    let bad = |message: String| MatraError::ArtifactFormat {
        path: path.to_path_buf(),
        message,
    };
    let bytes = BASE64
        .decode(blob)
        .map_err(|e| bad(format!("{what}: invalid base64: {e}")))?;
    if bytes.len() != expected_len * 8 {
        return Err(bad(format!(
            "{what}: {} bytes stored, expected {}",
            bytes.len(),
            expected_len * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunked by 8")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad(format!("{what}: contains non-finite values")));
    }
    Ok(values)
}
