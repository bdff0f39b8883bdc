//! Deterministic mini-batch training.
//!
//! `train` z-scores the features (statistics fitted on the training
//! split only), runs epoch-shuffled mini-batch Adam, and reports one
//! train/validation loss pair per epoch. Every random choice — split,
//! shuffles, dropout — derives from the model seed, so identical
//! inputs produce bitwise-identical parameters and traces.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    adam_step, backward, forward, loss, mse, Matrix, Mode, ModelConfig, ModelParameters,
    TrainState, BATCH_NORM_MOMENTUM, DROPOUT_STREAM, SHUFFLE_STREAM, SPLIT_STREAM,
};
use crate::corpus::write_atomic;
use crate::error::{MatraError, Result};
use crate::features::{apply_normalization, fit_normalization_rows, FeatureNormalization};

/// Optimizer and loop settings. The architecture itself (widths,
/// dropout, L1, seed) lives in [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fraction of rows held out for validation, in [0,1).
    pub validation_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            epochs: 500,
            batch_size: 32,
            learning_rate: 1e-3,
            validation_fraction: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(MatraError::invalid("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(MatraError::invalid("batch size must be positive"));
        }
        if !self.validation_fraction.is_finite()
            || !(0.0..1.0).contains(&self.validation_fraction)
        {
            return Err(MatraError::invalid(format!(
                "validation fraction must lie in [0,1), got {}",
                self.validation_fraction
            )));
        }
        // Learning rate, betas and epsilon share the optimizer-state
        // validation.
        Ok(())
    }
}

/// Losses of one epoch. `train_loss` is the batch-size-weighted mean of
/// the optimized loss (MSE + L1) over the epoch's mini-batches, each
/// measured before its parameter update; `val_loss` is plain MSE on the
/// held-out rows and absent when the validation fraction is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochTrace {
    /// 1-based epoch number.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Everything `train` produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParameters,
    pub normalization: FeatureNormalization,
    pub trace: Vec<EpochTrace>,
}

fn validate_dataset(config: &ModelConfig, rows: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if rows.is_empty() {
        return Err(MatraError::invalid("training dataset is empty"));
    }
    if rows.len() != targets.len() {
        return Err(MatraError::dimension(format!(
            "{} feature rows vs {} targets",
            rows.len(),
            targets.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != config.input_dim {
            return Err(MatraError::dimension(format!(
                "row {i} has {} features, model expects {}",
                row.len(),
                config.input_dim
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(MatraError::invalid(format!("row {i} contains a non-finite value")));
        }
    }
    for (i, t) in targets.iter().enumerate() {
        if !t.is_finite() || !(0.0..=1.0).contains(t) {
            return Err(MatraError::invalid(format!(
                "target {i} must lie in [0,1], got {t}"
            )));
        }
    }
    Ok(())
}

/// Fold a train-mode pass's batch-norm statistics into the running
/// values: `running ← (1−momentum)·running + momentum·batch`.
fn update_running_statistics(params: &mut ModelParameters, pass: &super::ForwardPass) {
    for (bn, cache) in params.batch_norm.iter_mut().zip(&pass.layers) {
        if let Some(stats) = &cache.bn {
            for (r, b) in bn.running_mean.iter_mut().zip(&stats.mean) {
                *r = (1.0 - BATCH_NORM_MOMENTUM) * *r + BATCH_NORM_MOMENTUM * b;
            }
            for (r, b) in bn.running_var.iter_mut().zip(&stats.var) {
                *r = (1.0 - BATCH_NORM_MOMENTUM) * *r + BATCH_NORM_MOMENTUM * b;
            }
        }
    }
}

/// Train a regressor on `(rows, targets)`.
///
/// Targets must lie in [0,1]. A non-finite loss aborts with a
/// diagnostic naming the epoch instead of continuing on garbage.
pub fn train(
    config: &ModelConfig,
    rows: &[Vec<f64>],
    targets: &[f64],
    hyper: &TrainHyper,
) -> Result<TrainOutcome> {
    config.validate()?;
    hyper.validate()?;
    validate_dataset(config, rows, targets)?;

    // Deterministic split: shuffle indices on the split stream, hold
    // out the leading fraction.
    let n = rows.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(config.seed);
    split_rng.set_stream(SPLIT_STREAM);
    indices.shuffle(&mut split_rng);
    let val_count = (n as f64 * hyper.validation_fraction).floor() as usize;
    let (val_idx, train_idx) = indices.split_at(val_count);
    let mut train_idx = train_idx.to_vec();

    // Normalization comes from the training split only.
    let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].clone()).collect();
    let normalization = fit_normalization_rows(&train_rows)?;
    let normalized: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| apply_normalization(r, &normalization))
        .collect::<Result<_>>()?;

    let val_batch = if val_count > 0 {
        let rows: Vec<Vec<f64>> = val_idx.iter().map(|&i| normalized[i].clone()).collect();
        let targets: Vec<f64> = val_idx.iter().map(|&i| targets[i]).collect();
        Some((Matrix::from_rows(&rows), targets))
    } else {
        None
    };

    let mut params = ModelParameters::init(config)?;
    let mut state = TrainState::new(
        &params,
        hyper.learning_rate,
        hyper.beta1,
        hyper.beta2,
        hyper.epsilon,
    )?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);

    let mut trace = Vec::with_capacity(hyper.epochs);
    for epoch in 1..=hyper.epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let mut weighted_loss = 0.0;
        for chunk in train_idx.chunks(hyper.batch_size) {
            let batch_rows: Vec<Vec<f64>> =
                chunk.iter().map(|&i| normalized[i].clone()).collect();
            let batch_targets: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            let batch = Matrix::from_rows(&batch_rows);
            let pass = forward(
                &params,
                config,
                &batch,
                Mode::Train,
                Some(&mut dropout_rng),
            )?;
            let batch_loss = loss(&pass.predictions, &batch_targets, &params, config.l1_lambda)?;
            if !batch_loss.is_finite() {
                return Err(MatraError::numeric(format!(
                    "training diverged: loss became {batch_loss} at epoch {epoch}"
                )));
            }
            weighted_loss += batch_loss * chunk.len() as f64;
            let grads = backward(&pass, &params, config, &batch_targets)?;
            adam_step(&mut state, &mut params, &grads)?;
            update_running_statistics(&mut params, &pass);
        }
        let train_loss = weighted_loss / train_idx.len() as f64;
        let val_loss = match &val_batch {
            Some((batch, targets)) => {
                let pass = forward(&params, config, batch, Mode::Infer, None)?;
                let l = mse(&pass.predictions, targets)?;
                if !l.is_finite() {
                    return Err(MatraError::numeric(format!(
                        "training diverged: validation loss became {l} at epoch {epoch}"
                    )));
                }
                Some(l)
            }
            None => None,
        };
        trace.push(EpochTrace {
            epoch,
            train_loss,
            val_loss,
        });
    }

    Ok(TrainOutcome {
        params,
        normalization,
        trace,
    })
}

/// Write a loss trace as headerless TSV — one `epoch<TAB>train<TAB>val`
/// line per epoch, `NA` when no validation split exists.
pub fn write_trace(trace: &[EpochTrace], path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in trace {
        out.push_str(&format!("{}\t{}", row.epoch, row.train_loss));
        match row.val_loss {
            Some(v) => out.push_str(&format!("\t{v}\n")),
            None => out.push_str("\tNA\n"),
        }
    }
    write_atomic(path, out.as_bytes())
}
