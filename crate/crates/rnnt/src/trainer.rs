//! Online steepest descent with momentum, Gaussian weight noise and
//! early stopping on a validation metric.
//!
//! Weight noise is regularisation, not a random walk: each sequence gets a
//! freshly perturbed copy of the weights for its forward/backward pass, and
//! the momentum update then applies to the clean weights. Validation always
//! runs on clean weights. Presentation order is reshuffled every epoch from
//! the run's seeded stream, so a run is a pure function of its seed and the
//! whole trainer state (including the generator) can be checkpointed and
//! resumed bit for bit.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::decoder::beam_search;
use crate::error::{Error, Result};
use crate::math::SeededRng;
use crate::metrics::{bits_per_target, error_rate};
use crate::model::{Sample, TransducerModel};
use crate::networks::transcribe;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStopMetric {
    LogLoss,
    ErrorRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Default 1e-3 suits the bundled desk-scale tasks; the reference
    /// full-corpus setting of 1e-4 stays available through configuration.
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_noise_std: f64,
    /// Initial weights are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub max_epochs: usize,
    pub early_stop_metric: EarlyStopMetric,
    /// Stop after this many epochs without validation improvement;
    /// 0 disables early stopping (the best checkpoint is still tracked).
    pub patience: usize,
    pub seed: u64,
    /// Beam width used when the validation metric is the error rate.
    pub eval_beam_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.9,
            weight_noise_std: 0.075,
            init_range: 0.1,
            max_epochs: 100,
            early_stop_metric: EarlyStopMetric::LogLoss,
            patience: 0,
            seed: 1,
            eval_beam_width: 8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // Zero is allowed as a degenerate null update; negatives are not.
        if !(self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("learning_rate must be >= 0, got {}", self.learning_rate),
            });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig {
                what: format!("momentum must be in [0, 1), got {}", self.momentum),
            });
        }
        if !(self.weight_noise_std >= 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("weight_noise_std must be >= 0, got {}", self.weight_noise_std),
            });
        }
        if !(self.init_range > 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("init_range must be > 0, got {}", self.init_range),
            });
        }
        if self.eval_beam_width < 1 {
            return Err(Error::InvalidConfig {
                what: "eval_beam_width must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// One row of the per-epoch metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training loss per sequence, in nats (measured on the noisy
    /// weights actually used for the updates).
    pub train_nats: f64,
    /// Mean validation loss per sequence on clean weights, in nats.
    pub val_nats: f64,
    pub val_bits_per_target: f64,
    /// Present when the early-stop metric is the error rate.
    pub val_error_rate: Option<f64>,
}

/// Everything needed to resume training exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: TransducerModel,
    pub velocity: TransducerModel,
    pub rng: SeededRng,
    /// Epochs completed so far.
    pub epoch: usize,
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub log: Vec<EpochMetrics>,
    /// State snapshot at the epoch with the best validation metric.
    pub best: TrainState,
    pub best_epoch: usize,
    pub best_metric: f64,
}

/// `velocity = momentum * velocity - lr * grad; param += velocity`, over
/// every parameter array.
pub fn momentum_update(
    params: &mut TransducerModel,
    velocity: &mut TransducerModel,
    grads: &TransducerModel,
    learning_rate: f64,
    momentum: f64,
) {
    let grad_arrays = grads.param_arrays();
    for (((_, p), (_, v)), (_, g)) in params
        .param_arrays_mut()
        .into_iter()
        .zip(velocity.param_arrays_mut())
        .zip(grad_arrays)
    {
        for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
            *vi = momentum * *vi - learning_rate * gi;
            *pi += *vi;
        }
    }
}

pub struct Trainer {
    state: TrainState,
    config: TrainConfig,
}

impl Trainer {
    pub fn new(model: TransducerModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let velocity = model.zeros_like();
        Ok(Self {
            state: TrainState {
                velocity,
                model,
                rng: SeededRng::new(config.seed),
                epoch: 0,
            },
            config,
        })
    }

    /// Continues from a checkpointed state; the generator picks up exactly
    /// where it left off.
    pub fn resume(state: TrainState, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { state, config })
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Runs until `max_epochs` (or until patience runs out), returning the
    /// per-epoch log and the best state by the configured metric.
    pub fn run(&mut self, train: &[Sample], validation: &[Sample]) -> Result<TrainRun> {
        if train.is_empty() {
            return Err(Error::EmptyInput { what: "training set" });
        }
        if validation.is_empty() {
            return Err(Error::EmptyInput {
                what: "validation set",
            });
        }

        let mut log = Vec::new();
        let mut best: Option<(f64, usize, TrainState)> = None;
        while self.state.epoch < self.config.max_epochs {
            let train_nats = self.train_epoch(train)?;
            self.state.epoch += 1;

            let row = self.evaluate_epoch(validation, train_nats)?;
            let metric = match self.config.early_stop_metric {
                EarlyStopMetric::LogLoss => row.val_nats,
                EarlyStopMetric::ErrorRate => row.val_error_rate.expect("computed for this metric"),
            };
            log.push(row);

            let improved = best.as_ref().map_or(true, |(m, _, _)| metric < *m);
            if improved {
                best = Some((metric, self.state.epoch, self.state.clone()));
            } else if self.config.patience > 0 {
                let since_best = self.state.epoch - best.as_ref().expect("set on first epoch").1;
                if since_best >= self.config.patience {
                    break;
                }
            }
        }

        let (best_metric, best_epoch, best_state) = best.expect("max_epochs >= 1 produces an epoch");
        Ok(TrainRun {
            log,
            best: best_state,
            best_epoch,
            best_metric,
        })
    }

    fn train_epoch(&mut self, train: &[Sample]) -> Result<f64> {
        let mut order: Vec<usize> = (0..train.len()).collect();
        self.state.rng.shuffle(&mut order);

        let mut total = 0.0;
        for &idx in &order {
            let sample = &train[idx];
            let result = if self.config.weight_noise_std > 0.0 {
                let mut noisy = self.state.model.clone();
                let std = self.config.weight_noise_std;
                for (_, arr) in noisy.param_arrays_mut() {
                    for w in arr {
                        *w += std * self.state.rng.gaussian();
                    }
                }
                noisy.loss_and_gradients(sample)
            } else {
                self.state.model.loss_and_gradients(sample)
            };
            let (loss, grads) = result.map_err(|e| wrap_sequence_error(idx, e))?;
            if !loss.is_finite() {
                return Err(Error::TrainingFailed {
                    sequence_index: idx,
                    cause: String::from("non-finite loss"),
                });
            }
            momentum_update(
                &mut self.state.model,
                &mut self.state.velocity,
                &grads,
                self.config.learning_rate,
                self.config.momentum,
            );
            total += loss;
        }
        Ok(total / train.len() as f64)
    }

    fn evaluate_epoch(&self, validation: &[Sample], train_nats: f64) -> Result<EpochMetrics> {
        let (val_nats, val_bits) = validation_loss(&self.state.model, validation)?;
        let val_error_rate = match self.config.early_stop_metric {
            EarlyStopMetric::ErrorRate => Some(validation_error_rate(
                &self.state.model,
                validation,
                self.config.eval_beam_width,
            )?),
            EarlyStopMetric::LogLoss => None,
        };
        Ok(EpochMetrics {
            epoch: self.state.epoch,
            train_nats,
            val_nats,
            val_bits_per_target: val_bits,
            val_error_rate,
        })
    }
}

fn wrap_sequence_error(idx: usize, e: Error) -> Error {
    Error::TrainingFailed {
        sequence_index: idx,
        cause: format!("{e}"),
    }
}

/// Mean loss per sequence (nats) and bits per target label over a dataset,
/// on clean weights.
pub fn validation_loss(model: &TransducerModel, samples: &[Sample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput {
            what: "validation set",
        });
    }
    let mut total_nats = 0.0;
    let mut total_labels = 0usize;
    for (idx, sample) in samples.iter().enumerate() {
        let lp = model.log_prob(sample).map_err(|e| wrap_sequence_error(idx, e))?;
        total_nats += -lp;
        total_labels += sample.labels.len();
    }
    let bits = if total_labels > 0 {
        bits_per_target(total_nats, total_labels)
    } else {
        0.0
    };
    Ok((total_nats / samples.len() as f64, bits))
}

/// Decodes every sample with a beam of `width` and reports the error rate
/// against the targets, as a percentage.
pub fn validation_error_rate(
    model: &TransducerModel,
    samples: &[Sample],
    width: usize,
) -> Result<f64> {
    let mut outputs = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    for (idx, sample) in samples.iter().enumerate() {
        let (f, _) = transcribe(&model.transcription, &sample.features, false)
            .map_err(|e| wrap_sequence_error(idx, e))?;
        let decoded =
            beam_search(&f, &model.prediction, width, 1).map_err(|e| wrap_sequence_error(idx, e))?;
        outputs.push(decoded.first().map(|h| h.labels.clone()).unwrap_or_default());
        targets.push(sample.labels.clone());
    }
    error_rate(&outputs, &targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_converges_to_the_geometric_series_limit() {
        // With a frozen gradient g, v_n = -lr * g * (1 - mu^n) / (1 - mu),
        // approaching -lr * g / (1 - mu).
        let mut params = TransducerModel::zeros(2, 2, 2, 2);
        let mut velocity = params.zeros_like();
        let mut grads = params.zeros_like();
        for (_, arr) in grads.param_arrays_mut() {
            for v in arr {
                *v = 0.37;
            }
        }
        let (lr, mu) = (0.01, 0.9);
        for _ in 0..400 {
            momentum_update(&mut params, &mut velocity, &grads, lr, mu);
        }
        let limit = -lr * 0.37 / (1.0 - mu);
        for (_, arr) in velocity.param_arrays() {
            for &v in arr {
                assert!((v - limit).abs() < 1e-12, "{v} vs {limit}");
            }
        }
    }

    #[test]
    fn zero_learning_rate_and_zero_noise_change_nothing() {
        let mut rng = SeededRng::new(3);
        let model = TransducerModel::init_uniform(2, 2, 3, 3, 0.1, &mut rng);
        let data: Vec<Sample> = (0..4)
            .map(|i| Sample {
                features: vec![vec![0.1 * i as f64, -0.2]; 3],
                labels: vec![i % 2],
            })
            .collect();
        let config = TrainConfig {
            learning_rate: 0.0,
            weight_noise_std: 0.0,
            max_epochs: 3,
            ..TrainConfig::default()
        };
        let before = model.clone();
        let mut trainer = Trainer::new(model, config).unwrap();
        trainer.run(&data, &data).unwrap();
        assert_eq!(trainer.state().model, before);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad = |f: fn(&mut TrainConfig)| {
            let mut c = TrainConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.learning_rate = -1.0));
        assert!(bad(|c| c.momentum = 1.0));
        assert!(bad(|c| c.momentum = -0.1));
        assert!(bad(|c| c.weight_noise_std = -0.075));
        assert!(bad(|c| c.init_range = 0.0));
        assert!(bad(|c| c.eval_beam_width = 0));
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn empty_datasets_are_rejected() {
        let model = TransducerModel::zeros(2, 2, 2, 2);
        let mut trainer = Trainer::new(model, TrainConfig::default()).unwrap();
        let sample = Sample {
            features: vec![vec![0.0, 0.0]],
            labels: vec![],
        };
        assert!(trainer.run(&[], &[sample.clone()]).is_err());
        assert!(trainer.run(&[sample], &[]).is_err());
    }
}
