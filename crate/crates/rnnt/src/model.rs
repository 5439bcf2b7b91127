//! The full transducer: both networks plus the loss pipeline that couples
//! them through the joint lattice. Every parameter array is addressable by
//! a stable dotted name, in a fixed declaration order, for checkpointing,
//! optimizer updates and gradient checking.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::joint::build_lattice;
use crate::lattice::{alignment_grid, forward_pass, loss_and_grads};
use crate::math::SeededRng;
use crate::networks::{
    predict_sequence, prediction_backward, transcribe, transcription_backward, PredictionNet,
    TranscriptionNet,
};

/// One training or evaluation item: a feature sequence and its target
/// labels, each label in `[0, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// All weights of both networks. Also used as the container for gradients
/// and optimizer velocity, which share the exact same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerModel {
    pub prediction: PredictionNet,
    pub transcription: TranscriptionNet,
}

impl TransducerModel {
    pub fn zeros(
        alphabet_size: usize,
        feature_dim: usize,
        hidden_prediction: usize,
        hidden_transcription: usize,
    ) -> Self {
        Self {
            prediction: PredictionNet::zeros(alphabet_size, hidden_prediction),
            transcription: TranscriptionNet::zeros(
                feature_dim,
                alphabet_size,
                hidden_transcription,
            ),
        }
    }

    /// Uniform initialisation of every weight in `[-range, range]`.
    pub fn init_uniform(
        alphabet_size: usize,
        feature_dim: usize,
        hidden_prediction: usize,
        hidden_transcription: usize,
        range: f64,
        rng: &mut SeededRng,
    ) -> Self {
        Self {
            prediction: PredictionNet::init_uniform(alphabet_size, hidden_prediction, range, rng),
            transcription: TranscriptionNet::init_uniform(
                feature_dim,
                alphabet_size,
                hidden_transcription,
                range,
                rng,
            ),
        }
    }

    /// A same-shaped model with every parameter zero (gradient/velocity
    /// container).
    pub fn zeros_like(&self) -> Self {
        Self::zeros(
            self.alphabet_size(),
            self.feature_dim(),
            self.prediction.hidden_size(),
            self.transcription.hidden_size(),
        )
    }

    pub fn alphabet_size(&self) -> usize {
        self.prediction.alphabet_size
    }

    pub fn feature_dim(&self) -> usize {
        self.transcription.feature_dim
    }

    /// Every parameter array with its dotted name, in declaration order.
    pub fn param_arrays(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        push_lstm(&mut out, "prediction.lstm", self.prediction.lstm.arrays());
        out.push(("prediction.w_out".into(), self.prediction.w_out.data()));
        out.push(("prediction.b_out".into(), self.prediction.b_out.as_slice()));
        push_lstm(&mut out, "transcription.fwd", self.transcription.fwd.arrays());
        push_lstm(&mut out, "transcription.bwd", self.transcription.bwd.arrays());
        out.push((
            "transcription.w_out_fwd".into(),
            self.transcription.w_out_fwd.data(),
        ));
        out.push((
            "transcription.w_out_bwd".into(),
            self.transcription.w_out_bwd.data(),
        ));
        out.push((
            "transcription.b_out".into(),
            self.transcription.b_out.as_slice(),
        ));
        out
    }

    pub fn param_arrays_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        for (name, arr) in self.prediction.lstm.arrays_mut() {
            out.push((format!("prediction.lstm.{name}"), arr));
        }
        out.push((
            "prediction.w_out".into(),
            self.prediction.w_out.data_mut(),
        ));
        out.push((
            "prediction.b_out".into(),
            self.prediction.b_out.as_mut_slice(),
        ));
        for (name, arr) in self.transcription.fwd.arrays_mut() {
            out.push((format!("transcription.fwd.{name}"), arr));
        }
        for (name, arr) in self.transcription.bwd.arrays_mut() {
            out.push((format!("transcription.bwd.{name}"), arr));
        }
        out.push((
            "transcription.w_out_fwd".into(),
            self.transcription.w_out_fwd.data_mut(),
        ));
        out.push((
            "transcription.w_out_bwd".into(),
            self.transcription.w_out_bwd.data_mut(),
        ));
        out.push((
            "transcription.b_out".into(),
            self.transcription.b_out.as_mut_slice(),
        ));
        out
    }

    pub fn num_params(&self) -> usize {
        self.param_arrays().iter().map(|(_, a)| a.len()).sum()
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        for &y in &sample.labels {
            if y >= self.alphabet_size() {
                return Err(Error::LabelOutOfRange {
                    label: y,
                    alphabet_size: self.alphabet_size(),
                });
            }
        }
        Ok(())
    }

    /// Exact sequence log-probability `ln Pr(labels | features)`.
    pub fn log_prob(&self, sample: &Sample) -> Result<f64> {
        self.check_sample(sample)?;
        let (f, _) = transcribe(&self.transcription, &sample.features, false)?;
        let (g, _) = predict_sequence(&self.prediction, &sample.labels, false)?;
        let lattice = build_lattice(&f, &g, &sample.labels)?;
        let (_, log_prob) = forward_pass(&lattice);
        Ok(log_prob)
    }

    /// Loss `-ln Pr(labels | features)` and the gradient of every
    /// parameter, computed by the forward-backward recursion fused with the
    /// softmax Jacobian, then backpropagation through time in each network
    /// independently.
    pub fn loss_and_gradients(&self, sample: &Sample) -> Result<(f64, TransducerModel)> {
        self.check_sample(sample)?;
        let (f, f_cache) = transcribe(&self.transcription, &sample.features, true)?;
        let (g, g_cache) = predict_sequence(&self.prediction, &sample.labels, true)?;
        let lattice = build_lattice(&f, &g, &sample.labels)?;
        let grid = alignment_grid(&lattice);
        let lattice_grads = loss_and_grads(&lattice, &grid, &sample.labels)?;

        let f_cache = f_cache.expect("cache requested");
        let g_cache = g_cache.expect("cache requested");
        let grads = TransducerModel {
            prediction: prediction_backward(&self.prediction, &g_cache, &lattice_grads.d_g)?,
            transcription: transcription_backward(
                &self.transcription,
                &f_cache,
                &lattice_grads.d_f,
            )?,
        };
        Ok((lattice_grads.loss, grads))
    }
}

fn push_lstm<'a>(
    out: &mut Vec<(String, &'a [f64])>,
    prefix: &str,
    arrays: Vec<(&'static str, &'a [f64])>,
) {
    for (name, arr) in arrays {
        out.push((format!("{prefix}.{name}"), arr));
    }
}
