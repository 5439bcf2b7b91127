//! The two recurrent networks of the transducer.
//!
//! The prediction network scans the label sequence with a null label
//! prepended and emits `g_0..g_U`, each of size `K+1`; `g_u` depends only
//! on labels `y_1..y_u`. The transcription network scans the feature
//! sequence with two independent LSTM layers, one per direction, and emits
//! `f_1..f_T`, also size `K+1`; every `f_t` sees the whole input.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lstm::{
    lstm_backward, lstm_forward, lstm_step, LstmCache, LstmParams, LstmState,
};
use crate::math::{one_hot, Matrix, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionNet {
    pub alphabet_size: usize,
    pub lstm: LstmParams,
    /// Output projection, `(K+1) x hidden`.
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

impl PredictionNet {
    pub fn zeros(alphabet_size: usize, hidden_size: usize) -> Self {
        Self {
            alphabet_size,
            lstm: LstmParams::zeros(alphabet_size, hidden_size),
            w_out: Matrix::zeros(alphabet_size + 1, hidden_size),
            b_out: vec![0.0; alphabet_size + 1],
        }
    }

    pub fn init_uniform(
        alphabet_size: usize,
        hidden_size: usize,
        range: f64,
        rng: &mut SeededRng,
    ) -> Self {
        let mut net = Self::zeros(alphabet_size, hidden_size);
        net.lstm = LstmParams::init_uniform(alphabet_size, hidden_size, range, rng);
        for v in net.w_out.data_mut() {
            *v = rng.uniform(-range, range);
        }
        for v in &mut net.b_out {
            *v = rng.uniform(-range, range);
        }
        net
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size
    }

    fn project(&self, h: &[f64]) -> Vec<f64> {
        let mut g = self.b_out.clone();
        self.w_out.matvec_add(h, &mut g);
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptionNet {
    pub feature_dim: usize,
    pub alphabet_size: usize,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    /// Per-direction output projections, `(K+1) x hidden`, plus one shared
    /// output bias.
    pub w_out_fwd: Matrix,
    pub w_out_bwd: Matrix,
    pub b_out: Vec<f64>,
}

impl TranscriptionNet {
    pub fn zeros(feature_dim: usize, alphabet_size: usize, hidden_size: usize) -> Self {
        Self {
            feature_dim,
            alphabet_size,
            fwd: LstmParams::zeros(feature_dim, hidden_size),
            bwd: LstmParams::zeros(feature_dim, hidden_size),
            w_out_fwd: Matrix::zeros(alphabet_size + 1, hidden_size),
            w_out_bwd: Matrix::zeros(alphabet_size + 1, hidden_size),
            b_out: vec![0.0; alphabet_size + 1],
        }
    }

    pub fn init_uniform(
        feature_dim: usize,
        alphabet_size: usize,
        hidden_size: usize,
        range: f64,
        rng: &mut SeededRng,
    ) -> Self {
        let mut net = Self::zeros(feature_dim, alphabet_size, hidden_size);
        net.fwd = LstmParams::init_uniform(feature_dim, hidden_size, range, rng);
        net.bwd = LstmParams::init_uniform(feature_dim, hidden_size, range, rng);
        for v in net.w_out_fwd.data_mut() {
            *v = rng.uniform(-range, range);
        }
        for v in net.w_out_bwd.data_mut() {
            *v = rng.uniform(-range, range);
        }
        for v in &mut net.b_out {
            *v = rng.uniform(-range, range);
        }
        net
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size
    }
}

/// Forward activations kept for the prediction network's backward pass.
#[derive(Debug, Clone)]
pub struct PredictionCache {
    lstm: LstmCache,
    hidden: Vec<Vec<f64>>,
}

/// Forward activations kept for the transcription network's backward pass.
/// The backward-direction layer is cached over the reversed input.
#[derive(Debug, Clone)]
pub struct TranscriptionCache {
    fwd: LstmCache,
    bwd: LstmCache,
    hidden_fwd: Vec<Vec<f64>>,
    hidden_bwd: Vec<Vec<f64>>,
}

/// Runs the prediction network over `(null, y_1, .., y_U)` and returns
/// `g_0..g_U` (always `U+1` vectors).
pub fn predict_sequence(
    net: &PredictionNet,
    targets: &[usize],
    want_cache: bool,
) -> Result<(Vec<Vec<f64>>, Option<PredictionCache>)> {
    let k = net.alphabet_size;
    let mut inputs = Vec::with_capacity(targets.len() + 1);
    inputs.push(one_hot(None, k)?);
    for &y in targets {
        inputs.push(one_hot(Some(y), k)?);
    }
    let init = LstmState::zeros(net.hidden_size());
    let (hidden, lstm_cache) = lstm_forward(&net.lstm, &inputs, &init, want_cache)?;
    let outputs = hidden.iter().map(|h| net.project(h)).collect();
    let cache = lstm_cache.map(|lstm| PredictionCache {
        lstm,
        hidden,
    });
    Ok((outputs, cache))
}

/// Runs the bidirectional transcription network over the feature sequence
/// and returns `f_1..f_T`.
pub fn transcribe(
    net: &TranscriptionNet,
    features: &[Vec<f64>],
    want_cache: bool,
) -> Result<(Vec<Vec<f64>>, Option<TranscriptionCache>)> {
    if features.is_empty() {
        return Err(Error::EmptyInput {
            what: "feature sequence",
        });
    }
    for x in features {
        if x.len() != net.feature_dim {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: net.feature_dim,
                got: x.len(),
            });
        }
    }
    let t_len = features.len();
    let init = LstmState::zeros(net.hidden_size());

    let (hidden_fwd, cache_fwd) = lstm_forward(&net.fwd, features, &init, want_cache)?;

    // The backward direction is an ordinary LSTM run over the reversed
    // input: its step j sees x_{T-j}, so its hidden j corresponds to t = T-j.
    let reversed: Vec<Vec<f64>> = features.iter().rev().cloned().collect();
    let (hidden_bwd_rev, cache_bwd) = lstm_forward(&net.bwd, &reversed, &init, want_cache)?;

    let mut outputs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut f = net.b_out.clone();
        net.w_out_fwd.matvec_add(&hidden_fwd[t], &mut f);
        net.w_out_bwd.matvec_add(&hidden_bwd_rev[t_len - 1 - t], &mut f);
        outputs.push(f);
    }

    let cache = match (cache_fwd, cache_bwd) {
        (Some(fwd), Some(bwd)) => Some(TranscriptionCache {
            fwd,
            bwd,
            hidden_fwd,
            hidden_bwd: hidden_bwd_rev,
        }),
        _ => None,
    };
    Ok((outputs, cache))
}

/// Gradients for every parameter of the prediction network.
pub fn prediction_backward(
    net: &PredictionNet,
    cache: &PredictionCache,
    d_outputs: &[Vec<f64>],
) -> Result<PredictionNet> {
    let steps = cache.hidden.len();
    if d_outputs.len() != steps {
        return Err(Error::DimensionMismatch {
            what: "prediction gradient stream",
            expected: steps,
            got: d_outputs.len(),
        });
    }
    let hidden_size = net.hidden_size();
    let mut grads = PredictionNet::zeros(net.alphabet_size, hidden_size);

    let mut d_hidden = vec![vec![0.0; hidden_size]; steps];
    for u in 0..steps {
        grads.w_out.add_outer(&d_outputs[u], &cache.hidden[u]);
        for (b, d) in grads.b_out.iter_mut().zip(&d_outputs[u]) {
            *b += d;
        }
        net.w_out.matvec_transpose_add(&d_outputs[u], &mut d_hidden[u]);
    }
    let d_cell = vec![vec![0.0; hidden_size]; steps];
    let back = lstm_backward(&net.lstm, &cache.lstm, &d_hidden, &d_cell)?;
    grads.lstm = back.grads;
    Ok(grads)
}

/// Gradients for every parameter of the transcription network.
pub fn transcription_backward(
    net: &TranscriptionNet,
    cache: &TranscriptionCache,
    d_outputs: &[Vec<f64>],
) -> Result<TranscriptionNet> {
    let t_len = cache.hidden_fwd.len();
    if d_outputs.len() != t_len {
        return Err(Error::DimensionMismatch {
            what: "transcription gradient stream",
            expected: t_len,
            got: d_outputs.len(),
        });
    }
    let hidden_size = net.hidden_size();
    let mut grads = TranscriptionNet::zeros(net.feature_dim, net.alphabet_size, hidden_size);

    let mut d_hidden_fwd = vec![vec![0.0; hidden_size]; t_len];
    let mut d_hidden_bwd = vec![vec![0.0; hidden_size]; t_len];
    for t in 0..t_len {
        let rev = t_len - 1 - t;
        grads.w_out_fwd.add_outer(&d_outputs[t], &cache.hidden_fwd[t]);
        grads.w_out_bwd.add_outer(&d_outputs[t], &cache.hidden_bwd[rev]);
        for (b, d) in grads.b_out.iter_mut().zip(&d_outputs[t]) {
            *b += d;
        }
        net.w_out_fwd.matvec_transpose_add(&d_outputs[t], &mut d_hidden_fwd[t]);
        net.w_out_bwd.matvec_transpose_add(&d_outputs[t], &mut d_hidden_bwd[rev]);
    }

    let d_cell = vec![vec![0.0; hidden_size]; t_len];
    let back_fwd = lstm_backward(&net.fwd, &cache.fwd, &d_hidden_fwd, &d_cell)?;
    let back_bwd = lstm_backward(&net.bwd, &cache.bwd, &d_hidden_bwd, &d_cell)?;
    grads.fwd = back_fwd.grads;
    grads.bwd = back_bwd.grads;
    Ok(grads)
}

/// One incremental prediction-network step, used by the beam-search
/// hypothesis cache: feeds one label (or null) into the recurrence and
/// projects the new hidden vector.
pub fn prediction_step(
    net: &PredictionNet,
    label: Option<usize>,
    prev: &LstmState,
) -> Result<(LstmState, Vec<f64>)> {
    let x = one_hot(label, net.alphabet_size)?;
    let state = lstm_step(&net.lstm, &x, prev)?;
    let g = net.project(&state.h);
    Ok((state, g))
}
