//! LSTM hidden-layer function with diagonal state-to-gate (peephole)
//! connections, plus its exact backward pass for backpropagation through
//! time.
//!
//! Step equations, all vectors of the hidden size:
//!
//! ```text
//! i_n = sigmoid(W_xi x_n + W_hi h_{n-1} + p_i . c_{n-1} + b_i)   input gate
//! f_n = sigmoid(W_xf x_n + W_hf h_{n-1} + p_f . c_{n-1} + b_f)   forget gate
//! z_n = tanh  (W_xc x_n + W_hc h_{n-1}                 + b_c)   cell candidate
//! c_n = f_n . c_{n-1} + i_n . z_n                                cell state
//! o_n = sigmoid(W_xo x_n + W_ho h_{n-1} + p_o . c_n    + b_o)   output gate
//! h_n = o_n . tanh(c_n)
//! ```
//!
//! The output gate's peephole reads the freshly updated cell state `c_n`.
//! Peepholes are diagonal: stored as vectors, applied elementwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{sigmoid, tanh, Matrix, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub p_i: Vec<f64>,
    pub b_i: Vec<f64>,
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub p_f: Vec<f64>,
    pub b_f: Vec<f64>,
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub b_c: Vec<f64>,
    pub w_xo: Matrix,
    pub w_ho: Matrix,
    pub p_o: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_size,
            hidden_size,
            w_xi: Matrix::zeros(hidden_size, input_size),
            w_hi: Matrix::zeros(hidden_size, hidden_size),
            p_i: vec![0.0; hidden_size],
            b_i: vec![0.0; hidden_size],
            w_xf: Matrix::zeros(hidden_size, input_size),
            w_hf: Matrix::zeros(hidden_size, hidden_size),
            p_f: vec![0.0; hidden_size],
            b_f: vec![0.0; hidden_size],
            w_xc: Matrix::zeros(hidden_size, input_size),
            w_hc: Matrix::zeros(hidden_size, hidden_size),
            b_c: vec![0.0; hidden_size],
            w_xo: Matrix::zeros(hidden_size, input_size),
            w_ho: Matrix::zeros(hidden_size, hidden_size),
            p_o: vec![0.0; hidden_size],
            b_o: vec![0.0; hidden_size],
        }
    }

    pub fn init_uniform(input_size: usize, hidden_size: usize, range: f64, rng: &mut SeededRng) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        for (_, arr) in p.arrays_mut() {
            for v in arr {
                *v = rng.uniform(-range, range);
            }
        }
        p
    }

    /// Parameter arrays in a fixed declaration order, for checkpointing,
    /// gradient checking and optimizer updates.
    pub fn arrays(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w_xi", self.w_xi.data()),
            ("w_hi", self.w_hi.data()),
            ("p_i", &self.p_i),
            ("b_i", &self.b_i),
            ("w_xf", self.w_xf.data()),
            ("w_hf", self.w_hf.data()),
            ("p_f", &self.p_f),
            ("b_f", &self.b_f),
            ("w_xc", self.w_xc.data()),
            ("w_hc", self.w_hc.data()),
            ("b_c", &self.b_c),
            ("w_xo", self.w_xo.data()),
            ("w_ho", self.w_ho.data()),
            ("p_o", &self.p_o),
            ("b_o", &self.b_o),
        ]
    }

    pub fn arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w_xi", self.w_xi.data_mut()),
            ("w_hi", self.w_hi.data_mut()),
            ("p_i", &mut self.p_i),
            ("b_i", &mut self.b_i),
            ("w_xf", self.w_xf.data_mut()),
            ("w_hf", self.w_hf.data_mut()),
            ("p_f", &mut self.p_f),
            ("b_f", &mut self.b_f),
            ("w_xc", self.w_xc.data_mut()),
            ("w_hc", self.w_hc.data_mut()),
            ("b_c", &mut self.b_c),
            ("w_xo", self.w_xo.data_mut()),
            ("w_ho", self.w_ho.data_mut()),
            ("p_o", &mut self.p_o),
            ("b_o", &mut self.b_o),
        ]
    }
}

/// Hidden and cell state after a step. Both start at zero for a fresh
/// sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
        }
    }
}

/// Per-step activations recorded during a cached forward pass. Enough to
/// run the backward pass without recomputing anything.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    z: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Activation cache for one sequence evaluation; owned by exactly one
/// forward pass.
#[derive(Debug, Clone, Default)]
pub struct LstmCache {
    steps: Vec<StepCache>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn check_dims(params: &LstmParams, input: &[f64], prev: &LstmState) -> Result<()> {
    if input.len() != params.input_size {
        return Err(Error::DimensionMismatch {
            what: "lstm input",
            expected: params.input_size,
            got: input.len(),
        });
    }
    if prev.h.len() != params.hidden_size {
        return Err(Error::DimensionMismatch {
            what: "lstm hidden state",
            expected: params.hidden_size,
            got: prev.h.len(),
        });
    }
    if prev.c.len() != params.hidden_size {
        return Err(Error::DimensionMismatch {
            what: "lstm cell state",
            expected: params.hidden_size,
            got: prev.c.len(),
        });
    }
    Ok(())
}

fn step_full(params: &LstmParams, x: &[f64], prev: &LstmState) -> StepCache {
    let n = params.hidden_size;

    let mut pre_i = params.b_i.clone();
    params.w_xi.matvec_add(x, &mut pre_i);
    params.w_hi.matvec_add(&prev.h, &mut pre_i);
    let mut pre_f = params.b_f.clone();
    params.w_xf.matvec_add(x, &mut pre_f);
    params.w_hf.matvec_add(&prev.h, &mut pre_f);
    let mut pre_z = params.b_c.clone();
    params.w_xc.matvec_add(x, &mut pre_z);
    params.w_hc.matvec_add(&prev.h, &mut pre_z);
    let mut pre_o = params.b_o.clone();
    params.w_xo.matvec_add(x, &mut pre_o);
    params.w_ho.matvec_add(&prev.h, &mut pre_o);

    let mut i = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut o = vec![0.0; n];
    let mut tanh_c = vec![0.0; n];
    for m in 0..n {
        i[m] = sigmoid(pre_i[m] + params.p_i[m] * prev.c[m]);
        f[m] = sigmoid(pre_f[m] + params.p_f[m] * prev.c[m]);
        z[m] = tanh(pre_z[m]);
        c[m] = f[m] * prev.c[m] + i[m] * z[m];
        o[m] = sigmoid(pre_o[m] + params.p_o[m] * c[m]);
        tanh_c[m] = tanh(c[m]);
    }

    StepCache {
        x: x.to_vec(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        i,
        f,
        z,
        o,
        c,
        tanh_c,
    }
}

/// Advances the state by one step.
pub fn lstm_step(params: &LstmParams, input: &[f64], prev: &LstmState) -> Result<LstmState> {
    check_dims(params, input, prev)?;
    let s = step_full(params, input, prev);
    let h = s.o.iter().zip(&s.tanh_c).map(|(o, t)| o * t).collect();
    Ok(LstmState { h, c: s.c })
}

/// Runs a whole sequence from `init`, returning the per-step hidden vectors
/// and, when requested, the activation cache for [`lstm_backward`].
pub fn lstm_forward(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    init: &LstmState,
    want_cache: bool,
) -> Result<(Vec<Vec<f64>>, Option<LstmCache>)> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput {
            what: "lstm input sequence",
        });
    }
    let mut state = init.clone();
    let mut hs = Vec::with_capacity(inputs.len());
    let mut cache = LstmCache::default();
    for x in inputs {
        check_dims(params, x, &state)?;
        let s = step_full(params, x, &state);
        let h: Vec<f64> = s.o.iter().zip(&s.tanh_c).map(|(o, t)| o * t).collect();
        state = LstmState {
            h: h.clone(),
            c: s.c.clone(),
        };
        hs.push(h);
        if want_cache {
            cache.steps.push(s);
        }
    }
    Ok((hs, want_cache.then_some(cache)))
}

/// Gradients produced by [`lstm_backward`].
#[derive(Debug, Clone)]
pub struct LstmBackward {
    /// Parameter gradients, same shapes as the parameters.
    pub grads: LstmParams,
    /// Gradient with respect to each input vector.
    pub d_inputs: Vec<Vec<f64>>,
    /// Gradient with respect to the initial state.
    pub d_init: LstmState,
}

/// Exact reverse-mode sweep over a cached forward pass.
///
/// `d_hidden[n]` and `d_cell[n]` are the loss gradients flowing into `h_n`
/// and `c_n` from outside the recurrence; gradients accumulate across steps.
pub fn lstm_backward(
    params: &LstmParams,
    cache: &LstmCache,
    d_hidden: &[Vec<f64>],
    d_cell: &[Vec<f64>],
) -> Result<LstmBackward> {
    let steps = cache.steps.len();
    if d_hidden.len() != steps {
        return Err(Error::DimensionMismatch {
            what: "lstm backward d_hidden stream",
            expected: steps,
            got: d_hidden.len(),
        });
    }
    if d_cell.len() != steps {
        return Err(Error::DimensionMismatch {
            what: "lstm backward d_cell stream",
            expected: steps,
            got: d_cell.len(),
        });
    }
    let n = params.hidden_size;
    let mut grads = LstmParams::zeros(params.input_size, n);
    let mut d_inputs = vec![vec![0.0; params.input_size]; steps];

    // Recurrent carries into the step below.
    let mut dh_rec = vec![0.0; n];
    let mut dc_rec = vec![0.0; n];

    for step in (0..steps).rev() {
        let s = &cache.steps[step];
        let mut dh = d_hidden[step].clone();
        for (d, r) in dh.iter_mut().zip(&dh_rec) {
            *d += r;
        }

        // Output gate first: its peephole feeds the new cell state, so its
        // pre-activation gradient is needed before the cell gradient.
        let mut do_pre = vec![0.0; n];
        for m in 0..n {
            do_pre[m] = dh[m] * s.tanh_c[m] * s.o[m] * (1.0 - s.o[m]);
        }

        let mut dc = vec![0.0; n];
        for m in 0..n {
            dc[m] = dh[m] * s.o[m] * (1.0 - s.tanh_c[m] * s.tanh_c[m])
                + d_cell[step][m]
                + dc_rec[m]
                + do_pre[m] * params.p_o[m];
        }

        let mut di_pre = vec![0.0; n];
        let mut df_pre = vec![0.0; n];
        let mut dz_pre = vec![0.0; n];
        for m in 0..n {
            di_pre[m] = dc[m] * s.z[m] * s.i[m] * (1.0 - s.i[m]);
            df_pre[m] = dc[m] * s.c_prev[m] * s.f[m] * (1.0 - s.f[m]);
            dz_pre[m] = dc[m] * s.i[m] * (1.0 - s.z[m] * s.z[m]);
        }

        grads.w_xi.add_outer(&di_pre, &s.x);
        grads.w_hi.add_outer(&di_pre, &s.h_prev);
        grads.w_xf.add_outer(&df_pre, &s.x);
        grads.w_hf.add_outer(&df_pre, &s.h_prev);
        grads.w_xc.add_outer(&dz_pre, &s.x);
        grads.w_hc.add_outer(&dz_pre, &s.h_prev);
        grads.w_xo.add_outer(&do_pre, &s.x);
        grads.w_ho.add_outer(&do_pre, &s.h_prev);
        for m in 0..n {
            grads.p_i[m] += di_pre[m] * s.c_prev[m];
            grads.p_f[m] += df_pre[m] * s.c_prev[m];
            grads.p_o[m] += do_pre[m] * s.c[m];
            grads.b_i[m] += di_pre[m];
            grads.b_f[m] += df_pre[m];
            grads.b_c[m] += dz_pre[m];
            grads.b_o[m] += do_pre[m];
        }

        let dx = &mut d_inputs[step];
        params.w_xi.matvec_transpose_add(&di_pre, dx);
        params.w_xf.matvec_transpose_add(&df_pre, dx);
        params.w_xc.matvec_transpose_add(&dz_pre, dx);
        params.w_xo.matvec_transpose_add(&do_pre, dx);

        dh_rec = vec![0.0; n];
        params.w_hi.matvec_transpose_add(&di_pre, &mut dh_rec);
        params.w_hf.matvec_transpose_add(&df_pre, &mut dh_rec);
        params.w_hc.matvec_transpose_add(&dz_pre, &mut dh_rec);
        params.w_ho.matvec_transpose_add(&do_pre, &mut dh_rec);

        for m in 0..n {
            dc_rec[m] = dc[m] * s.f[m] + di_pre[m] * params.p_i[m] + df_pre[m] * params.p_f[m];
        }
    }

    Ok(LstmBackward {
        grads,
        d_inputs,
        d_init: LstmState {
            h: dh_rec,
            c: dc_rec,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SeededRng;

    fn random_params(input_size: usize, hidden_size: usize, seed: u64) -> LstmParams {
        LstmParams::init_uniform(input_size, hidden_size, 0.5, &mut SeededRng::new(seed))
    }

    fn random_vec(len: usize, rng: &mut SeededRng) -> Vec<f64> {
        (0..len).map(|_| rng.uniform(-1.0, 1.0)).collect()
    }

    /// Independent scalar-by-scalar transcription of the step equations,
    /// written without any of the vector kernels.
    fn scalar_oracle_step(p: &LstmParams, x: &[f64], prev: &LstmState) -> LstmState {
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let n = p.hidden_size;
        let mut h = vec![0.0; n];
        let mut c = vec![0.0; n];
        for m in 0..n {
            let mut pre_i = p.b_i[m];
            let mut pre_f = p.b_f[m];
            let mut pre_z = p.b_c[m];
            let mut pre_o = p.b_o[m];
            for (j, xj) in x.iter().enumerate() {
                pre_i += p.w_xi.get(m, j) * xj;
                pre_f += p.w_xf.get(m, j) * xj;
                pre_z += p.w_xc.get(m, j) * xj;
                pre_o += p.w_xo.get(m, j) * xj;
            }
            for (j, hj) in prev.h.iter().enumerate() {
                pre_i += p.w_hi.get(m, j) * hj;
                pre_f += p.w_hf.get(m, j) * hj;
                pre_z += p.w_hc.get(m, j) * hj;
                pre_o += p.w_ho.get(m, j) * hj;
            }
            let gate_i = sig(pre_i + p.p_i[m] * prev.c[m]);
            let gate_f = sig(pre_f + p.p_f[m] * prev.c[m]);
            c[m] = gate_f * prev.c[m] + gate_i * pre_z.tanh();
            let gate_o = sig(pre_o + p.p_o[m] * c[m]);
            h[m] = gate_o * c[m].tanh();
        }
        LstmState { h, c }
    }

    #[test]
    fn zero_params_give_half_gates_and_zero_state() {
        let p = LstmParams::zeros(3, 4);
        let prev = LstmState::zeros(4);
        let s = step_full(&p, &[0.2, -0.4, 1.0], &prev);
        for m in 0..4 {
            assert_eq!(s.i[m], 0.5);
            assert_eq!(s.f[m], 0.5);
            assert_eq!(s.o[m], 0.5);
            assert_eq!(s.c[m], 0.0);
        }
        let next = lstm_step(&p, &[0.2, -0.4, 1.0], &prev).unwrap();
        assert_eq!(next.h, vec![0.0; 4]);
        assert_eq!(next.c, vec![0.0; 4]);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell_state() {
        let mut p = LstmParams::zeros(2, 3);
        for b in &mut p.b_f {
            *b = 20.0;
        }
        let prev = LstmState {
            h: vec![0.0; 3],
            c: vec![0.7, -1.3, 0.02],
        };
        let next = lstm_step(&p, &[0.0, 0.0], &prev).unwrap();
        for m in 0..3 {
            assert!((next.c[m] - prev.c[m]).abs() < 1e-8, "component {m}");
        }
    }

    #[test]
    fn step_matches_scalar_oracle() {
        let p = random_params(3, 2, 7);
        let mut rng = SeededRng::new(70);
        let prev = LstmState {
            h: random_vec(2, &mut rng),
            c: random_vec(2, &mut rng),
        };
        let x = random_vec(3, &mut rng);
        let got = lstm_step(&p, &x, &prev).unwrap();
        let want = scalar_oracle_step(&p, &x, &prev);
        for m in 0..2 {
            assert!((got.h[m] - want.h[m]).abs() < 1e-14);
            assert!((got.c[m] - want.c[m]).abs() < 1e-14);
        }
    }

    #[test]
    fn step_is_deterministic() {
        let p = random_params(4, 3, 21);
        let mut rng = SeededRng::new(22);
        let x = random_vec(4, &mut rng);
        let prev = LstmState {
            h: random_vec(3, &mut rng),
            c: random_vec(3, &mut rng),
        };
        let a = lstm_step(&p, &x, &prev).unwrap();
        let b = lstm_step(&p, &x, &prev).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = LstmParams::zeros(3, 2);
        let prev = LstmState::zeros(2);
        assert!(matches!(
            lstm_step(&p, &[1.0, 2.0], &prev),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad_state = LstmState::zeros(5);
        assert!(matches!(
            lstm_step(&p, &[1.0, 2.0, 3.0], &bad_state),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_gradient_stream_gives_zero_parameter_gradients() {
        let p = random_params(2, 3, 11);
        let mut rng = SeededRng::new(12);
        let xs: Vec<Vec<f64>> = (0..4).map(|_| random_vec(2, &mut rng)).collect();
        let (_, cache) = lstm_forward(&p, &xs, &LstmState::zeros(3), true).unwrap();
        let zeros = vec![vec![0.0; 3]; 4];
        let back = lstm_backward(&p, &cache.unwrap(), &zeros, &zeros).unwrap();
        for (_, arr) in back.grads.arrays() {
            assert!(arr.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn peephole_gradients_stay_diagonal_vectors() {
        let p = random_params(2, 3, 13);
        let mut rng = SeededRng::new(14);
        let xs: Vec<Vec<f64>> = (0..2).map(|_| random_vec(2, &mut rng)).collect();
        let (_, cache) = lstm_forward(&p, &xs, &LstmState::zeros(3), true).unwrap();
        let dh: Vec<Vec<f64>> = (0..2).map(|_| random_vec(3, &mut rng)).collect();
        let dc = vec![vec![0.0; 3]; 2];
        let back = lstm_backward(&p, &cache.unwrap(), &dh, &dc).unwrap();
        assert_eq!(back.grads.p_i.len(), 3);
        assert_eq!(back.grads.p_f.len(), 3);
        assert_eq!(back.grads.p_o.len(), 3);
    }

    #[test]
    fn diagonality_of_state_to_gate_connections() {
        // With the input and recurrent weights into the gates zeroed,
        // perturbing one component of the previous cell state may move only
        // the matching component of each gate.
        let mut p = random_params(2, 3, 31);
        for w in p.w_xi.data_mut() {
            *w = 0.0;
        }
        for w in p.w_hi.data_mut() {
            *w = 0.0;
        }
        for w in p.w_xf.data_mut() {
            *w = 0.0;
        }
        for w in p.w_hf.data_mut() {
            *w = 0.0;
        }
        let mut rng = SeededRng::new(32);
        let x = random_vec(2, &mut rng);
        let prev = LstmState {
            h: random_vec(3, &mut rng),
            c: random_vec(3, &mut rng),
        };
        let base = step_full(&p, &x, &prev);
        for m in 0..3 {
            let mut bumped = prev.clone();
            bumped.c[m] += 0.25;
            let got = step_full(&p, &x, &bumped);
            for other in 0..3 {
                if other == m {
                    assert!((got.i[other] - base.i[other]).abs() > 1e-9);
                    assert!((got.f[other] - base.f[other]).abs() > 1e-9);
                } else {
                    assert_eq!(got.i[other], base.i[other]);
                    assert_eq!(got.f[other], base.f[other]);
                }
            }
        }
    }

    /// Loses nothing to recomputation: test loss reads every h_n and c_n
    /// through lstm_step so finite differences can rerun the whole forward.
    fn test_loss(
        p: &LstmParams,
        xs: &[Vec<f64>],
        init: &LstmState,
        wh: &[Vec<f64>],
        wc: &[Vec<f64>],
    ) -> f64 {
        let mut state = init.clone();
        let mut loss = 0.0;
        for (n, x) in xs.iter().enumerate() {
            state = lstm_step(p, x, &state).unwrap();
            for m in 0..state.h.len() {
                loss += wh[n][m] * state.h[m] + wc[n][m] * state.c[m];
            }
        }
        loss
    }

    #[test]
    fn backward_matches_central_finite_differences() {
        let hidden = 3;
        let input = 2;
        let steps = 4;
        let p = random_params(input, hidden, 11);
        let mut rng = SeededRng::new(111);
        let xs: Vec<Vec<f64>> = (0..steps).map(|_| random_vec(input, &mut rng)).collect();
        let init = LstmState {
            h: random_vec(hidden, &mut rng),
            c: random_vec(hidden, &mut rng),
        };
        let wh: Vec<Vec<f64>> = (0..steps).map(|_| random_vec(hidden, &mut rng)).collect();
        let wc: Vec<Vec<f64>> = (0..steps).map(|_| random_vec(hidden, &mut rng)).collect();

        let (_, cache) = lstm_forward(&p, &xs, &init, true).unwrap();
        let back = lstm_backward(&p, &cache.unwrap(), &wh, &wc).unwrap();

        let eps = 1e-6;
        let tol = 1e-6;
        // 1e-6 relative with a 1e-3 floor doubles as a 1e-9 absolute bound.
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-3);

        // Every parameter group.
        let mut probe = p.clone();
        let analytic = back.grads.arrays();
        for (idx, (name, _)) in p.arrays().iter().enumerate() {
            let len = probe.arrays()[idx].1.len();
            for i in 0..len {
                let orig = probe.arrays()[idx].1[i];
                probe.arrays_mut()[idx].1[i] = orig + eps;
                let up = test_loss(&probe, &xs, &init, &wh, &wc);
                probe.arrays_mut()[idx].1[i] = orig - eps;
                let down = test_loss(&probe, &xs, &init, &wh, &wc);
                probe.arrays_mut()[idx].1[i] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let a = analytic[idx].1[i];
                assert!(rel(a, numeric) < tol, "{name}[{i}]: {a} vs {numeric}");
            }
        }

        // Inputs.
        let mut xs_probe = xs.clone();
        for n in 0..steps {
            for j in 0..input {
                let orig = xs_probe[n][j];
                xs_probe[n][j] = orig + eps;
                let up = test_loss(&p, &xs_probe, &init, &wh, &wc);
                xs_probe[n][j] = orig - eps;
                let down = test_loss(&p, &xs_probe, &init, &wh, &wc);
                xs_probe[n][j] = orig;
                let numeric = (up - down) / (2.0 * eps);
                assert!(rel(back.d_inputs[n][j], numeric) < tol, "x[{n}][{j}]");
            }
        }

        // Initial state.
        for m in 0..hidden {
            let mut bump = init.clone();
            bump.h[m] += eps;
            let up = test_loss(&p, &xs, &bump, &wh, &wc);
            bump.h[m] = init.h[m] - eps;
            let down = test_loss(&p, &xs, &bump, &wh, &wc);
            let numeric = (up - down) / (2.0 * eps);
            assert!(rel(back.d_init.h[m], numeric) < tol, "init.h[{m}]");

            let mut bump = init.clone();
            bump.c[m] += eps;
            let up = test_loss(&p, &xs, &bump, &wh, &wc);
            bump.c[m] = init.c[m] - eps;
            let down = test_loss(&p, &xs, &bump, &wh, &wc);
            let numeric = (up - down) / (2.0 * eps);
            assert!(rel(back.d_init.c[m], numeric) < tol, "init.c[{m}]");
        }
    }

    #[test]
    fn backward_rejects_mismatched_streams() {
        let p = random_params(2, 2, 1);
        let xs = vec![vec![0.1, 0.2]; 3];
        let (_, cache) = lstm_forward(&p, &xs, &LstmState::zeros(2), true).unwrap();
        let cache = cache.unwrap();
        let short = vec![vec![0.0; 2]; 2];
        let full = vec![vec![0.0; 2]; 3];
        assert!(lstm_backward(&p, &cache, &short, &full).is_err());
        assert!(lstm_backward(&p, &cache, &full, &short).is_err());
    }
}
