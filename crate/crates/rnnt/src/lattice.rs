//! Log-space forward-backward over the output lattice: the sequence
//! log-probability, the alignment-posterior grids and the analytic loss
//! gradients with respect to the transcription and prediction logits.
//!
//! The forward variable `alpha(t, u)` is the probability of having emitted
//! the first `u` target labels while consuming transcription steps `1..t`;
//! the backward variable `beta(t, u)` covers the remaining labels including
//! the terminal null. Indices are zero-based in code (`t` in `0..T`, `u`
//! in `0..=U`); messages that name cells report the paper-style 1-based `t`.
//!
//! Probability-space recursions underflow beyond a few hundred steps, so
//! every quantity here lives in natural-log space. The two-term recursions
//! always combine the horizontal (null) term before the vertical (label)
//! term, making results schedule-independent bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::joint::JointLattice;
use crate::math::{exp, log_add, log_sum_exp, LOG_ZERO};

/// Loss values above this are indistinguishable from a zero-probability
/// target in double precision (`exp(-745)` underflows to zero).
pub const LOG_LOSS_ABORT: f64 = 745.0;

/// A `T x (U+1)` grid of log-domain values.
#[derive(Debug, Clone)]
pub struct Grid {
    t_len: usize,
    u_len: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn filled(t_len: usize, u_len: usize, value: f64) -> Self {
        Self {
            t_len,
            u_len,
            data: vec![value; t_len * u_len],
        }
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn u_len(&self) -> usize {
        self.u_len
    }

    #[inline]
    pub fn get(&self, t: usize, u: usize) -> f64 {
        self.data[t * self.u_len + u]
    }

    #[inline]
    pub fn set(&mut self, t: usize, u: usize, v: f64) {
        self.data[t * self.u_len + u] = v;
    }
}

/// Forward and backward variables for one sequence, in log space.
#[derive(Debug, Clone)]
pub struct AlignmentGrid {
    pub log_alpha: Grid,
    pub log_beta: Grid,
    pub log_prob: f64,
}

impl AlignmentGrid {
    /// log of the sum of `alpha(t,u) * beta(t,u)` over the anti-diagonal
    /// `t + u = n` (`n` in `1..=T+U`, paper-style 1-based `t`). Equals the
    /// sequence log-probability on every diagonal.
    pub fn diagonal_log_prob(&self, n: usize) -> f64 {
        let t_len = self.log_alpha.t_len();
        let u_len = self.log_alpha.u_len();
        let mut terms = Vec::new();
        for t in 0..t_len {
            // paper t = t + 1, so u = n - (t + 1)
            if n >= t + 1 {
                let u = n - (t + 1);
                if u < u_len {
                    terms.push(self.log_alpha.get(t, u) + self.log_beta.get(t, u));
                }
            }
        }
        log_sum_exp(&terms).unwrap_or(LOG_ZERO)
    }
}

/// Forward recursion. Returns the `alpha` grid and the sequence
/// log-probability `alpha(T,U) + null(T,U)`.
pub fn forward_pass(lattice: &JointLattice) -> (Grid, f64) {
    let t_len = lattice.t_len();
    let u_len = lattice.u_len();
    let mut alpha = Grid::filled(t_len, u_len, LOG_ZERO);
    for t in 0..t_len {
        for u in 0..u_len {
            if t == 0 && u == 0 {
                alpha.set(0, 0, 0.0);
                continue;
            }
            let horizontal = if t > 0 {
                alpha.get(t - 1, u) + lattice.log_null(t - 1, u)
            } else {
                LOG_ZERO
            };
            let vertical = if u > 0 {
                alpha.get(t, u - 1) + lattice.log_target(t, u - 1)
            } else {
                LOG_ZERO
            };
            alpha.set(t, u, log_add(horizontal, vertical));
        }
    }
    let log_prob = alpha.get(t_len - 1, u_len - 1) + lattice.log_null(t_len - 1, u_len - 1);
    (alpha, log_prob)
}

/// Backward recursion. The boundary conventions treat `beta(T+1, U)` as
/// log 1 and every other out-of-grid cell as log 0, which makes
/// `beta(T, U) = null(T, U)` hold exactly.
pub fn backward_pass(lattice: &JointLattice) -> Grid {
    let t_len = lattice.t_len();
    let u_len = lattice.u_len();
    let mut beta = Grid::filled(t_len, u_len, LOG_ZERO);
    for t in (0..t_len).rev() {
        for u in (0..u_len).rev() {
            let horizontal = if t + 1 < t_len {
                beta.get(t + 1, u) + lattice.log_null(t, u)
            } else if u == u_len - 1 {
                lattice.log_null(t, u)
            } else {
                LOG_ZERO
            };
            let vertical = if u + 1 < u_len {
                beta.get(t, u + 1) + lattice.log_target(t, u)
            } else {
                LOG_ZERO
            };
            beta.set(t, u, log_add(horizontal, vertical));
        }
    }
    beta
}

/// Loss and logit gradients for one sequence.
#[derive(Debug, Clone)]
pub struct LatticeGrads {
    /// `-ln Pr(target | input)`, in nats.
    pub loss: f64,
    /// `dL/df_t^k`, one row per transcription step.
    pub d_f: Vec<Vec<f64>>,
    /// `dL/dg_u^k`, one row per prediction position.
    pub d_g: Vec<Vec<f64>>,
}

/// Fuses the lattice-occupancy derivative with the softmax Jacobian.
///
/// The posterior mass of the label transition out of `(t, u)` is
/// `w_y = alpha(t,u) beta(t,u+1) y(t,u) / Pr`, and of the null transition
/// `w_null = alpha(t,u) beta(t+1,u) null(t,u) / Pr` (with the terminal cell
/// closing against `beta(T+1,U) = 1`). In those terms
///
/// ```text
/// dL/df_t^k = sum_u  Pr(k|t,u) (w_y + w_null)  -  [k hits the transition]
/// dL/dg_u^k = sum_t  same summand
/// ```
///
/// Everything accumulates in log space and is exponentiated once at the
/// end, so saturated lattices stay exact.
pub fn loss_and_grads(
    lattice: &JointLattice,
    grid: &AlignmentGrid,
    targets: &[usize],
) -> Result<LatticeGrads> {
    let t_len = lattice.t_len();
    let u_len = lattice.u_len();
    let num_classes = lattice.num_classes();
    if u_len != targets.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "targets vs lattice",
            expected: u_len - 1,
            got: targets.len(),
        });
    }
    let log_prob = grid.log_prob;
    let loss = -log_prob;
    if !loss.is_finite() || loss > LOG_LOSS_ABORT {
        let (t, u) = first_blocked_cell(grid);
        return Err(Error::ZeroProbability { t, u });
    }

    let alpha = &grid.log_alpha;
    let beta = &grid.log_beta;
    let null_index = num_classes - 1;

    let mut d_f = vec![vec![0.0; num_classes]; t_len];
    let mut d_g = vec![vec![0.0; num_classes]; u_len];

    for t in 0..t_len {
        for u in 0..u_len {
            let log_w_y = if u + 1 < u_len {
                alpha.get(t, u) + beta.get(t, u + 1) + lattice.log_target(t, u) - log_prob
            } else {
                LOG_ZERO
            };
            let beta_right = if t + 1 < t_len {
                beta.get(t + 1, u)
            } else if u == u_len - 1 {
                0.0
            } else {
                LOG_ZERO
            };
            let log_w_null = alpha.get(t, u) + beta_right + lattice.log_null(t, u) - log_prob;
            let log_w_total = log_add(log_w_null, log_w_y);

            if log_w_y > LOG_ZERO {
                let w = exp(log_w_y);
                d_f[t][targets[u]] -= w;
                d_g[u][targets[u]] -= w;
            }
            if log_w_null > LOG_ZERO {
                let w = exp(log_w_null);
                d_f[t][null_index] -= w;
                d_g[u][null_index] -= w;
            }
            if log_w_total > LOG_ZERO {
                for k in 0..num_classes {
                    let w = exp(lattice.log_prob(t, u, k) + log_w_total);
                    d_f[t][k] += w;
                    d_g[u][k] += w;
                }
            }
        }
    }

    Ok(LatticeGrads { loss, d_f, d_g })
}

/// First cell (scanning t, then u) whose forward mass has effectively
/// vanished; reported 1-based in `t` to match the recursion definitions.
fn first_blocked_cell(grid: &AlignmentGrid) -> (usize, usize) {
    let alpha = &grid.log_alpha;
    for t in 0..alpha.t_len() {
        for u in 0..alpha.u_len() {
            if alpha.get(t, u) < -LOG_LOSS_ABORT {
                return (t + 1, u);
            }
        }
    }
    (alpha.t_len(), alpha.u_len() - 1)
}

/// Convenience: forward and backward in one call.
pub fn alignment_grid(lattice: &JointLattice) -> AlignmentGrid {
    let (log_alpha, log_prob) = forward_pass(lattice);
    let log_beta = backward_pass(lattice);
    AlignmentGrid {
        log_alpha,
        log_beta,
        log_prob,
    }
}
