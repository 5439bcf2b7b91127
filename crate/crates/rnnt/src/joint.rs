//! The joint output distribution: at every lattice node `(t, u)` the
//! transcription vector `f_t` and prediction vector `g_u` combine additively
//! and softmax-normalize over the extended alphabet, `Pr(k|t,u) =
//! softmax(f_t + g_u)`. The null label lives at index `K` (last).
//!
//! Building the full lattice would naively cost one softmax per node, i.e.
//! `O(T*U)` exponential evaluations. Because `exp(f+g) = exp(f)exp(g)`, the
//! per-`t` and per-`u` exponentials are precomputed once (max-shifted so
//! nothing overflows) and every cell's normalizer falls out of their
//! products, leaving exactly `(T + U + 1)(K + 1)` calls to `exp`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ln, log_softmax, ExpCounter, LOG_ZERO};

/// `T x (U+1) x (K+1)` grid of log output probabilities, with the target
/// and null transition grids extracted for the forward-backward recursions.
#[derive(Debug, Clone)]
pub struct JointLattice {
    t_len: usize,
    u_len: usize,
    num_classes: usize,
    log_probs: Vec<f64>,
    log_target: Vec<f64>,
    log_null: Vec<f64>,
}

impl JointLattice {
    /// Number of transcription steps T.
    pub fn t_len(&self) -> usize {
        self.t_len
    }

    /// Number of prediction positions U+1.
    pub fn u_len(&self) -> usize {
        self.u_len
    }

    /// Extended alphabet size K+1.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// log Pr(k | t, u); `t` and `u` are zero-based here.
    #[inline]
    pub fn log_prob(&self, t: usize, u: usize, k: usize) -> f64 {
        self.log_probs[(t * self.u_len + u) * self.num_classes + k]
    }

    /// log Pr(y_{u+1} | t, u); [`LOG_ZERO`] in the last column, where no
    /// target label remains.
    #[inline]
    pub fn log_target(&self, t: usize, u: usize) -> f64 {
        self.log_target[t * self.u_len + u]
    }

    /// log Pr(null | t, u).
    #[inline]
    pub fn log_null(&self, t: usize, u: usize) -> f64 {
        self.log_null[t * self.u_len + u]
    }
}

/// Log distribution over the extended alphabet for a single `(f_t, g_u)`
/// pair.
pub fn joint_log_prob(f_t: &[f64], g_u: &[f64]) -> Result<Vec<f64>> {
    if f_t.len() != g_u.len() {
        return Err(Error::DimensionMismatch {
            what: "joint logits",
            expected: f_t.len(),
            got: g_u.len(),
        });
    }
    let sum: Vec<f64> = f_t.iter().zip(g_u).map(|(a, b)| a + b).collect();
    log_softmax(&sum)
}

/// Builds the full lattice with the precomputed-exponential scheme.
pub fn build_lattice(
    f: &[Vec<f64>],
    g: &[Vec<f64>],
    targets: &[usize],
) -> Result<JointLattice> {
    let mut counter = ExpCounter::new();
    build_lattice_counted(f, g, targets, &mut counter)
}

/// As [`build_lattice`], counting every `exp` evaluation in `counter`.
pub fn build_lattice_counted(
    f: &[Vec<f64>],
    g: &[Vec<f64>],
    targets: &[usize],
    counter: &mut ExpCounter,
) -> Result<JointLattice> {
    if f.is_empty() {
        return Err(Error::EmptyInput {
            what: "transcription sequence",
        });
    }
    let num_classes = f[0].len();
    if num_classes < 2 {
        return Err(Error::InvalidConfig {
            what: "joint lattice needs at least one real label plus null".into(),
        });
    }
    let alphabet_size = num_classes - 1;
    if g.len() != targets.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "prediction sequence length (must be U+1)",
            expected: targets.len() + 1,
            got: g.len(),
        });
    }
    for v in f.iter().chain(g.iter()) {
        if v.len() != num_classes {
            return Err(Error::DimensionMismatch {
                what: "logit vector width",
                expected: num_classes,
                got: v.len(),
            });
        }
    }
    for &y in targets {
        if y >= alphabet_size {
            return Err(Error::LabelOutOfRange {
                label: y,
                alphabet_size,
            });
        }
    }

    let t_len = f.len();
    let u_len = g.len();

    // Per-sequence max shifts keep every exponential in range without
    // changing the softmax.
    let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f_max: Vec<f64> = f.iter().map(|v| max_of(v)).collect();
    let g_max: Vec<f64> = g.iter().map(|v| max_of(v)).collect();
    let f_exp: Vec<Vec<f64>> = f
        .iter()
        .zip(&f_max)
        .map(|(v, &m)| v.iter().map(|&x| counter.exp(x - m)).collect())
        .collect();
    let g_exp: Vec<Vec<f64>> = g
        .iter()
        .zip(&g_max)
        .map(|(v, &m)| v.iter().map(|&x| counter.exp(x - m)).collect())
        .collect();

    let mut log_probs = vec![0.0; t_len * u_len * num_classes];
    let mut log_target = vec![LOG_ZERO; t_len * u_len];
    let mut log_null = vec![0.0; t_len * u_len];
    for t in 0..t_len {
        for u in 0..u_len {
            let mut denom = 0.0;
            for k in 0..num_classes {
                denom += f_exp[t][k] * g_exp[u][k];
            }
            let log_denom = ln(denom);
            let cell = (t * u_len + u) * num_classes;
            for k in 0..num_classes {
                log_probs[cell + k] = (f[t][k] - f_max[t]) + (g[u][k] - g_max[u]) - log_denom;
            }
            if u < targets.len() {
                log_target[t * u_len + u] = log_probs[cell + targets[u]];
            }
            log_null[t * u_len + u] = log_probs[cell + alphabet_size];
        }
    }

    Ok(JointLattice {
        t_len,
        u_len,
        num_classes,
        log_probs,
        log_target,
        log_null,
    })
}

/// Reference construction: one independent softmax per lattice cell,
/// `T * (U+1) * (K+1)` exponential evaluations. Used by tests to check
/// the precomputed path cell for cell.
pub fn build_lattice_naive_counted(
    f: &[Vec<f64>],
    g: &[Vec<f64>],
    targets: &[usize],
    counter: &mut ExpCounter,
) -> Result<JointLattice> {
    // Validate through the fast path, then overwrite every cell.
    let mut lattice = build_lattice(f, g, targets)?;
    let t_len = lattice.t_len;
    let u_len = lattice.u_len;
    let num_classes = lattice.num_classes;
    let alphabet_size = num_classes - 1;
    for t in 0..t_len {
        for u in 0..u_len {
            let logits: Vec<f64> = (0..num_classes).map(|k| f[t][k] + g[u][k]).collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = logits.iter().map(|&x| counter.exp(x - max)).sum();
            let log_denom = max + ln(denom);
            let cell = (t * u_len + u) * num_classes;
            for k in 0..num_classes {
                lattice.log_probs[cell + k] = logits[k] - log_denom;
            }
            if u < targets.len() {
                lattice.log_target[t * u_len + u] = lattice.log_probs[cell + targets[u]];
            }
            lattice.log_null[t * u_len + u] = lattice.log_probs[cell + alphabet_size];
        }
    }
    Ok(lattice)
}
