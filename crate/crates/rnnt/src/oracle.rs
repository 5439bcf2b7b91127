//! Brute-force reference implementations used by tests: explicit alignment
//! enumeration, probability-space dynamic programming and exhaustive
//! decoding. Deliberately written in probability space where the main code
//! path works in logs, so the two routes share no numerics. Guards keep
//! every enumeration desk-sized; these are not production paths.

use alloc::vec;
use alloc::vec::Vec;

use crate::decoder::rank_cmp;
use crate::error::{Error, Result};
use crate::joint::{build_lattice, JointLattice};
use crate::lattice::forward_pass;
use crate::math::{exp, ln};
use crate::networks::{predict_sequence, PredictionNet};

/// Enumeration guard shared by the oracles.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// One monotone lattice path: `T-1` horizontal null moves and `U` vertical
/// label moves in some interleaving, then the terminal null. Removing the
/// null moves recovers the target sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub moves: Vec<AlignmentMove>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentMove {
    /// Advance `t` without emitting (the last move is always the terminal
    /// null at the top-right node).
    Null,
    /// Emit the next target label, advancing `u`.
    Emit,
}

impl Alignment {
    /// The alignment as a sequence over the extended alphabet: `Some(label)`
    /// for emissions, `None` for nulls.
    pub fn to_symbols(&self, targets: &[usize]) -> Vec<Option<usize>> {
        let mut u = 0;
        self.moves
            .iter()
            .map(|m| match m {
                AlignmentMove::Null => None,
                AlignmentMove::Emit => {
                    let y = targets[u];
                    u += 1;
                    Some(y)
                }
            })
            .collect()
    }

    /// Path probability under the lattice's transition grids, computed in
    /// probability space.
    pub fn probability(&self, lattice: &JointLattice) -> f64 {
        let mut t = 0usize;
        let mut u = 0usize;
        let mut p = 1.0;
        for m in &self.moves {
            match m {
                AlignmentMove::Null => {
                    p *= exp(lattice.log_null(t, u));
                    t += 1;
                }
                AlignmentMove::Emit => {
                    p *= exp(lattice.log_target(t, u));
                    u += 1;
                }
            }
        }
        p
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of monotone paths for a `T x (U+1)` lattice: `C(T-1+U, U)`.
pub fn alignment_count(t_len: usize, u_len: usize) -> u64 {
    binomial((t_len - 1 + u_len) as u64, u_len as u64)
}

/// Every monotone path from the bottom-left node to the terminal node.
pub fn enumerate_alignments(t_len: usize, u_len: usize) -> Result<Vec<Alignment>> {
    if t_len < 1 {
        return Err(Error::EmptyInput {
            what: "alignment enumeration needs T >= 1",
        });
    }
    let count = alignment_count(t_len, u_len);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size: count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = Vec::with_capacity(t_len + u_len);
    fn rec(
        nulls_left: usize,
        emits_left: usize,
        current: &mut Vec<AlignmentMove>,
        out: &mut Vec<Alignment>,
    ) {
        if nulls_left == 0 && emits_left == 0 {
            let mut moves = current.clone();
            moves.push(AlignmentMove::Null); // terminal
            out.push(Alignment { moves });
            return;
        }
        if nulls_left > 0 {
            current.push(AlignmentMove::Null);
            rec(nulls_left - 1, emits_left, current, out);
            current.pop();
        }
        if emits_left > 0 {
            current.push(AlignmentMove::Emit);
            rec(nulls_left, emits_left - 1, current, out);
            current.pop();
        }
    }
    rec(t_len - 1, u_len, &mut current, &mut out);
    debug_assert_eq!(out.len() as u64, count);
    Ok(out)
}

/// Total target probability by summing every alignment's probability, in
/// probability space.
pub fn brute_force_log_prob(lattice: &JointLattice) -> Result<f64> {
    let paths = enumerate_alignments(lattice.t_len(), lattice.u_len() - 1)?;
    let total: f64 = paths.iter().map(|a| a.probability(lattice)).sum();
    Ok(ln(total))
}

/// Forward recursion in plain probability space. Underflows where the main
/// log-space path does not; only valid on tiny instances.
pub fn prob_space_forward(lattice: &JointLattice) -> f64 {
    let t_len = lattice.t_len();
    let u_len = lattice.u_len();
    let mut alpha = vec![vec![0.0f64; u_len]; t_len];
    for t in 0..t_len {
        for u in 0..u_len {
            if t == 0 && u == 0 {
                alpha[0][0] = 1.0;
                continue;
            }
            let horizontal = if t > 0 {
                alpha[t - 1][u] * exp(lattice.log_null(t - 1, u))
            } else {
                0.0
            };
            let vertical = if u > 0 {
                alpha[t][u - 1] * exp(lattice.log_target(t, u - 1))
            } else {
                0.0
            };
            alpha[t][u] = horizontal + vertical;
        }
    }
    ln(alpha[t_len - 1][u_len - 1] * exp(lattice.log_null(t_len - 1, u_len - 1)))
}

/// A scored candidate from [`exhaustive_decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSequence {
    pub labels: Vec<usize>,
    pub log_prob: f64,
    pub normalized_log_prob: f64,
}

/// Scores every label sequence up to `max_len` by its exact sequence
/// probability and ranks them exactly like the beam search does.
pub fn exhaustive_decode(
    f: &[Vec<f64>],
    net: &PredictionNet,
    max_len: usize,
) -> Result<Vec<ScoredSequence>> {
    let k = net.alphabet_size;
    let size = ((k + 1) as u64).checked_pow(max_len as u32).unwrap_or(u64::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }

    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(labels) = stack.pop() {
        let (g, _) = predict_sequence(net, &labels, false)?;
        let lattice = build_lattice(f, &g, &labels)?;
        let (_, log_prob) = forward_pass(&lattice);
        out.push(ScoredSequence {
            labels: labels.clone(),
            log_prob,
            normalized_log_prob: log_prob / labels.len().max(1) as f64,
        });
        if labels.len() < max_len {
            for y in (0..k).rev() {
                let mut child = labels.clone();
                child.push(y);
                stack.push(child);
            }
        }
    }
    out.sort_by(|a, b| {
        rank_cmp(
            (a.normalized_log_prob, &a.labels),
            (b.normalized_log_prob, &b.labels),
        )
    });
    Ok(out)
}
