//! Fixed-width prefix beam search over output sequences.
//!
//! For each transcription step the beam keeps a set `A` of open hypotheses
//! (still consuming step `t`) and a set `B` of hypotheses that have closed
//! the step by emitting null. Before the expansion loop, every hypothesis
//! inherits probability mass from its proper prefixes still in `A` (a
//! prefix may emit the missing labels during this very step); the loop then
//! repeatedly moves the most probable open hypothesis to `B` and spawns its
//! one-label extensions until `B` holds `width` hypotheses more probable
//! than anything left open.
//!
//! Two readings of the pseudocode are resolved here in favour of exact
//! marginalisation, verified against exhaustive enumeration in tests:
//! label extensions branch from the open (pre-null) probability, and an
//! extension that would recreate a hypothesis already present in `A` or `B`
//! is dropped, because the prefix-merge phase has already routed that mass.
//!
//! Selection, pruning and the final ranking break probability ties
//! lexicographically, shorter sequence first, so results are deterministic.
//! The final ranking is by length-normalised log-probability
//! `log Pr(y) / max(|y|, 1)`.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math::{log_add, log_softmax, LOG_ZERO};
use crate::networks::{prediction_step, PredictionNet};
use crate::lstm::LstmState;

/// Labels emitted within a single transcription step before the search
/// declares the model degenerate, as a multiple of T.
const EMISSION_CAP_FACTOR: usize = 10;

/// Prediction-network context for one hypothesis: the recurrent state after
/// feeding `(null, y_1..y_n)` and the output vector `g_n` it produced.
#[derive(Debug, Clone)]
pub struct PredictionContext {
    pub state: LstmState,
    pub output: Vec<f64>,
}

impl PredictionContext {
    /// Context of the empty hypothesis: one step on the null input from the
    /// zero state.
    pub fn start(net: &PredictionNet) -> Result<Self> {
        let (state, output) = prediction_step(net, None, &LstmState::zeros(net.hidden_size()))?;
        Ok(Self { state, output })
    }

    /// One-step extension with label `k`.
    pub fn extend(&self, net: &PredictionNet, label: usize) -> Result<Self> {
        let (state, output) = prediction_step(net, Some(label), &self.state)?;
        Ok(Self { state, output })
    }

    /// Rebuilds the context for an arbitrary label sequence from the zero
    /// state; the cached incremental path must match this exactly.
    pub fn from_scratch(net: &PredictionNet, labels: &[usize]) -> Result<Self> {
        let mut ctx = Self::start(net)?;
        for &k in labels {
            ctx = ctx.extend(net, k)?;
        }
        Ok(ctx)
    }
}

/// A decoded sequence with its accumulated log-probability and the
/// length-normalised score used for ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedHypothesis {
    pub labels: Vec<usize>,
    pub log_prob: f64,
    pub normalized_log_prob: f64,
}

/// Ranking used everywhere results are ordered: higher score first, then
/// shorter sequence, then lexicographically smaller.
pub fn rank_cmp(a: (f64, &[usize]), b: (f64, &[usize])) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.len().cmp(&b.1.len()))
        .then_with(|| a.1.cmp(b.1))
}

#[derive(Debug, Clone)]
pub struct BeamOptions {
    pub width: usize,
    pub nbest: usize,
    /// Rebuild every prediction context from scratch instead of extending
    /// the cached state; slow, for verifying the cache.
    pub recompute_contexts: bool,
}

impl BeamOptions {
    pub fn new(width: usize, nbest: usize) -> Self {
        Self {
            width,
            nbest,
            recompute_contexts: false,
        }
    }
}

struct OpenHyp {
    log_prob: f64,
    ctx: PredictionContext,
    /// Labels emitted so far within the current transcription step.
    depth: usize,
}

struct ClosedHyp {
    labels: Vec<usize>,
    log_prob: f64,
    ctx: PredictionContext,
}

/// Max-heap entry; ties broken shorter-first then lexicographically.
struct HeapEntry {
    log_prob: f64,
    labels: Vec<usize>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_prob
            .total_cmp(&other.log_prob)
            .then_with(|| other.labels.len().cmp(&self.labels.len()))
            .then_with(|| other.labels.cmp(&self.labels))
    }
}

/// Max-ordered wrapper over log-probabilities for the guard bookkeeping:
/// the largest not-yet-counted closed probability crosses the falling
/// open-set maximum first.
struct MaxProb(f64);
impl PartialEq for MaxProb {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl Eq for MaxProb {}
impl PartialOrd for MaxProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for MaxProb {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Beam search over a transcription sequence, returning the `nbest` label
/// sequences ranked by length-normalised log-probability.
pub fn beam_search(
    f: &[Vec<f64>],
    net: &PredictionNet,
    width: usize,
    nbest: usize,
) -> Result<Vec<DecodedHypothesis>> {
    beam_search_with_options(f, net, &BeamOptions::new(width, nbest))
}

pub fn beam_search_with_options(
    f: &[Vec<f64>],
    net: &PredictionNet,
    options: &BeamOptions,
) -> Result<Vec<DecodedHypothesis>> {
    let width = options.width;
    if width < 1 {
        return Err(Error::InvalidBeamWidth { width });
    }
    if options.nbest < 1 || options.nbest > width {
        return Err(Error::InvalidConfig {
            what: "nbest must satisfy 1 <= nbest <= width".into(),
        });
    }
    if f.is_empty() {
        return Err(Error::EmptyInput {
            what: "transcription sequence",
        });
    }
    let num_classes = net.alphabet_size + 1;
    for v in f {
        if v.len() != num_classes {
            return Err(Error::DimensionMismatch {
                what: "transcription vector width",
                expected: num_classes,
                got: v.len(),
            });
        }
    }
    let alphabet_size = net.alphabet_size;
    let t_len = f.len();
    let cap = EMISSION_CAP_FACTOR * t_len;

    let mut closed: Vec<ClosedHyp> = Vec::new();
    closed.push(ClosedHyp {
        labels: Vec::new(),
        log_prob: 0.0,
        ctx: PredictionContext::start(net)?,
    });

    for (step, f_t) in f.iter().enumerate() {
        let joint = |ctx: &PredictionContext| -> Result<Vec<f64>> {
            let sum: Vec<f64> = f_t.iter().zip(&ctx.output).map(|(a, b)| a + b).collect();
            log_softmax(&sum)
        };

        // A = B, reopened for step t.
        let mut open: BTreeMap<Vec<usize>, OpenHyp> = BTreeMap::new();
        for hyp in closed.drain(..) {
            open.insert(
                hyp.labels,
                OpenHyp {
                    log_prob: hyp.log_prob,
                    ctx: hyp.ctx,
                    depth: 0,
                },
            );
        }

        // Prefix merge: mass from every proper prefix still in A that could
        // emit the missing labels during this step. Reads the pre-merge
        // snapshot so chains are counted exactly once.
        let snapshot: BTreeMap<Vec<usize>, f64> = open
            .iter()
            .map(|(labels, hyp)| (labels.clone(), hyp.log_prob))
            .collect();
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for labels in snapshot.keys() {
            if labels.is_empty() {
                continue;
            }
            let mut boost = LOG_ZERO;
            let mut ctx = match open.get(&Vec::new()) {
                Some(h) => h.ctx.clone(),
                None => PredictionContext::start(net)?,
            };
            for v in 0..labels.len() {
                if options.recompute_contexts {
                    ctx = PredictionContext::from_scratch(net, &labels[..v])?;
                }
                if let Some(&p) = snapshot.get(&labels[..v]) {
                    boost = log_add(boost, p);
                }
                let dist = joint(&ctx)?;
                boost += dist[labels[v]];
                if v + 1 < labels.len() {
                    ctx = match open.get(&labels[..=v]) {
                        Some(h) => h.ctx.clone(),
                        None => ctx.extend(net, labels[v])?,
                    };
                }
            }
            if boost > LOG_ZERO {
                merged.insert(labels.clone(), boost);
            }
        }
        for (labels, boost) in merged {
            let hyp = open.get_mut(&labels).expect("merged key came from open");
            hyp.log_prob = log_add(hyp.log_prob, boost);
        }

        let mut heap: BinaryHeap<HeapEntry> = open
            .iter()
            .map(|(labels, hyp)| HeapEntry {
                log_prob: hyp.log_prob,
                labels: labels.clone(),
            })
            .collect();

        let mut closed_map: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut pending: BinaryHeap<MaxProb> = BinaryHeap::new();
        let mut more_probable_than_open = 0usize;

        while let Some(top) = heap.peek() {
            let max_open = top.log_prob;
            while let Some(MaxProb(p)) = pending.peek() {
                if *p > max_open {
                    pending.pop();
                    more_probable_than_open += 1;
                } else {
                    break;
                }
            }
            if more_probable_than_open >= width {
                break;
            }

            let entry = heap.pop().expect("peeked entry");
            let hyp = open.remove(&entry.labels).expect("heap in sync with open");
            let dist = joint(&hyp.ctx)?;

            let closed_log_prob = hyp.log_prob + dist[alphabet_size];
            pending.push(MaxProb(closed_log_prob));
            closed_map.insert(entry.labels.clone(), closed.len());
            closed.push(ClosedHyp {
                labels: entry.labels.clone(),
                log_prob: closed_log_prob,
                ctx: hyp.ctx.clone(),
            });

            for k in 0..alphabet_size {
                let mut child_labels = entry.labels.clone();
                child_labels.push(k);
                if open.contains_key(&child_labels) || closed_map.contains_key(&child_labels) {
                    continue;
                }
                if hyp.depth + 1 > cap {
                    return Err(Error::EmissionCapExceeded { step: step + 1, cap });
                }
                let ctx = if options.recompute_contexts {
                    PredictionContext::from_scratch(net, &child_labels)?
                } else {
                    hyp.ctx.extend(net, k)?
                };
                let child = OpenHyp {
                    log_prob: hyp.log_prob + dist[k],
                    ctx,
                    depth: hyp.depth + 1,
                };
                heap.push(HeapEntry {
                    log_prob: child.log_prob,
                    labels: child_labels.clone(),
                });
                open.insert(child_labels, child);
            }
        }

        // Keep the width most probable closed hypotheses.
        closed.sort_by(|a, b| rank_cmp((a.log_prob, &a.labels), (b.log_prob, &b.labels)));
        closed.truncate(width);
    }

    let mut results: Vec<DecodedHypothesis> = closed
        .into_iter()
        .map(|hyp| {
            let norm = hyp.log_prob / hyp.labels.len().max(1) as f64;
            DecodedHypothesis {
                labels: hyp.labels,
                log_prob: hyp.log_prob,
                normalized_log_prob: norm,
            }
        })
        .collect();
    results.sort_by(|a, b| {
        rank_cmp(
            (a.normalized_log_prob, &a.labels),
            (b.normalized_log_prob, &b.labels),
        )
    });
    results.truncate(options.nbest);
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SeededRng;
    use crate::networks::predict_sequence;
    use crate::oracle::exhaustive_decode;
    use alloc::vec;

    /// Random decoding instance with the null logits biased upward so that
    /// longer sequences tend to score worse under length normalisation.
    fn biased_instance(
        t_len: usize,
        k: usize,
        seed: u64,
    ) -> (Vec<Vec<f64>>, PredictionNet) {
        let mut rng = SeededRng::new(seed);
        let net = PredictionNet::init_uniform(k, 4, 0.1, &mut rng);
        let f: Vec<Vec<f64>> = (0..t_len)
            .map(|_| {
                let mut row: Vec<f64> = (0..=k).map(|_| rng.uniform(-1.0, 1.0)).collect();
                row[k] = rng.uniform(1.0, 2.0);
                row
            })
            .collect();
        (f, net)
    }

    /// The bounded enumeration is only an oracle for the unbounded search
    /// if every longer sequence ranks strictly below the short top-3; this
    /// verifies that decay and rejects instances where it fails.
    fn decays_beyond(f: &[Vec<f64>], net: &PredictionNet, max_len: usize) -> bool {
        let deep = exhaustive_decode(f, net, max_len + 4).unwrap();
        let mut best_by_len = vec![f64::NEG_INFINITY; max_len + 5];
        for s in &deep {
            let l = s.labels.len();
            if s.normalized_log_prob > best_by_len[l] {
                best_by_len[l] = s.normalized_log_prob;
            }
        }
        let oracle = exhaustive_decode(f, net, max_len).unwrap();
        let cutoff = oracle[2].normalized_log_prob;
        (max_len + 1..=max_len + 4)
            .all(|l| best_by_len[l] < cutoff && best_by_len[l] < best_by_len[l - 1])
    }

    #[test]
    fn forced_null_model_returns_the_empty_sequence() {
        let mut rng = SeededRng::new(123);
        let net = PredictionNet::init_uniform(2, 3, 0.1, &mut rng);
        let mut f = vec![vec![0.0; 3]; 4];
        for row in &mut f {
            row[2] = 40.0;
        }
        let out = beam_search(&f, &net, 8, 1).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].labels.is_empty());
        assert!(out[0].log_prob > -1e-9, "null path has probability ~1");
    }

    #[test]
    fn wide_beam_matches_the_exhaustive_oracle() {
        // First instance that passes the decay verification.
        let (f, net) = (0..)
            .map(|seed| biased_instance(3, 2, seed))
            .find(|(f, net)| decays_beyond(f, net, 6))
            .unwrap();
        let oracle = exhaustive_decode(&f, &net, 6).unwrap();

        let out = beam_search(&f, &net, 10_000, 3).unwrap();
        assert_eq!(out[0].labels, oracle[0].labels, "top-1");
        for (rank, (got, want)) in out.iter().zip(&oracle).enumerate() {
            assert_eq!(got.labels, want.labels, "rank {rank}");
            assert!(
                (got.normalized_log_prob - want.normalized_log_prob).abs() < 1e-9,
                "rank {rank}: {} vs {}",
                got.normalized_log_prob,
                want.normalized_log_prob
            );
            assert!(got.log_prob <= 1e-12);
        }
    }

    #[test]
    fn beam_search_is_deterministic() {
        let (f, net) = biased_instance(4, 3, 77);
        let a = beam_search(&f, &net, 16, 5).unwrap();
        let b = beam_search(&f, &net, 16, 5).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.labels, y.labels);
            assert_eq!(x.log_prob.to_bits(), y.log_prob.to_bits());
        }
    }

    #[test]
    fn widening_the_beam_never_hurts_the_top_score() {
        for seed in [5u64, 6, 7, 8] {
            let (f, net) = biased_instance(4, 2, seed);
            let mut previous = f64::NEG_INFINITY;
            for width in [1usize, 2, 4, 8, 16, 32] {
                let out = beam_search(&f, &net, width, 1).unwrap();
                let score = out[0].normalized_log_prob;
                assert!(
                    score >= previous - 1e-12,
                    "seed {seed} width {width}: {score} < {previous}"
                );
                previous = score;
            }
        }
    }

    #[test]
    fn cached_contexts_match_from_scratch_reevaluation() {
        let (f, net) = biased_instance(3, 2, 909);
        let cached = beam_search_with_options(&f, &net, &BeamOptions::new(64, 5)).unwrap();
        let mut opts = BeamOptions::new(64, 5);
        opts.recompute_contexts = true;
        let scratch = beam_search_with_options(&f, &net, &opts).unwrap();
        assert_eq!(cached.len(), scratch.len());
        for (a, b) in cached.iter().zip(&scratch) {
            assert_eq!(a.labels, b.labels);
            assert!((a.log_prob - b.log_prob).abs() < 1e-10);
        }
    }

    #[test]
    fn hypothesis_context_equals_full_forward_pass() {
        let mut rng = SeededRng::new(4242);
        let net = PredictionNet::init_uniform(3, 4, 0.3, &mut rng);
        let labels = [2usize, 0, 1, 1];
        let ctx = PredictionContext::from_scratch(&net, &labels).unwrap();
        let (g, _) = predict_sequence(&net, &labels, false).unwrap();
        for (a, b) in ctx.output.iter().zip(g.last().unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let (f, net) = biased_instance(2, 2, 1);
        assert!(matches!(
            beam_search(&f, &net, 0, 1),
            Err(Error::InvalidBeamWidth { .. })
        ));
        assert!(beam_search(&f, &net, 4, 5).is_err());
        assert!(beam_search(&f, &net, 4, 0).is_err());
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(matches!(
            beam_search(&empty, &net, 4, 1),
            Err(Error::EmptyInput { .. })
        ));
    }

    #[test]
    fn degenerate_model_hits_the_emission_cap() {
        // Label 0 forced to probability ~1 at every step: hypotheses extend
        // forever without closing, so the per-step cap must fire.
        let mut rng = SeededRng::new(11);
        let net = PredictionNet::init_uniform(2, 2, 0.01, &mut rng);
        let mut f = vec![vec![0.0; 3]; 2];
        for row in &mut f {
            row[0] = 40.0;
            row[2] = -40.0;
        }
        match beam_search(&f, &net, 4, 1) {
            Err(Error::EmissionCapExceeded { step, cap }) => {
                assert_eq!(step, 1);
                assert_eq!(cap, 20);
            }
            other => panic!("expected EmissionCapExceeded, got {other:?}"),
        }
    }
}
