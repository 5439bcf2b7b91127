//! Dense vector/matrix kernels, stable log-space reductions and seeded
//! randomness. Everything here is deterministic given its inputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Log-domain zero.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

// Float math routed through one shim so the crate builds without std.
#[cfg(feature = "std")]
mod real {
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    pub fn tanh(x: f64) -> f64 {
        x.tanh()
    }
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
}

#[cfg(not(feature = "std"))]
mod real {
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    pub fn tanh(x: f64) -> f64 {
        libm::tanh(x)
    }
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
}

pub fn exp(x: f64) -> f64 {
    real::exp(x)
}

pub fn ln(x: f64) -> f64 {
    real::ln(x)
}

pub fn tanh(x: f64) -> f64 {
    real::tanh(x)
}

pub fn abs(x: f64) -> f64 {
    real::abs(x)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + real::exp(-x))
}

/// Counts calls to [`ExpCounter::exp`]; used to verify how many exponential
/// evaluations a code path performs.
#[derive(Debug, Default, Clone)]
pub struct ExpCounter {
    pub calls: u64,
}

impl ExpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn exp(&mut self, x: f64) -> f64 {
        self.calls += 1;
        real::exp(x)
    }
}

/// log(e^a + e^b) without leaving log space. `a` and `b` may be [`LOG_ZERO`].
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == LOG_ZERO {
        return b;
    }
    if b == LOG_ZERO {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + real::ln(1.0 + real::exp(lo - hi))
}

/// log of the sum of exponentials, exact for the maximum element.
///
/// Entries may include [`LOG_ZERO`]; an empty slice is an error.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput {
            what: "log_sum_exp",
        });
    }
    let max = values.iter().copied().fold(LOG_ZERO, f64::max);
    if max == LOG_ZERO {
        return Ok(LOG_ZERO);
    }
    let sum: f64 = values.iter().map(|&v| real::exp(v - max)).sum();
    Ok(max + real::ln(sum))
}

/// Shift-invariant log softmax; exp of the outputs sums to one.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let norm = log_sum_exp(logits)?;
    Ok(logits.iter().map(|&v| v - norm).collect())
}

/// One-hot encoding over an alphabet of size `alphabet_size`; `None` encodes
/// the null label as an all-zero vector.
pub fn one_hot(label: Option<usize>, alphabet_size: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; alphabet_size];
    if let Some(k) = label {
        if k >= alphabet_size {
            return Err(Error::LabelOutOfRange {
                label: k,
                alphabet_size,
            });
        }
        v[k] = 1.0;
    }
    Ok(v)
}

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    /// `out += self * x`. Panics on dimension disagreement; callers validate
    /// shapes at module boundaries.
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec: vector length != cols");
        assert_eq!(out.len(), self.rows, "matvec: output length != rows");
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *o += acc;
        }
    }

    /// `out += self^T * x`.
    pub fn matvec_transpose_add(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.rows, "matvec_t: vector length != rows");
        assert_eq!(out.len(), self.cols, "matvec_t: output length != cols");
        for (r, xi) in x.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * xi;
            }
        }
    }

    /// Rank-one update `self += a * b^T`; `a` spans rows, `b` spans columns.
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), self.rows, "add_outer: a length != rows");
        assert_eq!(b.len(), self.cols, "add_outer: b length != cols");
        for (r, ai) in a.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, bi) in row.iter_mut().zip(b) {
                *w += ai * bi;
            }
        }
    }
}

/// Deterministic pseudo-random stream (xoshiro256++ seeded via splitmix64).
///
/// The stream is a pure function of the 64-bit seed and is identical across
/// runs and platforms. Single-owner mutable state; not for sharing across
/// concurrent tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededRng {
    state: [u64; 4],
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut next = || {
            sm = sm.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = sm;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        Self {
            state: [next(), next(), next(), next()],
        }
    }

    /// Restores a generator from a serialized state snapshot.
    pub fn from_state(state: [u64; 4]) -> Self {
        Self { state }
    }

    pub fn state(&self) -> [u64; 4] {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal draw via the Box-Muller transform. Consumes exactly
    /// two uniforms per call so the stream position stays predictable.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        real::sqrt(-2.0 * real::ln(u1)) * real::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }
}
