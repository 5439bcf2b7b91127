//! Evaluation metrics: Levenshtein distance, length-normalised error rate
//! and bits-per-target log-loss.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Levenshtein distance with unit insert/delete/substitute costs.
pub fn edit_distance(a: &[usize], b: &[usize]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (j, &lj) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = j + 1;
        for (i, &si) in short.iter().enumerate() {
            let up = row[i + 1];
            row[i + 1] = if si == lj {
                diag
            } else {
                1 + diag.min(up).min(row[i])
            };
            diag = up;
        }
    }
    row[short.len()]
}

/// Summed edit distance divided by total target length, as a percentage.
pub fn error_rate(outputs: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64> {
    if outputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            what: "error_rate lists",
            expected: targets.len(),
            got: outputs.len(),
        });
    }
    let total_len: usize = targets.iter().map(|t| t.len()).sum();
    if total_len == 0 {
        return Err(Error::EmptyInput {
            what: "error_rate total target length",
        });
    }
    let total_dist: usize = outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| edit_distance(o, t))
        .sum();
    Ok(100.0 * total_dist as f64 / total_len as f64)
}

/// Converts a total log-loss in nats into average bits per target label.
pub fn bits_per_target(total_nats: f64, total_labels: usize) -> f64 {
    assert!(total_labels > 0, "bits_per_target needs at least one label");
    total_nats / core::f64::consts::LN_2 / total_labels as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance(&[1, 2, 3], &[1, 2, 3]), 0);
        assert_eq!(edit_distance(&[0, 1, 2], &[]), 3);
        // delete b, insert e: (a,b,c,d) vs (a,c,d,e) with a=0..
        assert_eq!(edit_distance(&[0, 1, 2, 3], &[0, 2, 3, 4]), 2);
    }

    #[test]
    fn error_rate_examples() {
        let targets = vec![vec![0usize; 10]];
        assert_eq!(error_rate(&targets.clone(), &targets).unwrap(), 0.0);

        let mut one_sub = vec![0usize; 10];
        one_sub[3] = 1;
        assert_eq!(error_rate(&[one_sub].to_vec(), &targets).unwrap(), 10.0);

        // distances (1, 0, 2) over target lengths (4, 3, 3) -> 30%
        let targets = vec![vec![0, 1, 2, 3], vec![0, 1, 2], vec![0, 1, 2]];
        let outputs = vec![vec![0, 1, 2], vec![0, 1, 2], vec![1, 0, 2]];
        assert_eq!(
            edit_distance(&outputs[2], &targets[2]),
            2,
            "transposition costs two unit edits"
        );
        assert_eq!(error_rate(&outputs, &targets).unwrap(), 30.0);
    }

    #[test]
    fn error_rate_rejects_empty_targets() {
        assert!(error_rate(&[vec![]], &[vec![]]).is_err());
    }

    #[test]
    fn bits_per_target_examples() {
        assert!((bits_per_target(core::f64::consts::LN_2, 1) - 1.0).abs() < 1e-15);
        assert!((bits_per_target(2.0 * core::f64::consts::LN_2, 4) - 0.5).abs() < 1e-15);
        // A uniform 40-way output spends log2(40) bits on a single label,
        // comfortably above the ~4.6-bit entropy of natural phoneme
        // distributions.
        let uniform = bits_per_target(crate::math::ln(40.0), 1);
        assert!((uniform - 40.0f64.log2()).abs() < 1e-12);
        assert!(uniform > 4.6);
    }
}
