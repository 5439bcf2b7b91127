//! Central-finite-difference verification of the analytic gradients,
//! parameter by parameter, through the complete loss pipeline.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::math::abs;
use crate::model::{Sample, TransducerModel};

/// Default step for the central differences.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Relative errors use `|a - n| / max(|a|, |n|, FLOOR)`; the floor folds an
/// absolute tolerance into the relative one so finite-difference noise on
/// near-zero gradients does not dominate.
pub const RELATIVE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error over every scalar parameter.
    pub worst_relative_error: f64,
    /// Dotted array name and flat index of the worst parameter.
    pub worst_param: String,
    pub worst_index: usize,
    pub params_checked: usize,
    /// Worst relative error per parameter array, in declaration order.
    pub per_array: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst_relative_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    abs(analytic - numeric) / abs(analytic).max(abs(numeric)).max(RELATIVE_FLOOR)
}

/// Compares every parameter gradient against central finite differences of
/// the loss on `sample`.
pub fn check_gradients(
    model: &TransducerModel,
    sample: &Sample,
    epsilon: f64,
) -> Result<GradCheckReport> {
    check_gradients_with(model, sample, epsilon, |_, _| {})
}

/// As [`check_gradients`], with a hook that may tamper with the analytic
/// gradients before comparison (fault injection for testing the checker).
pub fn check_gradients_with(
    model: &TransducerModel,
    sample: &Sample,
    epsilon: f64,
    tamper: impl Fn(&str, &mut [f64]),
) -> Result<GradCheckReport> {
    let (_, mut grads) = model.loss_and_gradients(sample)?;
    for (name, arr) in grads.param_arrays_mut() {
        tamper(&name, arr);
    }

    let mut work = model.clone();
    let names: Vec<String> = work.param_arrays().iter().map(|(n, _)| n.clone()).collect();
    let lens: Vec<usize> = work.param_arrays().iter().map(|(_, a)| a.len()).collect();

    let mut worst = 0.0f64;
    let mut worst_param = String::new();
    let mut worst_index = 0usize;
    let mut per_array = Vec::with_capacity(names.len());
    let mut checked = 0usize;

    for (array_idx, (name, len)) in names.iter().zip(&lens).enumerate() {
        let mut array_worst = 0.0f64;
        for i in 0..*len {
            let original = work.param_arrays()[array_idx].1[i];

            work.param_arrays_mut()[array_idx].1[i] = original + epsilon;
            let loss_plus = -work.log_prob(sample)?;
            work.param_arrays_mut()[array_idx].1[i] = original - epsilon;
            let loss_minus = -work.log_prob(sample)?;
            work.param_arrays_mut()[array_idx].1[i] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
            let analytic = grads.param_arrays()[array_idx].1[i];
            let err = relative_error(analytic, numeric);
            checked += 1;
            if err > array_worst {
                array_worst = err;
            }
            if err > worst {
                worst = err;
                worst_param = name.clone();
                worst_index = i;
            }
        }
        per_array.push((name.clone(), array_worst));
    }

    Ok(GradCheckReport {
        worst_relative_error: worst,
        worst_param,
        worst_index,
        params_checked: checked,
        per_array,
    })
}
