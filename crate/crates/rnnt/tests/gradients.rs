//! End-to-end gradient verification: every parameter of both networks
//! against central finite differences of the full transducer loss.

use rnnt::gradcheck::{check_gradients, check_gradients_with, DEFAULT_EPSILON};
use rnnt::math::SeededRng;
use rnnt::model::{Sample, TransducerModel};

fn tiny_instance(seed: u64) -> (TransducerModel, Sample) {
    let mut rng = SeededRng::new(seed);
    let (k, feat, hidden) = (2usize, 3usize, 2usize);
    let model = TransducerModel::init_uniform(k, feat, hidden, hidden, 0.1, &mut rng);
    let t_len = 3;
    let u = 2;
    let features: Vec<Vec<f64>> = (0..t_len)
        .map(|_| (0..feat).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..u).map(|_| rng.next_below(k)).collect();
    (model, Sample { features, labels })
}

#[test]
fn full_pipeline_gradients_match_finite_differences_on_three_seeds() {
    for seed in [42u64, 43, 44] {
        let (model, sample) = tiny_instance(seed);
        let report = check_gradients(&model, &sample, DEFAULT_EPSILON).unwrap();
        assert!(
            report.passes(1e-5),
            "seed {seed}: worst {} at {}[{}]",
            report.worst_relative_error,
            report.worst_param,
            report.worst_index
        );
        assert_eq!(report.params_checked, model.num_params());
    }
}

#[test]
fn networks_module_instance_from_the_contract() {
    // T=3, U=2, K=2, hidden 2: every gradient within 1e-6 relative of the
    // finite differences (the relative floor folds in 1e-9 absolute).
    let (model, sample) = tiny_instance(7);
    let report = check_gradients(&model, &sample, DEFAULT_EPSILON).unwrap();
    assert!(
        report.worst_relative_error < 1e-6,
        "worst {} at {}",
        report.worst_relative_error,
        report.worst_param
    );
}

#[test]
fn corrupted_gradient_is_caught_and_named() {
    let (model, sample) = tiny_instance(42);
    let report = check_gradients_with(&model, &sample, DEFAULT_EPSILON, |name, arr| {
        if name == "prediction.b_out" {
            for v in arr {
                *v *= 1.01;
            }
        }
    })
    .unwrap();
    assert!(
        !report.passes(1e-5),
        "a 1% corruption must fail the 1e-5 gate"
    );
    assert_eq!(report.worst_param, "prediction.b_out");
}

#[test]
fn empty_label_sequence_still_has_exact_gradients() {
    let (model, mut sample) = tiny_instance(5);
    sample.labels.clear();
    let report = check_gradients(&model, &sample, DEFAULT_EPSILON).unwrap();
    assert!(report.passes(1e-5), "worst {}", report.worst_relative_error);
}
