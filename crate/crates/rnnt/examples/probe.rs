use rnnt::math::SeededRng;
use rnnt::model::{Sample, TransducerModel};
use rnnt::trainer::{TrainConfig, Trainer, validation_error_rate};
use std::time::Instant;

fn copy_dataset(count: usize, t_range: (usize, usize), k: usize, rng: &mut SeededRng) -> Vec<Sample> {
    (0..count)
        .map(|_| {
            let t_len = t_range.0 + rng.next_below(t_range.1 - t_range.0 + 1);
            let labels: Vec<usize> = (0..t_len).map(|_| rng.next_below(k)).collect();
            let features = labels
                .iter()
                .map(|&s| (0..k).map(|d| if d == s { 1.0 } else { 0.0 } + 0.1 * rng.gaussian()).collect())
                .collect();
            Sample { features, labels }
        })
        .collect()
}

fn double_dataset(count: usize, t_range: (usize, usize), k: usize, rng: &mut SeededRng) -> Vec<Sample> {
    (0..count)
        .map(|_| {
            let t_len = t_range.0 + rng.next_below(t_range.1 - t_range.0 + 1);
            let symbols: Vec<usize> = (0..t_len).map(|_| rng.next_below(k)).collect();
            let features: Vec<Vec<f64>> = symbols
                .iter()
                .map(|&s| (0..k).map(|d| if d == s { 1.0 } else { 0.0 } + 0.1 * rng.gaussian()).collect())
                .collect();
            let labels = symbols.iter().flat_map(|&s| [s, s]).collect();
            Sample { features, labels }
        })
        .collect()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1e-4);
    let noise: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.075);
    let epochs: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(100);
    let task = args.get(4).cloned().unwrap_or_else(|| "copy".into());

    let mut rng = SeededRng::new(1);
    let k = 5;
    let (train, val) = if task == "double" {
        (double_dataset(200, (4, 12), k, &mut rng), double_dataset(50, (4, 12), k, &mut rng))
    } else {
        (copy_dataset(200, (4, 12), k, &mut rng), copy_dataset(50, (4, 12), k, &mut rng))
    };
    let model = TransducerModel::init_uniform(k, k, 16, 16, 0.1, &mut rng);
    let config = TrainConfig {
        learning_rate: lr,
        weight_noise_std: noise,
        max_epochs: epochs,
        seed: 1,
        ..TrainConfig::default()
    };
    eprintln!("lr={lr} noise={noise} epochs={epochs}");
    let t0 = Instant::now();
    let mut trainer = Trainer::new(model, config).unwrap();
    let run = trainer.run(&train, &val).unwrap();
    for row in run.log.iter().filter(|r| r.epoch % 10 == 0 || r.epoch == 1) {
        eprintln!(
            "epoch {:3}  train {:8.4}  val {:8.4}  bits {:6.3}",
            row.epoch, row.train_nats, row.val_nats, row.val_bits_per_target
        );
    }
    let err = validation_error_rate(&run.best.model, &val, 8).unwrap();
    eprintln!("best epoch {} val {:.4}; held-out error rate {:.2}%  ({:?})", run.best_epoch, run.best_metric, err, t0.elapsed());
}
