//! The supervised phase: MSE loss, the analytic gradient step, and the
//! epoch loop with scheduled learning rates.

use super::{ScorerError, ScorerParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One labeled example: features, the category block it trains, and the
/// aggregated human target score.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub post_id: String,
    pub category_index: usize,
    pub features: Vec<f64>,
    pub target: f64,
}

/// Mean squared error: (1/n) * sum((pred - target)^2).
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64, ScorerError> {
    assert_eq!(predictions.len(), targets.len(), "length mismatch");
    if predictions.is_empty() {
        return Err(ScorerError::EmptyBatch);
    }
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

fn predict(params: &ScorerParams, ex: &TrainExample) -> f64 {
    params
        .weights(ex.category_index)
        .iter()
        .zip(&ex.features)
        .map(|(w, x)| w * x)
        .sum()
}

/// Batch MSE under the current parameters.
pub fn batch_mse(params: &ScorerParams, batch: &[TrainExample]) -> Result<f64, ScorerError> {
    let preds: Vec<f64> = batch.iter().map(|ex| predict(params, ex)).collect();
    let targets: Vec<f64> = batch.iter().map(|ex| ex.target).collect();
    mse_loss(&preds, &targets)
}

/// Analytic batch gradient of the MSE for the linear surrogate:
/// grad = (2/n) * sum((pred_i - y_i) * x_i), accumulated into each
/// example's category block.
pub fn gradient(params: &ScorerParams, batch: &[TrainExample]) -> Vec<f64> {
    let mut grad = vec![0.0; params.theta.len()];
    let n = batch.len() as f64;
    let d = params.feature_dim;
    for ex in batch {
        let err = predict(params, ex) - ex.target;
        let block = &mut grad[ex.category_index * d..(ex.category_index + 1) * d];
        for (g, x) in block.iter_mut().zip(&ex.features) {
            *g += 2.0 / n * err * x;
        }
    }
    grad
}

/// One gradient-descent update: theta_new = theta_old - lr_t * grad,
/// with lr_t taken from the warmup/cosine schedule at the current step.
/// A non-finite gradient aborts with `Divergence`, leaving `params`
/// untouched so the caller keeps the last good state.
pub fn gd_step(params: &mut ScorerParams, batch: &[TrainExample]) -> Result<(), ScorerError> {
    if batch.is_empty() {
        return Err(ScorerError::EmptyBatch);
    }
    let grad = gradient(params, batch);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(ScorerError::Divergence { step: params.step });
    }
    let lr = params.lr_at(params.step);
    for (w, g) in params.theta.iter_mut().zip(&grad) {
        *w -= lr * g;
    }
    params.step += 1;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: u64,
    pub step: u64,
    pub lr: f64,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ScorerParams,
    pub curve: Vec<EpochStats>,
}

/// Runs the epoch loop: canonical example order, a seeded shuffle per
/// epoch, minibatch updates, and one log row per epoch. Deterministic
/// for a fixed seed. Zero epochs returns the initial parameters
/// unchanged. On divergence the last finished epoch's parameters are the
/// checkpoint of record inside the error path.
pub fn train(
    train_split: &[TrainExample],
    val_split: &[TrainExample],
    params0: &ScorerParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ScorerError> {
    if train_split.is_empty() {
        return Err(ScorerError::EmptyTrainSplit);
    }
    let mut params = params0.clone();

    let mut examples: Vec<&TrainExample> = train_split.iter().collect();
    examples.sort_by(|a, b| (&a.post_id, a.category_index).cmp(&(&b.post_id, b.category_index)));

    let batch_size = cfg.batch_size.max(1);
    let steps_per_epoch = examples.len().div_ceil(batch_size) as u64;
    params.total_steps = Some(params.step + cfg.epochs * steps_per_epoch);

    let mut curve = Vec::new();
    for epoch in 0..cfg.epochs {
        let mut order = examples.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(crate::hash::derive_seed_indexed(
            params.rng_seed,
            "epoch",
            epoch,
        ));
        order.shuffle(&mut rng);

        for chunk in order.chunks(batch_size) {
            let batch: Vec<TrainExample> = chunk.iter().map(|&e| e.clone()).collect();
            gd_step(&mut params, &batch)?;
        }
        params.epoch += 1;

        let train_mse = batch_mse(&params, train_split)?;
        let val_mse = if val_split.is_empty() {
            None
        } else {
            Some(batch_mse(&params, val_split)?)
        };
        curve.push(EpochStats {
            epoch: params.epoch,
            step: params.step,
            lr: params.lr_at(params.step.saturating_sub(1)),
            train_mse,
            val_mse,
        });
    }

    Ok(TrainOutcome { params, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(cat: usize, features: Vec<f64>, target: f64) -> TrainExample {
        TrainExample {
            post_id: format!("p{}", features.iter().sum::<f64>()),
            category_index: cat,
            features,
            target,
        }
    }

    #[test]
    fn mse_perfect_fit_is_zero() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn mse_hand_cases() {
        assert_eq!(mse_loss(&[0.0], &[4.0]).unwrap(), 16.0);
        assert_eq!(mse_loss(&[1.0, 3.0], &[2.0, 5.0]).unwrap(), 2.5);
    }

    #[test]
    fn mse_empty_is_error() {
        assert!(matches!(mse_loss(&[], &[]), Err(ScorerError::EmptyBatch)));
    }

    #[test]
    fn gd_step_zero_gradient_leaves_theta_unchanged() {
        let mut p = ScorerParams::new(2, 1, 0.1, 1);
        p.warmup_steps = 0;
        p.theta = vec![1.0, 2.0];
        let batch = vec![example(0, vec![3.0, 1.0], 5.0)]; // 1*3 + 2*1 = 5 = target
        gd_step(&mut p, &batch).unwrap();
        assert_eq!(p.theta, vec![1.0, 2.0]);
        assert_eq!(p.step, 1);
    }

    #[test]
    fn gd_step_hand_derived_update() {
        // theta=0 (1-dim), x=1, y=4, alpha=0.1: grad = 2*(0-4)*1 = -8,
        // theta_new = 0 - 0.1*(-8) = 0.8, exactly.
        let mut p = ScorerParams::new(1, 1, 0.1, 1);
        p.warmup_steps = 0;
        let batch = vec![example(0, vec![1.0], 4.0)];
        gd_step(&mut p, &batch).unwrap();
        assert_eq!(p.theta[0], 0.8);
    }

    #[test]
    fn divergence_keeps_last_good_params() {
        let mut p = ScorerParams::new(1, 1, 0.1, 1);
        p.warmup_steps = 0;
        p.theta = vec![f64::MAX];
        let batch = vec![example(0, vec![f64::MAX], 0.0)];
        let before = p.theta.clone();
        let err = gd_step(&mut p, &batch).unwrap_err();
        assert!(matches!(err, ScorerError::Divergence { .. }));
        assert_eq!(p.theta, before);
        assert_eq!(p.step, 0);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let d = 4;
        for _ in 0..100 {
            let mut p = ScorerParams::new(d, 2, 0.1, 1);
            p.theta = (0..2 * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let batch: Vec<TrainExample> = (0..6)
                .map(|i| {
                    example(
                        i % 2,
                        (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                        rng.gen_range(1.0..7.0),
                    )
                })
                .collect();
            let analytic = gradient(&p, &batch);
            let h = 1e-5;
            for j in 0..p.theta.len() {
                let mut plus = p.clone();
                plus.theta[j] += h;
                let mut minus = p.clone();
                minus.theta[j] -= h;
                let numeric =
                    (batch_mse(&plus, &batch).unwrap() - batch_mse(&minus, &batch).unwrap())
                        / (2.0 * h);
                let denom = analytic[j].abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (analytic[j] - numeric).abs() / denom < 1e-5,
                    "component {j}: analytic {} vs numeric {numeric}",
                    analytic[j]
                );
            }
        }
    }

    #[test]
    fn zero_epochs_returns_params_unchanged() {
        let p0 = ScorerParams::new(2, 1, 0.1, 7);
        let data = vec![example(0, vec![1.0, 2.0], 3.0)];
        let out = train(&data, &[], &p0, &TrainConfig { epochs: 0, batch_size: 4 }).unwrap();
        assert_eq!(out.params.theta, p0.theta);
        assert!(out.curve.is_empty());
    }

    #[test]
    fn empty_train_split_is_an_error() {
        let p0 = ScorerParams::new(2, 1, 0.1, 7);
        assert!(matches!(
            train(&[], &[], &p0, &TrainConfig::default()),
            Err(ScorerError::EmptyTrainSplit)
        ));
    }

    #[test]
    fn same_seed_gives_bit_identical_loss_curves() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<TrainExample> = (0..40)
            .map(|i| {
                example(
                    i % 3,
                    (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    rng.gen_range(1.0..7.0),
                )
            })
            .collect();
        let p0 = ScorerParams::new(4, 3, 0.05, 11);
        let cfg = TrainConfig { epochs: 20, batch_size: 8 };
        let a = train(&data, &[], &p0, &cfg).unwrap();
        let b = train(&data, &[], &p0, &cfg).unwrap();
        let curve = |o: &TrainOutcome| o.curve.iter().map(|e| e.train_mse.to_bits()).collect::<Vec<_>>();
        assert_eq!(curve(&a), curve(&b));
        assert_eq!(a.params.theta, b.params.theta);
    }

    #[test]
    fn noiseless_linear_targets_are_recovered() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = 6;
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data: Vec<TrainExample> = (0..64)
            .map(|i| {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y = w.iter().zip(&x).map(|(a, b)| a * b).sum();
                TrainExample {
                    post_id: format!("p{i:03}"),
                    category_index: 0,
                    features: x,
                    target: y,
                }
            })
            .collect();
        let mut p0 = ScorerParams::new(d, 1, 0.8, 5);
        p0.warmup_steps = 500;
        let out = train(&data, &[], &p0, &TrainConfig { epochs: 500, batch_size: 16 }).unwrap();
        let final_mse = out.curve.last().unwrap().train_mse;
        assert!(final_mse < 1e-6, "final train MSE {final_mse}");
        for (learned, truth) in out.params.weights(0).iter().zip(&w) {
            assert!((learned - truth).abs() < 1e-3, "weight {learned} vs {truth}");
        }
    }

    #[test]
    fn noisy_linear_targets_reach_noise_floor() {
        use rand::Rng;
        // Box-Muller standard normal.
        fn normal(rng: &mut ChaCha8Rng) -> f64 {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = 5;
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data: Vec<TrainExample> = (0..100)
            .map(|i| {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                    + 0.1 * normal(&mut rng);
                TrainExample {
                    post_id: format!("p{i:03}"),
                    category_index: 0,
                    features: x,
                    target: y,
                }
            })
            .collect();
        let p0 = ScorerParams::new(d, 1, 0.5, 5);
        let out = train(&data, &[], &p0, &TrainConfig { epochs: 200, batch_size: 25 }).unwrap();
        let final_mse = out.curve.last().unwrap().train_mse;
        assert!(final_mse <= 2.0 * 0.1 * 0.1, "final train MSE {final_mse}");
    }
}
