//! Exact interventional Shapley attribution by full coalition
//! enumeration. With five features there are only 32 coalitions, so the
//! exact weighting is cheap and oracle-verifiable; no TreeSHAP or
//! sampling approximations are involved.

use super::{EngagementError, Forest};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Row-prediction interface shared by the forest, PDP, and SHAP; test
/// oracles implement it with closures.
pub trait PredictRow: Sync {
    fn predict_row(&self, row: &[f64]) -> f64;
}

impl PredictRow for Forest {
    fn predict_row(&self, row: &[f64]) -> f64 {
        Forest::predict_row(self, row)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapMatrix {
    /// v(empty set): mean model prediction over the background sample.
    pub base_value: f64,
    /// One attribution row per explained row, `n x m`.
    pub values: Vec<Vec<f64>>,
    /// Model predictions for the explained rows (for the local-accuracy
    /// identity base + sum(phi) == prediction).
    pub predictions: Vec<f64>,
    pub background_size: usize,
}

/// Factorial as f64 (m <= 15 keeps this exact).
fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Interventional coalition value for one explained row: the mean model
/// prediction over the background with coalition features taken from
/// `x` and the rest from the background row.
fn coalition_values(
    model: &dyn PredictRow,
    x: &[f64],
    background: &[Vec<f64>],
    m: usize,
) -> Vec<f64> {
    let mut values = vec![0.0; 1 << m];
    let mut composed = vec![0.0; m];
    for (mask, slot) in values.iter_mut().enumerate() {
        let mut sum = 0.0;
        for b in background {
            for j in 0..m {
                composed[j] = if mask & (1 << j) != 0 { x[j] } else { b[j] };
            }
            sum += model.predict_row(&composed);
        }
        *slot = sum / background.len() as f64;
    }
    values
}

/// Exact Shapley values for each row of `rows`, with absent features
/// drawn from `background`. phi_i sums the weighted marginal
/// contributions v(S + i) - v(S) over every coalition S not containing
/// i, with weight |S|! (m-|S|-1)! / m!.
pub fn shap_exact(
    model: &dyn PredictRow,
    rows: &[Vec<f64>],
    background: &[Vec<f64>],
) -> Result<ShapMatrix, EngagementError> {
    if background.is_empty() {
        return Err(EngagementError::EmptyBackground);
    }
    let m = background[0].len();
    assert!(m <= 15, "exact enumeration is limited to 15 features");
    assert!(rows.iter().all(|r| r.len() == m), "row width mismatch");

    let m_fact = factorial(m);
    let weights: Vec<f64> = (0..m)
        .map(|s| factorial(s) * factorial(m - s - 1) / m_fact)
        .collect();

    let per_row: Vec<(Vec<f64>, f64)> = rows
        .par_iter()
        .map(|x| {
            let v = coalition_values(model, x, background, m);
            let mut phi = vec![0.0; m];
            for (feature, phi_slot) in phi.iter_mut().enumerate() {
                let bit = 1usize << feature;
                for mask in 0..(1usize << m) {
                    if mask & bit == 0 {
                        let s = (mask as u32).count_ones() as usize;
                        *phi_slot += weights[s] * (v[mask | bit] - v[mask]);
                    }
                }
            }
            (phi, v[(1 << m) - 1])
        })
        .collect();

    // v(empty) ignores x entirely: the mean prediction over background.
    let base_value =
        background.iter().map(|b| model.predict_row(b)).sum::<f64>() / background.len() as f64;

    Ok(ShapMatrix {
        base_value,
        values: per_row.iter().map(|(phi, _)| phi.clone()).collect(),
        predictions: per_row.iter().map(|(_, pred)| *pred).collect(),
        background_size: background.len(),
    })
}
