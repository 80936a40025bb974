//! Partial dependence: the model's average prediction as one feature is
//! swept over a quantile grid with the other features held at their
//! observed values.

use super::shap::PredictRow;
use super::{DesignMatrix, EngagementError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdpCurve {
    pub feature: String,
    pub grid: Vec<f64>,
    pub avg_prediction: Vec<f64>,
    /// Set when the feature is constant and the curve collapsed to a
    /// single point.
    pub constant_feature: bool,
}

/// Empirical quantile grid (deduplicated, strictly increasing). Quantile
/// indices are spread evenly including both endpoints.
fn quantile_grid(values: &[f64], grid_size: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut grid: Vec<f64> = (0..grid_size)
        .map(|g| {
            let q = g as f64 / (grid_size - 1) as f64;
            sorted[((n - 1) as f64 * q).round() as usize]
        })
        .collect();
    grid.dedup();
    grid
}

/// Computes the partial dependence of `model` on feature `feature` over
/// a `grid_size`-point quantile grid of the observed values.
pub fn pdp(
    model: &dyn PredictRow,
    design: &DesignMatrix,
    feature: usize,
    grid_size: usize,
) -> Result<PdpCurve, EngagementError> {
    if design.n_rows() == 0 {
        return Err(EngagementError::EmptyDesign);
    }
    if feature >= design.n_features() {
        return Err(EngagementError::BadFeature(feature));
    }
    assert!(grid_size >= 2, "grid_size must be >= 2");

    let column = design.column(feature);
    let grid = quantile_grid(&column, grid_size);
    let constant_feature = grid.len() == 1;

    let avg_prediction: Vec<f64> = grid
        .par_iter()
        .map(|&value| {
            let mut sum = 0.0;
            let mut row_buf = vec![0.0; design.n_features()];
            for i in 0..design.n_rows() {
                row_buf.copy_from_slice(design.row(i));
                row_buf[feature] = value;
                sum += model.predict_row(&row_buf);
            }
            sum / design.n_rows() as f64
        })
        .collect();

    Ok(PdpCurve {
        feature: design.feature_names[feature].clone(),
        grid,
        avg_prediction,
        constant_feature,
    })
}
