//! Ordinary least squares with classical inference: coefficients from
//! the normal equations, standard errors from the inverse Gram matrix,
//! Student-t statistics and two-sided p-values.

use super::stats::t_pvalue;
use super::{DesignMatrix, EngagementError};
use serde::{Deserialize, Serialize};

/// One fitted term of the regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsTerm {
    pub name: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsResult {
    pub terms: Vec<OlsTerm>,
    pub r_squared: f64,
    pub df_resid: i64,
    pub residual_std: f64,
}

/// Gauss-Jordan inversion with partial pivoting. Returns the inverse or
/// the index of the first column where no usable pivot exists.
fn invert(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, usize> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    // Scale-aware pivot tolerance.
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let tol = scale * 1e-12;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() < tol {
            return Err(col);
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in 0..n {
            a[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for i in 0..n {
            if i != col {
                let factor = a[i][col];
                if factor != 0.0 {
                    for j in 0..n {
                        a[i][j] -= factor * a[col][j];
                        inv[i][j] -= factor * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Fits y ~ 1 + X. Errors when rows do not exceed columns or the design
/// is rank-deficient (naming the collinear column).
pub fn ols_fit(design: &DesignMatrix) -> Result<OlsResult, EngagementError> {
    let n = design.n_rows();
    let m = design.n_features();
    let p = m + 1; // intercept prepended
    if n <= p {
        return Err(EngagementError::NotEnoughRows { rows: n, cols: p });
    }

    let names: Vec<String> = std::iter::once("Intercept".to_string())
        .chain(design.feature_names.iter().cloned())
        .collect();
    let row = |i: usize| -> Vec<f64> {
        std::iter::once(1.0)
            .chain(design.row(i).iter().copied())
            .collect()
    };

    // Gram matrix X'X and moment vector X'y.
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let xi = row(i);
        for a in 0..p {
            for b in 0..p {
                xtx[a][b] += xi[a] * xi[b];
            }
            xty[a] += xi[a] * design.target[i];
        }
    }

    let xtx_inv = invert(xtx).map_err(|col| EngagementError::RankDeficient {
        column: names[col].clone(),
    })?;
    let beta: Vec<f64> = (0..p)
        .map(|a| (0..p).map(|b| xtx_inv[a][b] * xty[b]).sum())
        .collect();

    let mut rss = 0.0;
    let mut tss = 0.0;
    let y_mean = design.target.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        let xi = row(i);
        let pred: f64 = xi.iter().zip(&beta).map(|(x, b)| x * b).sum();
        rss += (design.target[i] - pred).powi(2);
        tss += (design.target[i] - y_mean).powi(2);
    }
    let df_resid = (n - p) as i64;
    let sigma2 = rss / df_resid as f64;

    let terms = (0..p)
        .map(|j| {
            let se = (sigma2 * xtx_inv[j][j]).sqrt();
            let t = if se > 0.0 { beta[j] / se } else { 0.0 };
            Ok(OlsTerm {
                name: names[j].clone(),
                coefficient: beta[j],
                std_error: se,
                t_value: t,
                p_value: t_pvalue(t, df_resid)
                    .map_err(|e| EngagementError::Stats(e.to_string()))?,
            })
        })
        .collect::<Result<Vec<_>, EngagementError>>()?;

    Ok(OlsResult {
        terms,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 0.0 },
        df_resid,
        residual_std: sigma2.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engagement::DesignMatrix;

    fn design(rows: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        let m = rows[0].len();
        DesignMatrix {
            post_ids: (0..rows.len()).map(|i| format!("p{i}")).collect(),
            feature_names: (0..m).map(|j| format!("x{j}")).collect(),
            rows: rows.into_iter().flatten().collect(),
            n_features: m,
            target: y,
            standardized: false,
        }
    }

    #[test]
    fn perfect_line_recovers_slope_and_intercept() {
        // y = 2x + 1 on four points (n must exceed p).
        let d = design(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1.0, 3.0, 5.0, 7.0],
        );
        let fit = ols_fit(&d).unwrap();
        assert!((fit.terms[0].coefficient - 1.0).abs() < 1e-10);
        assert!((fit.terms[1].coefficient - 2.0).abs() < 1e-10);
        assert!(fit.residual_std < 1e-8);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t_is_coefficient_over_std_error() {
        let d = design(
            vec![
                vec![0.1, 1.2],
                vec![1.3, 0.4],
                vec![2.1, 2.2],
                vec![3.3, 1.1],
                vec![4.0, 0.2],
                vec![5.2, 2.9],
                vec![6.1, 1.5],
            ],
            vec![1.0, 2.2, 3.1, 4.9, 5.3, 7.0, 7.9],
        );
        let fit = ols_fit(&d).unwrap();
        for term in &fit.terms {
            if term.std_error > 0.0 {
                assert!(
                    (term.t_value - term.coefficient / term.std_error).abs() < 1e-9,
                    "t identity broken for {}",
                    term.name
                );
            }
            assert!((0.0..=1.0).contains(&term.p_value));
        }
        assert!((0.0..=1.0).contains(&fit.r_squared));
    }

    #[test]
    fn rank_deficient_design_names_the_column() {
        // x1 = 2 * x0 exactly.
        let d = design(
            vec![
                vec![1.0, 2.0],
                vec![2.0, 4.0],
                vec![3.0, 6.0],
                vec![4.0, 8.0],
            ],
            vec![1.0, 2.0, 3.0, 4.0],
        );
        let err = ols_fit(&d).unwrap_err();
        match err {
            EngagementError::RankDeficient { column } => assert_eq!(column, "x1"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_design_columns() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let n = 60;
        let m = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 3.0 + r.iter().sum::<f64>() + rng.gen_range(-1.0..1.0))
            .collect();
        let d = design(rows.clone(), y.clone());
        let fit = ols_fit(&d).unwrap();
        let beta: Vec<f64> = fit.terms.iter().map(|t| t.coefficient).collect();
        let scale = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        for col in 0..=m {
            let mut dot = 0.0;
            for i in 0..n {
                let xi: Vec<f64> = std::iter::once(1.0).chain(rows[i].iter().copied()).collect();
                let pred: f64 = xi.iter().zip(&beta).map(|(x, b)| x * b).sum();
                dot += xi[col] * (y[i] - pred);
            }
            assert!(dot.abs() < 1e-8 * scale.max(1.0), "column {col}: {dot}");
        }
    }
}
