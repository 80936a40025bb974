//! Inter-rater reliability: Cronbach's alpha (internal consistency) and
//! Krippendorff's alpha (chance-corrected agreement, ordinal metric,
//! missing data supported).

use super::SurveyError;
use std::collections::BTreeMap;

/// Raters-by-items score matrix with missing cells. Row-major.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    pub n_raters: usize,
    pub n_items: usize,
    cells: Vec<Option<f64>>,
}

impl ScoreMatrix {
    pub fn new(n_raters: usize, n_items: usize) -> Self {
        Self {
            n_raters,
            n_items,
            cells: vec![None; n_raters * n_items],
        }
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Self {
        let n_raters = rows.len();
        let n_items = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == n_items), "ragged matrix");
        Self {
            n_raters,
            n_items,
            cells: rows.iter().flatten().copied().collect(),
        }
    }

    /// Complete matrix from plain values.
    pub fn from_complete(rows: &[Vec<f64>]) -> Self {
        let wrapped: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Some(v)).collect())
            .collect();
        Self::from_rows(&wrapped)
    }

    pub fn get(&self, rater: usize, item: usize) -> Option<f64> {
        self.cells[rater * self.n_items + item]
    }

    pub fn set(&mut self, rater: usize, item: usize, value: f64) {
        self.cells[rater * self.n_items + item] = Some(value);
    }

    /// Ratings present for one item.
    pub fn item_values(&self, item: usize) -> Vec<f64> {
        (0..self.n_raters).filter_map(|r| self.get(r, item)).collect()
    }
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 2);
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Cronbach's alpha: (k/(k-1)) * (1 - sum of item variances / variance of
/// rater totals), sample variances throughout. Rows with missing cells
/// are excluded (complete-case).
pub fn cronbach_alpha(matrix: &ScoreMatrix) -> Result<f64, SurveyError> {
    let k = matrix.n_items;
    if k < 2 {
        return Err(SurveyError::InsufficientData(format!(
            "cronbach needs >=2 items, got {k}"
        )));
    }
    let complete_rows: Vec<Vec<f64>> = (0..matrix.n_raters)
        .filter_map(|r| {
            (0..k)
                .map(|i| matrix.get(r, i))
                .collect::<Option<Vec<f64>>>()
        })
        .collect();
    if complete_rows.len() < 2 {
        return Err(SurveyError::InsufficientData(format!(
            "cronbach needs >=2 complete rater rows, got {}",
            complete_rows.len()
        )));
    }

    let item_var_sum: f64 = (0..k)
        .map(|i| sample_variance(&complete_rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = complete_rows.iter().map(|r| r.iter().sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var == 0.0 {
        return Err(SurveyError::UndefinedAlpha(
            "zero variance of rater totals".into(),
        ));
    }
    Ok(k as f64 / (k as f64 - 1.0) * (1.0 - item_var_sum / total_var))
}

/// Krippendorff's alpha with the ordinal difference function, via the
/// coincidence-matrix formulation. Items rated by fewer than two raters
/// are unpairable and ignored; missing cells are handled natively.
///
/// For values indexed in ascending order, the ordinal squared distance is
/// delta2(c,k) = (sum of marginals n_g for g in c..=k minus (n_c+n_k)/2)^2.
pub fn krippendorff_alpha(matrix: &ScoreMatrix) -> Result<f64, SurveyError> {
    // Collect pairable units and the value domain.
    let mut units: Vec<Vec<f64>> = Vec::new();
    for item in 0..matrix.n_items {
        let vals = matrix.item_values(item);
        if vals.len() >= 2 {
            units.push(vals);
        }
    }
    if units.is_empty() {
        return Err(SurveyError::UndefinedAlpha(
            "no item rated by two or more raters".into(),
        ));
    }

    // Value domain in ascending order (bit patterns work because scores
    // are finite, non-NaN Likert values).
    let mut domain: Vec<f64> = units.iter().flatten().copied().collect();
    domain.sort_by(|a, b| a.partial_cmp(b).unwrap());
    domain.dedup();
    let index: BTreeMap<u64, usize> = domain
        .iter()
        .enumerate()
        .map(|(i, v)| (v.to_bits(), i))
        .collect();
    let v = domain.len();

    // Coincidence matrix: each ordered pair within a unit contributes
    // 1/(m_u - 1).
    let mut coincidence = vec![vec![0.0f64; v]; v];
    for unit in &units {
        let m = unit.len() as f64;
        for (i, a) in unit.iter().enumerate() {
            for (j, b) in unit.iter().enumerate() {
                if i != j {
                    coincidence[index[&a.to_bits()]][index[&b.to_bits()]] += 1.0 / (m - 1.0);
                }
            }
        }
    }
    let marginals: Vec<f64> = (0..v).map(|c| coincidence[c].iter().sum()).collect();
    let n: f64 = marginals.iter().sum();

    // Ordinal squared distances from the marginals.
    let delta2 = |c: usize, k: usize| -> f64 {
        let (lo, hi) = (c.min(k), c.max(k));
        let span: f64 = (lo..=hi).map(|g| marginals[g]).sum();
        let d = span - (marginals[lo] + marginals[hi]) / 2.0;
        d * d
    };

    let mut d_observed = 0.0;
    let mut d_expected = 0.0;
    for c in 0..v {
        for k in (c + 1)..v {
            d_observed += coincidence[c][k] * delta2(c, k);
            d_expected += marginals[c] * marginals[k] * delta2(c, k);
        }
    }
    if d_expected == 0.0 {
        return Err(SurveyError::UndefinedAlpha(
            "no value variation across pairable items".into(),
        ));
    }
    Ok(1.0 - (n - 1.0) * d_observed / d_expected)
}
