//! `analyze`: mean scores + likes -> OLS table, random-forest
//! importances, partial dependence curves, and exact SHAP attributions.

use super::{artifacts, json_bytes, read_pipeline_posts, require_artifact, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::engagement::{
    build_design, ols_fit, pdp, rf_fit, shap_exact, DesignMatrix, Forest, OlsResult, PdpCurve,
    RfParams, ShapMatrix,
};
use expect_core::extraction::ExpectationCategory;
use expect_core::hash::derive_seed_indexed;
use expect_core::scorer::{ScoreRecord, ScoreSourceKind};
use serde::Serialize;
use std::collections::BTreeMap;

fn read_score_records(path: &std::path::Path) -> Result<Vec<ScoreRecord>, StageError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("opening {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| StageError::Validation(format!("scores: {e}")))?;
        out.push(ScoreRecord {
            post_id: row.get(0).unwrap_or_default().to_string(),
            category: ExpectationCategory::from_token(row.get(1).unwrap_or_default()),
            score: row
                .get(2)
                .unwrap_or_default()
                .parse()
                .map_err(|e| StageError::Validation(format!("scores value: {e}")))?,
            rationale: String::new(),
            source: ScoreSourceKind::Surrogate,
            run_index: 0,
        });
    }
    Ok(out)
}

/// Deterministic background sample: a seeded shuffle of row indices.
fn background_rows(design: &DesignMatrix, size: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = design.n_rows();
    let mut indices: Vec<usize> = (0..n).collect();
    // Fisher-Yates driven by the derived-seed mixer; avoids pulling a
    // full RNG for index shuffling.
    for i in (1..n).rev() {
        let j = (derive_seed_indexed(seed, "shap-bg", i as u64) % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
    indices
        .into_iter()
        .take(size.max(1).min(n))
        .map(|i| design.row(i).to_vec())
        .collect()
}

#[derive(Serialize)]
struct AnalysisBundle {
    n_posts: usize,
    excluded_posts: Vec<String>,
    ols: OlsResult,
    importances: BTreeMap<String, f64>,
    importances_flagged_zero: bool,
    pdp: Vec<PdpCurve>,
    shap_base_value: f64,
    shap_mean_abs: BTreeMap<String, f64>,
    shap_background_size: usize,
}

fn write_shap_csv(design: &DesignMatrix, shap: &ShapMatrix) -> String {
    let mut csv = String::from("post_id");
    for name in &design.feature_names {
        csv.push_str(&format!(",phi_{name}"));
    }
    csv.push_str(",prediction,base_value\n");
    for (i, (phi, pred)) in shap.values.iter().zip(&shap.predictions).enumerate() {
        csv.push_str(&design.post_ids[i]);
        for v in phi {
            csv.push_str(&format!(",{v}"));
        }
        csv.push_str(&format!(",{pred},{}\n", shap.base_value));
    }
    csv
}

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let out_dir = &cfg.paths.out_dir;
    let scores_path = require_artifact(out_dir, artifacts::SCORES)?;
    let posts_path = require_artifact(out_dir, artifacts::POSTS_CLEAN)?;
    rec.record_input(&scores_path)?;
    rec.record_input(&posts_path)?;

    let records = read_score_records(&scores_path)?;
    let posts = read_pipeline_posts(&posts_path)?;
    let likes: BTreeMap<String, u64> = posts.iter().map(|p| (p.id.clone(), p.likes)).collect();

    let (design, excluded) = build_design(&records, &likes, cfg.analysis.scale);
    if design.n_rows() == 0 {
        return Err(StageError::Validation("design matrix is empty".into()));
    }

    // OLS (Table-3 layout).
    let ols = ols_fit(&design).map_err(|e| StageError::Validation(e.to_string()))?;
    let mut ols_csv = String::from("variable,coefficient,std_error,t_value,p_value\n");
    for term in &ols.terms {
        ols_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            term.name, term.coefficient, term.std_error, term.t_value, term.p_value
        ));
    }
    rec.write_output(artifacts::OLS, ols_csv.as_bytes(), ols.terms.len())?;

    // Random forest and gain importances.
    let rf_params = RfParams {
        n_trees: cfg.analysis.n_trees,
        max_depth: cfg.analysis.max_depth,
        min_leaf: cfg.analysis.min_leaf,
        features_per_split: 2,
        bootstrap: true,
        seed: cfg.analysis.seed,
    };
    let forest: Forest =
        rf_fit(&design, &rf_params).map_err(|e| StageError::Validation(e.to_string()))?;
    let mut imp_csv = String::from("feature,importance\n");
    for (name, imp) in design.feature_names.iter().zip(&forest.importances) {
        imp_csv.push_str(&format!("{name},{imp}\n"));
    }
    rec.write_output(artifacts::IMPORTANCES, imp_csv.as_bytes(), 5)?;

    // Partial dependence, one file per feature.
    let mut curves = Vec::new();
    for feature in 0..design.n_features() {
        let curve = pdp(&forest, &design, feature, cfg.analysis.grid_size)
            .map_err(|e| StageError::Validation(e.to_string()))?;
        let mut pdp_csv = String::from("grid,avg_prediction\n");
        for (g, p) in curve.grid.iter().zip(&curve.avg_prediction) {
            pdp_csv.push_str(&format!("{g},{p}\n"));
        }
        rec.write_output(
            &format!("pdp_{}.csv", design.feature_names[feature]),
            pdp_csv.as_bytes(),
            curve.grid.len(),
        )?;
        curves.push(curve);
    }

    // Exact SHAP over every design row.
    let background = background_rows(&design, cfg.analysis.shap_background, cfg.analysis.seed);
    let rows: Vec<Vec<f64>> = (0..design.n_rows()).map(|i| design.row(i).to_vec()).collect();
    let shap =
        shap_exact(&forest, &rows, &background).map_err(|e| StageError::Validation(e.to_string()))?;
    rec.write_output(
        artifacts::SHAP_MATRIX,
        write_shap_csv(&design, &shap).as_bytes(),
        shap.values.len(),
    )?;

    let shap_mean_abs: BTreeMap<String, f64> = design
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mean = shap.values.iter().map(|row| row[j].abs()).sum::<f64>()
                / shap.values.len() as f64;
            (name.clone(), mean)
        })
        .collect();

    let bundle = AnalysisBundle {
        n_posts: design.n_rows(),
        excluded_posts: excluded,
        importances: design
            .feature_names
            .iter()
            .cloned()
            .zip(forest.importances.iter().copied())
            .collect(),
        importances_flagged_zero: forest.no_splits,
        ols,
        pdp: curves,
        shap_base_value: shap.base_value,
        shap_mean_abs,
        shap_background_size: shap.background_size,
    };
    rec.write_output(artifacts::ANALYSIS, &json_bytes(&bundle)?, 1)?;

    Ok(vec![
        format!("analyzed {} posts", design.n_rows()),
        format!("r_squared {:.4}", bundle.ols.r_squared),
        format!(
            "importances {:?}",
            bundle
                .importances
                .iter()
                .map(|(k, v)| format!("{k}={v:.3}"))
                .collect::<Vec<_>>()
        ),
    ])
}
