//! `report`: human-readable markdown summary plus the plot-data bundle
//! (category shares, Bland-Altman pairs, importances, PDP curves, SHAP
//! matrix). Missing upstream sections are marked unavailable and turn
//! the run into a partial (validation) exit.

use super::{artifacts, require_artifact, StageError};
use crate::config::PipelineConfig;
use crate::manifest::StageRecorder;
use expect_core::extraction::{
    consolidate_topk, read_filled_manifest, review_agreement, ExtractionResult,
};
use std::fmt::Write as _;
use std::path::Path;

fn read_extractions(path: &Path) -> Result<Vec<ExtractionResult>, StageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StageError::Io(anyhow::anyhow!("reading {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| StageError::Validation(format!("extractions: {e}")))
        })
        .collect()
}

pub fn run(cfg: &PipelineConfig, rec: &mut StageRecorder) -> Result<Vec<String>, StageError> {
    let out_dir = &cfg.paths.out_dir;
    // The analysis bundle is the hard dependency; everything else
    // degrades to an "unavailable" section.
    let analysis_path = require_artifact(out_dir, artifacts::ANALYSIS)?;
    rec.record_input(&analysis_path)?;
    let analysis: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(&analysis_path)
            .map_err(|e| StageError::Io(anyhow::anyhow!("{e}")))?,
    )
    .map_err(|e| StageError::Validation(format!("analysis.json: {e}")))?;

    let mut md = String::from("# Expectation pipeline report\n\n");
    let mut unavailable: Vec<&str> = Vec::new();

    // Category shares over every extracted category (sums to 1).
    let extractions_path = out_dir.join(artifacts::EXTRACTIONS);
    if extractions_path.exists() {
        let extractions = read_extractions(&extractions_path)?;
        let ranks = consolidate_topk(&extractions, usize::MAX);
        let mut fig2 = String::from("category,share\n");
        md.push_str("## Category shares\n\n| Category | Posts | Share |\n|---|---|---|\n");
        for r in &ranks {
            let _ = writeln!(fig2, "{},{}", r.category.token(), r.share);
            let _ = writeln!(
                md,
                "| {} | {} | {:.4} |",
                r.category, r.frequency, r.share
            );
        }
        rec.write_output(artifacts::FIG2_SHARES, fig2.as_bytes(), ranks.len())?;
        md.push('\n');
    } else {
        unavailable.push("category shares");
        md.push_str("## Category shares\n\n*unavailable* (run `extract`)\n\n");
    }

    // Reliability.
    let reliability_path = out_dir.join(artifacts::RELIABILITY);
    if reliability_path.exists() {
        let text = std::fs::read_to_string(&reliability_path)
            .map_err(|e| StageError::Io(anyhow::anyhow!("{e}")))?;
        let rel: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| StageError::Validation(format!("reliability.json: {e}")))?;
        let _ = writeln!(
            md,
            "## Survey reliability\n\n- Cronbach's alpha: {}\n- Krippendorff's alpha: {}\n- Raters: {}, items: {}\n",
            rel["cronbach_alpha"], rel["krippendorff_alpha"], rel["n_raters"], rel["n_items"]
        );
    } else {
        unavailable.push("survey reliability");
        md.push_str("## Survey reliability\n\n*unavailable* (run `survey`)\n\n");
    }

    // Agreement.
    let agreement_path = out_dir.join(artifacts::AGREEMENT);
    if agreement_path.exists() {
        let text = std::fs::read_to_string(&agreement_path)
            .map_err(|e| StageError::Io(anyhow::anyhow!("{e}")))?;
        let agr: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| StageError::Validation(format!("agreement.json: {e}")))?;
        let _ = writeln!(
            md,
            "## Model vs. human agreement (diff = model - human)\n\n- n pairs: {}\n- mean diff: {}\n- limits of agreement: [{}, {}]\n- within limits: {}\n",
            agr["n"], agr["mean_diff"], agr["loa_low"], agr["loa_high"], agr["pct_within_loa"]
        );
    } else {
        unavailable.push("agreement");
        md.push_str("## Model vs. human agreement\n\n*unavailable* (run `agree`)\n\n");
    }

    // Engagement analysis (always present; it is the hard dependency).
    md.push_str("## Engagement drivers\n\n### Linear regression\n\n");
    md.push_str("| Variable | Coefficient | Std Error | t-Value | P-Value |\n|---|---|---|---|---|\n");
    if let Some(terms) = analysis["ols"]["terms"].as_array() {
        for t in terms {
            let _ = writeln!(
                md,
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} |",
                t["name"].as_str().unwrap_or("?"),
                t["coefficient"].as_f64().unwrap_or(f64::NAN),
                t["std_error"].as_f64().unwrap_or(f64::NAN),
                t["t_value"].as_f64().unwrap_or(f64::NAN),
                t["p_value"].as_f64().unwrap_or(f64::NAN),
            );
        }
    }
    let _ = writeln!(
        md,
        "\nR² = {:.4}, residual df = {}\n",
        analysis["ols"]["r_squared"].as_f64().unwrap_or(f64::NAN),
        analysis["ols"]["df_resid"]
    );

    md.push_str("### Forest importances (gain share)\n\n| Feature | Importance |\n|---|---|\n");
    if let Some(imp) = analysis["importances"].as_object() {
        for (name, v) in imp {
            let _ = writeln!(md, "| {name} | {:.4} |", v.as_f64().unwrap_or(f64::NAN));
        }
    }
    md.push_str("\n### SHAP mean |phi|\n\n| Feature | Mean abs contribution |\n|---|---|\n");
    if let Some(shap) = analysis["shap_mean_abs"].as_object() {
        for (name, v) in shap {
            let _ = writeln!(md, "| {name} | {:.4} |", v.as_f64().unwrap_or(f64::NAN));
        }
    }
    md.push('\n');

    // Expert review, when the panel has filled the manifest.
    let filled_path = out_dir.join(artifacts::REVIEW_FILLED);
    if filled_path.exists() {
        let file = std::fs::File::open(&filled_path)
            .map_err(|e| StageError::Io(anyhow::anyhow!("{e}")))?;
        let rows = read_filled_manifest(std::io::BufReader::new(file))
            .map_err(|e| StageError::Validation(e.to_string()))?;
        md.push_str("## Expert review agreement\n\n| Category | Reviewed | Relevant | Agreement |\n|---|---|---|---|\n");
        for a in review_agreement(&rows) {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.3} |",
                a.category, a.reviewed, a.relevant, a.agreement
            );
        }
        md.push('\n');
    }

    // Plot-data bundle inventory.
    md.push_str("## Plot data files\n\n");
    let plot_files: Vec<String> = std::iter::once(artifacts::FIG2_SHARES.to_string())
        .chain(std::iter::once(artifacts::BA_PAIRS.to_string()))
        .chain(std::iter::once(artifacts::IMPORTANCES.to_string()))
        .chain(
            ["Emotional", "Natural", "ExoticCultural", "Leisure", "Social"]
                .iter()
                .map(|c| format!("pdp_{c}.csv")),
        )
        .chain(std::iter::once(artifacts::SHAP_MATRIX.to_string()))
        .collect();
    for f in &plot_files {
        let mark = if out_dir.join(f).exists() { "x" } else { " " };
        let _ = writeln!(md, "- [{mark}] `{f}`");
    }
    md.push('\n');

    if !unavailable.is_empty() {
        let _ = writeln!(md, "**Partial report**: missing sections: {}.", unavailable.join(", "));
    }
    rec.write_output(artifacts::REPORT_MD, md.as_bytes(), 1)?;

    if unavailable.is_empty() {
        Ok(vec![format!("full report at {}", out_dir.join(artifacts::REPORT_MD).display())])
    } else {
        Err(StageError::Validation(format!(
            "partial report; unavailable sections: {}",
            unavailable.join(", ")
        )))
    }
}
