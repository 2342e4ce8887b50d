use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ReportRow;
use crate::error::{Error, Result};

/// Plain-text results table: one section per model, rows grouped by version
/// then modifier category.
pub fn render_report(rows: &[ReportRow]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for row in rows {
        if !models.contains(&row.model_label.as_str()) {
            models.push(&row.model_label);
        }
    }
    let mut out = String::new();
    for (i, model) in models.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "== {model} ==");
        let _ = writeln!(
            out,
            "{:<8}{:<14}{:>9}{:>9}{:>12}{:>14}{:>8}",
            "Version", "Category", "Ori-ACC", "ACC", "Bias Score", "Unparseable", "n"
        );
        let mut section: Vec<&ReportRow> = rows.iter().filter(|r| r.model_label == *model).collect();
        section.sort_by_key(|r| (r.version, r.category));
        for row in section {
            let ori = row.ori_acc.map_or_else(|| "-".to_string(), |p| p.to_string());
            let _ = writeln!(
                out,
                "{:<8}{:<14}{:>9}{:>9}{:>12}{:>14}{:>8}",
                row.version.as_str(),
                row.category.title(),
                ori,
                row.acc.to_string(),
                row.bias_score.to_string(),
                row.unparseable_rate.to_string(),
                row.n
            );
        }
    }
    out
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn make_report(rows: &[ReportRow], dir: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("report with zero rows".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        (a.model_label.as_str(), a.version, a.category).cmp(&(b.model_label.as_str(), b.version, b.category))
    });
    let mut json = serde_json::to_string_pretty(&sorted).expect("report rows serialize");
    json.push('\n');
    let json_path = dir.join("report.json");
    fs::write(&json_path, json).map_err(|e| Error::io(json_path, e))?;
    let txt_path = dir.join("report.txt");
    fs::write(&txt_path, render_report(rows)).map_err(|e| Error::io(txt_path, e))
}

