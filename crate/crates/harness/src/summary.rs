//! Per-configuration summaries of result rows, as a table and two charts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};
use crate::plan::CellConfig;
use crate::results::{write_table, ResultRow, RunStatus};
use crate::svg::{self, HeatCell, ScatterPoint};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SCATTER_FILE: &str = "scatter.svg";
pub const HEATMAP_FILE: &str = "heatmap.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub model: String,
    pub config: String,
    pub runs: usize,
    pub failed: usize,
    pub n_sims_mean: Option<f64>,
    pub n_sims_sd: Option<f64>,
    pub l2_mean: Option<f64>,
    pub l2_sd: Option<f64>,
    pub criterion_mean: Option<f64>,
    pub criterion_sd: Option<f64>,
    pub final_epsilon_mean: Option<f64>,
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Groups rows by (algorithm, model, config) in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> HarnessResult<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(HarnessError::config("no result rows to summarize"));
    }
    let mut order: Vec<(String, String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String, String), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        let key = (row.algorithm.clone(), row.model.clone(), row.config.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let ok: Vec<&&ResultRow> = members.iter().filter(|r| r.status == RunStatus::Ok).collect();
            let collect = |f: &dyn Fn(&ResultRow) -> Option<f64>| -> Option<(f64, f64)> {
                let xs: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                mean_sd(&xs)
            };
            let sims = collect(&|r| r.n_sims.map(|n| n as f64));
            let l2 = collect(&|r| r.l2);
            let crit = collect(&|r| r.criterion);
            let eps = collect(&|r| r.final_epsilon);
            SummaryRow {
                algorithm: key.0,
                model: key.1,
                config: key.2,
                runs: members.len(),
                failed: members.len() - ok.len(),
                n_sims_mean: sims.map(|s| s.0),
                n_sims_sd: sims.map(|s| s.1),
                l2_mean: l2.map(|s| s.0),
                l2_sd: l2.map(|s| s.1),
                criterion_mean: crit.map(|s| s.0),
                criterion_sd: crit.map(|s| s.1),
                final_epsilon_mean: eps.map(|s| s.0),
            }
        })
        .collect())
}

/// Criterion means for APMC rows on the (α, p_acc_min) grid.
pub fn criterion_heatmap(summary: &[SummaryRow]) -> Vec<HeatCell> {
    summary
        .iter()
        .filter(|s| s.algorithm == "apmc")
        .filter_map(|s| {
            let cfg = CellConfig::parse_label(&s.config);
            Some(HeatCell {
                alpha: cfg.get("alpha")?.parse().ok()?,
                p_acc_min: cfg.get("p_acc_min")?.parse().ok()?,
                value: s.criterion_mean?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryFiles {
    pub table: PathBuf,
    pub scatter: Option<PathBuf>,
    pub heatmap: Option<PathBuf>,
}

/// Writes `summary.csv`, plus `scatter.svg` (L2 against simulations, one series
/// per algorithm) when any group has an L2, and `heatmap.svg` (mean criterion
/// over α × p_acc_min) when APMC groups with both parameters are present.
pub fn emit_summary(rows: &[ResultRow], out_dir: &Path) -> HarnessResult<(Vec<SummaryRow>, SummaryFiles)> {
    let summary = summarize(rows)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let table = out_dir.join(SUMMARY_FILE);
    write_table(&table, &summary)?;

    let points: Vec<ScatterPoint> = summary
        .iter()
        .filter_map(|s| {
            Some(ScatterPoint {
                series: s.algorithm.clone(),
                x: s.n_sims_mean?,
                x_sd: s.n_sims_sd?,
                y: s.l2_mean?,
                y_sd: s.l2_sd?,
            })
        })
        .collect();
    let scatter = if points.is_empty() {
        None
    } else {
        let path = out_dir.join(SCATTER_FILE);
        fs::write(&path, svg::scatter(&points)).map_err(|e| HarnessError::io(&path, e))?;
        Some(path)
    };
    let cells = criterion_heatmap(&summary);
    let heatmap = if cells.is_empty() {
        None
    } else {
        let path = out_dir.join(HEATMAP_FILE);
        fs::write(&path, svg::heatmap(&cells)).map_err(|e| HarnessError::io(&path, e))?;
        Some(path)
    };
    Ok((
        summary,
        SummaryFiles {
            table,
            scatter,
            heatmap,
        },
    ))
}
