//! Meta-evaluation: system-level score tables and correlation with
//! human judgements.
//!
//! `system_average` folds per-segment metric scores into one mean per
//! (system, metric) cell; `correlate_with_human` computes the Pearson
//! correlation between each metric and the human target, per system or
//! pooled. Reports serialize deterministically — identical inputs give
//! byte-identical TSV and JSON — with systems sorted lexicographically
//! and metrics in first-appearance order.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;

use crate::corpus::{write_atomic, EvalSegment, MetricScore};
use crate::error::{MatraError, Result};

/// Sample Pearson correlation coefficient.
///
/// Two-pass computation (means first, then centered products), clamped
/// to [−1,1] against floating-point drift. Zero variance on either side
/// is a flagged error, never silently 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(MatraError::dimension(format!(
            "correlating {} against {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(MatraError::InsufficientData {
            context: "pearson".to_string(),
            got: x.len(),
            need: 2,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(MatraError::ZeroVariance {
            context: if vx == 0.0 {
                "first sequence is constant".to_string()
            } else {
                "second sequence is constant".to_string()
            },
        });
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// One cell of a [`SystemReport`]: the mean and how many segments
/// carried a score for this system/metric pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageCell {
    pub mean: f64,
    pub count: usize,
}

/// System-level score table: one row per MT system, one column per
/// metric, each cell the arithmetic mean of that system's segment
/// scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemReport {
    /// Metric names in first-appearance order — the column order.
    pub metrics: Vec<String>,
    /// System → metric → cell; BTreeMap keeps rows lexicographic.
    pub rows: BTreeMap<String, HashMap<String, AverageCell>>,
}

/// Average per-segment scores into a system-level table.
///
/// `segments` maps each segment to its system; a score whose segment is
/// unknown is an error. A system missing every score of some metric
/// simply has no cell there (rendered NA), and per-cell counts record
/// how many segments entered each mean.
pub fn system_average(
    scores: &[MetricScore],
    segments: &[EvalSegment],
) -> Result<SystemReport> {
    let system_of: HashMap<&str, &str> = segments
        .iter()
        .map(|s| (s.segment_id.as_str(), s.system_id.as_str()))
        .collect();
    let mut metrics: Vec<String> = Vec::new();
    let mut sums: BTreeMap<String, HashMap<String, (f64, usize)>> = BTreeMap::new();
    for score in scores {
        let system = *system_of.get(score.segment_id.as_str()).ok_or_else(|| {
            MatraError::invalid(format!(
                "score for unknown segment {:?} (metric {})",
                score.segment_id, score.metric_name
            ))
        })?;
        if !metrics.iter().any(|m| *m == score.metric_name) {
            metrics.push(score.metric_name.clone());
        }
        let (sum, count) = sums
            .entry(system.to_string())
            .or_default()
            .entry(score.metric_name.clone())
            .or_insert((0.0, 0));
        *sum += score.value;
        *count += 1;
    }
    let rows = sums
        .into_iter()
        .map(|(system, cells)| {
            let cells = cells
                .into_iter()
                .map(|(metric, (sum, count))| {
                    (
                        metric,
                        AverageCell {
                            mean: sum / count as f64,
                            count,
                        },
                    )
                })
                .collect();
            (system, cells)
        })
        .collect();
    Ok(SystemReport { metrics, rows })
}

/// One correlation cell: Pearson r (absent when the group was
/// degenerate) and the number of joined segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationCell {
    pub r: Option<f64>,
    pub n: usize,
    /// True when the metric or the human target had zero variance over
    /// this group — flagged rather than dropped.
    pub degenerate: bool,
}

/// Correlation-with-human table: one row per system (or the single
/// pooled row), one column per metric.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub metrics: Vec<String>,
    pub rows: BTreeMap<String, HashMap<String, CorrelationCell>>,
}

/// Row label used in pooled (non-grouped) mode.
pub const POOLED_ROW: &str = "ALL";

/// Correlate every metric with the human target.
///
/// Scores join human targets on segment_id (inner join). With
/// `group_by_system` one Pearson r is computed per system over its own
/// segments, otherwise one pooled r over all joined segments. A group
/// joining fewer than two pairs for a metric is an error; zero variance
/// within a group is flagged in the cell, not dropped.
pub fn correlate_with_human(
    scores: &[MetricScore],
    human: &BTreeMap<String, f64>,
    segments: &[EvalSegment],
    group_by_system: bool,
) -> Result<CorrelationReport> {
    let system_of: HashMap<&str, &str> = segments
        .iter()
        .map(|s| (s.segment_id.as_str(), s.system_id.as_str()))
        .collect();
    let mut metrics: Vec<String> = Vec::new();
    // group → metric → (metric values, human values), join ordered by
    // segment_id for determinism.
    let mut joined: BTreeMap<String, HashMap<String, BTreeMap<String, (f64, f64)>>> =
        BTreeMap::new();
    for score in scores {
        let system = *system_of.get(score.segment_id.as_str()).ok_or_else(|| {
            MatraError::invalid(format!(
                "score for unknown segment {:?} (metric {})",
                score.segment_id, score.metric_name
            ))
        })?;
        if !metrics.iter().any(|m| *m == score.metric_name) {
            metrics.push(score.metric_name.clone());
        }
        let Some(&target) = human.get(&score.segment_id) else {
            continue; // inner join: segments without a human target drop out
        };
        let group = if group_by_system { system } else { POOLED_ROW };
        joined
            .entry(group.to_string())
            .or_default()
            .entry(score.metric_name.clone())
            .or_default()
            .insert(score.segment_id.clone(), (score.value, target));
    }
    let mut rows: BTreeMap<String, HashMap<String, CorrelationCell>> = BTreeMap::new();
    for (group, by_metric) in joined {
        let mut cells = HashMap::new();
        for (metric, pairs) in by_metric {
            if pairs.len() < 2 {
                return Err(MatraError::InsufficientData {
                    context: format!("correlation of {metric} for {group}"),
                    got: pairs.len(),
                    need: 2,
                });
            }
            let xs: Vec<f64> = pairs.values().map(|(m, _)| *m).collect();
            let ys: Vec<f64> = pairs.values().map(|(_, h)| *h).collect();
            let cell = match pearson(&xs, &ys) {
                Ok(r) => CorrelationCell {
                    r: Some(r),
                    n: pairs.len(),
                    degenerate: false,
                },
                Err(MatraError::ZeroVariance { .. }) => CorrelationCell {
                    r: None,
                    n: pairs.len(),
                    degenerate: true,
                },
                Err(e) => return Err(e),
            };
            cells.insert(metric, cell);
        }
        rows.insert(group, cells);
    }
    Ok(CorrelationReport { metrics, rows })
}

/// Output format of [`emit_system_report`] / [`emit_correlation_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

#[derive(Serialize)]
struct SystemReportFile<'a> {
    metrics: &'a [String],
    systems: Vec<SystemRowFile<'a>>,
}

#[derive(Serialize)]
struct SystemRowFile<'a> {
    system: &'a str,
    cells: BTreeMap<&'a str, Option<AverageCell>>,
}

#[derive(Serialize)]
struct CorrelationReportFile<'a> {
    metrics: &'a [String],
    systems: Vec<CorrelationRowFile<'a>>,
}

#[derive(Serialize)]
struct CorrelationRowFile<'a> {
    system: &'a str,
    cells: BTreeMap<&'a str, Option<CorrelationCell>>,
}

fn finish_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| MatraError::numeric(format!("report serialization failed: {e}")))?;
    json.push('\n');
    Ok(json.into_bytes())
}

/// Render a system-level score table.
///
/// TSV: header `system` + one column per metric; absent cells are `NA`.
/// JSON additionally carries each cell's segment count.
pub fn emit_system_report(
    report: &SystemReport,
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    let bytes = match format {
        ReportFormat::Tsv => {
            let mut out = String::from("system");
            for m in &report.metrics {
                out.push('\t');
                out.push_str(m);
            }
            out.push('\n');
            for (system, cells) in &report.rows {
                out.push_str(system);
                for m in &report.metrics {
                    out.push('\t');
                    match cells.get(m) {
                        Some(cell) => out.push_str(&format!("{}", cell.mean)),
                        None => out.push_str("NA"),
                    }
                }
                out.push('\n');
            }
            out.into_bytes()
        }
        ReportFormat::Json => {
            let systems = report
                .rows
                .iter()
                .map(|(system, cells)| SystemRowFile {
                    system,
                    cells: report
                        .metrics
                        .iter()
                        .map(|m| (m.as_str(), cells.get(m).copied()))
                        .collect(),
                })
                .collect();
            finish_json(&SystemReportFile {
                metrics: &report.metrics,
                systems,
            })?
        }
    };
    write_atomic(path, &bytes)
}

/// Render a correlation table.
///
/// TSV: header `system` + one `r_<metric>_vs_human` column per metric;
/// degenerate cells render as `degenerate`, absent ones as `NA`. JSON
/// additionally carries each cell's segment count and flag.
pub fn emit_correlation_report(
    report: &CorrelationReport,
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    let bytes = match format {
        ReportFormat::Tsv => {
            let mut out = String::from("system");
            for m in &report.metrics {
                out.push_str(&format!("\tr_{m}_vs_human"));
            }
            out.push('\n');
            for (system, cells) in &report.rows {
                out.push_str(system);
                for m in &report.metrics {
                    out.push('\t');
                    match cells.get(m) {
                        Some(CorrelationCell { r: Some(r), .. }) => {
                            out.push_str(&format!("{r}"));
                        }
                        Some(CorrelationCell {
                            degenerate: true, ..
                        }) => out.push_str("degenerate"),
                        Some(_) => out.push_str("NA"),
                        None => out.push_str("NA"),
                    }
                }
                out.push('\n');
            }
            out.into_bytes()
        }
        ReportFormat::Json => {
            let systems = report
                .rows
                .iter()
                .map(|(system, cells)| CorrelationRowFile {
                    system,
                    cells: report
                        .metrics
                        .iter()
                        .map(|m| (m.as_str(), cells.get(m).copied()))
                        .collect(),
                })
                .collect();
            finish_json(&CorrelationReportFile {
                metrics: &report.metrics,
                systems,
            })?
        }
    };
    write_atomic(path, &bytes)
}
