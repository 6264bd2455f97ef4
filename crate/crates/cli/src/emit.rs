//! Report serialization: `metrics.csv`, `summary.json`, `config.json` and plots.

use std::path::Path;

use gino_core::diagnostics::ExperimentReport;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::plot::{render_lines, Series};

/// Fixed 17-significant-digit rendering of one CSV value.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = report.columns.join(",");
    out.push('\n');
    for row in &report.rows {
        let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a file produced by [`metrics_csv`] back into columns and rows.
pub fn parse_metrics_csv(text: &str) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage("empty metrics file".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for line in lines {
        let row = line
            .split(',')
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|e| CliError::Usage(format!("bad cell {c:?}: {e}")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((columns, rows))
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn snapshot_object(report: &ExperimentReport) -> Map<String, Value> {
    report
        .config_snapshot
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect()
}

pub fn summary_json(report: &ExperimentReport) -> String {
    let mut map = Map::new();
    map.insert(
        "experiment_id".into(),
        Value::String(report.experiment_id.clone()),
    );
    let seed = report
        .config_snapshot
        .iter()
        .find(|(k, _)| k == "seed")
        .and_then(|(_, v)| v.parse::<u64>().ok())
        .unwrap_or(0);
    map.insert("seed".into(), Value::from(seed));
    for (k, &v) in &report.summary {
        map.insert(k.clone(), number(v));
    }
    map.insert(
        "config_snapshot".into(),
        Value::Object(snapshot_object(report)),
    );
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("json values serialize");
    s.push('\n');
    s
}

pub fn config_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(snapshot_object(report)))
        .expect("json values serialize");
    s.push('\n');
    s
}

fn plot_report(report: &ExperimentReport, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let Some(x_name) = report.columns.first() else {
        return Ok(());
    };
    let model_col = report.columns.iter().position(|c| c == "model");
    let skip = ["model", "seed", "sample", "n_test", "n_train"];
    for (j, name) in report.columns.iter().enumerate().skip(1) {
        if skip.contains(&name.as_str()) {
            continue;
        }
        let mut series: Vec<Series> = Vec::new();
        for row in &report.rows {
            let label = model_col.map_or_else(|| name.clone(), |m| format!("model {}", row[m]));
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((row[0], row[j])),
                None => series.push(Series {
                    label,
                    points: vec![(row[0], row[j])],
                }),
            }
        }
        render_lines(&dir.join(format!("{name}_vs_{x_name}.png")), &series)?;
    }
    Ok(())
}

/// Writes all artifacts of `report` into `out_dir`.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path, plot: bool) -> CliResult<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("metrics.csv"), metrics_csv(report))?;
    std::fs::write(out_dir.join("summary.json"), summary_json(report))?;
    std::fs::write(out_dir.join("config.json"), config_json(report))?;
    if plot {
        plot_report(report, &out_dir.join("plots"))?;
    }
    Ok(())
}
