use std::path::{Path, PathBuf};

use bitslice_core::slicekit::{sparsity_report, SparsityReport};
use bitslice_core::trainkit::Checkpoint;
use serde::{Deserialize, Serialize};

use crate::config::{switch, Defaults, RunConfig};
use crate::error::{CliError, Result};
use crate::train::method_name;
use crate::ReportArgs;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    #[serde(flatten)]
    pub report: SparsityReport,
}

impl ReportRow {
    pub fn new(method: String, report: SparsityReport) -> Self {
        Self { method, report }
    }
}

#[derive(Debug, Deserialize)]
struct Fixture {
    method: Option<String>,
    slice_ratios: Vec<f64>,
    accuracy: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FixtureFile {
    One(Fixture),
    Many(Vec<Fixture>),
}

/// Terminal columns, ignoring combining diacritics such as the hat in `B̂`.
fn width(s: &str) -> usize {
    s.chars()
        .filter(|c| !('\u{300}'..='\u{36f}').contains(c))
        .count()
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

/// Method, Accuracy, one column per slice (MSB first), Average±std.
pub fn render_table(rows: &[ReportRow]) -> String {
    let slices = rows
        .iter()
        .map(|r| r.report.slice_ratios.len())
        .max()
        .unwrap_or(4);
    let mut header = vec!["Method".to_string(), "Accuracy".to_string()];
    header.extend((0..slices).rev().map(|k| format!("B̂{k}")));
    header.push("Average".to_string());
    let mut cells = vec![header];
    for r in rows {
        let mut line = vec![
            r.method.clone(),
            r.report.accuracy.map_or("-".to_string(), pct),
        ];
        line.extend(r.report.slice_ratios.iter().map(|&v| pct(v)));
        line.resize(slices + 2, String::new());
        line.push(r.report.average_label());
        cells.push(line);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|c| cells.iter().map(|l| width(&l[c])).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &cells {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s}{}", " ".repeat(w - width(s))))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn checkpoint_row(path: &Path) -> Result<ReportRow> {
    let ck = Checkpoint::<f32>::load(path)?;
    let q = ck.model.quantize(ck.header.config.quant)?;
    let report = sparsity_report(&q, ck.header.test_accuracy)?;
    Ok(ReportRow::new(
        method_name(&ck.header.config, &ck.model),
        report,
    ))
}

fn fixture_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed: FixtureFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Core(bitslice_core::Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    })?;
    let list = match parsed {
        FixtureFile::One(f) => vec![f],
        FixtureFile::Many(v) => v,
    };
    list.into_iter()
        .map(|f| {
            let report = SparsityReport::from_ratios(f.slice_ratios, f.accuracy)?;
            Ok(ReportRow::new(
                f.method.unwrap_or_else(|| "fixture".into()),
                report,
            ))
        })
        .collect()
}

const DEFAULTS: Defaults = &[
    ("checkpoint", ""),
    ("fixture", ""),
    ("json", "false"),
    ("out", ""),
];

fn join(paths: &[PathBuf]) -> Option<String> {
    (!paths.is_empty()).then(|| {
        paths
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(",")
    })
}

pub fn run(a: ReportArgs) -> Result<()> {
    let rc = RunConfig::resolve(
        DEFAULTS,
        a.config.as_deref(),
        vec![
            ("checkpoint", join(&a.checkpoint)),
            ("fixture", join(&a.fixture)),
            ("json", switch(a.json)),
            ("out", a.out.as_ref().map(|p| p.display().to_string())),
        ],
    )?;
    let checkpoints: Vec<PathBuf> = rc.list("checkpoint")?;
    let fixtures: Vec<PathBuf> = rc.list("fixture")?;
    if checkpoints.is_empty() && fixtures.is_empty() {
        return Err(CliError::usage("report needs --checkpoint or --fixture"));
    }
    let mut rows = Vec::new();
    for p in &checkpoints {
        rows.push(checkpoint_row(p)?);
    }
    for p in &fixtures {
        rows.extend(fixture_rows(p)?);
    }
    let json = serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n";
    if let Some(out) = rc.opt::<PathBuf>("out")? {
        rc.echo_into(&out)?;
        let path = out.join("report.json");
        std::fs::write(&path, &json).map_err(|e| CliError::io(path, e))?;
    }
    if rc.flag("json")? {
        print!("{json}");
    } else {
        print!("{}", render_table(&rows));
    }
    Ok(())
}
