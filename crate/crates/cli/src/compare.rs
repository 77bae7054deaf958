//! Side-by-side comparison of finished runs.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use aptf::metrics::{aggregate, read_report_csv, AggregateEntry};
use aptf::AptfError;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::runner::REPORT_FILE;

pub const COMPARE_FILE: &str = "compare.csv";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey {
    pub dataset: String,
    pub model: String,
    pub horizon: usize,
    pub metric: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub key: RowKey,
    /// One entry per column; `None` when that column lacks the metric.
    pub cells: Vec<Option<Cell>>,
    /// Column holding the unique best mean, if any.
    pub best: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    /// `<run>/<mode>` labels.
    pub columns: Vec<String>,
    pub rows: Vec<CompareRow>,
}

pub fn higher_is_better(metric: &str) -> bool {
    metric == "accuracy"
}

/// Index of the strictly best mean; ties give `None`.
fn unique_best(metric: &str, cells: &[Option<Cell>]) -> Option<usize> {
    let better = |a: f64, b: f64| if higher_is_better(metric) { a > b } else { a < b };
    let mut best: Option<(usize, f64)> = None;
    let mut tied = false;
    for (i, c) in cells.iter().enumerate() {
        let Some(c) = c else { continue };
        match best {
            None => best = Some((i, c.mean)),
            Some((_, m)) if better(c.mean, m) => {
                best = Some((i, c.mean));
                tied = false;
            }
            Some((_, m)) if c.mean == m => tied = true,
            _ => {}
        }
    }
    if tied || cells.iter().flatten().count() < 2 {
        None
    } else {
        best.map(|(i, _)| i)
    }
}

fn run_label(dir: &Path, index: usize, taken: &mut HashSet<String>) -> String {
    let base = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let mut label = base.clone();
    let mut k = index + 1;
    while !taken.insert(label.clone()) {
        label = format!("{base}#{k}");
        k += 1;
    }
    label
}

/// Builds the comparison table from aggregated entries of each run.
pub fn build_table(runs: &[(String, Vec<AggregateEntry>)]) -> Result<CompareTable> {
    let key_of = |e: &AggregateEntry| RowKey {
        dataset: e.dataset.clone(),
        model: e.model.clone(),
        horizon: e.horizon,
        metric: e.metric.clone(),
    };
    let mut row_keys: Vec<RowKey> = Vec::new();
    let mut first_keys: Option<HashSet<RowKey>> = None;
    for (label, entries) in runs {
        let keys: HashSet<RowKey> = entries.iter().map(key_of).collect();
        match &first_keys {
            None => first_keys = Some(keys),
            Some(first) if *first != keys => {
                return Err(AptfError::IncompatibleRuns(format!(
                    "run `{label}` reports different (dataset, model, horizon, metric) rows than `{}`",
                    runs[0].0
                ))
                .into())
            }
            _ => {}
        }
        for e in entries {
            let k = key_of(e);
            if !row_keys.contains(&k) {
                row_keys.push(k);
            }
        }
    }
    let mut columns = Vec::new();
    for (label, entries) in runs {
        for e in entries {
            let col = format!("{label}/{}", e.mode);
            if !columns.contains(&col) {
                columns.push(col);
            }
        }
    }
    let rows = row_keys
        .into_iter()
        .map(|key| {
            let mut cells = vec![None; columns.len()];
            for (label, entries) in runs {
                for e in entries.iter().filter(|e| key_of(e) == key) {
                    let col = format!("{label}/{}", e.mode);
                    let idx = columns.iter().position(|c| *c == col).expect("column collected above");
                    cells[idx] = Some(Cell {
                        mean: e.mean,
                        std: e.std,
                        n: e.n,
                    });
                }
            }
            let best = unique_best(&key.metric, &cells);
            CompareRow { key, cells, best }
        })
        .collect();
    Ok(CompareTable { columns, rows })
}

pub fn load_runs(dirs: &[PathBuf]) -> Result<CompareTable> {
    if dirs.len() < 2 {
        return Err(CliError::Config {
            key: "compare".into(),
            message: "needs at least two run directories".into(),
        });
    }
    let mut taken = HashSet::new();
    let mut runs = Vec::new();
    for (i, dir) in dirs.iter().enumerate() {
        let path = dir.join(REPORT_FILE);
        let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let report = read_report_csv(file)?;
        runs.push((run_label(dir, i, &mut taken), aggregate(&report)));
    }
    build_table(&runs)
}

fn fmt_cell(cell: &Option<Cell>, best: bool) -> String {
    match cell {
        Some(c) => format!("{:.6} ± {:.6}{}", c.mean, c.std, if best { " *" } else { "" }),
        None => "-".into(),
    }
}

/// Plain-text table; `*` marks the unique best column of a row.
pub fn render(table: &CompareTable) -> String {
    let mut header = vec![
        "dataset".to_string(),
        "model".into(),
        "horizon".into(),
        "metric".into(),
    ];
    header.extend(table.columns.iter().cloned());
    let mut lines = vec![header];
    for row in &table.rows {
        let mut line = vec![
            row.key.dataset.clone(),
            row.key.model.clone(),
            row.key.horizon.to_string(),
            row.key.metric.clone(),
        ];
        for (i, c) in row.cells.iter().enumerate() {
            line.push(fmt_cell(c, row.best == Some(i)));
        }
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &lines {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct CompareRecord {
    dataset: String,
    model: String,
    horizon: usize,
    metric: String,
    column: String,
    mean: f64,
    std: f64,
    n: usize,
    best: bool,
}

pub fn write_compare_csv<W: Write>(table: &CompareTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &table.rows {
        for (i, cell) in row.cells.iter().enumerate() {
            if let Some(c) = cell {
                w.serialize(CompareRecord {
                    dataset: row.key.dataset.clone(),
                    model: row.key.model.clone(),
                    horizon: row.key.horizon,
                    metric: row.key.metric.clone(),
                    column: table.columns[i].clone(),
                    mean: c.mean,
                    std: c.std,
                    n: c.n,
                    best: row.best == Some(i),
                })
                .map_err(AptfError::from)?;
            }
        }
    }
    w.flush().map_err(AptfError::from)?;
    Ok(())
}

/// Rebuilds a table from [`write_compare_csv`] output.
pub fn read_compare_csv<R: Read>(input: R) -> Result<CompareTable> {
    let mut r = csv::Reader::from_reader(input);
    let mut records = Vec::new();
    for rec in r.deserialize::<CompareRecord>() {
        records.push(rec.map_err(AptfError::from)?);
    }
    let mut columns: Vec<String> = Vec::new();
    let mut keys: Vec<RowKey> = Vec::new();
    for rec in &records {
        if !columns.contains(&rec.column) {
            columns.push(rec.column.clone());
        }
        let key = RowKey {
            dataset: rec.dataset.clone(),
            model: rec.model.clone(),
            horizon: rec.horizon,
            metric: rec.metric.clone(),
        };
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let rows = keys
        .into_iter()
        .map(|key| {
            let mut cells = vec![None; columns.len()];
            let mut best = None;
            for rec in records.iter().filter(|r| {
                r.dataset == key.dataset && r.model == key.model && r.horizon == key.horizon && r.metric == key.metric
            }) {
                let idx = columns.iter().position(|c| *c == rec.column).expect("collected above");
                cells[idx] = Some(Cell {
                    mean: rec.mean,
                    std: rec.std,
                    n: rec.n,
                });
                if rec.best {
                    best = Some(idx);
                }
            }
            CompareRow { key, cells, best }
        })
        .collect();
    Ok(CompareTable { columns, rows })
}
