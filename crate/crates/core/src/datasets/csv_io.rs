use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{SeriesTable, TimestampFormat};
use crate::error::{AptfError, Result};
use crate::numeric::Matrix;

/// Column selection for [`load_csv`]. `None` means "first column" for the
/// timestamp and "all remaining columns" for values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub timestamp_column: Option<String>,
    pub value_columns: Option<Vec<String>>,
    /// Fill empty cells with the previous row's value instead of failing.
    pub forward_fill: bool,
}

const ISO_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

fn parse_timestamp(raw: &str) -> Option<(i64, TimestampFormat)> {
    if let Ok(v) = raw.parse::<i64>() {
        return Some((v, TimestampFormat::Integer));
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some((dt.timestamp(), TimestampFormat::Iso8601));
    }
    for fmt in ISO_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some((dt.and_utc().timestamp(), TimestampFormat::Iso8601));
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| (dt.and_utc().timestamp(), TimestampFormat::Iso8601))
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| AptfError::Parse {
        row: 1,
        column: 0,
        message: format!("no column named `{name}`"),
    })
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SeriesTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| AptfError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(AptfError::Parse {
            row: 1,
            column: headers.len(),
            message: "need a timestamp column and at least one value column".into(),
        });
    }
    let ts_col = match &schema.timestamp_column {
        Some(name) => column_index(&headers, name)?,
        None => 0,
    };
    let value_cols: Vec<usize> = match &schema.value_columns {
        Some(names) => names
            .iter()
            .map(|n| column_index(&headers, n))
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&c| c != ts_col).collect(),
    };
    let columns: Vec<String> = value_cols.iter().map(|&c| headers[c].to_string()).collect();

    let mut timestamps = Vec::new();
    let mut format = None;
    let mut data: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let raw_ts = record.get(ts_col).unwrap_or("");
        let (ts, fmt) = parse_timestamp(raw_ts).ok_or_else(|| AptfError::Parse {
            row,
            column: ts_col + 1,
            message: format!("bad timestamp `{raw_ts}`"),
        })?;
        if *format.get_or_insert(fmt) != fmt {
            return Err(AptfError::Parse {
                row,
                column: ts_col + 1,
                message: "mixed timestamp formats".into(),
            });
        }
        if let Some(&prev) = timestamps.last() {
            if ts <= prev {
                return Err(AptfError::NonMonotonicTimestamps { row });
            }
        }
        timestamps.push(ts);

        let prev_row_start = data.len().checked_sub(value_cols.len());
        for (k, &c) in value_cols.iter().enumerate() {
            let cell = record.get(c).unwrap_or("");
            let value = if cell.is_empty() {
                match (schema.forward_fill, prev_row_start) {
                    (true, Some(start)) => data[start + k],
                    _ => {
                        return Err(AptfError::Parse {
                            row,
                            column: c + 1,
                            message: "missing value".into(),
                        })
                    }
                }
            } else {
                let v: f64 = cell.parse().map_err(|_| AptfError::Parse {
                    row,
                    column: c + 1,
                    message: format!("not a number: `{cell}`"),
                })?;
                if !v.is_finite() {
                    return Err(AptfError::Parse {
                        row,
                        column: c + 1,
                        message: "non-finite value".into(),
                    });
                }
                v
            };
            data.push(value);
        }
    }
    let values = Matrix::new(timestamps.len(), value_cols.len(), data)?;
    SeriesTable::new(
        timestamps,
        format.unwrap_or(TimestampFormat::Integer),
        columns,
        values,
    )
}

/// Writes `table` in the format [`load_csv`] reads back losslessly.
pub fn write_csv(table: &SeriesTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    let mut writer = csv::Writer::from_writer(&mut out);
    let mut header = vec!["timestamp".to_string()];
    header.extend(table.columns().iter().cloned());
    writer.write_record(&header)?;
    for (r, &ts) in table.timestamps().iter().enumerate() {
        let mut rec = vec![match table.timestamp_format() {
            TimestampFormat::Integer => ts.to_string(),
            TimestampFormat::Iso8601 => DateTime::from_timestamp(ts, 0)
                .map(|d| d.naive_utc().format("%Y-%m-%dT%H:%M:%S").to_string())
                .unwrap_or_else(|| ts.to_string()),
        }];
        rec.extend(table.values().row(r).iter().map(|v| v.to_string()));
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    drop(writer);
    out.flush()?;
    Ok(())
}
