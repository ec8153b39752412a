//! CSV ingestion.
//!
//! The first line is a header. A leading column whose first value does not
//! parse as a number (dates, identifiers) is kept as a label column and left
//! out of the data matrix. Rows are numbered as in a text editor, so the
//! header is row 1.

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use std::io::Read;
use std::path::Path;

pub const MIN_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Names of the numeric columns.
    pub columns: Vec<String>,
    pub label_column: Option<String>,
    pub data: DMatrix<f64>,
}

pub fn read_csv_path(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_csv(file).with_context(|| format!("while reading {}", path.display()))
}

pub fn read_csv<R: Read>(source: R) -> Result<Dataset> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        None => bail!("row 1: the file is empty, expected a header row"),
        Some(r) => r.context("row 1: unreadable header")?,
    };
    let width = header.len();
    if width == 0 || header.iter().all(str::is_empty) {
        bail!("row 1: the header row is empty");
    }

    let mut rows: Vec<(u64, csv::StringRecord)> = Vec::new();
    for record in records {
        let record = record.map_err(|e| anyhow::anyhow!("row {}: {e}", e.position().map_or(0, |p| p.line())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != width {
            bail!("row {line}: expected {width} fields as in the header, found {}", record.len());
        }
        rows.push((line, record));
    }
    let Some((_, first)) = rows.first() else {
        bail!("row 2: no data rows after the header; at least {MIN_ROWS} are required");
    };

    let skip = usize::from(width > 1 && first[0].parse::<f64>().is_err());
    let columns: Vec<String> = header.iter().skip(skip).map(str::to_owned).collect();
    if columns.is_empty() {
        bail!("row 1: no numeric columns");
    }
    if rows.len() < MIN_ROWS {
        let last = rows.last().map_or(2, |r| r.0);
        bail!("row {last}: only {} data rows; at least {MIN_ROWS} are required", rows.len());
    }

    let d = columns.len();
    let mut data = DMatrix::zeros(rows.len(), d);
    for (i, (line, record)) in rows.iter().enumerate() {
        for j in 0..d {
            let cell = &record[j + skip];
            let value: f64 = cell.parse().map_err(|_| {
                anyhow::anyhow!(
                    "row {line}, column {} ({}): cannot parse `{cell}` as a number",
                    j + skip + 1,
                    columns[j]
                )
            })?;
            if !value.is_finite() {
                bail!("row {line}, column {} ({}): value `{cell}` is not finite", j + skip + 1, columns[j]);
            }
            data[(i, j)] = value;
        }
    }
    Ok(Dataset { label_column: (skip == 1).then(|| header[0].to_owned()), columns, data })
}
