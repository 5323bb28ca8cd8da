//! CSV ingestion and export of datasets.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Read a headed CSV; `response` names the `y` column and every other
/// column, in file order, becomes a column of `X`.
pub fn ingest_csv(path: &Path, response: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let target = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::Schema(format!("response column `{response}` not found in {}", path.display())))?;
    if headers.len() < 2 {
        return Err(Error::Schema(
            "need at least one feature column besides the response".into(),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[c].to_string(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[c].to_string(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            if c == target {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    let n = ys.len();
    if n == 0 {
        return Err(Error::Schema(format!("{} has no data rows", path.display())));
    }
    let p = headers.len() - 1;
    Dataset::new(DMatrix::from_row_slice(n, p, &xs), DVector::from_vec(ys))
}

/// Write `X` as columns `x1..xp` followed by the response column.
pub fn write_dataset_csv(path: &Path, data: &Dataset, response: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push(response.to_string());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.x.row(i).iter().map(|v| v.to_string()).collect();
        row.push(data.y[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
