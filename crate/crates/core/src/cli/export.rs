//! CSV and JSON writers. Reals are printed with 17 significant digits so
//! re-reading them restores the same bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Result, SvarError};
use crate::linalg::Mat;
use crate::var::TimeSeriesPanel;

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header-less CSV, one matrix row per line.
pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|&x| format_real(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| SvarError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("bad number '{c}': {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Panel as CSV with a `date` column followed by one column per series.
pub fn write_panel_csv(path: &Path, panel: &TimeSeriesPanel) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(panel.series_names().iter().cloned());
    w.write_record(&header)?;
    for (i, label) in panel.time_labels().iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(panel.values().row(i).iter().map(|&x| format_real(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
