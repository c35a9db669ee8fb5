//! CSV ingestion: dated value columns, optional quarterly averaging, an
//! inner join on dates and the configured transforms.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::cli::config::{Frequency, InputSpec, RunConfig};
use crate::cli::transform::{transform_panel, Transform};
use crate::error::{Result, SvarError};
use crate::linalg::Mat;
use crate::var::TimeSeriesPanel;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// One dated series in chronological order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> SvarError {
    SvarError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "."
}

/// Reads the configured value columns of one file, each paired with its transform.
pub fn read_input(spec: &InputSpec, drop_missing: bool) -> Result<Vec<(Series, Transform)>> {
    let path = spec.path.as_path();
    let file = std::fs::File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let date_idx = match &spec.date_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(path, 1, format!("no date column '{name}'")))?,
        None => 0,
    };
    let wanted: Vec<(usize, String, Transform)> = if spec.series.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != date_idx)
            .map(|(i, h)| (i, h.to_string(), Transform::None))
            .collect()
    } else {
        spec.series
            .iter()
            .map(|s| {
                headers
                    .iter()
                    .position(|h| h == s.column)
                    .map(|i| (i, s.display_name().to_string(), s.transform))
                    .ok_or_else(|| parse_error(path, 1, format!("no column '{}'", s.column)))
            })
            .collect::<Result<_>>()?
    };
    if wanted.is_empty() {
        return Err(parse_error(path, 1, "no value columns"));
    }

    let mut out: Vec<Series> = wanted
        .iter()
        .map(|(_, name, _)| Series {
            name: name.clone(),
            dates: Vec::new(),
            values: Vec::new(),
        })
        .collect();
    let mut previous: Option<NaiveDate> = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cell = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(cell, DATE_FORMAT)
            .map_err(|e| parse_error(path, line, format!("bad date '{cell}': {e}")))?;
        if previous.is_some_and(|p| date <= p) {
            return Err(SvarError::NonMonotoneDates {
                path: path.to_path_buf(),
                line,
            });
        }
        previous = Some(date);
        for ((idx, _, _), series) in wanted.iter().zip(out.iter_mut()) {
            let cell = record.get(*idx).unwrap_or("");
            if is_missing(cell) {
                if drop_missing {
                    continue;
                }
                return Err(SvarError::MissingValues {
                    path: path.to_path_buf(),
                    line,
                    column: headers.get(*idx).unwrap_or_default().to_string(),
                });
            }
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_error(path, line, format!("bad number '{cell}'")))?;
            series.dates.push(date);
            series.values.push(value);
        }
    }
    Ok(out.into_iter().zip(wanted.into_iter().map(|(_, _, t)| t)).collect())
}

/// First day of the calendar quarter containing `d`.
pub fn quarter_start(d: NaiveDate) -> NaiveDate {
    let month = 3 * ((d.month() - 1) / 3) + 1;
    NaiveDate::from_ymd_opt(d.year(), month, 1).expect("valid quarter start")
}

/// Averages the observations of each calendar quarter.
pub fn quarterly_mean(series: &Series) -> Series {
    let mut groups: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for (d, v) in series.dates.iter().zip(&series.values) {
        let e = groups.entry(quarter_start(*d)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    Series {
        name: series.name.clone(),
        dates: groups.keys().copied().collect(),
        values: groups.values().map(|&(s, n)| s / n as f64).collect(),
    }
}

/// Keeps the dates present in every series and warns about each series
/// that loses rows.
pub fn inner_join(series: &[Series]) -> Result<(Vec<NaiveDate>, Mat)> {
    let Some(first) = series.first() else {
        return Err(SvarError::Config("no series to join".into()));
    };
    let mut common: Vec<NaiveDate> = first.dates.clone();
    for s in &series[1..] {
        let set: HashSet<&NaiveDate> = s.dates.iter().collect();
        common.retain(|d| set.contains(d));
    }
    let mut values = Mat::zeros(common.len(), series.len());
    for (j, s) in series.iter().enumerate() {
        let dropped = s.dates.len() - common.len();
        if dropped > 0 {
            log::warn!("series '{}': {dropped} rows without a match dropped by the join", s.name);
        }
        let mut cursor = 0;
        for (i, d) in common.iter().enumerate() {
            while s.dates[cursor] != *d {
                cursor += 1;
            }
            values[(i, j)] = s.values[cursor];
        }
    }
    Ok((common, values))
}

/// Reads, aligns and transforms every configured input, then applies the
/// start and end bounds.
pub fn ingest(cfg: &RunConfig) -> Result<TimeSeriesPanel> {
    cfg.require_inputs()?;
    let mut series = Vec::new();
    let mut kinds = Vec::new();
    for input in &cfg.inputs {
        for (s, t) in read_input(input, cfg.drop_missing)? {
            series.push(match cfg.frequency {
                Frequency::AsIs => s,
                Frequency::QuarterlyMean => quarterly_mean(&s),
            });
            kinds.push(t);
        }
    }
    let names: Vec<String> = series.iter().map(|s| s.name.clone()).collect();
    let mut seen = HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(SvarError::Config(format!("series name '{dup}' appears twice")));
    }
    let (dates, values) = inner_join(&series)?;
    let labels: Vec<String> = dates.iter().map(|d| d.format(DATE_FORMAT).to_string()).collect();
    let (values, labels) = transform_panel(&values, &labels, &kinds, &names)?;
    let dates = &dates[dates.len() - labels.len()..];
    let keep: Vec<usize> = dates
        .iter()
        .enumerate()
        .filter(|(_, d)| cfg.start.is_none_or(|s| **d >= s) && cfg.end.is_none_or(|e| **d <= e))
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(SvarError::Config("no observations inside the start/end window".into()));
    }
    let values = values.select_rows(keep.iter());
    let labels = keep.iter().map(|&i| labels[i].clone()).collect();
    TimeSeriesPanel::new(values, names, labels)
}
