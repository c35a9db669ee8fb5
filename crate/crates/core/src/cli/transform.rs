//! Growth-rate and difference transforms of level series.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvarError};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    None,
    /// `(x_t / x_{t−1} − 1) · 100`.
    PctChange,
    /// `x_t − x_{t−1}`.
    Difference,
}

impl Transform {
    pub fn shortens(self) -> bool {
        self != Transform::None
    }
}

impl std::str::FromStr for Transform {
    type Err = SvarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "pct-change" => Ok(Self::PctChange),
            "difference" => Ok(Self::Difference),
            other => Err(SvarError::Config(format!("unknown transform '{other}'"))),
        }
    }
}

/// Transforms one series. `None` returns it unchanged; the other kinds
/// return one value fewer. `row` in errors is 1-based within `x`.
pub fn transform(x: &[f64], kind: Transform, series: &str) -> Result<Vec<f64>> {
    match kind {
        Transform::None => Ok(x.to_vec()),
        Transform::Difference => Ok(x.windows(2).map(|w| w[1] - w[0]).collect()),
        Transform::PctChange => {
            if let Some(i) = x.iter().position(|&v| !(v > 0.0)) {
                return Err(SvarError::NonPositiveLevel {
                    series: series.to_string(),
                    row: i + 1,
                });
            }
            Ok(x.windows(2).map(|w| (w[1] / w[0] - 1.0) * 100.0).collect())
        }
    }
}

/// Transforms every column of `values` (rows are periods). When any column
/// is differenced the first period is dropped from all of them, so the
/// result keeps a common time index; `labels` is trimmed to match.
pub fn transform_panel(
    values: &Mat,
    labels: &[String],
    kinds: &[Transform],
    names: &[String],
) -> Result<(Mat, Vec<String>)> {
    if kinds.len() != values.ncols() || names.len() != values.ncols() || labels.len() != values.nrows() {
        return Err(SvarError::DimensionMismatch("transform settings do not match the panel".into()));
    }
    let drop = usize::from(kinds.iter().any(|k| k.shortens()));
    if values.nrows() <= drop {
        return Err(SvarError::TooShort {
            rows: values.nrows(),
            p: drop,
        });
    }
    let rows = values.nrows() - drop;
    let mut out = Mat::zeros(rows, values.ncols());
    for (j, (&kind, name)) in kinds.iter().zip(names).enumerate() {
        let col: Vec<f64> = values.column(j).iter().copied().collect();
        let t = transform(&col, kind, name)?;
        let skip = t.len() - rows;
        for (i, v) in t[skip..].iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok((out, labels[drop..].to_vec()))
}
