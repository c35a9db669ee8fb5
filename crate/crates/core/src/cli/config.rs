//! JSON run configuration shared by every command.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cli::transform::Transform;
use crate::error::{Result, SvarError};
use crate::identify::{ColumnSelection, JacobianMethod};
use crate::impulse::DEFAULT_H_MAX;
use crate::simulation::{ReplicationConfig, SvarDgp};

/// One value column of an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    /// Header of the value column.
    pub column: String,
    /// Name used in outputs; the column header when absent.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub transform: Transform,
}

impl SeriesSpec {
    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.column)
    }
}

/// A CSV file with a date column and one or more value columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub path: PathBuf,
    /// Header of the date column; the first column when absent.
    #[serde(default)]
    pub date_column: Option<String>,
    /// Value columns to read; every non-date column, untransformed, when empty.
    #[serde(default)]
    pub series: Vec<SeriesSpec>,
}

/// Frequency conversion applied to each series before the join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frequency {
    /// Use the dates as they are.
    #[default]
    AsIs,
    /// Mean of the observations in each calendar quarter, dated at the quarter start.
    QuarterlyMean,
}

/// Replication study settings and its data-generating process.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub dgp: DgpChoice,
    #[serde(flatten)]
    pub replication: ReplicationConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dgp: DgpChoice::Reference,
            replication: ReplicationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgpChoice {
    /// Shipped `k = p = 5` process with nonzero `A₀`.
    Reference,
    /// The same process with `A₀ = O`.
    ReferenceNull,
    Custom(Box<SvarDgp>),
}

impl DgpChoice {
    pub fn build(&self) -> Result<SvarDgp> {
        let dgp = match self {
            DgpChoice::Reference => SvarDgp::reference(),
            DgpChoice::ReferenceNull => SvarDgp::reference_null(),
            DgpChoice::Custom(d) => (**d).clone(),
        };
        dgp.validate()?;
        Ok(dgp)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<InputSpec>,
    pub frequency: Frequency,
    /// Missing cells (empty or `.`) drop their row instead of failing.
    pub drop_missing: bool,
    /// Inclusive bounds on the transformed sample.
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub lag: usize,
    pub jtuple: Option<ColumnSelection>,
    /// Test weight; all ones when absent.
    pub weight: Option<Vec<f64>>,
    pub horizons: usize,
    pub level: f64,
    pub jacobian: JacobianMethod,
    pub simulation: SimulationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            frequency: Frequency::AsIs,
            drop_missing: false,
            start: None,
            end: None,
            lag: 4,
            jtuple: None,
            weight: None,
            horizons: DEFAULT_H_MAX,
            level: 0.95,
            jacobian: JacobianMethod::Analytic,
            simulation: SimulationConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative input paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| SvarError::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            for input in &mut cfg.inputs {
                if input.path.is_relative() {
                    input.path = dir.join(&input.path);
                }
            }
        }
        Ok(cfg)
    }

    /// Checks the settings that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.lag == 0 {
            return Err(SvarError::Config("lag must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(SvarError::Config(format!("confidence level {} outside (0, 1)", self.level)));
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if s > e {
                return Err(SvarError::Config(format!("start {s} is after end {e}")));
            }
        }
        if let Some(w) = &self.weight {
            if w.iter().any(|x| !x.is_finite()) {
                return Err(SvarError::Config("test weight has non-finite entries".into()));
            }
        }
        Ok(())
    }

    pub fn require_inputs(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(SvarError::Config("no input files configured".into()));
        }
        Ok(())
    }

    pub fn require_jtuple(&self) -> Result<&ColumnSelection> {
        self.jtuple
            .as_ref()
            .ok_or_else(|| SvarError::Config("no column selection (jtuple) configured".into()))
    }

    /// Checks the selection and weight against the fitted dimensions.
    pub fn validate_for(&self, k: usize, p: usize) -> Result<()> {
        let sel = self.require_jtuple()?;
        if sel.len() != k {
            return Err(SvarError::InvalidSelection(format!(
                "{} columns selected for {k} series",
                sel.len()
            )));
        }
        sel.validate(k, 1 + k * p)?;
        if let Some(w) = &self.weight {
            if w.len() != k * (k - 1) / 2 {
                return Err(SvarError::Config(format!(
                    "test weight has {} entries, expected {}",
                    w.len(),
                    k * (k - 1) / 2
                )));
            }
        }
        Ok(())
    }
}
