use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spin_steering::{AngleSearchPolicy, CriterionId};

use crate::error::{CliError, Result};

pub const MAX_ATOMS: usize = 40;

/// A criterion together with its measurement order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub criterion: CriterionId,
    pub order: usize,
}

impl CriterionSpec {
    pub fn new(criterion: CriterionId, order: usize) -> Self {
        Self { criterion, order }
    }

    /// Every criterion the sweep knows about.
    pub fn all() -> Vec<Self> {
        vec![
            Self::new(CriterionId::Delta1, 1),
            Self::new(CriterionId::Delta2, 1),
            Self::new(CriterionId::Delta2, 2),
            Self::new(CriterionId::Delta3, 1),
            Self::new(CriterionId::Delta3, 2),
            Self::new(CriterionId::Delta4, 1),
        ]
    }
}

impl fmt::Display for CriterionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.criterion.has_order() {
            write!(f, "{}:{}", self.criterion, self.order)
        } else {
            write!(f, "{}", self.criterion)
        }
    }
}

impl FromStr for CriterionSpec {
    type Err = CliError;

    /// `delta1`, `delta4`, or `delta2:N` / `delta3:N` with N in 1..=3.
    fn from_str(s: &str) -> Result<Self> {
        let (name, order) = match s.split_once(':') {
            Some((n, o)) => {
                let o: usize = o
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad order in '{s}'")))?;
                (n, Some(o))
            }
            None => (s, None),
        };
        let criterion: CriterionId = name
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("unknown criterion '{}'", name.trim())))?;
        let order = match (criterion.has_order(), order) {
            (true, Some(o)) if (1..=3).contains(&o) => o,
            (true, Some(o)) => return Err(CliError::Config(format!("order {o} outside 1..=3 in '{s}'"))),
            (true, None) => 1,
            (false, None | Some(1)) => 1,
            (false, Some(o)) => return Err(CliError::Config(format!("{criterion} takes no order, got {o}"))),
        };
        Ok(Self { criterion, order })
    }
}

pub fn parse_criteria(list: &str) -> Result<Vec<CriterionSpec>> {
    let mut out: Vec<CriterionSpec> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(CliError::Config("no criteria given".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_atoms: Vec<usize>,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_steps: usize,
    pub criteria: Vec<CriterionSpec>,
    pub angle_policy: AngleSearchPolicy,
    pub emit_first_terms: bool,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub plot_path: Option<PathBuf>,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_atoms: vec![20],
            mu_min: 0.0,
            mu_max: 0.6,
            mu_steps: 61,
            criteria: CriterionSpec::all(),
            angle_policy: AngleSearchPolicy::default(),
            emit_first_terms: false,
            output_path: None,
            format: OutputFormat::Csv,
            plot_path: None,
            workers: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms.is_empty() {
            return Err(CliError::Config("no atom numbers given".into()));
        }
        if let Some(&n) = self.n_atoms.iter().find(|&&n| n == 0 || n > MAX_ATOMS) {
            return Err(CliError::Config(format!("atom number {n} outside 1..={MAX_ATOMS}")));
        }
        if self.mu_steps < 1 {
            return Err(CliError::Config("mu_steps must be at least 1".into()));
        }
        if !(self.mu_min.is_finite() && self.mu_max.is_finite()) || self.mu_min > self.mu_max {
            return Err(CliError::Config(format!(
                "need finite mu_min <= mu_max, got {} and {}",
                self.mu_min, self.mu_max
            )));
        }
        if self.criteria.is_empty() {
            return Err(CliError::Config("no criteria given".into()));
        }
        if self.workers < 1 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        self.angle_policy.validate()?;
        Ok(())
    }

    /// Evenly spaced twist strengths, endpoints included.
    pub fn mu_grid(&self) -> Vec<f64> {
        if self.mu_steps == 1 {
            return vec![self.mu_min];
        }
        let span = self.mu_max - self.mu_min;
        (0..self.mu_steps)
            .map(|i| self.mu_min + span * i as f64 / (self.mu_steps - 1) as f64)
            .collect()
    }

    pub fn max_order(&self) -> usize {
        self.criteria
            .iter()
            .filter(|c| c.criterion.has_order())
            .map(|c| c.order)
            .max()
            .unwrap_or(1)
    }
}
