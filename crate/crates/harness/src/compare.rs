//! Regression comparison of result rows against reference values.

use crate::config::Function;
use crate::error::{HarnessError, Result};
use crate::results::{param, ResultRow};
use crate::run::evaluate;
use serde::Deserialize;
use std::path::Path;

/// Tolerance file: defaults plus optional per-experiment overrides.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default)]
    pub abs_tol: f64,
    #[serde(default = "default_z")]
    pub z: f64,
    /// Fallback generator for rows with an empty reference column. It is
    /// evaluated at the row's `a` parameter.
    pub reference: Option<Function>,
    /// Rows without any reference are skipped instead of failing the run.
    #[serde(default)]
    pub skip_missing: bool,
    #[serde(default)]
    pub rule: Vec<Rule>,
}

fn default_z() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub experiment: String,
    /// Only rows whose params contain this substring, e.g. `estimator=direct`.
    pub params: Option<String>,
    pub abs_tol: Option<f64>,
    pub z: Option<f64>,
    pub reference: Option<Function>,
}

impl ToleranceSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let tol: Self = toml::from_str(&text).map_err(|e| HarnessError::config(path, e.to_string()))?;
        if !(tol.abs_tol >= 0.0 && tol.z >= 0.0) || tol.rule.iter().any(|r| [r.abs_tol, r.z].into_iter().flatten().any(|x| !(x >= 0.0))) {
            return Err(HarnessError::config(path, "abs_tol and z must be nonnegative"));
        }
        Ok(tol)
    }

    fn rule_for(&self, row: &ResultRow) -> Option<&Rule> {
        self.rule
            .iter()
            .find(|r| r.experiment == row.experiment && r.params.as_deref().is_none_or(|p| row.params.contains(p)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub row: usize,
    pub experiment: String,
    pub params: String,
    pub estimate: f64,
    pub reference: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub verdicts: Vec<Verdict>,
    pub skipped: usize,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Passes when `|estimate - reference| <= max(abs_tol, z * stderr)`.
pub fn compare(rows: &[ResultRow], tol: &ToleranceSpec) -> Result<Report> {
    let mut report = Report::default();
    for (i, row) in rows.iter().enumerate() {
        let rule = tol.rule_for(row);
        let generator = rule.and_then(|r| r.reference).or(tol.reference);
        let reference = match (row.reference, generator) {
            (Some(r), _) => Some(r),
            (None, Some(g)) => param(&row.params, g.argument()).and_then(|x| evaluate(g, x).ok()),
            (None, None) => None,
        };
        let Some(reference) = reference else {
            if tol.skip_missing {
                report.skipped += 1;
                continue;
            }
            return Err(HarnessError::MissingReference { row: i + 1, experiment: row.experiment.clone() });
        };
        let abs_tol = rule.and_then(|r| r.abs_tol).unwrap_or(tol.abs_tol);
        let z = rule.and_then(|r| r.z).unwrap_or(tol.z);
        let allowed = abs_tol.max(z * row.stderr.unwrap_or(0.0));
        report.verdicts.push(Verdict {
            row: i + 1,
            experiment: row.experiment.clone(),
            params: row.params.clone(),
            estimate: row.estimate,
            reference,
            allowed,
            pass: (row.estimate - reference).abs() <= allowed,
        });
    }
    Ok(report)
}
