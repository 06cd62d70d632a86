use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

use super::{CliError, CliResult, Scenario, ScenarioKind, EXIT_CERTIFICATION, EXIT_OK};
use crate::hilbert::BipartiteState;
use crate::tolerance::Tolerances;

/// One certified property: passes when `value < threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Which construction the check exercises.
    pub tag: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub state_hash: String,
    pub dims: [usize; 2],
    pub tolerances: Tolerances,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub data: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub(crate) fn new(scenario: &Scenario, psi: &BipartiteState, tolerances: Tolerances) -> Self {
        Self {
            kind: scenario.kind,
            seed: scenario.seed,
            state_hash: psi.hash(),
            dims: [psi.d1(), psi.d2()],
            tolerances,
            passed: false,
            checks: Vec::new(),
            data: BTreeMap::new(),
        }
    }

    pub(crate) fn check(&mut self, name: &str, tag: &str, value: f64, threshold: f64) {
        self.checks.push(Check {
            name: name.to_string(),
            tag: tag.to_string(),
            passed: value < threshold,
            value,
            threshold,
        });
    }

    /// A yes/no check, recorded as value 0 (pass) or 1 against threshold 1.
    pub(crate) fn verdict(&mut self, name: &str, tag: &str, ok: bool) {
        self.check(name, tag, if ok { 0.0 } else { 1.0 }, 1.0);
    }

    pub(crate) fn put<T: Serialize>(&mut self, key: &str, value: &T) -> CliResult<()> {
        self.data.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub(crate) fn finish(&mut self) {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_CERTIFICATION
        }
    }
}

/// Writes convergence rows (one record per approximation step) as CSV.
pub fn write_convergence_csv<W: io::Write, T: Serialize>(writer: W, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io { path: "<csv>".into(), source: io::Error::other(e) })?;
    }
    w.flush().map_err(|source| CliError::Io { path: "<csv>".into(), source })
}
