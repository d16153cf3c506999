//! `report.json` document and per-check records.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Failed on purpose: a non-geometric lift run with the override.
    ExpectedFail,
    /// Listed in `skip_checks`, or not applicable to this instance.
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    /// Measured quantity; `null` when not finite.
    pub value: Option<f64>,
    /// What `value` was compared against.
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub experiment: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub diagnostics: Map<String, Value>,
    /// CSV files written, relative to the output directory.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: u32,
    pub passed: bool,
    pub experiments: Vec<ExperimentReport>,
}

pub const REPORT_VERSION: u32 = 1;

impl Report {
    pub fn new(experiments: Vec<ExperimentReport>) -> Self {
        Self {
            version: REPORT_VERSION,
            passed: experiments.iter().all(|e| e.passed),
            experiments,
        }
    }

    /// `experiment/check` for every failed check.
    pub fn failures(&self) -> Vec<String> {
        self.experiments
            .iter()
            .flat_map(|e| {
                e.checks
                    .iter()
                    .filter(|c| c.status == Status::Fail)
                    .map(move |c| format!("{}/{}", e.name, c.name))
            })
            .collect()
    }
}

/// Collects checks for one experiment, honouring `skip_checks`.
#[derive(Debug)]
pub struct Checks<'a> {
    skip: &'a [String],
    list: Vec<Check>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl<'a> Checks<'a> {
    pub fn new(skip: &'a [String]) -> Self {
        Self {
            skip,
            list: Vec::new(),
        }
    }

    /// Records `value <= threshold`.
    pub fn at_most(&mut self, name: &'static str, value: f64, threshold: f64) {
        self.record(name, value <= threshold, value, Some(threshold), None);
    }

    /// Records `value >= threshold`.
    pub fn at_least(&mut self, name: &'static str, value: f64, threshold: f64) {
        self.record(name, value >= threshold, value, Some(threshold), None);
    }

    pub fn record(
        &mut self,
        name: &'static str,
        pass: bool,
        value: f64,
        threshold: Option<f64>,
        detail: Option<String>,
    ) {
        let status = if self.skip.iter().any(|s| s == name) {
            Status::Skipped
        } else if pass {
            Status::Pass
        } else {
            Status::Fail
        };
        self.push(Check {
            name,
            status,
            value: finite(value),
            threshold: threshold.and_then(finite),
            detail,
        });
    }

    pub fn expected_fail(
        &mut self,
        name: &'static str,
        value: f64,
        threshold: f64,
        detail: String,
    ) {
        self.push(Check {
            name,
            status: Status::ExpectedFail,
            value: finite(value),
            threshold: finite(threshold),
            detail: Some(detail),
        });
    }

    pub fn not_applicable(&mut self, name: &'static str, detail: String) {
        self.push(Check {
            name,
            status: Status::Skipped,
            value: None,
            threshold: None,
            detail: Some(detail),
        });
    }

    fn push(&mut self, check: Check) {
        self.list.push(check);
    }

    pub fn passed(&self) -> bool {
        self.list.iter().all(|c| c.status != Status::Fail)
    }

    pub fn into_vec(self) -> Vec<Check> {
        self.list
    }
}
