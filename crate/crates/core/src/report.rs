//! Report bundles written by the command-line front end.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::barrier::CandidateReport;
use crate::checker::{CheckReport, MarginReport};
use crate::config::{Expected, Outcome};
use crate::flow::{FalsifyOutcome, StopReason};
use crate::modulus::{ModulusCheck, ModulusPair};
use crate::svmap::PerturbMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckError {
    pub id: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySummary {
    pub cells: usize,
    pub cell_diameter: f64,
    pub representatives: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusSummary {
    pub pair: ModulusPair,
    pub lambda1_at_zero: f64,
    /// Smallest `λ2` over the box grid.
    pub lambda2_min: f64,
    pub c_monotone: bool,
    pub check: Option<ModulusCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub run: usize,
    pub start: Vec<f64>,
    pub policy: String,
    pub exit_depth: f64,
    pub escape_time: f64,
    pub tau_exit: f64,
    pub stop: StopReason,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsifyRecord {
    pub mode: PerturbMode,
    pub eps: f64,
    pub falsified: bool,
    pub runs: usize,
    pub deepest: f64,
    pub deepest_tau: f64,
    pub inner_approximation: bool,
    pub witness: Option<WitnessSummary>,
    /// Columnar dump of the witness, relative to the output directory.
    pub trajectory_file: Option<String>,
}

impl FalsifyRecord {
    pub fn new(mode: PerturbMode, eps: f64, o: &FalsifyOutcome, file: Option<String>) -> Self {
        Self {
            mode,
            eps,
            falsified: o.falsified,
            runs: o.runs,
            deepest: o.deepest,
            deepest_tau: o.deepest_tau,
            inner_approximation: o.inner_approximation,
            witness: o.witness.as_ref().map(|w| WitnessSummary {
                run: w.run,
                start: w.start.clone(),
                policy: w.policy.clone(),
                exit_depth: w.exit_depth,
                escape_time: w.escape_time,
                tau_exit: w.tau_exit,
                stop: w.stop.clone(),
                steps: w.trajectory.velocities.len(),
            }),
            trajectory_file: file,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub key: String,
    pub expected: Expected,
    pub observed: Outcome,
    pub observed_value: Option<f64>,
    pub met: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub scenario: String,
    /// SHA-256 of the loaded config, re-serialized.
    pub config_hash: String,
    /// Same, after command-line overrides.
    pub effective_config_hash: String,
    pub seed: u64,
    pub overrides: BTreeMap<String, String>,
    pub candidate: Option<CandidateReport>,
    /// A point of `cl(X_o) ∩ cl(X_u)` found by the grid probe.
    pub closure_contact: Option<Vec<f64>>,
    pub boundary: Option<BoundarySummary>,
    pub checks: Vec<CheckReport>,
    pub errors: Vec<CheckError>,
    pub margin: Option<MarginReport>,
    pub strong_recheck: Option<CheckReport>,
    pub modulus: Option<ModulusSummary>,
    pub falsify: Vec<FalsifyRecord>,
    pub expectations: Vec<ExpectationResult>,
    pub exit_code: i32,
    /// Wall-clock time of the run; the only nondeterministic field.
    pub generated_at_unix: u64,
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
