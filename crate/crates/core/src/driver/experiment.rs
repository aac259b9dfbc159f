//! Experiment configuration files.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "grid": {"lo": -4, "hi": 4, "step": 0.01},
//!   "tol": {"abs_tol": 1e-9, "grid_slop": 0},
//!   "suites": [{"name": "sumrule-roundtrip", "cases": 20}]
//! }
//! ```
//!
//! Suites run in the listed order and their records are concatenated.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::problem::{parse_json, CubeGrid};
use crate::driver::report::Report;
use crate::driver::suites::{run_suite, SuiteContext, SuiteSpec};
use crate::error::{Result, WcError};
use crate::grid::{GridDomain, Tolerance};

/// Seed used when a configuration does not name one.
pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Lattice for every suite; each suite's standard grid otherwise.
    #[serde(default)]
    pub grid: Option<GridDomain>,
    #[serde(default)]
    pub tol: Option<Tolerance>,
    pub suites: Vec<SuiteSpec>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ExperimentConfig {
    /// Parses JSON, reporting the line, column and field path of the first
    /// error.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = parse_json(text)?;
        if let Some(t) = &cfg.tol {
            Tolerance::new(t.abs_tol, t.grid_slop)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| WcError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Runs every suite of `cfg`; `tol` applies unless the file sets its own,
/// and `cube` replaces the file's grid.
pub fn run_experiment(cfg: &ExperimentConfig, tol: &Tolerance, cube: Option<&CubeGrid>) -> Result<Report> {
    let ctx = SuiteContext {
        seed: cfg.seed,
        tol: cfg.tol.unwrap_or(*tol),
        grid: if cube.is_some() { None } else { cfg.grid.clone() },
        cube: cube.copied(),
    };
    let mut report = Report::default();
    for spec in &cfg.suites {
        report.extend(run_suite(spec, &ctx)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Status;

    #[test]
    fn empty_suite_list_gives_empty_report() {
        let cfg = ExperimentConfig::from_json(r#"{"suites": []}"#).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        let r = run_experiment(&cfg, &Tolerance::default(), None).unwrap();
        assert!(r.records.is_empty());
        assert_eq!(r.status(), Status::Holds);
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let text = "{\n  \"suites\": [\n    {\"name\": \"sumrule-roundtrip\", \"cases\": \"ten\"}\n  ]\n}";
        let err = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("suites[0].cases"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"suites": [{"name": "nope"}]}"#).unwrap_err().to_string();
        assert!(err.contains("suites[0].name"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"suites": [], "sede": 1}"#).unwrap_err().to_string();
        assert!(err.contains("sede"), "{err}");
    }

    #[test]
    fn roundtrip_suite_holds() {
        let cfg = ExperimentConfig::from_json(r#"{"seed": 3, "suites": [{"name": "sumrule-roundtrip", "cases": 8}]}"#).unwrap();
        let r = run_experiment(&cfg, &Tolerance::default(), None).unwrap();
        assert_eq!(r.records.len(), 8);
        assert_eq!(r.status(), Status::Holds, "{}", r.to_json());
    }
}
