//! Proximal point runs, experiment suites, problem files and reports.

pub mod experiment;
pub mod ippa;
pub mod problem;
pub mod report;
pub mod suites;

pub use experiment::{run_experiment, ExperimentConfig, DEFAULT_SEED};
pub use ippa::{run_ippa, CertificateMode, IppaConfig, IppaStep, IppaTrace, Schedule};
pub use problem::{parse_json, CertifyKind, CubeGrid, ConjugateProblem, MembershipProblem, Oracle, ProxProblem, SumRuleProblem};
pub use report::{Record, Report, Summary};
pub use suites::{ippa_report, run_suite, SuiteContext, SuiteKind, SuiteSpec};
