//! Experiment driver: configs, the fixed test family, named experiments and
//! CSV reports.

pub mod audit;
pub mod boundedness;
pub mod config;
pub mod experiments;
pub mod family;
pub mod report;

pub use audit::{run_audit, AuditReport};
pub use boundedness::{run_operator_bound, BoundednessReport, Verdict};
pub use config::{ConfigDoc, ExperimentConfig, ExperimentKind, OperatorKind};
pub use family::{test_family, TestField};
pub use report::{Check, Outcome, Table};
