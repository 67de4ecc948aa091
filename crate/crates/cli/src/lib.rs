//! Batch verification harness: runs named suites over configured types and
//! emits deterministic JSON or text reports.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{CliError, Suite, SuiteConfig};
pub use report::{emit_report, CheckResult, Format, SuiteReport};
pub use suites::{export_instance, run_suite};
