//! Experiment orchestration: configs, seeded replica ensembles, and
//! machine-readable reports.
//!
//! Reports are deterministic functions of the config: reruns with the same
//! config and seed serialize byte-for-byte identically. Wall-clock timings
//! therefore go to stderr, never into the artifacts.

mod config;
mod convergence;
mod master_verify;
mod pde_suite;

pub use config::ExperimentConfig;
pub use convergence::{run_convergence, run_sweep, ConvergenceReport, ConvergenceRow, SweepReport};
pub use master_verify::{run_master_verify, MasterVerifyReport, MasterVerifyRow};
pub use pde_suite::{run_pde_suite, PdeCaseRow, PdeSuiteReport};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Version metadata embedded in every report.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct VersionInfo {
    pub package: &'static str,
    pub schema: u32,
}

impl VersionInfo {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA_VERSION,
        }
    }
}

/// Pretty JSON with a trailing newline; the byte-level contract checked by
/// the determinism tests.
pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}
