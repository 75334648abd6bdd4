//! Config-driven experiments over `randpoly-core`.

pub mod config;
pub mod diff;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, ConfigErrors, ExperimentConfig, ExperimentKind};
pub use diff::{report_diff, ReportDiff};
pub use report::{Report, Status};
pub use run::{run, run_in, RunError};

/// Process exit codes of the `randpoly` binary.
pub mod exit {
    pub const OK: i32 = 0;
    /// A binding threshold failed, or a diff is out of tolerance.
    pub const FAILED: i32 = 1;
    /// Invalid config, or reports of different kinds.
    pub const INVALID: i32 = 2;
    pub const RUNTIME: i32 = 3;
}
