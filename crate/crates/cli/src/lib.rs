//! Scenario files, result bundles and reports for the ngoa test bed.

pub mod bundle;
pub mod execute;
pub mod report;
pub mod scenario;

pub use bundle::{BundleError, Manifest};
pub use execute::{execute, RunError};
pub use report::report;
pub use scenario::{Mode, Scenario, ScenarioError};
