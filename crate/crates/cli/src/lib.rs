//! Workflow commands behind the `granule-scope` binary and the local HTTP
//! service used by the rollout explorer.

pub mod commands;
pub mod error;
pub mod serve;
pub mod spec;

pub use error::CliError;
pub use spec::RunSpec;
