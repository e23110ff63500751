pub mod config;
pub mod version;
pub mod workflow;

pub use workflow::{run, Command, Outcome};

/// Exit status: success.
pub const EXIT_OK: u8 = 0;
/// Exit status: solver or configuration error.
pub const EXIT_ERROR: u8 = 1;
/// Exit status: the workflow finished but at least one audit failed.
pub const EXIT_AUDIT_FAILURE: u8 = 2;
