//! Run configuration; the schema lives in the library so other front ends
//! share it.

pub use rangewalk::config::{Atom, ConfigError, GroupSpec, Params, RunConfig};

impl From<ConfigError> for crate::CliError {
    fn from(e: ConfigError) -> Self {
        crate::CliError::Config(e.0)
    }
}
