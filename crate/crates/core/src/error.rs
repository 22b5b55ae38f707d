use alloc::string::String;

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// A function received a value outside its domain (non-finite vector,
    /// slot before generation, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    /// A configuration value is invalid. `key` names the offending entry.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// A link's packet accounting stopped balancing.
    #[error("packet conservation violated on {link} at slot {slot}")]
    Conservation { link: &'static str, slot: u64 },
}

impl SimError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
