//! File formats and command-line front end for `rmm-core`.

pub mod cli;
pub mod error;
pub mod export;
pub mod spec;

pub use error::{CliError, SpecError};
pub use spec::{parse_spec, CopulaSpecDoc, Model};
