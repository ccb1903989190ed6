//! Configuration-driven pipeline around `tlroa-core`: TOML configs,
//! CSV/JSON/SVG output, a rayon executor and the `tlroa` command.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod svg;

pub use error::{CliError, CliResult};
