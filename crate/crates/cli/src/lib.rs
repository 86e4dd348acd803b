//! Experiment runner behind the `gafz` binary: reads a config, evaluates
//! one command over a grid of radii and writes CSV, JSON and `.dat` files.

pub mod config;
pub mod row;
mod run;

pub use config::{ExperimentConfig, GridPoint};
pub use row::{read_csv, write_csv, ResultRow};
pub use run::{run, Command, RunOptions, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(gaf_zeros::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Numerical(_) | RunError::Io(_) => 3,
        }
    }
}

impl From<gaf_zeros::Error> for RunError {
    fn from(e: gaf_zeros::Error) -> Self {
        use gaf_zeros::Error as E;
        match e {
            E::UnknownFamily(_)
            | E::MissingParameter { .. }
            | E::InvalidParameter { .. }
            | E::CoefficientFile { .. }
            | E::Io { .. }
            | E::InvalidArgument(_)
            | E::OutsideDomain { .. }
            | E::EmptyModel => RunError::Validation(e.to_string()),
            _ => RunError::Numerical(e),
        }
    }
}
