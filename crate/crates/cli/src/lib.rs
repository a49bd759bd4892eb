//! Command-line front end: CSV ingestion, estimation reports, balance
//! tables, simulation, Monte Carlo studies, plot data and CI derivations.

pub mod args;
pub mod commands;
pub mod error;
pub mod ingest;

pub use args::Cli;
pub use commands::run;
pub use error::CliError;
pub use ingest::{ingest_bytes, ingest_csv, Dataset, IngestError, IngestReport, IngestionSchema};
