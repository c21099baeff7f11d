//! Command-line plumbing for `fairtl`: CSV ingestion under a schema, run
//! configuration, and report writing.

pub mod config;
pub mod error;
pub mod run;
pub mod schema;

pub use config::{parse_metrics, Command, LearnerChoice, MetricName, RunConfig};
pub use error::{CliError, Result};
pub use run::{execute, run, Report, FAILURE_MARKER, METADATA_FILE, REPORT_FILE};
pub use schema::{load_csv, load_reader, LoadedData, Schema};
