//! File formats, panel ingest, the parallel grid runner and the command
//! line front end around `scorebench-core`.

pub mod app;
pub mod config;
pub mod csv_io;
pub mod ingest;
pub mod model_io;
pub mod report_io;
pub mod runner;
pub mod tensor_io;

pub use app::{AppError, ExitStatus};
pub use config::{load_config, LoadedConfig, RunConfig};
