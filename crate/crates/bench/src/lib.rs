//! Instance generation, station-data ingestion and the benchmark harness
//! behind the `subopt` command.

pub mod error;
pub mod instance;
pub mod record;
pub mod runner;
pub mod stations;

pub use error::{BenchError, Result};
pub use instance::{Instance, InstanceSpec};
pub use record::BenchRecord;
pub use runner::{run_algorithm, run_bench, AlgoSpec, BenchCell, BenchPlan, Preset, RunOptions};
