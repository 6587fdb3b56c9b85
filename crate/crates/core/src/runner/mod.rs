//! Configuration, task orchestration, truncation checks and dataset output.

mod config;
mod dataset;
mod model;
mod tasks;
mod truncation;

pub use config::{parse_config, Axis, Numerics, RunConfig, Sweep, SweepParam, Task};
pub use dataset::{config_from_metadata, Dataset, RunStatus, FORMAT_VERSION};
pub use model::{InitialSpec, Model};
pub use tasks::{run_task, sweep_phase_diagram, PointRecord, RunOptions};
pub use truncation::{validate_truncation, TruncationDiagnostics, TruncationFlag, TruncationMonitor, FAIL_LEVEL, WARN_LEVEL};
