//! Benchmark harness around the `nrbfn` library: configuration files,
//! stratified cross-validation, the full benchmark protocol, parameter
//! sweeps, and model persistence.
//!
//! Everything here is deterministic given a config and seed; linear-algebra
//! thread count is controlled by the `OPENBLAS_NUM_THREADS` environment
//! variable.

pub mod baseline;
pub mod config;
pub mod folds;
pub mod persist;
pub mod runner;
pub mod sweep;

pub use config::{ClassifierSpec, ExperimentConfig, LambdaSpec};
pub use persist::{load_model, save_model, ModelFile, SavedModel};
pub use runner::{cross_validate, run_benchmark, BenchmarkReport};
pub use sweep::{parameter_sweep, SweepAxis, SweepRow};
