//! Monte Carlo experiments, CSV output and pattern exports.

mod config;
mod experiment;
mod export;
mod selftest;
mod stats;

pub use config::{ExperimentConfig, Scheme, Sweep};
pub use experiment::{
    format_float, read_results_csv, run_experiment, trial_seed, upper_bound_rate, write_results_csv, ExperimentOutput,
    ResultRow, SchemeSamples, CSV_HEADER,
};
pub use export::{
    array_factor_scan, export_pattern_samples, read_pattern_samples, scan_grid, write_array_factor_csv,
    PeriodicInterpolant, PATTERN_CSV_HEADER,
};
pub use selftest::{golden_config, golden_csv, selftest, Check};
pub use stats::{paired_bootstrap, summarize, Summary, Z95};
