//! Small SNR sweep over every scheme, printed as the results CSV.

use prmimo::harness::{run_experiment, write_results_csv, ExperimentConfig};

fn main() -> prmimo::Result<()> {
    let cfg = ExperimentConfig {
        snr_grid_db: vec![0.0, 10.0, 20.0],
        n_trials: 10,
        base_seed: 1,
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg)?;
    write_results_csv(&out.rows, std::io::stdout().lock())
}
