//! Single-pattern rate against rays per cluster, with a paired bootstrap
//! interval for each step.

use prmimo::harness::{paired_bootstrap, run_experiment, ExperimentConfig, Scheme, Sweep};

fn main() -> prmimo::Result<()> {
    let rays = vec![1, 2, 4, 8];
    let cfg = ExperimentConfig {
        n_trials: 10,
        schemes: vec![Scheme::Eoga, Scheme::UpperBound],
        sweep: Sweep::RaySweep(rays.clone()),
        ..ExperimentConfig::ray_sweep_default()
    };
    let out = run_experiment(&cfg)?;
    for &n in &rays {
        let row = out.row(Scheme::Eoga, n as f64).expect("swept");
        let bound = out.row(Scheme::UpperBound, n as f64).expect("swept");
        println!(
            "{n} rays: mean {:.4} ± {:.4}, gap to bound {:.4}",
            row.mean_rate,
            row.std_rate,
            bound.mean_rate - row.mean_rate
        );
    }
    for w in rays.windows(2) {
        let (lo, hi) = (w[0] as f64, w[1] as f64);
        if let Some((d, a, b)) =
            paired_bootstrap(out.rates(Scheme::Eoga, hi).unwrap(), out.rates(Scheme::Eoga, lo).unwrap(), 1000, 0.95, 7)
        {
            println!("{} → {} rays: change {d:.4}, 95% interval [{a:.4}, {b:.4}]", w[0], w[1]);
        }
    }
    Ok(())
}
