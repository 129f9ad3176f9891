//! Per-element patterns via sequential correlation reduction, with both
//! subproblem solvers.

use prmimo::channel::{generate_realization, ChannelConfig};
use prmimo::eoga::{MinMaxOptions, NormalizationMode};
use prmimo::metrics::{achievable_rate, CorrelationState, RateContext};
use prmimo::sof::{sof_run, CgOptions, SofSolver};

fn main() -> prmimo::Result<()> {
    let cfg = ChannelConfig::desk_scale();
    let r = generate_realization(&cfg, 3)?;
    let ctx = RateContext::from_db(10.0, cfg.n_rx)?;
    let before = CorrelationState::from_subchannels(&r.subchannels())?;
    println!("mean correlation level before: {:.4}", mean(&before.levels));

    for solver in [SofSolver::ManifoldCg, SofSolver::Evd] {
        let d = sof_run(&r, solver, &CgOptions::default(), &MinMaxOptions::default(), NormalizationMode::Exact)?;
        println!(
            "{solver:?}: mean level after {:.4}, rate {:.4}, fallbacks {}, visit order starts {:?}",
            mean(&d.levels),
            achievable_rate(&r.pattern_channel(&d.pattern)?, &ctx)?,
            d.fallbacks,
            &d.order[..4.min(d.order.len())],
        );
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
