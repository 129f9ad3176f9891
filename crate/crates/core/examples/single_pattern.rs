//! One shared radiation pattern: min-max gain allocation, then rates.

use prmimo::channel::{generate_realization, ChannelConfig};
use prmimo::eoga::{design_single_pattern, MinMaxOptions, NormalizationMode};
use prmimo::linalg::frobenius_sq;
use prmimo::metrics::{achievable_rate, RateContext};

fn main() -> prmimo::Result<()> {
    let cfg = ChannelConfig::desk_scale();
    let r = generate_realization(&cfg, 3)?;
    let design = design_single_pattern(&r, &MinMaxOptions::default(), NormalizationMode::Exact)?;
    let a = &design.allocation;
    println!(
        "min-max λ_max {:.5} after {} iterations (converged: {}), scaling {:.4}",
        a.t, a.iterations, a.converged, design.delta
    );
    let top: Vec<String> = a.p.iter().take(8).map(|p| format!("{p:.3}")).collect();
    println!("first path gains: [{}]", top.join(", "));

    let designed = r.pattern_channel(&design.pattern)?;
    println!("designed ‖H‖² = {:.6}", frobenius_sq(&designed));
    let ctx = RateContext::from_db(10.0, cfg.n_rx)?;
    println!(
        "10 dB rate: omni {:.4}, single pattern {:.4}",
        achievable_rate(&r.physical_channel(), &ctx)?,
        achievable_rate(&designed, &ctx)?
    );
    Ok(())
}
