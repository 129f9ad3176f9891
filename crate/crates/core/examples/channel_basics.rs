//! Draw a channel, compare the two rate forms and the upper bound.

use prmimo::channel::{generate_realization, ChannelConfig};
use prmimo::harness::upper_bound_rate;
use prmimo::linalg::frobenius_sq;
use prmimo::metrics::{achievable_rate, rate_via_singular_values, CorrelationState, RateContext};

fn main() -> prmimo::Result<()> {
    let cfg = ChannelConfig::desk_scale();
    let r = generate_realization(&cfg, 1)?;
    let h = r.physical_channel();
    println!("{} paths, ‖H‖² = {:.3} (expected {} on average)", r.n_paths(), frobenius_sq(&h), cfg.n_tx * cfg.n_rx);

    let state = CorrelationState::from_subchannels(&r.subchannels())?;
    let worst = state.levels.iter().cloned().fold(0.0, f64::max);
    println!("largest subchannel correlation level: {worst:.3}");

    for snr_db in [0.0, 10.0, 20.0] {
        let ctx = RateContext::from_db(snr_db, cfg.n_rx)?;
        println!(
            "{snr_db:>5} dB: rate {:.4} (singular values {:.4}), upper bound {:.4}",
            achievable_rate(&h, &ctx)?,
            rate_via_singular_values(&h, &ctx)?,
            upper_bound_rate(cfg.n_tx, cfg.n_rx, ctx.snr_linear()),
        );
    }
    Ok(())
}
