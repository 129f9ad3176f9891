//! Export designed pattern samples, read them back and scan the array factor.

use prmimo::channel::{generate_realization, ChannelConfig, PatternMatrix};
use prmimo::eoga::{design_single_pattern, MinMaxOptions, NormalizationMode};
use prmimo::harness::{
    array_factor_scan, export_pattern_samples, read_pattern_samples, scan_grid, PeriodicInterpolant,
};

fn main() -> prmimo::Result<()> {
    let cfg = ChannelConfig::desk_scale();
    let r = generate_realization(&cfg, 5)?;
    let design = design_single_pattern(&r, &MinMaxOptions::default(), NormalizationMode::Exact)?;

    let mut buf = Vec::new();
    export_pattern_samples(&r, &design.pattern, &mut buf)?;
    let text = String::from_utf8_lossy(&buf);
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    let restored = read_pattern_samples(buf.as_slice())?;
    println!("round trip exact: {}", restored == design.pattern);

    // Element-0 pattern as a function of departure angle.
    let samples: Vec<(f64, f64)> = r.paths().iter().zip(&design.samples).map(|(p, &m)| (p.aod, m)).collect();
    let element = PeriodicInterpolant::new(&samples)?;
    println!("element gain at broadside: {:.4}", element.eval(0.0));

    let grid = scan_grid(9);
    let omni = array_factor_scan(&r, &PatternMatrix::ones(cfg.n_tx, r.n_paths()), &grid)?;
    let shaped = array_factor_scan(&r, &design.pattern, &grid)?;
    for ((angle, o), (_, s)) in omni.iter().zip(&shaped) {
        println!("{:>7.2}°  omni {o:8.4}  designed {s:8.4}", angle.to_degrees());
    }
    Ok(())
}
