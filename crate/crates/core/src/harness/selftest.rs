//! Quick internal consistency checks run by the `selftest` command.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Scheme};
use super::experiment::{run_experiment, upper_bound_rate, write_results_csv};
use crate::channel::{generate_realization, ChannelConfig};
use crate::eoga::{design_single_pattern, MinMaxOptions, NormalizationMode};
use crate::error::Result;
use crate::linalg::{frobenius_sq, CMatrix};
use crate::metrics::{achievable_rate, rate_via_singular_values, RateContext};
use crate::sof::{manifold_cg_traced, sof_run, CgOptions, SofSolver};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rate_forms() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let h =
            CMatrix::from_fn(4, 16, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let ctx = RateContext::new(rng.random_range(0.0..100.0), 4)?;
        worst = worst.max((achievable_rate(&h, &ctx)? - rate_via_singular_values(&h, &ctx)?).abs());
    }
    Ok(Check { name: "rate forms agree", passed: worst <= 1e-9, detail: format!("max diff {worst:.3e}") })
}

fn upper_bound() -> Result<Check> {
    let mut h = CMatrix::zeros(8, 32);
    for i in 0..8 {
        h[(i, i)] = Complex64::new(32f64.sqrt(), 0.0);
    }
    let diff = (achievable_rate(&h, &RateContext::new(10.0, 8)?)? - upper_bound_rate(32, 8, 10.0)).abs();
    Ok(Check { name: "upper bound closed form", passed: diff <= 1e-12, detail: format!("diff {diff:.3e}") })
}

fn normalization() -> Result<Check> {
    let cfg = ChannelConfig::desk_scale();
    let target = (cfg.n_tx * cfg.n_rx) as f64;
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let r = generate_realization(&cfg, seed)?;
        let opts = MinMaxOptions::default();
        let eoga = design_single_pattern(&r, &opts, NormalizationMode::Exact)?;
        let sof = sof_run(&r, SofSolver::Evd, &CgOptions::default(), &opts, NormalizationMode::Exact)?;
        for pattern in [&eoga.pattern, &sof.pattern] {
            worst = worst.max((frobenius_sq(&r.pattern_channel(pattern)?) - target).abs() / target);
        }
    }
    Ok(Check { name: "exact normalization", passed: worst <= 1e-9, detail: format!("max rel err {worst:.3e}") })
}

fn cg_descent() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ok = true;
    for _ in 0..20 {
        let a = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let out = manifold_cg_traced(&(&a * a.transpose()), &CgOptions::default())?;
        ok &= out.trace.windows(2).all(|w| w[1] <= w[0]);
    }
    Ok(Check { name: "manifold CG descent", passed: ok, detail: String::new() })
}

/// Small sweep used for the golden CSV and the determinism check.
pub fn golden_config() -> ExperimentConfig {
    ExperimentConfig {
        channel: ChannelConfig { n_clusters: 2, n_rays: 2, ..ChannelConfig::desk_scale() },
        snr_grid_db: vec![0.0, 10.0, 20.0],
        n_trials: 4,
        base_seed: 2024,
        schemes: vec![Scheme::Physical, Scheme::Eoga, Scheme::SofMo, Scheme::UpperBound],
        ..ExperimentConfig::default()
    }
}

/// CSV text of the golden sweep.
pub fn golden_csv() -> Result<Vec<u8>> {
    let out = run_experiment(&golden_config())?;
    let mut buf = Vec::new();
    write_results_csv(&out.rows, &mut buf)?;
    Ok(buf)
}

fn determinism() -> Result<Check> {
    let same = golden_csv()? == golden_csv()?;
    Ok(Check { name: "deterministic sweep", passed: same, detail: String::new() })
}

type CheckFn = fn() -> Result<Check>;

/// Run every check; errors inside a check count as failures.
pub fn selftest() -> Vec<Check> {
    let checks: [(&'static str, CheckFn); 5] = [
        ("rate forms agree", rate_forms),
        ("upper bound closed form", upper_bound),
        ("exact normalization", normalization),
        ("manifold CG descent", cg_descent),
        ("deterministic sweep", determinism),
    ];
    checks
        .into_iter()
        .map(|(name, check)| check().unwrap_or_else(|e| Check { name, passed: false, detail: e.to_string() }))
        .collect()
}
