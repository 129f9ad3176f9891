//! Paired Monte Carlo rate sweeps.

use std::io::Write;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Scheme, Sweep};
use super::stats::summarize;
use crate::channel::{generate_realization, ChannelConfig, ChannelRealization};
use crate::eoga::{design_single_pattern, MinMaxOptions};
use crate::error::{Error, Result};
use crate::metrics::{achievable_rate, db_to_linear, RateContext};
use crate::sof::{sof_run, CgOptions, SofSolver};

/// `N_r log2(1 + ρ N_t / N_r)`, the rate of `√N_t [I | 0]`.
pub fn upper_bound_rate(n_tx: usize, n_rx: usize, snr_linear: f64) -> f64 {
    n_rx as f64 * (snr_linear / n_rx as f64 * n_tx as f64).ln_1p() / std::f64::consts::LN_2
}

/// Seed of trial `t`.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed ^ trial as u64
}

/// One line of the rate CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// Trials that produced a rate.
    pub n_trials: usize,
    /// Trials that needed a degenerate-clip fallback or were excluded.
    pub fallback_count: usize,
}

/// Per-trial rates of one scheme at one sweep point, `None` for excluded trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSamples {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub rates: Vec<Option<f64>>,
    pub fallback_count: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub samples: Vec<SchemeSamples>,
}

impl ExperimentOutput {
    pub fn row(&self, scheme: Scheme, sweep_value: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.sweep_value == sweep_value)
    }

    pub fn rates(&self, scheme: Scheme, sweep_value: f64) -> Option<&[Option<f64>]> {
        self.samples.iter().find(|s| s.scheme == scheme && s.sweep_value == sweep_value).map(|s| s.rates.as_slice())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    rate: Option<f64>,
    fallback: bool,
}

impl Outcome {
    fn failed() -> Self {
        Self { rate: None, fallback: true }
    }
}

/// Rates of every scheme on one realization, at each SNR in `snrs`.
///
/// Pattern designs do not depend on the SNR, so each is computed once.
fn evaluate_trial(
    realization: &ChannelRealization,
    schemes: &[Scheme],
    snrs: &[f64],
    cfg: &ExperimentConfig,
) -> Vec<Vec<Outcome>> {
    let channel = realization.config();
    let minmax = MinMaxOptions::default();
    let cg = CgOptions::default();
    let rates_of = |h: &crate::linalg::CMatrix, fallback: bool| -> Vec<Outcome> {
        snrs.iter()
            .map(|&snr| match RateContext::new(snr, channel.n_rx).and_then(|ctx| achievable_rate(h, &ctx)) {
                Ok(rate) => Outcome { rate: Some(rate), fallback },
                Err(_) => Outcome::failed(),
            })
            .collect()
    };
    let designed = |solver: SofSolver| -> Vec<Outcome> {
        match sof_run(realization, solver, &cg, &minmax, cfg.normalization_mode)
            .and_then(|d| Ok((realization.pattern_channel(&d.pattern)?, d.fallbacks > 0)))
        {
            Ok((h, fallback)) => rates_of(&h, fallback),
            Err(_) => vec![Outcome::failed(); snrs.len()],
        }
    };
    schemes
        .iter()
        .map(|&scheme| match scheme {
            Scheme::Physical => rates_of(&realization.physical_channel(), false),
            Scheme::UpperBound => snrs
                .iter()
                .map(|&snr| Outcome { rate: Some(upper_bound_rate(channel.n_tx, channel.n_rx, snr)), fallback: false })
                .collect(),
            Scheme::Eoga => match design_single_pattern(realization, &minmax, cfg.normalization_mode)
                .and_then(|d| realization.pattern_channel(&d.pattern))
            {
                Ok(h) => rates_of(&h, false),
                Err(_) => vec![Outcome::failed(); snrs.len()],
            },
            Scheme::SofMo => designed(SofSolver::ManifoldCg),
            Scheme::SofEvd => designed(SofSolver::Evd),
        })
        .collect()
}

/// A sweep point: the channel to draw and the SNRs (linear) to evaluate.
struct Point {
    channel: ChannelConfig,
    snrs: Vec<f64>,
    sweep_values: Vec<f64>,
}

fn sweep_points(cfg: &ExperimentConfig) -> Vec<Point> {
    let snrs: Vec<f64> = cfg.snr_grid_db.iter().map(|&db| db_to_linear(db)).collect();
    match &cfg.sweep {
        Sweep::SnrSweep => vec![Point { channel: cfg.channel.clone(), snrs, sweep_values: cfg.snr_grid_db.clone() }],
        Sweep::RaySweep(rays) => rays
            .iter()
            .map(|&n_rays| Point {
                channel: ChannelConfig { n_rays, ..cfg.channel.clone() },
                snrs: snrs.clone(),
                sweep_values: vec![n_rays as f64],
            })
            .collect(),
    }
}

/// Run every trial of `cfg`, evaluating all schemes on the same realization.
///
/// Trials run on the current rayon pool and are merged in trial order, so the
/// output does not depend on scheduling. Trials whose design fails are
/// excluded and counted; if a scheme loses every trial at some point the run
/// fails with [`Error::AllTrialsDegenerate`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for point in sweep_points(cfg) {
        point.channel.validate()?;
        let per_trial: Vec<Vec<Vec<Outcome>>> = (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| match generate_realization(&point.channel, trial_seed(cfg.base_seed, t)) {
                Ok(r) => evaluate_trial(&r, &cfg.schemes, &point.snrs, cfg),
                Err(_) => vec![vec![Outcome::failed(); point.snrs.len()]; cfg.schemes.len()],
            })
            .collect();
        for (k, &scheme) in cfg.schemes.iter().enumerate() {
            for (j, &sweep_value) in point.sweep_values.iter().enumerate() {
                let outcomes: Vec<Outcome> = per_trial.iter().map(|trial| trial[k][j]).collect();
                let rates: Vec<Option<f64>> = outcomes.iter().map(|o| o.rate).collect();
                let fallback_count = outcomes.iter().filter(|o| o.fallback).count();
                let kept: Vec<f64> = rates.iter().flatten().copied().collect();
                let summary = summarize(&kept)
                    .ok_or_else(|| Error::AllTrialsDegenerate { scheme: scheme.name().to_string(), sweep_value })?;
                rows.push(ResultRow {
                    scheme,
                    sweep_value,
                    mean_rate: summary.mean,
                    std_rate: summary.std,
                    ci95_low: summary.ci95_low,
                    ci95_high: summary.ci95_high,
                    n_trials: summary.n,
                    fallback_count,
                });
                samples.push(SchemeSamples { scheme, sweep_value, rates, fallback_count });
            }
        }
    }
    // Ray sweeps produce one block per ray count; regroup scheme-major.
    let position = |s: Scheme| cfg.schemes.iter().position(|&x| x == s);
    rows.sort_by_key(|r| position(r.scheme));
    samples.sort_by_key(|r| position(r.scheme));
    Ok(ExperimentOutput { rows, samples })
}

pub const CSV_HEADER: [&str; 8] =
    ["scheme", "sweep_value", "mean_rate", "std_rate", "ci95_low", "ci95_high", "n_trials", "fallback_count"];

/// Float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// Write rows in the rate CSV schema.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            format_float(r.sweep_value),
            format_float(r.mean_rate),
            format_float(r.std_rate),
            format_float(r.ci95_low),
            format_float(r.ci95_high),
            r.n_trials.to_string(),
            r.fallback_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a rate CSV written by [`write_results_csv`].
pub fn read_results_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidConfig(format!("unexpected rate CSV header {header:?}")));
    }
    let bad = |what: &str| Error::InvalidConfig(format!("bad {what} in rate CSV"));
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let float = |i: usize| record[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i]));
        let int = |i: usize| record[i].parse::<usize>().map_err(|_| bad(CSV_HEADER[i]));
        rows.push(ResultRow {
            scheme: Scheme::from_name(&record[0]).ok_or_else(|| bad("scheme"))?,
            sweep_value: float(1)?,
            mean_rate: float(2)?,
            std_rate: float(3)?,
            ci95_low: float(4)?,
            ci95_high: float(5)?,
            n_trials: int(6)?,
            fallback_count: int(7)?,
        });
    }
    Ok(rows)
}
