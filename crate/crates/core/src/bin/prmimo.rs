use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prmimo::channel::{generate_realization, PatternMatrix};
use prmimo::eoga::{design_single_pattern, MinMaxOptions};
use prmimo::harness::{
    array_factor_scan, export_pattern_samples, golden_csv, run_experiment, scan_grid, selftest, write_array_factor_csv,
    write_results_csv, ExperimentConfig, Sweep,
};
use prmimo::sof::{sof_run, CgOptions, SofSolver};
use prmimo::{Error, Result};

#[derive(Parser)]
#[command(name = "prmimo", version, about = "Pattern-reconfigurable MIMO rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean rate per scheme over the SNR grid.
    RateSweep(CommonArgs),
    /// Mean rate per scheme over rays-per-cluster counts.
    RaySweep(CommonArgs),
    /// Pattern samples and array-factor scans for one realization; --out is a directory.
    PatternExport(CommonArgs),
    /// Internal consistency checks; --out writes a small golden rate CSV.
    Selftest(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (directory for pattern-export). Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides n_trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load_config(args: &CommonArgs, fallback: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => fallback,
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.n_trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_output(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write(&mut file)?;
            file.flush()?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let result = run_experiment(cfg)?;
    with_output(out, |w| write_results_csv(&result.rows, w))
}

fn pattern_export(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let r = generate_realization(&cfg.channel, cfg.base_seed)?;
    let opts = MinMaxOptions::default();
    let eoga = design_single_pattern(&r, &opts, cfg.normalization_mode)?;
    let sof = sof_run(&r, SofSolver::ManifoldCg, &CgOptions::default(), &opts, cfg.normalization_mode)?;
    with_output(Some(&dir.join("eoga_pattern.csv")), |w| export_pattern_samples(&r, &eoga.pattern, w))?;
    with_output(Some(&dir.join("sof_mo_pattern.csv")), |w| export_pattern_samples(&r, &sof.pattern, w))?;
    let grid = scan_grid(361);
    let omni = PatternMatrix::ones(cfg.channel.n_tx, r.n_paths());
    let curves = [
        ("omni", array_factor_scan(&r, &omni, &grid)?),
        ("eoga", array_factor_scan(&r, &eoga.pattern, &grid)?),
        ("sof_mo", array_factor_scan(&r, &sof.pattern, &grid)?),
    ];
    with_output(Some(&dir.join("array_factor.csv")), |w| write_array_factor_csv(&grid, &curves, w))
}

fn run_selftest(out: Option<&Path>) -> Result<bool> {
    let checks = selftest();
    for c in &checks {
        let status = if c.passed { "ok" } else { "FAIL" };
        println!("{status:4} {} {}", c.name, c.detail);
    }
    if let Some(path) = out {
        fs::write(path, golden_csv()?)?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn run(cli: Cli) -> Result<bool> {
    let args = match &cli.command {
        Command::RateSweep(a) | Command::RaySweep(a) | Command::PatternExport(a) | Command::Selftest(a) => a,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::RateSweep(a) => {
            let cfg = load_config(a, ExperimentConfig::default())?;
            if cfg.sweep != Sweep::SnrSweep {
                return Err(Error::InvalidConfig("rate-sweep needs \"sweep\": \"snr_sweep\"".into()));
            }
            sweep(&cfg, a.out.as_deref()).map(|_| true)
        }
        Command::RaySweep(a) => {
            let cfg = load_config(a, ExperimentConfig::ray_sweep_default())?;
            if !matches!(cfg.sweep, Sweep::RaySweep(_)) {
                return Err(Error::InvalidConfig("ray-sweep needs \"sweep\": {\"ray_sweep\": [...]}".into()));
            }
            sweep(&cfg, a.out.as_deref()).map(|_| true)
        }
        Command::PatternExport(a) => {
            let cfg = load_config(a, ExperimentConfig::default())?;
            pattern_export(&cfg, a.out.as_deref().unwrap_or(Path::new("."))).map(|_| true)
        }
        Command::Selftest(a) => run_selftest(a.out.as_deref()),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
