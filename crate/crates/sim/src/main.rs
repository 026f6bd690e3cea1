use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pseudolat::output::{export_dataset, write_comparison, write_json, write_scenario};
use pseudolat::{
    collect_dataset, compare_waveforms, config, run_scenario, scenario_crlb, ScenarioConfig, SimError,
    WaveformStudyConfig,
};

/// Single-anchor UAV localization simulator.
#[derive(Debug, Parser)]
#[command(name = "pseudolat", version)]
struct Cli {
    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of runs (or waveform trials).
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario; writes report.csv, revolutions.csv and summary.json.
    Simulate { config: PathBuf },
    /// Paired OFDM/OTFS ranging trials; writes waveform_*.csv and
    /// waveform_summary.json.
    CompareWaveforms { config: PathBuf },
    /// Write per-revolution measurement matrices of a scenario as CSV.
    ExportDataset {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Position error bound for one revolution; writes crlb.json.
    Crlb { config: PathBuf },
}

fn configure_threads() -> Result<(), SimError> {
    let Ok(raw) = std::env::var("PSEUDOLAT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| SimError::Config {
            field: "PSEUDOLAT_THREADS".into(),
            message: format!("expected a positive integer, got {raw:?}"),
        })?;
    // Fails only if a pool already exists, which cannot happen this early.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn scenario(cli: &Cli, path: &Path) -> Result<ScenarioConfig, SimError> {
    let mut cfg: ScenarioConfig = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if let Some(runs) = cli.runs {
        cfg.runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<&Path, SimError> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|source| SimError::Io {
        path: cli.out_dir.clone(),
        source,
    })?;
    Ok(&cli.out_dir)
}

fn report_files(cli: &Cli, files: &[PathBuf]) {
    if !cli.quiet {
        for f in files {
            eprintln!("wrote {}", f.display());
        }
    }
}

fn run(cli: &Cli) -> Result<(), SimError> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate { config } => {
            let cfg = scenario(cli, config)?;
            let report = run_scenario(&cfg)?;
            let files = write_scenario(&report, out_dir(cli)?)?;
            if !cli.quiet {
                let s = &report.summary;
                eprintln!(
                    "{} runs: median {:.3} m, mean {:.3} m, rmse {:.3} m, p95 {:.3} m, converged {:.1}% ({:.2?})",
                    s.runs,
                    s.median_m,
                    s.mean_m,
                    s.rmse_m,
                    s.p95_m,
                    100.0 * s.convergence_rate,
                    report.runtime
                );
            }
            report_files(cli, &files);
        }
        Command::CompareWaveforms { config } => {
            let mut cfg: WaveformStudyConfig = config::load(config)?;
            if let Some(seed) = cli.seed {
                cfg.base_seed = seed;
            }
            if let Some(runs) = cli.runs {
                cfg.trials = runs;
            }
            let cmp = compare_waveforms(&cfg)?;
            let files = write_comparison(&cmp, out_dir(cli)?)?;
            if !cli.quiet {
                for s in &cmp.stats {
                    eprintln!(
                        "{} {:>6.0} kHz: mean {:.3} m, median {:.3} m, var {:.3} m^2, failures {}",
                        s.scheme,
                        s.delta_f_hz / 1e3,
                        s.mean_m,
                        s.median_m,
                        s.variance_m2,
                        s.failures
                    );
                }
                for c in &cmp.comparisons {
                    eprintln!(
                        "otfs/ofdm {:>6.0} kHz: mean ratio {:.3} ({:+.1}% improvement), variance ratio {:.3}",
                        c.delta_f_hz / 1e3,
                        c.mean_ratio,
                        100.0 * c.mean_improvement,
                        c.variance_ratio
                    );
                }
                eprintln!("{} trials in {:.2?}", cmp.trials, cmp.runtime);
            }
            report_files(cli, &files);
        }
        Command::ExportDataset { config, out } => {
            let cfg = scenario(cli, config)?;
            let matrices = collect_dataset(&cfg)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|source| SimError::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            export_dataset(&matrices, out)?;
            report_files(cli, std::slice::from_ref(out));
        }
        Command::Crlb { config } => {
            let cfg = scenario(cli, config)?;
            let bound = scenario_crlb(&cfg)?;
            let path = out_dir(cli)?.join("crlb.json");
            write_json(&path, &bound)?;
            if !cli.quiet {
                eprintln!(
                    "{} samples: trace {:.6} m^2, rmse bound {:.6} m, rank {}",
                    bound.samples, bound.trace_m2, bound.rmse_bound_m, bound.rank
                );
            }
            report_files(cli, &[path]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
