use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hrsim_core::config::{ExperimentConfig, SimulationMode};
use hrsim_core::csv::CsvTable;
use hrsim_core::experiments::{self, LinkBudget, PercentileOptions, SlotBoundOptions, DEFAULT_MAX_PHASE_DRIFT};
use hrsim_core::units::db_to_linear;
use hrsim_core::Execution;

/// Harmonic radar with phase-coherent helper transmitters.
///
/// Every flag can also be set through an `HRSIM_*` environment variable.
#[derive(Parser, Debug)]
#[command(name = "hrsim", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Configuration file (TOML, or JSON with a `.json` extension).
    #[arg(long, global = true, env = "HRSIM_CONFIG")]
    config: Option<PathBuf>,
    /// Bundled preset used when no `--config` is given.
    #[arg(long, global = true, env = "HRSIM_PRESET", default_value = "xband-sto2020")]
    preset: String,
    #[arg(long, global = true, env = "HRSIM_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "HRSIM_TRIALS")]
    trials: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true, env = "HRSIM_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "HRSIM_MODE")]
    mode: Option<Mode>,
    /// Per-slot columns in the Monte Carlo output.
    #[arg(long, global = true, env = "HRSIM_TRACE")]
    trace: bool,
    /// Run trials on the calling thread only.
    #[arg(long, global = true, env = "HRSIM_SEQUENTIAL")]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Envelope,
    Waveform,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Toml,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Link budget at the ranging-node distance.
    LinkBudget,
    /// Received power and SNR against distance.
    SweepDistance {
        #[arg(long, default_value_t = 0.1)]
        min: f64,
        #[arg(long, default_value_t = 20.0)]
        max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Density of the amplitude ratio after a given slot.
    PdfAlpha {
        #[arg(long)]
        slot: usize,
        #[arg(long = "gamma2-dB", alias = "gamma2-db", allow_hyphen_values = true)]
        gamma2_db: f64,
        #[arg(long, default_value_t = 4000)]
        points_per_unit: usize,
    },
    /// Percentiles of the normalised amplitude ratio against SNR.
    Percentiles {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 6, 8])]
        helpers: Vec<usize>,
        #[arg(long = "gamma2-dB", alias = "gamma2-db", value_delimiter = ',', allow_hyphen_values = true,
              default_values_t = [-10.0, -5.0, 0.0, 5.0, 10.0])]
        gamma2_db: Vec<f64>,
        #[arg(long = "p", value_delimiter = ',', default_values_t = [10.0, 50.0])]
        percentiles: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        points_per_unit: usize,
        /// Skip the analytic recursion column.
        #[arg(long)]
        no_analytic: bool,
    },
    /// Lower and upper bounds on the slot duration.
    SlotBounds {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5, 6, 7, 8])]
        helpers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        ppm: Vec<f64>,
        /// Largest tolerated drift across a frame, rad.
        #[arg(long, default_value_t = DEFAULT_MAX_PHASE_DRIFT)]
        max_drift: f64,
        #[arg(long, default_value_t = 10.0)]
        percentile: f64,
        /// Also search the largest slot duration by simulation.
        #[arg(long)]
        simulate: bool,
    },
    /// Monte Carlo run of the configured frame.
    Montecarlo {
        /// Override the link-budget SNR.
        #[arg(long = "gamma2-dB", alias = "gamma2-db", allow_hyphen_values = true)]
        gamma2_db: Option<f64>,
    },
    /// Empirical CDF of the range extension factor.
    RefCdf {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 6, 8])]
        helpers: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long = "gamma2-dB", alias = "gamma2-db", allow_hyphen_values = true)]
        gamma2_db: Option<f64>,
    },
    /// Quadratic against exact tag across distances.
    RegimeSweep {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0, 8.0, 15.0])]
        distances: Vec<f64>,
        /// Run both tags at this SNR instead of the link budget.
        #[arg(long = "gamma2-dB", alias = "gamma2-db", allow_hyphen_values = true)]
        gamma2_db: Option<f64>,
    },
    /// Print the effective configuration.
    Config {
        #[arg(long, value_enum, default_value = "toml")]
        format: Format,
    },
}

fn load(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::preset(&g.preset)?,
    };
    if let Some(s) = g.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = g.trials {
        cfg.run.trials = t;
    }
    if let Some(m) = g.mode {
        cfg.run.mode = match m {
            Mode::Envelope => SimulationMode::Envelope,
            Mode::Waveform => SimulationMode::Waveform,
        };
    }
    if g.out.is_some() {
        cfg.run.output.clone_from(&g.out);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(table: &CsvTable, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => table.save(p).with_context(|| format!("writing {}", p.display())),
        None => {
            let stdout = std::io::stdout();
            table.write_to(stdout.lock())?;
            Ok(())
        }
    }
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = load(g)?;
    let exec = if g.sequential { Execution::Sequential } else { Execution::Parallel };
    let out = cfg.run.output.as_deref();
    match cli.command {
        Command::LinkBudget => emit(&LinkBudget::compute(&cfg)?.table(), out),
        Command::SweepDistance { min, max, points } => {
            if !(min > 0.0 && max > min) {
                bail!("need 0 < --min < --max");
            }
            emit(&experiments::sweep_distance(&cfg, &experiments::log_space(min, max, points))?, out)
        }
        Command::PdfAlpha {
            slot,
            gamma2_db,
            points_per_unit,
        } => emit(&experiments::pdf_alpha(slot, db_to_linear(gamma2_db), points_per_unit, exec)?, out),
        Command::Percentiles {
            helpers,
            gamma2_db,
            percentiles,
            points_per_unit,
            no_analytic,
        } => {
            let opts = PercentileOptions {
                helpers,
                gamma2_db,
                percentiles,
                trials: cfg.run.trials,
                seed: cfg.run.seed,
                points_per_unit: (!no_analytic).then_some(points_per_unit),
            };
            emit(&experiments::percentiles(&cfg, &opts, exec)?, out)
        }
        Command::SlotBounds {
            helpers,
            ppm,
            max_drift,
            percentile,
            simulate,
        } => {
            let opts = SlotBoundOptions {
                helpers,
                ppm,
                max_phase_drift: max_drift,
                percentile,
                trials: cfg.run.trials,
                seed: cfg.run.seed,
                simulate,
            };
            let table = experiments::slot_bounds_table(&cfg, &opts, exec)?;
            let feasible = table.floats("feasible").unwrap_or_default();
            if feasible.contains(&0.0) {
                eprintln!("warning: some (M, ppm) rows have no feasible slot duration (feasible = 0)");
            }
            emit(&table, out)
        }
        Command::Montecarlo { gamma2_db } => {
            let res = experiments::montecarlo(&cfg, gamma2_db.map(db_to_linear), g.trace, exec)?;
            match out {
                Some(p) => {
                    emit(&res.trials, Some(p))?;
                    emit(&res.summary, Some(&summary_path(p)))
                }
                None => {
                    emit(&res.trials, None)?;
                    res.summary.write_to(std::io::stderr().lock())?;
                    Ok(())
                }
            }
        }
        Command::RefCdf {
            helpers,
            points,
            gamma2_db,
        } => emit(
            &experiments::ref_cdf_table(&cfg, &helpers, points, gamma2_db.map(db_to_linear), exec)?,
            out,
        ),
        Command::RegimeSweep { distances, gamma2_db } => emit(
            &experiments::regime_sweep(&cfg, &distances, gamma2_db.map(db_to_linear), exec)?,
            out,
        ),
        Command::Config { format } => {
            let text = match format {
                Format::Toml => cfg.to_toml()?,
                Format::Json => cfg.to_json()?,
            };
            match out {
                Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
                None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
            }
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
