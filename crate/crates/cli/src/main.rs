use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use npcure_cli::commands;
use npcure_cli::config::{load, FitConfig};
use npcure_cli::dataset::Dataset;
use npcure_cli::{CliError, CliResult, RayonExecutor};

/// Nonparametric mixture cure model estimation and simulation.
///
/// The worker count of parallel commands can be set with NPCURE_WORKERS;
/// results do not depend on it.
#[derive(Parser)]
#[command(name = "npcure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample from benchmark model 1 or 2.
    Simulate {
        #[arg(long)]
        model: u8,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; a `<out>.json` sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate cure probabilities (and optionally latency) from a data file.
    Fit(Box<FitArgs>),
    /// Run a Monte Carlo plan.
    Benchmark {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Summarize censoring per group.
    Diagnose {
        #[arg(long)]
        data: PathBuf,
        /// Restrict to these group labels (repeatable).
        #[arg(long)]
        group: Vec<String>,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FitArgs {
    /// TOML file with fit settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    group: Option<String>,
    /// Covariate values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long)]
    x_points: Option<usize>,
    /// Fixed incidence bandwidth; omit to run the bootstrap selector.
    #[arg(long)]
    h: Option<f64>,
    /// Pilot rule of the selector: global or local.
    #[arg(long)]
    pilot: Option<String>,
    #[arg(long)]
    knn: Option<usize>,
    /// Smooth selected bandwidths across the covariate grid.
    #[arg(long)]
    smooth: bool,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    h_min: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    /// Latency bandwidth; writes latency.csv when given.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    t_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl FitArgs {
    fn into_config(self) -> CliResult<FitConfig> {
        let base: FitConfig = match &self.config {
            Some(p) => load(p)?,
            None => FitConfig::default(),
        };
        Ok(base.overlay(FitConfig {
            data: self.data,
            out_dir: self.out_dir,
            group: self.group,
            x: self.x,
            x_min: self.x_min,
            x_max: self.x_max,
            x_points: self.x_points,
            h: self.h,
            pilot: self.pilot,
            knn: self.knn,
            smooth: self.smooth.then_some(true),
            resamples: self.resamples,
            grid_points: self.grid_points,
            h_min: self.h_min,
            h_max: self.h_max,
            b: self.b,
            t_points: self.t_points,
            seed: self.seed,
        }))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { model, n, seed, out } => commands::simulate(model, n, seed, &out).map(|_| ()),
        Command::Fit(args) => commands::fit((*args).into_config()?, &RayonExecutor::from_env()),
        Command::Benchmark { plan, out_dir } => commands::benchmark(&plan, &out_dir, &RayonExecutor::from_env()).map(|_| ()),
        Command::Diagnose { data, group, out } => {
            let data = Dataset::read(&data)?;
            let rows = commands::diagnose(&data, &group, &mut io::stderr())?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                    commands::write_diagnostics(file, &rows).map_err(|e| CliError::io(&path, e.into()))
                }
                None => commands::write_diagnostics(io::stdout().lock(), &rows)
                    .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e.into())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("npcure: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
