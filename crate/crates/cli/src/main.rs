mod bundle;
mod commands;
mod io;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use gravzone_core::{FusionMode, Palette, VariogramKind};

#[derive(Parser, Debug)]
#[command(
    name = "gravzone",
    version,
    about = "Gravity adaptation zone calibration toolkit"
)]
struct Cli {
    /// Worker threads for parallel stages (results do not depend on it).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GridFlags {
    #[arg(long, default_value_t = 40)]
    pub n_lon: usize,
    #[arg(long, default_value_t = 40)]
    pub n_lat: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lon0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lat0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dlon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dlat: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic gravity-anomaly grid (Gaussian bumps, trend, noise).
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridFlags,
        /// Standard deviation of the additive white noise (mGal).
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
    },
    /// Validate a `lon,lat,value` grid CSV and optionally write it back normalised.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Subsample a grid (or read scattered samples) and krige onto the grid nodes.
    Krige {
        /// Reference grid: supplies the target nodes, and the samples unless --samples is given.
        #[arg(long = "in")]
        input: PathBuf,
        /// Scattered `lon,lat,value` samples to interpolate instead of a subsample.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "spherical")]
        variogram: VariogramKind,
        /// Neighbour count, or `all` for a global system.
        #[arg(long, default_value = "16")]
        neighbors: String,
        #[arg(long, default_value_t = 15)]
        bins: usize,
        /// Maximum variogram lag as a fraction of the grid diagonal.
        #[arg(long, default_value_t = 0.5)]
        max_lag: f64,
        /// JSON report with the fitted variogram and reconstruction error.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the subsample CSV.
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Compute the six window features for every cell.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        half_m: usize,
        #[arg(long, default_value_t = 5)]
        half_n: usize,
    },
    /// Train the attention fuser on a grid's training split.
    Fuse {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mode: Option<FusionMode>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Label cells whose value is at or below the q-quantile.
    Label {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        quantile: f64,
    },
    /// Run the full calibration and write the model bundle, report and map.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory receiving model.txt, report.json and map.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Apply a trained bundle to a grid and score it against quantile labels.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        quantile: f64,
    },
    /// Compare models, fusion and feature selectors across regions.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the table as text lines.
        #[arg(long)]
        text: Option<PathBuf>,
    },
    /// Render a grid (or one column of a map CSV) as a PGM/PPM heatmap.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "gray")]
        palette: Palette,
        /// Column to render when the input has more than `lon,lat,value`.
        #[arg(long, default_value = "value")]
        column: String,
    },
    /// Print the default run configuration.
    DefaultConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// clap's message folded onto one line, without the usage footer.
fn one_line(err: &clap::Error) -> String {
    let rendered = err.render().to_string();
    let body: Vec<&str> = rendered
        .lines()
        .take_while(|l| !l.starts_with("Usage:"))
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("tip:"))
        .collect();
    body.join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", one_line(&e));
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
