use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod error;
mod layers;
mod report;
mod sim;
mod train;

/// Bit-slice sparse training and ReRAM crossbar analysis.
#[derive(Debug, Parser)]
#[command(name = "bitslice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the MNIST MLP and write checkpoint, history and sparsity report.
    Train(TrainArgs),
    /// Quantize a checkpoint's weights to dynamic fixed point.
    Quantize(LayerArgs),
    /// Bit-slice a checkpoint's quantized weights.
    Slice(LayerArgs),
    /// Print a per-slice sparsity table for checkpoints or ratio fixtures.
    Report(ReportArgs),
    /// Map a checkpoint onto crossbars and profile bitline accumulation.
    Map(MapArgs),
    /// ADC overhead savings for given per-group resolutions.
    Adc(AdcArgs),
    /// Map, profile and report ADC savings in one go.
    #[command(name = "map-adc")]
    MapAdc(MapAdcArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Flat key=value config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding the MNIST IDX files.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// none, l1 or bl1.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Checkpoint to start from.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Zero and freeze weights with |w| below this before training.
    #[arg(long)]
    pub prune_threshold: Option<f64>,
    #[arg(long)]
    pub bits: Option<u32>,
    #[arg(long)]
    pub slice_width: Option<u32>,
    /// latent (keep full-precision weights) or quantized (w <- Q(w) - lr*g).
    #[arg(long)]
    pub update_base: Option<String>,
}

#[derive(Debug, Args)]
pub struct LayerArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory for the JSON output and resolved config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint(s), comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub checkpoint: Vec<PathBuf>,
    /// JSON file(s) with `slice_ratios` (MSB first) and optional `method`, `accuracy`.
    #[arg(long, value_delimiter = ',')]
    pub fixture: Vec<PathBuf>,
    /// Print JSON instead of the table.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Crossbar rows and columns.
    #[arg(long)]
    pub tile_size: Option<usize>,
    /// MNIST directory whose test images drive an empirical profile.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// Number of test images streamed with --inputs.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdcArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Per-group resolutions, MSB group first, e.g. 1,3,3,3.
    #[arg(long)]
    pub resolutions: Option<String>,
    #[arg(long)]
    pub baseline: Option<u32>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapAdcArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub baseline: Option<u32>,
}

fn run(cli: Cli) -> error::Result<()> {
    match cli.command {
        Command::Train(a) => train::run(a),
        Command::Quantize(a) => layers::quantize(a),
        Command::Slice(a) => layers::slice(a),
        Command::Report(a) => report::run(a),
        Command::Map(a) => sim::map(a),
        Command::Adc(a) => sim::adc(a),
        Command::MapAdc(a) => sim::map_adc(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
