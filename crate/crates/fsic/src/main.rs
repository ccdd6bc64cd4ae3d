use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cli;

use cli::Axis;

#[derive(Parser)]
#[command(
    name = "fsic",
    version,
    about = "Block-clustering + sequence-mining lossy image codec"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a BMP/PPM/PGM image into a .fsic container
    Compress {
        /// Block side length in pixels; must divide both dimensions
        #[arg(short = 'b', long, default_value_t = 8)]
        block_size: usize,
        /// Clusters per block (1..=256)
        #[arg(short = 'k', long, default_value_t = 8)]
        clusters: usize,
        /// Minimum support: absolute rows ("2") or percent ("58%")
        #[arg(short = 's', long, default_value = "50%")]
        support: String,
        /// Worker threads (default: available cores)
        #[arg(long)]
        threads: Option<usize>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Decompress a .fsic container back to an image
    Decompress {
        /// Worker threads (default: available cores)
        #[arg(long)]
        threads: Option<usize>,
        input: PathBuf,
        /// Output image; .bmp selects BMP, anything else PPM/PGM
        output: PathBuf,
    },
    /// Print a container's header and per-channel pattern tables
    Inspect {
        /// Also dump every per-block cluster identifier table
        #[arg(long)]
        cluster_tables: bool,
        input: PathBuf,
    },
    /// Compare two images; with --compressed also report the ratio
    Metrics {
        original: PathBuf,
        reconstructed: PathBuf,
        /// Compressed file whose size feeds the compression ratio
        #[arg(long)]
        compressed: Option<PathBuf>,
    },
    /// Sweep one parameter and emit a CSV of size/quality per value
    Sweep {
        /// Which parameter to vary
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values for the swept parameter
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(short = 'b', long, default_value_t = 8)]
        block_size: usize,
        #[arg(short = 'k', long, default_value_t = 8)]
        clusters: usize,
        #[arg(short = 's', long, default_value = "50%")]
        support: String,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Worker threads (default: available cores)
        #[arg(long)]
        threads: Option<usize>,
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.command {
        Command::Compress {
            block_size,
            clusters,
            support,
            threads,
            input,
            output,
        } => cli::with_threads(threads, || {
            cli::run_compress(block_size, clusters, &support, &input, &output)
        }),
        Command::Decompress {
            threads,
            input,
            output,
        } => cli::with_threads(threads, || cli::run_decompress(&input, &output)),
        Command::Inspect {
            cluster_tables,
            input,
        } => cli::run_inspect(&input, cluster_tables),
        Command::Metrics {
            original,
            reconstructed,
            compressed,
        } => cli::run_metrics(&original, &reconstructed, compressed.as_deref()),
        Command::Sweep {
            axis,
            values,
            block_size,
            clusters,
            support,
            csv,
            threads,
            input,
        } => cli::with_threads(threads, || {
            let spec = cli::SweepSpec {
                axis,
                values,
                block_size,
                clusters,
                support,
                input,
            };
            cli::run_sweep(&spec, csv.as_deref())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
