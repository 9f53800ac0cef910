use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tdfusion_cli::commands::{self, PairSource};
use tdfusion_cli::CliError;

#[derive(Parser)]
#[command(
    name = "tdfusion",
    version,
    about = "Task-driven image fusion with a learned fusion loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train all three networks and write checkpoint, log and metrics report.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the hypergradient with finite-difference references.
    CheckGrad {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, hide = true)]
        corrupt_backward: bool,
    },
    /// Write w_a / w_b heatmaps and the fused image for one pair.
    ExportWeights {
        #[arg(long)]
        ckpt: PathBuf,
        /// Training-set index, or `a.pgm,b.pgm`.
        #[arg(long)]
        pair: PairSource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Metrics table and task accuracy on the held-out set.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the synthetic training set as PGM images.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Train { config, out } => commands::train(&config, out.as_deref()).map(|o| o.summary),
        Command::CheckGrad {
            config,
            corrupt_backward,
        } => commands::check_grad(&config, corrupt_backward),
        Command::ExportWeights { ckpt, pair, out } => commands::export_weights(&ckpt, &pair, &out),
        Command::Eval { ckpt, config } => commands::eval(&ckpt, &config),
        Command::GenData { config, out } => commands::gen_data(&config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
