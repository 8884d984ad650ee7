mod mask;
mod patch;
mod score;
mod synth;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::util::{exit_code, Outcome};

#[derive(Parser)]
#[command(
    name = "phirm",
    version,
    about = "Phenotype-preserving evaluation of inpainted micrographs"
)]
struct Cli {
    /// Metric configuration file (TOML). Defaults are used when absent.
    #[arg(long, global = true, env = "PHIRM_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score reconstructed images against originals.
    #[command(subcommand)]
    Score(score::ScoreCommand),
    /// Extract, generate or apply inpainting masks.
    #[command(subcommand)]
    Mask(mask::MaskCommand),
    /// Cut normalized patches out of large images.
    Patches(patch::PatchesArgs),
    /// Synthetic scenes with known phenotype.
    #[command(subcommand)]
    Synth(synth::SynthCommand),
    /// Print the effective metric configuration as TOML.
    Config,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let cfg = util::load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Score(cmd) => score::run(cmd, &cfg),
        Command::Mask(cmd) => mask::run(cmd),
        Command::Patches(args) => patch::run(args),
        Command::Synth(cmd) => synth::run(cmd, &cfg),
        Command::Config => {
            util::print_stdout(cfg.to_toml_string().trim_end())?;
            Ok(Outcome::Clean)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Warnings(n)) => {
            eprintln!("finished with {n} warning(s)");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
