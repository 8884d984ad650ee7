use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Subcommand};
use phirm::batch::{score_batch, GroupTable, PairingRule};
use phirm::report::{score_files, write_csv};
use phirm::PhirmConfig;

use crate::util::{append_file, csv_writer, ensure_dir, print_stdout, Outcome};

#[derive(Subcommand)]
pub enum ScoreCommand {
    /// Score one pair; prints a JSON object.
    Pair(PairArgs),
    /// Score every pair of two directories and write a run manifest.
    Batch(BatchArgs),
}

#[derive(Args)]
pub struct PairArgs {
    original: PathBuf,
    reconstructed: PathBuf,
    /// Append the result as a CSV row (header added to new files).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct BatchArgs {
    original_dir: PathBuf,
    reconstructed_dir: PathBuf,
    /// Output directory for manifest.json, pairs.csv and aggregates.csv.
    #[arg(long, short)]
    out: PathBuf,
    /// CSV with `original`, `reconstructed` (and optional `stem`) columns
    /// instead of pairing by file stem.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// CSV with a `stem` column and a group column.
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, default_value = "group", requires = "groups")]
    group_column: String,
}

pub fn run(cmd: ScoreCommand, cfg: &PhirmConfig) -> anyhow::Result<Outcome> {
    match cmd {
        ScoreCommand::Pair(a) => pair(a, cfg),
        ScoreCommand::Batch(a) => batch(a, cfg),
    }
}

fn pair(args: PairArgs, cfg: &PhirmConfig) -> anyhow::Result<Outcome> {
    let rec = score_files(&args.original, &args.reconstructed, cfg)?;
    print_stdout(&serde_json::to_string_pretty(&rec)?)?;
    if let Some(path) = args.csv {
        let (file, fresh) = append_file(&path)?;
        write_csv(file, std::slice::from_ref(&rec), fresh)?;
    }
    Ok(Outcome::Clean)
}

fn batch(args: BatchArgs, cfg: &PhirmConfig) -> anyhow::Result<Outcome> {
    let rule = match args.pairs {
        Some(pairs_file) => PairingRule::Explicit { pairs_file },
        None => PairingRule::Stem,
    };
    let groups = args
        .groups
        .map(|g| GroupTable::load(&g, &args.group_column))
        .transpose()?;
    let manifest = score_batch(&args.original_dir, &args.reconstructed_dir, &rule, cfg, groups.as_ref())?;

    ensure_dir(&args.out)?;
    let json_path = args.out.join("manifest.json");
    std::fs::write(&json_path, manifest.to_json_pretty()? + "\n")
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    let csv_path = args.out.join("pairs.csv");
    let file = std::fs::File::create(&csv_path).with_context(|| format!("cannot write {}", csv_path.display()))?;
    write_csv(file, &manifest.pairs, true)?;
    let mut w = csv_writer(&args.out.join("aggregates.csv"))?;
    for agg in &manifest.aggregates {
        w.serialize(agg)?;
    }
    w.flush()?;

    for agg in &manifest.aggregates {
        eprintln!(
            "{:<12} n={:<5} mean={:.4} median={:.4} min={:.4} max={:.4}",
            agg.group, agg.n, agg.mean, agg.median, agg.min, agg.max
        );
    }
    Ok(Outcome::from_warnings(manifest.warnings.len()))
}
