use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Subcommand};
use phirm::io::write_gray_png;
use phirm::metric::score_summaries;
use phirm::synthval::severity_ladder;
use phirm::PhirmConfig;

use crate::util::{csv_writer, ensure_dir, resolve_seed, Outcome};

#[derive(Subcommand)]
pub enum SynthCommand {
    /// Severity ladders: original/ and manipulated/ directories plus a manifest.
    Ladder(LadderArgs),
}

#[derive(Args)]
pub struct LadderArgs {
    #[arg(long, short)]
    out: PathBuf,
    /// Seed of the first ladder; ladder i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    count: usize,
}

pub fn run(cmd: SynthCommand, cfg: &PhirmConfig) -> anyhow::Result<Outcome> {
    match cmd {
        SynthCommand::Ladder(a) => ladder(a, cfg),
    }
}

fn ladder(args: LadderArgs, cfg: &PhirmConfig) -> anyhow::Result<Outcome> {
    let base = resolve_seed(args.seed);
    let (orig_dir, man_dir) = (args.out.join("original"), args.out.join("manipulated"));
    ensure_dir(&orig_dir)?;
    ensure_dir(&man_dir)?;
    let mut manifest = csv_writer(&args.out.join("manifest.csv"))?;
    manifest.write_record([
        "stem",
        "seed",
        "rank",
        "label",
        "manipulations",
        "nucleus_count_original",
        "nucleus_area_original",
        "artefact_area_original",
        "nucleus_count_manipulated",
        "nucleus_area_manipulated",
        "artefact_area_manipulated",
        "expected_phirm",
    ])?;
    for i in 0..args.count {
        let seed = base.wrapping_add(i as u64);
        for rung in severity_ladder(seed)? {
            let stem = format!("s{seed}_r{}", rung.rank);
            write_gray_png(&orig_dir.join(format!("{stem}.png")), &rung.original)?;
            write_gray_png(&man_dir.join(format!("{stem}.png")), &rung.manipulated)?;
            let (a, b) = (rung.expected_original, rung.expected_manipulated);
            let expected = score_summaries(&a, &b, cfg).score;
            let steps: Vec<String> = rung.manipulations.iter().map(ToString::to_string).collect();
            manifest.write_record([
                stem,
                seed.to_string(),
                rung.rank.to_string(),
                rung.label.to_string(),
                steps.join(";"),
                a.nucleus_count.to_string(),
                a.nucleus_area.to_string(),
                a.artefact_area.to_string(),
                b.nucleus_count.to_string(),
                b.nucleus_area.to_string(),
                b.artefact_area.to_string(),
                expected.to_string(),
            ])?;
        }
    }
    manifest.flush().context("writing ladder manifest")?;
    Ok(Outcome::Clean)
}
