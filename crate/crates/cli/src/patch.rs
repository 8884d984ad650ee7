use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phirm::io::{read_raw, write_gray_png};
use phirm::patches::{gen_patches, EdgePolicy, PatchGrid};

use crate::util::{csv_writer, ensure_dir, expand_inputs, file_stem, usage, Outcome};

#[derive(Args)]
pub struct PatchesArgs {
    /// Input files or glob patterns (8- or 16-bit grayscale).
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 256)]
    side: usize,
    #[arg(long, default_value_t = 256)]
    stride: usize,
    /// Source windows are side * zoom pixels, averaged down to side.
    #[arg(long, default_value_t = 1.0)]
    zoom: f64,
    /// anchor-to-edge or drop-partial.
    #[arg(long, default_value = "anchor-to-edge")]
    policy: String,
}

pub fn run(args: PatchesArgs) -> anyhow::Result<Outcome> {
    let edge_policy: EdgePolicy = args.policy.parse().map_err(|e: phirm::Error| usage(e.to_string()))?;
    let grid = PatchGrid {
        patch_side: args.side,
        stride: args.stride,
        edge_policy,
        zoom: args.zoom,
    };
    grid.validate()?;
    let inputs = expand_inputs(&args.inputs)?;
    ensure_dir(&args.out)?;
    let mut manifest = csv_writer(&args.out.join("manifest.csv"))?;
    manifest.write_record(["source", "file", "row", "col", "x", "y", "crop_side", "patch_side"])?;
    for src in inputs {
        let loaded = read_raw(&src)?;
        let patches =
            gen_patches(&loaded.raw, &grid).with_context(|| format!("cutting patches from {}", src.display()))?;
        let stem = file_stem(&src);
        for p in patches {
            let name = format!("{stem}_r{}_c{}.png", p.row, p.col);
            write_gray_png(&args.out.join(&name), &p.image)?;
            manifest.write_record([
                src.display().to_string(),
                name,
                p.row.to_string(),
                p.col.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                grid.crop_side().to_string(),
                grid.patch_side.to_string(),
            ])?;
        }
    }
    manifest.flush().context("writing patch manifest")?;
    Ok(Outcome::Clean)
}
