use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Subcommand};
use phirm::imgcore::otsu_threshold;
use phirm::io::{read_gray, read_gray_normalized, read_mask, write_gray_png, write_mask_png};
use phirm::maskgen::{
    apply_mask, extract_spa_mask, gen_irregular_mask, gen_rect_mask, sample_strokes, spa_threshold, IrregularMaskSpec,
    RectMaskSpec, DEFAULT_FILL, DEFAULT_MORPH_RADIUS, DEFAULT_SPA_MULTIPLIER,
};

use crate::util::{csv_writer, ensure_dir, expand_inputs, file_stem, resolve_seed, Outcome};

#[derive(Subcommand)]
pub enum MaskCommand {
    /// SPA masks from CFP-channel images (8- or 16-bit).
    Extract(ExtractArgs),
    /// Solid rectangles covering a fraction range of the image.
    Rect(RectArgs),
    /// Free-form brush-stroke masks.
    Irregular(IrregularArgs),
    /// Paint a mask onto an image.
    Apply(ApplyArgs),
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Input files or glob patterns.
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SPA_MULTIPLIER)]
    multiplier: f64,
    #[arg(long, default_value_t = DEFAULT_MORPH_RADIUS)]
    morph_radius: usize,
}

#[derive(Args)]
pub struct RectArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed of the first mask; mask i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 256)]
    side: usize,
    #[arg(long, default_value_t = 0.1)]
    lo: f64,
    #[arg(long, default_value_t = 0.2)]
    hi: f64,
}

#[derive(Args)]
pub struct IrregularArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed of the first mask; mask i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 256)]
    side: usize,
    #[arg(long, default_value_t = 4)]
    min_vertices: usize,
    #[arg(long, default_value_t = 12)]
    max_vertices: usize,
    #[arg(long, default_value_t = 1)]
    min_strokes: usize,
    #[arg(long, default_value_t = 4)]
    max_strokes: usize,
    #[arg(long, default_value_t = 10)]
    min_brush_width: usize,
    #[arg(long, default_value_t = 60)]
    max_brush_width: usize,
    /// Radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    max_angle_step: f64,
    #[arg(long, default_value_t = 10.0)]
    min_segment_length: f64,
    #[arg(long, default_value_t = 60.0)]
    max_segment_length: f64,
}

#[derive(Args)]
pub struct ApplyArgs {
    image: PathBuf,
    mask: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FILL)]
    fill: u8,
}

pub fn run(cmd: MaskCommand) -> anyhow::Result<Outcome> {
    match cmd {
        MaskCommand::Extract(a) => extract(a),
        MaskCommand::Rect(a) => rect(a),
        MaskCommand::Irregular(a) => irregular(a),
        MaskCommand::Apply(a) => {
            let img = read_gray(&a.image)?;
            let mask = read_mask(&a.mask)?;
            write_gray_png(&a.out, &apply_mask(&img, &mask, a.fill)?)?;
            Ok(Outcome::Clean)
        }
    }
}

fn extract(args: ExtractArgs) -> anyhow::Result<Outcome> {
    let inputs = expand_inputs(&args.inputs)?;
    ensure_dir(&args.out)?;
    let mut manifest = csv_writer(&args.out.join("manifest.csv"))?;
    manifest.write_record([
        "source",
        "file",
        "otsu",
        "threshold",
        "multiplier",
        "morph_radius",
        "fraction",
    ])?;
    for src in inputs {
        let cfp = read_gray_normalized(&src)?;
        let mask = extract_spa_mask(&cfp, args.multiplier, args.morph_radius)?;
        let name = format!("{}_mask.png", file_stem(&src));
        write_mask_png(&args.out.join(&name), &mask)?;
        manifest.write_record([
            src.display().to_string(),
            name,
            otsu_threshold(&cfp).to_string(),
            spa_threshold(&cfp, args.multiplier)?.to_string(),
            args.multiplier.to_string(),
            args.morph_radius.to_string(),
            mask.fraction().to_string(),
        ])?;
    }
    manifest.flush().context("writing mask manifest")?;
    Ok(Outcome::Clean)
}

fn rect(args: RectArgs) -> anyhow::Result<Outcome> {
    let base = resolve_seed(args.seed);
    ensure_dir(&args.out)?;
    let mut manifest = csv_writer(&args.out.join("manifest.csv"))?;
    manifest.write_record([
        "file",
        "seed",
        "fraction",
        "x",
        "y",
        "width",
        "height",
        "image_side",
        "lo",
        "hi",
    ])?;
    for i in 0..args.count {
        let spec = RectMaskSpec {
            image_side: args.side,
            area_fraction_lo: args.lo,
            area_fraction_hi: args.hi,
            seed: base.wrapping_add(i as u64),
        };
        let mask = gen_rect_mask(&spec)?;
        let (x0, y0, x1, y1) = mask.bounding_box().expect("rectangle masks are non-empty");
        let name = format!("rect_{i:05}.png");
        write_mask_png(&args.out.join(&name), &mask)?;
        manifest.write_record([
            name,
            spec.seed.to_string(),
            mask.fraction().to_string(),
            x0.to_string(),
            y0.to_string(),
            (x1 - x0 + 1).to_string(),
            (y1 - y0 + 1).to_string(),
            args.side.to_string(),
            args.lo.to_string(),
            args.hi.to_string(),
        ])?;
    }
    manifest.flush().context("writing mask manifest")?;
    Ok(Outcome::Clean)
}

fn irregular(args: IrregularArgs) -> anyhow::Result<Outcome> {
    let base = resolve_seed(args.seed);
    ensure_dir(&args.out)?;
    let template = IrregularMaskSpec {
        image_side: args.side,
        min_vertices: args.min_vertices,
        max_vertices: args.max_vertices,
        min_strokes: args.min_strokes,
        max_strokes: args.max_strokes,
        min_brush_width: args.min_brush_width,
        max_brush_width: args.max_brush_width,
        max_angle_step: args.max_angle_step,
        min_segment_length: args.min_segment_length,
        max_segment_length: args.max_segment_length,
        seed: base,
    };
    template.validate()?;
    let spec_json = serde_json::to_string(&IrregularMaskSpec {
        seed: 0,
        ..template.clone()
    })?;
    let mut manifest = csv_writer(&args.out.join("manifest.csv"))?;
    manifest.write_record(["file", "seed", "fraction", "strokes", "spec"])?;
    for i in 0..args.count {
        let spec = IrregularMaskSpec {
            seed: base.wrapping_add(i as u64),
            ..template.clone()
        };
        let mask = gen_irregular_mask(&spec)?;
        let name = format!("irregular_{i:05}.png");
        write_mask_png(&args.out.join(&name), &mask)?;
        manifest.write_record([
            name,
            spec.seed.to_string(),
            mask.fraction().to_string(),
            sample_strokes(&spec)?.len().to_string(),
            spec_json.clone(),
        ])?;
    }
    manifest.flush().context("writing mask manifest")?;
    Ok(Outcome::Clean)
}
