//! Mask families: sample-preparation-artefact (SPA) masks extracted from CFP
//! channel images, rectangular benchmark masks and free-form brush-stroke
//! masks.

use std::f64::consts::{FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use crate::draw::{fill_disc, fill_thick_segment};
use crate::error::{Error, Result};
use crate::imgcore::{binarize, morph_close, morph_open, otsu_threshold, BinaryMask, GrayImage};
use crate::rng::Rng;

pub const DEFAULT_SPA_MULTIPLIER: f64 = 0.7;
pub const DEFAULT_MORPH_RADIUS: usize = 1;
pub const DEFAULT_FILL: u8 = 255;

/// The four benchmark area classes, as fractions of the image area.
pub const AREA_CLASSES: [(f64, f64); 4] = [(0.1, 0.2), (0.2, 0.3), (0.3, 0.4), (0.4, 0.5)];

const RECT_ATTEMPTS: usize = 1000;

/// Otsu threshold scaled by `multiplier` and rounded to nearest.
pub fn spa_threshold(cfp: &GrayImage, multiplier: f64) -> Result<u8> {
    if !(multiplier > 0.0 && multiplier <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "multiplier must lie in (0, 1], got {multiplier}"
        )));
    }
    Ok((f64::from(otsu_threshold(cfp)) * multiplier).round() as u8)
}

/// Binarizes a CFP channel image at the lowered Otsu threshold, then opens and
/// closes the result.
pub fn extract_spa_mask(cfp: &GrayImage, multiplier: f64, morph_radius: usize) -> Result<BinaryMask> {
    if morph_radius == 0 {
        return Err(Error::InvalidParameter("morphology radius must be >= 1".into()));
    }
    let t = spa_threshold(cfp, multiplier)?;
    Ok(morph_close(&morph_open(&binarize(cfp, t), morph_radius), morph_radius))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectMaskSpec {
    pub image_side: usize,
    pub area_fraction_lo: f64,
    pub area_fraction_hi: f64,
    pub seed: u64,
}

impl RectMaskSpec {
    pub fn new(area_fraction_lo: f64, area_fraction_hi: f64, seed: u64) -> Self {
        Self {
            image_side: 256,
            area_fraction_lo,
            area_fraction_hi,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.area_fraction_lo, self.area_fraction_hi);
        if self.image_side == 0 {
            return Err(Error::InvalidParameter("image_side must be >= 1".into()));
        }
        if !(lo > 0.0 && lo < hi && hi <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "area fractions must satisfy 0 < lo < hi <= 0.5, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    fn admits(&self, w: usize, h: usize) -> bool {
        let side = self.image_side;
        if w == 0 || h == 0 || w > side || h > side {
            return false;
        }
        let frac = (w * h) as f64 / (side * side) as f64;
        (self.area_fraction_lo..=self.area_fraction_hi).contains(&frac)
    }
}

/// Axis-aligned rectangle `[x, x + width) x [y, y + height)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Draws the rectangle for `spec`.
///
/// The aspect ratio is uniform in `[0.5, 2]` and the target area uniform in
/// `[lo, hi] * side^2`; rounded sizes outside the range are redrawn. After
/// 1000 rejected draws a size is picked uniformly among all integer sizes that
/// satisfy the range, and the spec is infeasible if there are none.
pub fn sample_rect(spec: &RectMaskSpec) -> Result<Rect> {
    spec.validate()?;
    let side = spec.image_side;
    let total = (side * side) as f64;
    let mut rng = Rng::new(spec.seed);

    let mut size = None;
    for _ in 0..RECT_ATTEMPTS {
        let aspect = rng.uniform(0.5, 2.0);
        let area = rng.uniform(spec.area_fraction_lo, spec.area_fraction_hi) * total;
        let w = (area * aspect).sqrt().round() as usize;
        let h = (area / aspect).sqrt().round() as usize;
        if spec.admits(w, h) {
            size = Some((w, h));
            break;
        }
    }
    let (w, h) = match size {
        Some(s) => s,
        None => {
            let feasible: Vec<(usize, usize)> = (1..=side)
                .flat_map(|w| (1..=side).map(move |h| (w, h)))
                .filter(|&(w, h)| spec.admits(w, h))
                .collect();
            if feasible.is_empty() {
                return Err(Error::Infeasible(format!(
                    "no rectangle in a {side}x{side} image covers [{}, {}] of its area",
                    spec.area_fraction_lo, spec.area_fraction_hi
                )));
            }
            feasible[rng.below(feasible.len() as u64) as usize]
        }
    };
    let x = rng.below((side - w + 1) as u64) as usize;
    let y = rng.below((side - h + 1) as u64) as usize;
    Ok(Rect {
        x,
        y,
        width: w,
        height: h,
    })
}

pub fn gen_rect_mask(spec: &RectMaskSpec) -> Result<BinaryMask> {
    let r = sample_rect(spec)?;
    BinaryMask::from_fn(spec.image_side, spec.image_side, |x, y| {
        (r.x..r.x + r.width).contains(&x) && (r.y..r.y + r.height).contains(&y)
    })
}

/// Free-form brush-stroke mask parameters. Ranges are inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrregularMaskSpec {
    pub image_side: usize,
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub min_strokes: usize,
    pub max_strokes: usize,
    pub min_brush_width: usize,
    pub max_brush_width: usize,
    /// Largest turn between successive segments, radians.
    pub max_angle_step: f64,
    pub min_segment_length: f64,
    pub max_segment_length: f64,
    pub seed: u64,
}

impl Default for IrregularMaskSpec {
    fn default() -> Self {
        Self {
            image_side: 256,
            min_vertices: 4,
            max_vertices: 12,
            min_strokes: 1,
            max_strokes: 4,
            min_brush_width: 10,
            max_brush_width: 60,
            max_angle_step: FRAC_PI_4,
            min_segment_length: 10.0,
            max_segment_length: 60.0,
            seed: 0,
        }
    }
}

impl IrregularMaskSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.image_side == 0 {
            return bad("image_side must be >= 1");
        }
        if self.min_vertices < 1 || self.min_vertices > self.max_vertices {
            return bad("need 1 <= min_vertices <= max_vertices");
        }
        if self.min_strokes < 1 || self.min_strokes > self.max_strokes {
            return bad("need 1 <= min_strokes <= max_strokes");
        }
        if self.min_brush_width < 1 || self.min_brush_width > self.max_brush_width {
            return bad("need 1 <= min_brush_width <= max_brush_width");
        }
        if !(self.max_angle_step >= 0.0 && self.max_angle_step.is_finite()) {
            return bad("max_angle_step must be finite and >= 0");
        }
        if !(self.min_segment_length >= 0.0 && self.min_segment_length <= self.max_segment_length)
            || !self.max_segment_length.is_finite()
        {
            return bad("need 0 <= min_segment_length <= max_segment_length");
        }
        Ok(())
    }
}

/// One polyline stroke with its brush width.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stroke {
    pub vertices: Vec<(f64, f64)>,
    pub brush_width: usize,
}

/// Random walk of strokes: each starts at a uniform point with a uniform
/// heading, turns by at most `max_angle_step` per segment and is clamped to the
/// image.
pub fn sample_strokes(spec: &IrregularMaskSpec) -> Result<Vec<Stroke>> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let limit = (spec.image_side - 1) as f64;
    let strokes = rng.range_inclusive(spec.min_strokes as u64, spec.max_strokes as u64);
    Ok((0..strokes)
        .map(|_| {
            let n = rng.range_inclusive(spec.min_vertices as u64, spec.max_vertices as u64) as usize;
            let brush_width = rng.range_inclusive(spec.min_brush_width as u64, spec.max_brush_width as u64) as usize;
            let mut p = (rng.uniform(0.0, limit), rng.uniform(0.0, limit));
            let mut heading = rng.uniform(0.0, TAU);
            let mut vertices = vec![p];
            for _ in 1..n {
                heading += rng.uniform(-spec.max_angle_step, spec.max_angle_step);
                let len = rng.uniform(spec.min_segment_length, spec.max_segment_length);
                p = (
                    (p.0 + len * heading.cos()).clamp(0.0, limit),
                    (p.1 + len * heading.sin()).clamp(0.0, limit),
                );
                vertices.push(p);
            }
            Stroke { vertices, brush_width }
        })
        .collect())
}

pub fn render_strokes(side: usize, strokes: &[Stroke]) -> Result<BinaryMask> {
    let mut mask = BinaryMask::empty(side, side)?;
    for stroke in strokes {
        let r = stroke.brush_width as f64 / 2.0;
        for pair in stroke.vertices.windows(2) {
            fill_thick_segment(&mut mask, pair[0], pair[1], r);
        }
        // round joints
        for &(x, y) in &stroke.vertices {
            fill_disc(&mut mask, x, y, r);
        }
    }
    Ok(mask)
}

pub fn gen_irregular_mask(spec: &IrregularMaskSpec) -> Result<BinaryMask> {
    render_strokes(spec.image_side, &sample_strokes(spec)?)
}

/// Replaces masked pixels with `fill`.
pub fn apply_mask(img: &GrayImage, mask: &BinaryMask, fill: u8) -> Result<GrayImage> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            left: img.dims(),
            right: mask.dims(),
        });
    }
    let pixels = img
        .pixels()
        .iter()
        .zip(mask.bits())
        .map(|(&p, &m)| if m { fill } else { p })
        .collect();
    GrayImage::new(img.width(), img.height(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draw::fill_disc;
    use crate::imgcore::connected_components;
    use proptest::prelude::*;

    fn disc(cx: f64, cy: f64, r: f64) -> BinaryMask {
        let mut m = BinaryMask::empty(64, 48).unwrap();
        fill_disc(&mut m, cx, cy, r);
        m
    }

    /// Textured background (0..=10), a saturated-ish core of radius 8 at 200
    /// and a dim rim out to radius 10 at 60.
    fn blob_scene() -> GrayImage {
        let (core, rim) = (disc(30.0, 22.0, 8.0), disc(30.0, 22.0, 10.0));
        GrayImage::from_fn(64, 48, |x, y| {
            if core.get(x, y) {
                200
            } else if rim.get(x, y) {
                60
            } else {
                ((x * 3 + y * 5) % 11) as u8
            }
        })
        .unwrap()
    }

    #[test]
    fn threshold_is_scaled_and_rounded() {
        // 50/150 populations: Otsu picks 50, scaled by 0.7 gives 35
        let img = GrayImage::from_fn(10, 10, |x, _| if x < 5 { 50 } else { 150 }).unwrap();
        assert_eq!(otsu_threshold(&img), 50);
        assert_eq!(spa_threshold(&img, 0.7).unwrap(), 35);
        assert_eq!(spa_threshold(&img, 1.0).unwrap(), 50);
        let hundred = GrayImage::from_fn(10, 10, |x, _| if x < 5 { 100 } else { 230 }).unwrap();
        assert_eq!(otsu_threshold(&hundred), 100);
        assert_eq!(spa_threshold(&hundred, 0.7).unwrap(), 70);
        assert!(spa_threshold(&img, 0.0).is_err());
        assert!(spa_threshold(&img, 1.5).is_err());
    }

    #[test]
    fn unit_multiplier_is_plain_otsu_then_morphology() {
        let img = blob_scene();
        let plain = binarize(&img, otsu_threshold(&img));
        let expected = morph_close(&morph_open(&plain, 1), 1);
        assert_eq!(extract_spa_mask(&img, 1.0, 1).unwrap(), expected);
    }

    #[test]
    fn spa_mask_recovers_blob_footprint() {
        let img = blob_scene();
        // Otsu alone splits core from rim; the lowered threshold keeps the rim.
        assert_eq!(otsu_threshold(&img), 60);
        let shape = |m: &BinaryMask| morph_close(&morph_open(m, 1), 1);
        let mask = extract_spa_mask(&img, DEFAULT_SPA_MULTIPLIER, DEFAULT_MORPH_RADIUS).unwrap();
        assert_eq!(mask, shape(&disc(30.0, 22.0, 10.0)));
        let plain = extract_spa_mask(&img, 1.0, 1).unwrap();
        assert_eq!(plain, shape(&disc(30.0, 22.0, 8.0)));
    }

    #[test]
    fn rect_mask_in_range_and_deterministic() {
        let spec = RectMaskSpec::new(0.10, 0.20, 17);
        let a = gen_rect_mask(&spec).unwrap();
        let b = gen_rect_mask(&spec).unwrap();
        assert_eq!(a, b);
        assert!((0.10..=0.20).contains(&a.fraction()));
        let (x0, y0, x1, y1) = a.bounding_box().unwrap();
        assert_eq!((x1 - x0 + 1) * (y1 - y0 + 1), a.count());
        assert_eq!(connected_components(&a).count(), 1);
    }

    #[test]
    fn rect_spec_validation_and_infeasibility() {
        assert!(gen_rect_mask(&RectMaskSpec::new(0.3, 0.2, 0)).is_err());
        assert!(gen_rect_mask(&RectMaskSpec::new(0.4, 0.6, 0)).is_err());
        // fractions available in a 3x3 image are k/9; none lies in [0.30, 0.31]
        let tiny = RectMaskSpec {
            image_side: 3,
            area_fraction_lo: 0.30,
            area_fraction_hi: 0.31,
            seed: 1,
        };
        assert!(matches!(gen_rect_mask(&tiny), Err(Error::Infeasible(_))));
        // [0.40, 0.45] admits only 2x2 (4/9 = 0.444)
        let snug = RectMaskSpec {
            image_side: 3,
            area_fraction_lo: 0.40,
            area_fraction_hi: 0.45,
            seed: 1,
        };
        assert_eq!(gen_rect_mask(&snug).unwrap().count(), 4);
    }

    #[test]
    fn two_vertex_stroke_is_a_capped_segment() {
        let spec = IrregularMaskSpec {
            min_vertices: 2,
            max_vertices: 2,
            min_strokes: 1,
            max_strokes: 1,
            min_brush_width: 8,
            max_brush_width: 8,
            seed: 5,
            ..Default::default()
        };
        let strokes = sample_strokes(&spec).unwrap();
        assert_eq!(strokes.len(), 1);
        assert_eq!(strokes[0].vertices.len(), 2);
        let mask = gen_irregular_mask(&spec).unwrap();
        let mut capsule = BinaryMask::empty(256, 256).unwrap();
        fill_thick_segment(&mut capsule, strokes[0].vertices[0], strokes[0].vertices[1], 4.0);
        assert_eq!(mask, capsule);
        assert_eq!(connected_components(&mask).count(), 1);
    }

    #[test]
    fn irregular_mask_is_deterministic() {
        let spec = IrregularMaskSpec::with_seed(99);
        assert_eq!(gen_irregular_mask(&spec).unwrap(), gen_irregular_mask(&spec).unwrap());
        assert_ne!(
            gen_irregular_mask(&spec).unwrap(),
            gen_irregular_mask(&IrregularMaskSpec::with_seed(100)).unwrap()
        );
    }

    #[test]
    fn irregular_default_coverage_spans_benchmark_classes() {
        let fractions: Vec<f64> = (0..1000u64)
            .map(|s| gen_irregular_mask(&IrregularMaskSpec::with_seed(s)).unwrap().fraction())
            .collect();
        let lo = fractions.iter().copied().fold(1.0, f64::min);
        let hi = fractions.iter().copied().fold(0.0, f64::max);
        assert!(lo <= 0.05 && hi >= 0.5, "coverage spans [{lo}, {hi}]");
    }

    #[test]
    fn apply_mask_examples() {
        let img = blob_scene();
        assert_eq!(apply_mask(&img, &BinaryMask::empty(64, 48).unwrap(), 255).unwrap(), img);
        let full = BinaryMask::from_fn(64, 48, |_, _| true).unwrap();
        assert_eq!(
            apply_mask(&img, &full, 255).unwrap(),
            GrayImage::filled(64, 48, 255).unwrap()
        );
        assert!(apply_mask(&img, &BinaryMask::empty(4, 4).unwrap(), 0).is_err());
    }

    proptest! {
        #[test]
        fn lower_multiplier_never_shrinks_foreground(
            px in proptest::collection::vec(any::<u8>(), 16 * 16),
            m1 in 0.05f64..1.0,
            m2 in 0.05f64..1.0,
        ) {
            let img = GrayImage::new(16, 16, px).unwrap();
            let (lo, hi) = (m1.min(m2), m1.max(m2));
            let wide = binarize(&img, spa_threshold(&img, lo).unwrap());
            let narrow = binarize(&img, spa_threshold(&img, hi).unwrap());
            prop_assert!(narrow.is_subset_of(&wide));
        }

        #[test]
        fn apply_mask_changes_exactly_the_masked_pixels(seed in any::<u64>(), class in 0usize..4) {
            let (lo, hi) = AREA_CLASSES[class];
            let mask = gen_rect_mask(&RectMaskSpec::new(lo, hi, seed)).unwrap();
            let img = GrayImage::from_fn(256, 256, |x, y| ((x * 7 + y * 3) % 200) as u8).unwrap();
            let out = apply_mask(&img, &mask, 255).unwrap();
            let changed = img.pixels().iter().zip(out.pixels()).filter(|(a, b)| a != b).count();
            prop_assert_eq!(changed, mask.count());
            prop_assert_eq!(apply_mask(&out, &mask, 255).unwrap(), out);
        }
    }
}
