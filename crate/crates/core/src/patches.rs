//! Sliding-window patch extraction from full-frame micrographs.
//!
//! Windows are visited row-major (left to right, top to bottom). Each window is
//! optionally downsampled and then min-max normalized to 0..=255 on its own.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{normalize_minmax, normalize_minmax_real, GrayImage, RawImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgePolicy {
    /// Add a final window flush with the far edge, so that every pixel is
    /// covered whenever `stride <= patch_side`.
    AnchorToEdge,
    /// Only emit windows that fit on the regular stride grid.
    DropPartial,
}

impl std::str::FromStr for EdgePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchor-to-edge" | "anchor" => Ok(Self::AnchorToEdge),
            "drop-partial" | "drop" => Ok(Self::DropPartial),
            other => Err(Error::InvalidParameter(format!("unknown edge policy {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub patch_side: usize,
    pub stride: usize,
    pub edge_policy: EdgePolicy,
    /// Source windows are `round(patch_side * zoom)` pixels wide and are
    /// downsampled to `patch_side`.
    pub zoom: f64,
}

impl Default for PatchGrid {
    fn default() -> Self {
        Self {
            patch_side: 256,
            stride: 256,
            edge_policy: EdgePolicy::AnchorToEdge,
            zoom: 1.0,
        }
    }
}

impl PatchGrid {
    pub fn validate(&self) -> Result<()> {
        if self.patch_side == 0 || self.stride == 0 {
            return Err(Error::InvalidParameter("patch_side and stride must be >= 1".into()));
        }
        if !(self.zoom >= 1.0 && self.zoom.is_finite()) {
            return Err(Error::InvalidParameter(format!("zoom must be >= 1, got {}", self.zoom)));
        }
        Ok(())
    }

    /// Side of the source window in input pixels.
    pub fn crop_side(&self) -> usize {
        (self.patch_side as f64 * self.zoom).round() as usize
    }

    /// Window origins along one axis of length `len`.
    pub fn offsets(&self, len: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let crop = self.crop_side();
        if len < crop {
            return Err(Error::InvalidParameter(format!(
                "axis of {len} px is smaller than the {crop} px crop window"
            )));
        }
        let mut out: Vec<usize> = (0..=len - crop).step_by(self.stride).collect();
        if self.edge_policy == EdgePolicy::AnchorToEdge && out.last() != Some(&(len - crop)) {
            out.push(len - crop);
        }
        Ok(out)
    }

    /// Closed-form window count for a `width x height` input.
    pub fn patch_count(&self, width: usize, height: usize) -> Result<usize> {
        let per_axis = |len: usize| -> Result<usize> {
            self.validate()?;
            let crop = self.crop_side();
            if len < crop {
                return Err(Error::InvalidParameter(format!(
                    "axis of {len} px is smaller than {crop}"
                )));
            }
            let regular = (len - crop) / self.stride + 1;
            let extra = self.edge_policy == EdgePolicy::AnchorToEdge && !(len - crop).is_multiple_of(self.stride);
            Ok(regular + usize::from(extra))
        };
        Ok(per_axis(width)? * per_axis(height)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub row: usize,
    pub col: usize,
    /// Top-left corner of the source window.
    pub x: usize,
    pub y: usize,
    pub image: GrayImage,
}

/// Averages a `crop x crop` window down to `side x side`, weighting each source
/// pixel by its fractional overlap with the destination pixel's footprint.
fn downsample(raw: &RawImage, x0: usize, y0: usize, crop: usize, side: usize) -> Vec<f64> {
    let scale = crop as f64 / side as f64;
    // per-axis (source index, weight) lists, shared by rows and columns
    let spans: Vec<Vec<(usize, f64)>> = (0..side)
        .map(|i| {
            let (lo, hi) = (i as f64 * scale, (i + 1) as f64 * scale);
            (lo.floor() as usize..(hi.ceil() as usize).min(crop))
                .map(|s| (s, (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0)))
                .filter(|&(_, w)| w > 0.0)
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(side * side);
    for ys in &spans {
        for xs in &spans {
            let mut acc = 0.0;
            let mut weight = 0.0;
            for &(sy, wy) in ys {
                for &(sx, wx) in xs {
                    acc += wx * wy * f64::from(raw.get(x0 + sx, y0 + sy));
                    weight += wx * wy;
                }
            }
            out.push(acc / weight);
        }
    }
    out
}

fn extract(raw: &RawImage, grid: &PatchGrid, x: usize, y: usize) -> GrayImage {
    let crop = grid.crop_side();
    let side = grid.patch_side;
    if crop == side {
        let window = RawImage::from_fn(side, side, |dx, dy| raw.get(x + dx, y + dy)).expect("nonzero side");
        normalize_minmax(&window)
    } else {
        normalize_minmax_real(side, side, &downsample(raw, x, y, crop, side))
    }
}

/// Cuts `raw` into normalized patches following `grid`.
pub fn gen_patches(raw: &RawImage, grid: &PatchGrid) -> Result<Vec<Patch>> {
    let xs = grid.offsets(raw.width())?;
    let ys = grid.offsets(raw.height())?;
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for (row, &y) in ys.iter().enumerate() {
        for (col, &x) in xs.iter().enumerate() {
            out.push(Patch {
                row,
                col,
                x,
                y,
                image: extract(raw, grid, x, y),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(policy: EdgePolicy) -> PatchGrid {
        PatchGrid {
            edge_policy: policy,
            ..Default::default()
        }
    }

    #[test]
    fn full_frame_offsets() {
        let anchor = grid(EdgePolicy::AnchorToEdge).offsets(2160).unwrap();
        assert_eq!(anchor.len(), 9);
        assert_eq!(*anchor.last().unwrap(), 1904);
        assert_eq!(grid(EdgePolicy::DropPartial).offsets(2160).unwrap().len(), 8);
        assert_eq!(grid(EdgePolicy::AnchorToEdge).patch_count(2160, 2160).unwrap(), 81);
        assert_eq!(grid(EdgePolicy::DropPartial).patch_count(2160, 2160).unwrap(), 64);
    }

    #[test]
    fn exact_fit_yields_one_normalized_patch() {
        let raw = RawImage::from_fn(256, 256, |x, y| (x * 300 + y * 7) as u32).unwrap();
        let patches = gen_patches(&raw, &PatchGrid::default()).unwrap();
        assert_eq!(patches.len(), 1);
        assert_eq!(patches[0].image, normalize_minmax(&raw));
    }

    #[test]
    fn too_small_input_is_rejected() {
        let raw = RawImage::from_fn(100, 300, |_, _| 0).unwrap();
        assert!(gen_patches(&raw, &PatchGrid::default()).is_err());
        let zoomed = PatchGrid {
            zoom: 1.5,
            ..Default::default()
        };
        let raw = RawImage::from_fn(300, 300, |_, _| 0).unwrap();
        assert!(gen_patches(&raw, &zoomed).is_err());
    }

    #[test]
    fn zoom_downsamples_by_area_average() {
        // each 2x2 block holds 10k and 10k + 1 side by side
        let raw = RawImage::from_fn(8, 8, |x, y| (x / 2 + 4 * (y / 2)) as u32 * 10 + (x % 2) as u32).unwrap();
        let g = PatchGrid {
            patch_side: 4,
            stride: 4,
            edge_policy: EdgePolicy::DropPartial,
            zoom: 2.0,
        };
        let patches = gen_patches(&raw, &g).unwrap();
        assert_eq!(patches.len(), 1);
        // block means are 10*k + 0.5 for k = 0..16, normalized: round(255*k/15)
        let expected: Vec<u8> = (0..16).map(|k| (255.0 * k as f64 / 15.0).round() as u8).collect();
        assert_eq!(patches[0].image.pixels(), expected.as_slice());
    }

    proptest! {
        #[test]
        fn count_formula_matches_enumeration_and_covers(
            w in 1usize..120, h in 1usize..120, side in 1usize..40, stride in 1usize..50, anchor in any::<bool>()
        ) {
            prop_assume!(w >= side && h >= side);
            let policy = if anchor { EdgePolicy::AnchorToEdge } else { EdgePolicy::DropPartial };
            let g = PatchGrid { patch_side: side, stride, edge_policy: policy, zoom: 1.0 };
            let raw = RawImage::from_fn(w, h, |x, y| (x * 31 + y * 17) as u32 % 97).unwrap();
            let patches = gen_patches(&raw, &g).unwrap();
            prop_assert_eq!(patches.len(), g.patch_count(w, h).unwrap());
            // windows only tile the image when they do not skip pixels
            if anchor && stride <= side {
                let mut covered = vec![false; w * h];
                for p in &patches {
                    for y in p.y..p.y + side {
                        for x in p.x..p.x + side {
                            covered[y * w + x] = true;
                        }
                    }
                }
                prop_assert!(covered.iter().all(|&c| c));
            }
            for p in &patches {
                let px = p.image.pixels();
                let constant = px.iter().all(|&v| v == px[0]);
                prop_assert!(constant && px[0] == 0 || px.contains(&0) && px.contains(&255));
            }
        }
    }
}
