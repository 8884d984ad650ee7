//! 8-connected component labeling and per-component intensity statistics.

use serde::{Deserialize, Serialize};

use super::raster::{BinaryMask, GrayImage, LabelMap};
use crate::error::{Error, Result};

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        // slot 0 is unused so provisional labels start at 1
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels 8-connected foreground regions.
///
/// Labels are dense (`1..=K`) and assigned in raster-scan order of each
/// component's first pixel.
pub fn connected_components(mask: &BinaryMask) -> LabelMap {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let mut provisional = vec![0u32; bits.len()];
    let mut sets = DisjointSet::new();

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !bits[i] {
                continue;
            }
            // Already-visited neighbours: W, NW, N, NE.
            let mut neighbours = [0u32; 4];
            if x > 0 {
                neighbours[0] = provisional[i - 1];
            }
            if y > 0 {
                let up = i - w;
                if x > 0 {
                    neighbours[1] = provisional[up - 1];
                }
                neighbours[2] = provisional[up];
                if x + 1 < w {
                    neighbours[3] = provisional[up + 1];
                }
            }
            let mut label = 0;
            for &n in neighbours.iter().filter(|&&n| n != 0) {
                if label == 0 {
                    label = n;
                } else {
                    sets.union(label, n);
                }
            }
            provisional[i] = if label == 0 { sets.make() } else { label };
        }
    }

    let mut remap = vec![0u32; sets.parent.len()];
    let mut count = 0u32;
    let labels = provisional
        .iter()
        .map(|&p| {
            if p == 0 {
                return 0;
            }
            let root = sets.find(p) as usize;
            if remap[root] == 0 {
                count += 1;
                remap[root] = count;
            }
            remap[root]
        })
        .collect();

    LabelMap {
        width: w,
        height: h,
        labels,
        count,
    }
}

/// Area and intensity summary of one labeled component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub label: u32,
    pub area: u64,
    pub mean: f64,
    pub max: u8,
}

/// One record per component, ordered by label, measured on `img`.
pub fn component_stats(labels: &LabelMap, img: &GrayImage) -> Result<Vec<ComponentStats>> {
    if labels.dims() != img.dims() {
        return Err(Error::mismatch(labels.dims(), img.dims()));
    }
    let k = labels.count() as usize;
    let mut area = vec![0u64; k];
    let mut sum = vec![0u64; k];
    let mut max = vec![0u8; k];
    for (&l, &p) in labels.labels().iter().zip(img.pixels()) {
        if l == 0 {
            continue;
        }
        let c = l as usize - 1;
        area[c] += 1;
        sum[c] += u64::from(p);
        max[c] = max[c].max(p);
    }
    Ok((0..k)
        .map(|c| ComponentStats {
            label: c as u32 + 1,
            area: area[c],
            mean: sum[c] as f64 / area[c] as f64,
            max: max[c],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_has_no_components() {
        let lm = connected_components(&BinaryMask::empty(4, 3).unwrap());
        assert_eq!(lm.count(), 0);
        assert!(lm.labels().iter().all(|&l| l == 0));
        let img = GrayImage::filled(4, 3, 9).unwrap();
        assert!(component_stats(&lm, &img).unwrap().is_empty());
    }

    #[test]
    fn diagonal_touch_is_one_component() {
        let mut m = BinaryMask::empty(3, 3).unwrap();
        m.set(0, 0, true);
        m.set(1, 1, true);
        let lm = connected_components(&m);
        assert_eq!(lm.count(), 1);
        assert_eq!(lm.get(0, 0), lm.get(1, 1));
    }

    #[test]
    fn u_shape_merges_and_labels_follow_raster_order() {
        // Two arms joined at the bottom, plus a later isolated pixel.
        let rows = ["#.#..", "#.#.#", "###.."];
        let m = BinaryMask::from_fn(5, 3, |x, y| rows[y].as_bytes()[x] == b'#').unwrap();
        let lm = connected_components(&m);
        assert_eq!(lm.count(), 2);
        assert_eq!(lm.get(0, 0), 1);
        assert_eq!(lm.get(2, 0), 1);
        assert_eq!(lm.get(4, 1), 2);
    }

    #[test]
    fn stats_over_a_four_pixel_component() {
        let m = BinaryMask::from_fn(3, 3, |x, y| x < 2 && y < 2).unwrap();
        let img = GrayImage::new(3, 3, vec![100, 100, 0, 200, 200, 0, 0, 0, 0]).unwrap();
        let stats = component_stats(&connected_components(&m), &img).unwrap();
        assert_eq!(
            stats,
            vec![ComponentStats {
                label: 1,
                area: 4,
                mean: 150.0,
                max: 200
            }]
        );
    }

    #[test]
    fn single_saturated_pixel() {
        let mut m = BinaryMask::empty(2, 2).unwrap();
        m.set(1, 1, true);
        let img = GrayImage::new(2, 2, vec![0, 0, 0, 255]).unwrap();
        let stats = component_stats(&connected_components(&m), &img).unwrap();
        assert_eq!(stats[0].area, 1);
        assert_eq!(stats[0].mean, 255.0);
        assert_eq!(stats[0].max, 255);
    }

    #[test]
    fn stats_reject_dimension_mismatch() {
        let lm = connected_components(&BinaryMask::empty(4, 4).unwrap());
        let img = GrayImage::filled(4, 5, 0).unwrap();
        assert!(matches!(
            component_stats(&lm, &img),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
