//! Rasterization of discs and thick line segments onto masks.
//!
//! A pixel `(x, y)` is covered when its center, at integer coordinates, lies
//! within the shape (boundary inclusive).

use crate::imgcore::BinaryMask;

fn clip_range(lo: f64, hi: f64, len: usize) -> std::ops::Range<usize> {
    let lo = lo.floor().max(0.0) as usize;
    let hi = hi.ceil().min(len as f64 - 1.0);
    if hi < 0.0 {
        return 0..0;
    }
    lo..hi as usize + 1
}

/// Pixel coordinates whose centers lie within `radius` of `(cx, cy)`, clipped
/// to a `width x height` raster, in raster order.
pub fn disc_pixels(cx: f64, cy: f64, radius: f64, width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in clip_range(cy - radius, cy + radius, height) {
        for x in clip_range(cx - radius, cx + radius, width) {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= radius * radius {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn fill_disc(mask: &mut BinaryMask, cx: f64, cy: f64, radius: f64) {
    for (x, y) in disc_pixels(cx, cy, radius, mask.width(), mask.height()) {
        mask.set(x, y, true);
    }
}

/// Squared distance from `p` to the segment `a`-`b`.
fn segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    dx * dx + dy * dy
}

/// Covers every pixel within `radius` of the segment (a capsule).
pub fn fill_thick_segment(mask: &mut BinaryMask, a: (f64, f64), b: (f64, f64), radius: f64) {
    let xs = clip_range(a.0.min(b.0) - radius, a.0.max(b.0) + radius, mask.width());
    let ys = clip_range(a.1.min(b.1) - radius, a.1.max(b.1) + radius, mask.height());
    for y in ys {
        for x in xs.clone() {
            if segment_dist2((x as f64, y as f64), a, b) <= radius * radius {
                mask.set(x, y, true);
            }
        }
    }
}
