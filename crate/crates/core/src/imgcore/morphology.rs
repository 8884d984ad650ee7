//! Binary erosion, dilation, opening and closing with a square structuring
//! element of side `2 * radius + 1`.
//!
//! Windows are clipped to the image: pixels outside the raster take part in
//! neither erosion nor dilation. With this rule erosion and dilation stay
//! adjoint, so opening is anti-extensive, closing is extensive and both are
//! idempotent, including along the border.

use super::raster::BinaryMask;

#[derive(Clone, Copy)]
enum Op {
    Erode,
    Dilate,
}

fn pass(src: &[bool], width: usize, height: usize, radius: usize, op: Op, horizontal: bool) -> Vec<bool> {
    let mut out = vec![false; src.len()];
    let (outer, inner) = if horizontal { (height, width) } else { (width, height) };
    let index = |o: usize, i: usize| if horizontal { o * width + i } else { i * width + o };
    for o in 0..outer {
        for i in 0..inner {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(inner - 1);
            let mut window = (lo..=hi).map(|j| src[index(o, j)]);
            out[index(o, i)] = match op {
                Op::Erode => window.all(|b| b),
                Op::Dilate => window.any(|b| b),
            };
        }
    }
    out
}

fn apply(mask: &BinaryMask, radius: usize, op: Op) -> BinaryMask {
    let (w, h) = mask.dims();
    let rows = pass(mask.bits(), w, h, radius, op, true);
    let bits = pass(&rows, w, h, radius, op, false);
    BinaryMask::new(w, h, bits).expect("dimensions preserved")
}

pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    apply(mask, radius, Op::Erode)
}

pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    apply(mask, radius, Op::Dilate)
}

/// Erosion followed by dilation; removes specks smaller than the element.
pub fn morph_open(mask: &BinaryMask, radius: usize) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

/// Dilation followed by erosion; fills holes smaller than the element.
pub fn morph_close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    erode(&dilate(mask, radius), radius)
}
