//! Intensity normalization, Otsu threshold selection and binarization.

use std::cmp::Ordering;

use super::raster::{BinaryMask, GrayImage, RawImage};

/// Min-max rescales `raw` onto 0..=255 with round-half-up.
///
/// A constant input has no range to stretch and maps to all zeros.
pub fn normalize_minmax(raw: &RawImage) -> GrayImage {
    let samples = raw.samples();
    let min = samples.iter().copied().min().unwrap_or(0);
    let max = samples.iter().copied().max().unwrap_or(0);
    let range = u64::from(max - min);
    let pixels = if range == 0 {
        vec![0; samples.len()]
    } else {
        samples
            .iter()
            .map(|&v| ((510 * u64::from(v - min) + range) / (2 * range)) as u8)
            .collect()
    };
    GrayImage::new(raw.width(), raw.height(), pixels).expect("dimensions come from a valid RawImage")
}

/// Real-valued counterpart of [`normalize_minmax`], used after resampling.
pub(crate) fn normalize_minmax_real(width: usize, height: usize, values: &[f64]) -> GrayImage {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let pixels = if !(range > 0.0) {
        vec![0; values.len()]
    } else {
        values
            .iter()
            .map(|&v| (255.0 * (v - min) / range).round().clamp(0.0, 255.0) as u8)
            .collect()
    };
    GrayImage::new(width, height, pixels).expect("caller passes a valid raster")
}

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    hist
}

/// Between-class variance at a threshold, kept as the exact fraction
/// `(s0*w1 - s1*w0)^2 / (w0*w1)` (proportional to the usual definition).
#[derive(Clone, Copy, Debug)]
struct Separation {
    num: u128,
    den: u128,
    approx: f64,
    exact: bool,
}

impl Separation {
    fn new(w0: u64, s0: u64, w1: u64, s1: u64) -> Self {
        if w0 == 0 || w1 == 0 {
            return Self {
                num: 0,
                den: 1,
                approx: 0.0,
                exact: true,
            };
        }
        let diff = (i128::from(s0) * i128::from(w1) - i128::from(s1) * i128::from(w0)).unsigned_abs();
        let den = u128::from(w0) * u128::from(w1);
        let approx = (diff as f64) * (diff as f64) / den as f64;
        match diff.checked_mul(diff) {
            Some(num) => Self {
                num,
                den,
                approx,
                exact: true,
            },
            None => Self {
                num: 0,
                den: 1,
                approx,
                exact: false,
            },
        }
    }

    fn compare(&self, other: &Self) -> Ordering {
        if !(self.exact && other.exact) {
            return self.approx.partial_cmp(&other.approx).unwrap_or(Ordering::Equal);
        }
        let (q1, r1) = (self.num / self.den, self.num % self.den);
        let (q2, r2) = (other.num / other.den, other.num % other.den);
        // r < den <= N^2 / 4, so the cross products fit in u128 whenever the
        // pixel count N fits in 32 bits.
        q1.cmp(&q2)
            .then_with(|| match (r1.checked_mul(other.den), r2.checked_mul(self.den)) {
                (Some(a), Some(b)) => a.cmp(&b),
                _ => {
                    let a = r1 as f64 / self.den as f64;
                    let b = r2 as f64 / other.den as f64;
                    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
                }
            })
    }
}

/// Otsu's threshold over the 256-bin histogram.
///
/// Returns the smallest `t` maximizing the between-class variance of the split
/// `{p <= t}` / `{p > t}`. The comparison is done in exact integer arithmetic so
/// that ties resolve deterministically. A constant image returns its value.
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let hist = histogram(img);
    otsu_from_histogram(&hist)
}

pub fn otsu_from_histogram(hist: &[u64; 256]) -> u8 {
    let occupied: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
    if occupied.len() <= 1 {
        return occupied.first().copied().unwrap_or(0) as u8;
    }

    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best_t = 0u8;
    let mut best = Separation::new(0, 0, total, total_sum);
    let (mut w0, mut s0) = (0u64, 0u64);
    for (t, &count) in hist.iter().enumerate() {
        w0 += count;
        s0 += t as u64 * count;
        let sep = Separation::new(w0, s0, total - w0, total_sum - s0);
        if sep.compare(&best) == Ordering::Greater {
            best = sep;
            best_t = t as u8;
        }
    }
    best_t
}

/// Foreground where the intensity is strictly above `t`.
pub fn binarize(img: &GrayImage, t: u8) -> BinaryMask {
    BinaryMask::new(img.width(), img.height(), img.pixels().iter().map(|&p| p > t).collect())
        .expect("dimensions come from a valid GrayImage")
}
