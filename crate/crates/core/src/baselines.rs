//! Pixel-fidelity reference metrics: MSE, PSNR and SSIM.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::imgcore::GrayImage;

const PEAK: f64 = 255.0;

/// SSIM parameters: 11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub mse: f64,
    /// `f64::INFINITY` for identical images; serialized as `"inf"`.
    #[serde(serialize_with = "serialize_psnr", deserialize_with = "deserialize_psnr")]
    pub psnr_db: f64,
    pub ssim: f64,
}

impl BaselineScores {
    pub fn compute(a: &GrayImage, b: &GrayImage) -> Result<Self> {
        let mse = mse(a, b)?;
        Ok(Self {
            mse,
            psnr_db: psnr_from_mse(mse),
            ssim: ssim(a, b)?,
        })
    }
}

/// PSNR as text: `inf` for the identical-image sentinel, otherwise the shortest
/// round-trip decimal.
pub fn format_psnr(db: f64) -> String {
    if db == f64::INFINITY {
        "inf".to_string()
    } else {
        db.to_string()
    }
}

fn serialize_psnr<S: Serializer>(db: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if db.is_finite() {
        s.serialize_f64(*db)
    } else {
        s.serialize_str(&format_psnr(*db))
    }
}

fn deserialize_psnr<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Repr::Text(t) => Err(serde::de::Error::custom(format!("unexpected psnr value {t:?}"))),
    }
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&p, &q)| {
            let d = u64::from(p.abs_diff(q));
            d * d
        })
        .sum();
    Ok(sum as f64 / a.len() as f64)
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when the images match.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Gaussian-weighted local means over every fully contained window.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = kernel.iter().zip(&line[x..x + SSIM_WINDOW]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel.iter().enumerate().map(|(i, k)| k * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity over all valid 11x11 Gaussian windows (no
/// padding), dynamic range 255.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let kernel = gaussian_kernel();
    let fa: Vec<f64> = a.pixels().iter().map(|&p| f64::from(p)).collect();
    let fb: Vec<f64> = b.pixels().iter().map(|&p| f64::from(p)).collect();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();

    let mu_a = filter_valid(&fa, w, h, &kernel);
    let mu_b = filter_valid(&fb, w, h, &kernel);
    let aa = filter_valid(&prod(&fa, &fa), w, h, &kernel);
    let bb = filter_valid(&prod(&fb, &fb), w, h, &kernel);
    let ab = filter_valid(&prod(&fa, &fb), w, h, &kernel);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = aa[i] - ma * ma;
            let var_b = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2))
        })
        .sum();
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, f: impl FnMut(usize, usize) -> u8) -> GrayImage {
        GrayImage::from_fn(w, h, f).unwrap()
    }

    /// Direct per-window SSIM with a freshly built 2-D Gaussian.
    fn ssim_oracle(a: &GrayImage, b: &GrayImage) -> f64 {
        let r = 5isize;
        let mut weights = vec![];
        for dy in -r..=r {
            for dx in -r..=r {
                weights.push((-((dx * dx + dy * dy) as f64) / (2.0 * 1.5 * 1.5)).exp());
            }
        }
        let norm: f64 = weights.iter().sum();
        let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
        let (w, h) = a.dims();
        let mut acc = 0.0;
        let mut count = 0;
        for cy in 5..h - 5 {
            for cx in 5..w - 5 {
                let (mut ma, mut mb) = (0.0, 0.0);
                let mut k = 0;
                for y in cy - 5..=cy + 5 {
                    for x in cx - 5..=cx + 5 {
                        ma += weights[k] / norm * a.get(x, y) as f64;
                        mb += weights[k] / norm * b.get(x, y) as f64;
                        k += 1;
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                k = 0;
                for y in cy - 5..=cy + 5 {
                    for x in cx - 5..=cx + 5 {
                        let (da, db) = (a.get(x, y) as f64 - ma, b.get(x, y) as f64 - mb);
                        va += weights[k] / norm * da * da;
                        vb += weights[k] / norm * db * db;
                        cov += weights[k] / norm * da * db;
                        k += 1;
                    }
                }
                acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        acc / count as f64
    }

    fn pattern() -> GrayImage {
        img(32, 24, |x, y| if ((x / 4) + (y / 3)) % 2 == 0 { 230 } else { 20 })
    }

    #[test]
    fn mse_examples() {
        let a = img(4, 4, |x, y| (x * 10 + y) as u8);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let zero = GrayImage::filled(4, 4, 0).unwrap();
        let full = GrayImage::filled(4, 4, 255).unwrap();
        assert_eq!(mse(&zero, &full).unwrap(), 65025.0);
        let shifted = img(4, 4, |x, y| (x * 10 + y) as u8 + 1);
        assert_eq!(mse(&a, &shifted).unwrap(), 1.0);
    }

    #[test]
    fn psnr_examples() {
        let a = img(4, 4, |x, y| (x * 10 + y) as u8);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let zero = GrayImage::filled(4, 4, 0).unwrap();
        let full = GrayImage::filled(4, 4, 255).unwrap();
        assert_eq!(psnr(&zero, &full).unwrap(), 0.0);
        let shifted = img(4, 4, |x, y| (x * 10 + y) as u8 + 1);
        assert!((psnr(&a, &shifted).unwrap() - 48.130803608679).abs() < 1e-9);
    }

    #[test]
    fn ssim_identity_and_window_error() {
        let a = pattern();
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let small = GrayImage::filled(10, 20, 3).unwrap();
        assert!(matches!(ssim(&small, &small), Err(Error::InvalidParameter(_))));
        let other = GrayImage::filled(32, 25, 3).unwrap();
        assert!(matches!(ssim(&a, &other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let a = GrayImage::filled(16, 16, 100).unwrap();
        let b = GrayImage::filled(16, 16, 110).unwrap();
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = (2.0 * 100.0 * 110.0 + c1) / (100.0f64.powi(2) + 110.0f64.powi(2) + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ssim_of_inverted_pattern_matches_oracle() {
        let a = pattern();
        let inv = img(32, 24, |x, y| 255 - a.get(x, y));
        let got = ssim(&a, &inv).unwrap();
        let want = ssim_oracle(&a, &inv);
        assert!(got < 0.0);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        // Independent reference: scikit-image structural_similarity with
        // gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
        // data_range=255.
        assert!((got - -0.9730023917542105).abs() < 1e-9, "{got}");
    }

    fn arb_pair() -> impl Strategy<Value = (GrayImage, GrayImage)> {
        (11usize..24, 11usize..24).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(any::<u8>(), w * h),
                proptest::collection::vec(any::<u8>(), w * h),
            )
                .prop_map(move |(p, q)| (GrayImage::new(w, h, p).unwrap(), GrayImage::new(w, h, q).unwrap()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn metrics_symmetric_and_bounded((a, b) in arb_pair()) {
            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
            prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
            prop_assert_eq!(ssim(&a, &a).unwrap(), 1.0);
            prop_assert!((ab - ssim_oracle(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn psnr_decreases_with_uniform_error(base in 0u8..100, d1 in 1u8..70, d2 in 1u8..70) {
            prop_assume!(d1 != d2);
            let a = GrayImage::filled(4, 4, base).unwrap();
            let p1 = psnr(&a, &GrayImage::filled(4, 4, base + d1).unwrap()).unwrap();
            let p2 = psnr(&a, &GrayImage::filled(4, 4, base + d2).unwrap()).unwrap();
            prop_assert_eq!(d1 < d2, p1 > p2);
        }
    }
}
