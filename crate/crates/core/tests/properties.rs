use std::collections::HashSet;

use phirm::baselines::ssim;
use phirm::imgcore::{
    binarize, component_stats, connected_components, histogram, normalize_minmax, otsu_threshold, BinaryMask,
    GrayImage, RawImage,
};
use phirm::synthval::{apply_manipulation, gen_scene, Manipulation};
use phirm::{phirm_score, summarize_phenotype, PhirmConfig};
use proptest::prelude::*;

/// Between-class variance as a float, for a threshold scan.
fn between_class(hist: &[u64; 256], t: usize) -> f64 {
    let (w0, w1): (u64, u64) = (hist[..=t].iter().sum(), hist[t + 1..].iter().sum());
    if w0 == 0 || w1 == 0 {
        return 0.0;
    }
    let s0: u64 = hist[..=t].iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let s1: u64 = hist[t + 1..]
        .iter()
        .enumerate()
        .map(|(v, &c)| (v + t + 1) as u64 * c)
        .sum();
    let (m0, m1) = (s0 as f64 / w0 as f64, s1 as f64 / w1 as f64);
    w0 as f64 * w1 as f64 * (m0 - m1).powi(2)
}

fn small_image() -> impl Strategy<Value = GrayImage> {
    (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h).prop_map(move |px| GrayImage::new(w, h, px).unwrap())
    })
}

fn small_mask() -> impl Strategy<Value = BinaryMask> {
    (1usize..20, 1usize..20).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<bool>(), w * h).prop_map(move |b| BinaryMask::new(w, h, b).unwrap())
    })
}

fn neighbours(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1i64..=1)
        .flat_map(|dy| (-1i64..=1).map(move |dx| (dx, dy)))
        .filter(|&d| d != (0, 0))
        .map(move |(dx, dy)| (x as i64 + dx, y as i64 + dy))
        .filter(move |&(nx, ny)| nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64)
        .map(|(nx, ny)| (nx as usize, ny as usize))
}

proptest! {
    #[test]
    fn normalized_output_spans_full_range(
        samples in proptest::collection::vec(0u32..65536, 2..200),
    ) {
        let raw = RawImage::new(samples.len(), 1, samples.clone()).unwrap();
        let out = normalize_minmax(&raw);
        let constant = samples.iter().all(|&s| s == samples[0]);
        if constant {
            prop_assert!(out.pixels().iter().all(|&p| p == 0));
        } else {
            prop_assert!(out.pixels().contains(&0) && out.pixels().contains(&255));
            for (i, j) in (0..samples.len()).flat_map(|i| (0..samples.len()).map(move |j| (i, j))) {
                if samples[i] <= samples[j] {
                    prop_assert!(out.pixels()[i] <= out.pixels()[j]);
                }
            }
        }
    }

    #[test]
    fn otsu_split_has_maximal_between_class_variance(img in small_image()) {
        let t = otsu_threshold(&img) as usize;
        let hist = histogram(&img);
        let best = between_class(&hist, t);
        for u in 0..256 {
            prop_assert!(between_class(&hist, u) <= best * (1.0 + 1e-12), "t={t} u={u}");
        }
        let fg = binarize(&img, t as u8);
        prop_assert_eq!(fg.count() as u64, hist[t + 1..].iter().sum::<u64>());
    }

    #[test]
    fn components_partition_the_foreground(mask in small_mask()) {
        let (w, h) = mask.dims();
        let labels = connected_components(&mask);
        let img = GrayImage::from_fn(w, h, |x, y| ((x * 31 + y * 17) % 256) as u8).unwrap();
        let stats = component_stats(&labels, &img).unwrap();
        prop_assert_eq!(stats.iter().map(|s| s.area).sum::<u64>(), mask.count() as u64);
        prop_assert_eq!(stats.len() as u32, labels.count());
        for y in 0..h {
            for x in 0..w {
                let l = labels.get(x, y);
                prop_assert_eq!(l != 0, mask.get(x, y));
                // neighbouring foreground pixels always share a label
                for (nx, ny) in neighbours(x, y, w, h) {
                    if l != 0 && mask.get(nx, ny) {
                        prop_assert_eq!(labels.get(nx, ny), l);
                    }
                }
            }
        }
        // and each label is one connected piece
        for label in 1..=labels.count() {
            let pixels: Vec<(usize, usize)> =
                (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| labels.get(x, y) == label).collect();
            let mut seen = HashSet::from([pixels[0]]);
            let mut stack = vec![pixels[0]];
            while let Some((x, y)) = stack.pop() {
                for n in neighbours(x, y, w, h) {
                    if labels.get(n.0, n.1) == label && seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
            prop_assert_eq!(seen.len(), pixels.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scenes_round_trip_for_any_seed(seed in any::<u64>(), count in 0usize..9) {
        let scene = gen_scene(seed, count, 256, 10).unwrap();
        let got = summarize_phenotype(&scene.image, &PhirmConfig::default());
        prop_assert_eq!(got, scene.expected_summary());
        prop_assert_eq!(got.nucleus_count, count as u64);
        prop_assert_eq!(phirm_score(&scene.image, &scene.image, &PhirmConfig::default()).unwrap().score, 1.0);
        prop_assert_eq!(ssim(&scene.image, &scene.image).unwrap(), 1.0);
    }

    #[test]
    fn manipulations_only_touch_their_footprint(
        seed in any::<u64>(),
        pick in 0usize..5,
        fraction in 0.05f64..0.6,
        erode in any::<bool>(),
    ) {
        let scene = gen_scene(seed, 5, 256, 10).unwrap();
        let m = if erode {
            Manipulation::ErodeNucleusArea { index: pick, fraction }
        } else {
            Manipulation::RemoveNucleus { index: pick }
        };
        let out = apply_manipulation(&scene.image, &scene, &m).unwrap();
        let footprint: HashSet<_> = scene.nuclei[pick].footprint(256, 256).into_iter().collect();
        for y in 0..256 {
            for x in 0..256 {
                if !footprint.contains(&(x, y)) {
                    prop_assert_eq!(out.get(x, y), scene.image.get(x, y));
                }
            }
        }
        let after = summarize_phenotype(&out, &PhirmConfig::default());
        prop_assert_eq!(after.nucleus_count, if erode { 5 } else { 4 });
    }
}
