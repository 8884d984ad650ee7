//! Phenotype extraction and the PhIRM score.
//!
//! Each image is segmented with Otsu's threshold, its 8-connected components
//! are measured, components below the minimum area are ignored and the rest
//! are classified as artefacts, single nuclei or double (overlapping) nuclei.
//! The per-image totals of two images are compared through three penalties:
//!
//! * NCD, the nucleus-count difference: `0` when the counts agree,
//!   `ncd_base^alpha` for `alpha > 0` and `ncd_neg_base^|alpha|` for `alpha < 0`,
//!   where `alpha = count(original) - count(reconstructed)`.
//! * NAD, the nucleus-area difference: `w_nad * |area(original) - area(reconstructed)|`.
//! * AAD, the artefact-area difference: `w_aad * |artefact(original) - artefact(reconstructed)|`.
//!
//! The score is `(10 - (NCD + NAD + AAD)) / 10`, clamped to `[0, 1]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{binarize, component_stats, connected_components, otsu_threshold, ComponentStats, GrayImage};

/// Tunable weights and classification thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhirmConfig {
    /// Base of the count penalty when nuclei are missing from the reconstruction.
    pub ncd_base: f64,
    /// Base of the count penalty when the reconstruction has extra nuclei.
    pub ncd_neg_base: f64,
    /// Penalty per pixel of nucleus-area difference.
    pub w_nad: f64,
    /// Penalty per pixel of artefact-area difference.
    pub w_aad: f64,
    /// Components smaller than this many pixels are ignored.
    pub min_component_area: u64,
    /// A component is an artefact only if its maximum equals this value...
    pub artefact_max_value: u8,
    /// ...and its mean intensity is at least this value.
    pub artefact_mean_floor: f64,
    /// Nuclear components with area below this are single nuclei, otherwise two.
    pub single_nucleus_max_area: u64,
}

impl Default for PhirmConfig {
    fn default() -> Self {
        Self {
            ncd_base: 1.1,
            ncd_neg_base: 2.0,
            w_nad: 0.0002,
            w_aad: 0.001,
            min_component_area: 50,
            artefact_max_value: 255,
            artefact_mean_floor: 210.0,
            single_nucleus_max_area: 2200,
        }
    }
}

const CONFIG_TEMPLATE: &str = "\
# PhIRM configuration. Every key is optional; omitted keys take the value shown.

# NCD base when the reconstruction lost nuclei (alpha > 0): ncd_base^alpha
ncd_base = {ncd_base}
# NCD base when the reconstruction gained nuclei (alpha < 0): ncd_neg_base^|alpha|
ncd_neg_base = {ncd_neg_base}
# NAD weight per pixel of nucleus-area difference
w_nad = {w_nad}
# AAD weight per pixel of artefact-area difference
w_aad = {w_aad}
# components with fewer pixels are ignored
min_component_area = {min_component_area}
# artefact: max intensity == artefact_max_value and mean >= artefact_mean_floor
artefact_max_value = {artefact_max_value}
artefact_mean_floor = {artefact_mean_floor}
# nucleus components with area >= this count as two overlapping nuclei
single_nucleus_max_area = {single_nucleus_max_area}
";

impl PhirmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.ncd_base > 1.0) || !self.ncd_base.is_finite() {
            return bad("ncd_base must be a finite value > 1");
        }
        if !(self.ncd_neg_base > 1.0) || !self.ncd_neg_base.is_finite() {
            return bad("ncd_neg_base must be a finite value > 1");
        }
        if !(self.w_nad > 0.0) || !self.w_nad.is_finite() || !(self.w_aad > 0.0) || !self.w_aad.is_finite() {
            return bad("w_nad and w_aad must be finite and > 0");
        }
        if !(0.0..=255.0).contains(&self.artefact_mean_floor) {
            return bad("artefact_mean_floor must lie in 0..=255");
        }
        Ok(())
    }

    /// Parses a flat `key = value` TOML document and validates it.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => Error::Config(format!("{}: {other}", path.display())),
        })
    }

    /// Renders the configuration as a commented, human-editable file.
    pub fn to_toml_string(&self) -> String {
        CONFIG_TEMPLATE
            .replace("{ncd_base}", &fmt_float(self.ncd_base))
            .replace("{ncd_neg_base}", &fmt_float(self.ncd_neg_base))
            .replace("{w_nad}", &fmt_float(self.w_nad))
            .replace("{w_aad}", &fmt_float(self.w_aad))
            .replace("{min_component_area}", &self.min_component_area.to_string())
            .replace("{artefact_max_value}", &self.artefact_max_value.to_string())
            .replace("{artefact_mean_floor}", &fmt_float(self.artefact_mean_floor))
            .replace("{single_nucleus_max_area}", &self.single_nucleus_max_area.to_string())
    }
}

// TOML needs a decimal point to read a value back as a float.
fn fmt_float(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'E']) || !v.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentClass {
    Artefact,
    SingleNucleus,
    DoubleNucleus,
}

/// Classifies a component that already passed the minimum-area filter.
///
/// Saturated components (max at `artefact_max_value`) with a mean of at least
/// `artefact_mean_floor` are artefacts. Everything else is a nucleus, split by
/// area alone; a saturated but dim component is therefore still a nucleus.
pub fn classify_component(stats: &ComponentStats, cfg: &PhirmConfig) -> ComponentClass {
    if stats.max == cfg.artefact_max_value && stats.mean >= cfg.artefact_mean_floor {
        ComponentClass::Artefact
    } else if stats.area < cfg.single_nucleus_max_area {
        ComponentClass::SingleNucleus
    } else {
        ComponentClass::DoubleNucleus
    }
}

/// Applies the minimum-area filter, then [`classify_component`].
pub fn triage_component(stats: &ComponentStats, cfg: &PhirmConfig) -> Option<ComponentClass> {
    (stats.area >= cfg.min_component_area).then(|| classify_component(stats, cfg))
}

/// Per-image phenotype totals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhenotypeSummary {
    pub nucleus_count: u64,
    pub nucleus_area: u64,
    pub artefact_area: u64,
}

impl PhenotypeSummary {
    pub fn add(&mut self, class: ComponentClass, area: u64) {
        match class {
            ComponentClass::Artefact => self.artefact_area += area,
            ComponentClass::SingleNucleus => {
                self.nucleus_count += 1;
                self.nucleus_area += area;
            }
            ComponentClass::DoubleNucleus => {
                self.nucleus_count += 2;
                self.nucleus_area += area;
            }
        }
    }
}

/// A measured component together with its class (`None` when filtered out).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifiedComponent {
    pub stats: ComponentStats,
    pub class: Option<ComponentClass>,
}

/// Full segmentation trace of one image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhenotypeAnalysis {
    pub threshold: u8,
    pub components: Vec<ClassifiedComponent>,
    pub summary: PhenotypeSummary,
}

pub fn analyze_phenotype(img: &GrayImage, cfg: &PhirmConfig) -> PhenotypeAnalysis {
    let threshold = otsu_threshold(img);
    let labels = connected_components(&binarize(img, threshold));
    let stats = component_stats(&labels, img).expect("label map built from the same image");
    let mut summary = PhenotypeSummary::default();
    let components = stats
        .into_iter()
        .map(|stats| {
            let class = triage_component(&stats, cfg);
            if let Some(class) = class {
                summary.add(class, stats.area);
            }
            ClassifiedComponent { stats, class }
        })
        .collect();
    PhenotypeAnalysis {
        threshold,
        components,
        summary,
    }
}

pub fn summarize_phenotype(img: &GrayImage, cfg: &PhirmConfig) -> PhenotypeSummary {
    analyze_phenotype(img, cfg).summary
}

/// Nucleus-count penalty for `alpha = count(original) - count(reconstructed)`.
pub fn ncd(alpha: i64, cfg: &PhirmConfig) -> f64 {
    match alpha {
        0 => 0.0,
        a if a > 0 => cfg.ncd_base.powf(a as f64),
        a => cfg.ncd_neg_base.powf(a.unsigned_abs() as f64),
    }
}

pub fn nad(original: &PhenotypeSummary, reconstructed: &PhenotypeSummary, cfg: &PhirmConfig) -> f64 {
    cfg.w_nad * original.nucleus_area.abs_diff(reconstructed.nucleus_area) as f64
}

pub fn aad(original: &PhenotypeSummary, reconstructed: &PhenotypeSummary, cfg: &PhirmConfig) -> f64 {
    cfg.w_aad * original.artefact_area.abs_diff(reconstructed.artefact_area) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhirmReport {
    /// `count(original) - count(reconstructed)`.
    pub alpha: i64,
    pub ncd: f64,
    pub nad: f64,
    pub aad: f64,
    /// Signed `area(original) - area(reconstructed)` for nuclei.
    pub nucleus_area_delta: i64,
    /// Signed `area(original) - area(reconstructed)` for artefacts.
    pub artefact_area_delta: i64,
    /// Unclamped `(10 - (ncd + nad + aad)) / 10`.
    pub raw_score: f64,
    /// `raw_score` clamped to `[0, 1]`.
    pub score: f64,
    pub summary_original: PhenotypeSummary,
    pub summary_reconstructed: PhenotypeSummary,
}

/// Scores two already-computed phenotype summaries.
pub fn score_summaries(
    original: &PhenotypeSummary,
    reconstructed: &PhenotypeSummary,
    cfg: &PhirmConfig,
) -> PhirmReport {
    let alpha = original.nucleus_count as i64 - reconstructed.nucleus_count as i64;
    let ncd = ncd(alpha, cfg);
    let nad = nad(original, reconstructed, cfg);
    let aad = aad(original, reconstructed, cfg);
    let raw_score = (10.0 - (ncd + nad + aad)) / 10.0;
    PhirmReport {
        alpha,
        ncd,
        nad,
        aad,
        nucleus_area_delta: original.nucleus_area as i64 - reconstructed.nucleus_area as i64,
        artefact_area_delta: original.artefact_area as i64 - reconstructed.artefact_area as i64,
        raw_score,
        score: raw_score.clamp(0.0, 1.0),
        summary_original: *original,
        summary_reconstructed: *reconstructed,
    }
}

/// Scores a reconstructed image against its original.
pub fn phirm_score(original: &GrayImage, reconstructed: &GrayImage, cfg: &PhirmConfig) -> Result<PhirmReport> {
    original.ensure_same_dims(reconstructed)?;
    let a = summarize_phenotype(original, cfg);
    let b = summarize_phenotype(reconstructed, cfg);
    Ok(score_summaries(&a, &b, cfg))
}
