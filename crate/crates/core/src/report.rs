//! Per-pair result rows, their CSV layout and grouped aggregates.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{format_psnr, BaselineScores};
use crate::error::Result;
use crate::imgcore::GrayImage;
use crate::io::read_gray;
use crate::metric::{phirm_score, PhirmConfig, PhirmReport};

/// Scores of one (original, reconstructed) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub stem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub original: PathBuf,
    pub reconstructed: PathBuf,
    pub phirm: PhirmReport,
    pub baselines: BaselineScores,
}

impl PairRecord {
    pub fn from_images(
        stem: impl Into<String>,
        original_path: &Path,
        reconstructed_path: &Path,
        original: &GrayImage,
        reconstructed: &GrayImage,
        cfg: &PhirmConfig,
    ) -> Result<Self> {
        let phirm = phirm_score(original, reconstructed, cfg)?;
        let baselines = BaselineScores::compute(original, reconstructed)?;
        Ok(Self {
            stem: stem.into(),
            group: None,
            original: original_path.to_path_buf(),
            reconstructed: reconstructed_path.to_path_buf(),
            phirm,
            baselines,
        })
    }
}

/// Loads and scores two files. The stem is taken from the original's name.
pub fn score_files(original: &Path, reconstructed: &Path, cfg: &PhirmConfig) -> Result<PairRecord> {
    let a = read_gray(original)?;
    let b = read_gray(reconstructed)?;
    a.ensure_same_dims(&b).map_err(|e| {
        crate::Error::InvalidParameter(format!("{} vs {}: {e}", original.display(), reconstructed.display()))
    })?;
    let stem = original
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    PairRecord::from_images(stem, original, reconstructed, &a, &b, cfg)
}

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 21] = [
    "stem",
    "group",
    "original",
    "reconstructed",
    "phirm",
    "phirm_raw",
    "alpha",
    "ncd",
    "nad",
    "aad",
    "nucleus_count_original",
    "nucleus_count_reconstructed",
    "nucleus_area_original",
    "nucleus_area_reconstructed",
    "artefact_area_original",
    "artefact_area_reconstructed",
    "nucleus_area_delta",
    "artefact_area_delta",
    "mse",
    "psnr_db",
    "ssim",
];

impl PairRecord {
    pub fn csv_fields(&self) -> [String; 21] {
        let p = &self.phirm;
        let (a, b) = (&p.summary_original, &p.summary_reconstructed);
        [
            self.stem.clone(),
            self.group.clone().unwrap_or_default(),
            self.original.display().to_string(),
            self.reconstructed.display().to_string(),
            p.score.to_string(),
            p.raw_score.to_string(),
            p.alpha.to_string(),
            p.ncd.to_string(),
            p.nad.to_string(),
            p.aad.to_string(),
            a.nucleus_count.to_string(),
            b.nucleus_count.to_string(),
            a.nucleus_area.to_string(),
            b.nucleus_area.to_string(),
            a.artefact_area.to_string(),
            b.artefact_area.to_string(),
            p.nucleus_area_delta.to_string(),
            p.artefact_area_delta.to_string(),
            self.baselines.mse.to_string(),
            format_psnr(self.baselines.psnr_db),
            self.baselines.ssim.to_string(),
        ]
    }
}

/// Writes rows as RFC 4180 CSV, optionally preceded by the header.
pub fn write_csv<W: Write>(out: W, rows: &[PairRecord], header: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.write_record(r.csv_fields())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// PhIRM statistics over a set of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub group: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Name of the aggregate spanning every row.
pub const ALL_GROUP: &str = "all";

impl Aggregate {
    /// `scores` must be non-empty. The mean sums in the given order; the
    /// median of an even count averages the two middle values.
    pub fn of(group: impl Into<String>, scores: &[f64]) -> Self {
        assert!(!scores.is_empty(), "aggregate of no scores");
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Self {
            group: group.into(),
            n,
            mean: scores.iter().sum::<f64>() / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        }
    }
}

/// One aggregate over all rows, then one per group in lexicographic order.
/// Rows without a group only count toward the overall aggregate.
pub fn aggregate(rows: &[PairRecord]) -> Vec<Aggregate> {
    if rows.is_empty() {
        return Vec::new();
    }
    let all: Vec<f64> = rows.iter().map(|r| r.phirm.score).collect();
    let mut out = vec![Aggregate::of(ALL_GROUP, &all)];
    let mut groups: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for r in rows {
        if let Some(g) = &r.group {
            groups.entry(g.as_str()).or_default().push(r.phirm.score);
        }
    }
    out.extend(groups.into_iter().map(|(g, s)| Aggregate::of(g, &s)));
    out
}
