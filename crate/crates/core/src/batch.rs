//! Directory-level scoring with pairing, grouping and a run manifest.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::sha256_file;
use crate::metric::PhirmConfig;
use crate::report::{aggregate, score_files, Aggregate, PairRecord};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "tif", "tiff"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Image files directly inside `dir`, keyed by file stem.
pub fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if !path.is_file() || !is_image_path(&path) {
            continue;
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(Error::InvalidParameter(format!(
                "stem {stem:?} is ambiguous: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum PairingRule {
    /// Files with identical stems are paired.
    Stem,
    /// A CSV with `original` and `reconstructed` columns (paths relative to
    /// the respective directories) and an optional `stem` column.
    Explicit { pairs_file: PathBuf },
}

#[derive(Debug, Deserialize)]
struct ExplicitRow {
    original: PathBuf,
    reconstructed: PathBuf,
    #[serde(default)]
    stem: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedPair {
    pub stem: String,
    pub original: PathBuf,
    pub reconstructed: PathBuf,
}

/// Pairs found plus one warning per file that could not be paired.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairingPlan {
    pub pairs: Vec<PlannedPair>,
    pub warnings: Vec<String>,
    pub files: Vec<(InputRole, PathBuf)>,
}

pub fn plan_pairs(original_dir: &Path, reconstructed_dir: &Path, rule: &PairingRule) -> Result<PairingPlan> {
    let mut plan = PairingPlan::default();
    match rule {
        PairingRule::Stem => {
            let a = images_by_stem(original_dir)?;
            let b = images_by_stem(reconstructed_dir)?;
            for (stem, path) in &a {
                plan.files.push((InputRole::Original, path.clone()));
                match b.get(stem) {
                    Some(other) => plan.pairs.push(PlannedPair {
                        stem: stem.clone(),
                        original: path.clone(),
                        reconstructed: other.clone(),
                    }),
                    None => plan.warnings.push(format!("no reconstruction for {}", path.display())),
                }
            }
            for (stem, path) in &b {
                plan.files.push((InputRole::Reconstructed, path.clone()));
                if !a.contains_key(stem) {
                    plan.warnings.push(format!("no original for {}", path.display()));
                }
            }
        }
        PairingRule::Explicit { pairs_file } => {
            let mut reader = csv::Reader::from_path(pairs_file)
                .map_err(|e| Error::Config(format!("{}: {e}", pairs_file.display())))?;
            for row in reader.deserialize::<ExplicitRow>() {
                let row = row.map_err(|e| Error::Config(format!("{}: {e}", pairs_file.display())))?;
                let original = original_dir.join(&row.original);
                let reconstructed = reconstructed_dir.join(&row.reconstructed);
                let mut ok = true;
                for (role, p) in [
                    (InputRole::Original, &original),
                    (InputRole::Reconstructed, &reconstructed),
                ] {
                    if p.is_file() {
                        plan.files.push((role, p.clone()));
                    } else {
                        plan.warnings
                            .push(format!("listed file {} does not exist", p.display()));
                        ok = false;
                    }
                }
                if ok {
                    let stem = row.stem.unwrap_or_else(|| {
                        row.original
                            .file_stem()
                            .unwrap_or_default()
                            .to_string_lossy()
                            .into_owned()
                    });
                    plan.pairs.push(PlannedPair {
                        stem,
                        original,
                        reconstructed,
                    });
                }
            }
            plan.pairs.sort_by(|x, y| x.stem.cmp(&y.stem));
            plan.files.sort();
            plan.files.dedup();
        }
    }
    if plan.pairs.is_empty() {
        return Err(Error::NoPairs(
            original_dir.to_path_buf(),
            reconstructed_dir.to_path_buf(),
        ));
    }
    Ok(plan)
}

/// Stem-to-group assignments read from a CSV with a `stem` column.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupTable {
    pub source: PathBuf,
    pub column: String,
    pub groups: HashMap<String, String>,
}

impl GroupTable {
    pub fn load(path: &Path, column: &str) -> Result<Self> {
        let cfg_err = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
        let mut reader = csv::Reader::from_path(path).map_err(cfg_err)?;
        let headers = reader.headers().map_err(cfg_err)?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("{}: missing column {name:?}", path.display())))
        };
        let (si, gi) = (find("stem")?, find(column)?);
        let mut groups = HashMap::new();
        for rec in reader.records() {
            let rec = rec.map_err(cfg_err)?;
            groups.insert(rec[si].to_string(), rec[gi].to_string());
        }
        Ok(Self {
            source: path.to_path_buf(),
            column: column.to_string(),
            groups,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputRole {
    Original,
    Reconstructed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: InputRole,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    pub config: PhirmConfig,
    pub original_dir: PathBuf,
    pub reconstructed_dir: PathBuf,
    pub pairing: PairingRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_column: Option<String>,
    pub inputs: Vec<InputFile>,
    pub pairs: Vec<PairRecord>,
    pub warnings: Vec<String>,
    pub aggregates: Vec<Aggregate>,
}

impl RunManifest {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Scores every pair of the two directories.
///
/// Pairs are scored in parallel but reported in stem order. Files that
/// cannot be paired, or pairs that fail to load or differ in size, are
/// skipped and recorded as warnings. An empty pairing is an error.
pub fn score_batch(
    original_dir: &Path,
    reconstructed_dir: &Path,
    rule: &PairingRule,
    cfg: &PhirmConfig,
    groups: Option<&GroupTable>,
) -> Result<RunManifest> {
    cfg.validate()?;
    let plan = plan_pairs(original_dir, reconstructed_dir, rule)?;
    let mut warnings = plan.warnings;
    info!("scoring {} pairs", plan.pairs.len());

    let inputs = plan
        .files
        .par_iter()
        .map(|(role, path)| {
            Ok(InputFile {
                role: *role,
                path: path.clone(),
                sha256: sha256_file(path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scored: Vec<Result<PairRecord>> = plan
        .pairs
        .par_iter()
        .map(|p| {
            let mut rec = score_files(&p.original, &p.reconstructed, cfg)?;
            rec.stem = p.stem.clone();
            Ok(rec)
        })
        .collect();

    let mut pairs = Vec::with_capacity(scored.len());
    for (plan_pair, result) in plan.pairs.iter().zip(scored) {
        match result {
            Ok(mut rec) => {
                if let Some(table) = groups {
                    rec.group = table.groups.get(&rec.stem).cloned();
                    if rec.group.is_none() {
                        warnings.push(format!(
                            "stem {:?} has no entry in {}",
                            rec.stem,
                            table.source.display()
                        ));
                    }
                }
                pairs.push(rec);
            }
            Err(e) => warnings.push(format!("skipped {}: {e}", plan_pair.stem)),
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    if pairs.is_empty() {
        return Err(Error::NoPairs(
            original_dir.to_path_buf(),
            reconstructed_dir.to_path_buf(),
        ));
    }
    let aggregates = aggregate(&pairs);
    Ok(RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: now_unix(),
        config: cfg.clone(),
        original_dir: original_dir.to_path_buf(),
        reconstructed_dir: reconstructed_dir.to_path_buf(),
        pairing: rule.clone(),
        group_file: groups.map(|g| g.source.clone()),
        group_column: groups.map(|g| g.column.clone()),
        inputs,
        pairs,
        warnings,
        aggregates,
    })
}
