use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use anyhow::Context;
use phirm::PhirmConfig;

pub enum Outcome {
    Clean,
    Warnings(usize),
}

impl Outcome {
    pub fn from_warnings(n: usize) -> Self {
        if n == 0 {
            Outcome::Clean
        } else {
            Outcome::Warnings(n)
        }
    }
}

/// Bad command-line input that is not a library error.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// 2 for invalid input, 3 for anything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<phirm::Error>() {
            return if e.is_invalid_input() { 2 } else { 3 };
        }
    }
    3
}

pub fn load_config(path: Option<&Path>) -> anyhow::Result<PhirmConfig> {
    match path {
        Some(p) => Ok(PhirmConfig::load(p)?),
        None => Ok(PhirmConfig::default()),
    }
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Expands glob patterns; plain paths pass through. Sorted and deduplicated.
pub fn expand_inputs(patterns: &[String]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for pat in patterns {
        let p = Path::new(pat);
        if p.exists() {
            out.push(p.to_path_buf());
            continue;
        }
        let matches = glob::glob(pat).map_err(|e| usage(format!("bad pattern {pat:?}: {e}")))?;
        let before = out.len();
        for m in matches {
            out.push(m.map_err(|e| usage(e.to_string()))?);
        }
        if out.len() == before {
            return Err(usage(format!("{pat}: no such file and no glob matches")));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

/// Seed given on the command line, or one derived from the clock.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let t = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap_or_default();
        let s = t.as_nanos() as u64;
        eprintln!("no --seed given, using {s}");
        s
    })
}

pub fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

/// Opens `path` for appending; the bool is true when the file is new or empty.
pub fn append_file(path: &Path) -> anyhow::Result<(File, bool)> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    Ok((f, fresh))
}

/// Prints a line to stdout; a closed pipe (e.g. `| head`) is not an error.
pub fn print_stdout(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}
