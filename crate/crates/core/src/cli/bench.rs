use std::io::Write;
use std::path::{Path, PathBuf};

use super::report::{decide, Algorithm};
use crate::covercheck::Config;
use crate::instance::{Format, Instance};

pub const COLUMNS: [&str; 8] = [
    "name",
    "algo",
    "verdict",
    "wall_ms",
    "solver_ms",
    "iterations",
    "pruned_total",
    "pruned_pct",
];

/// Instance files of `dir` in name order.
pub fn instance_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Writes one CSV row per (file, algorithm). Unreadable or malformed files
/// get rows with verdict `error`.
pub fn bench<W: Write>(
    files: &[PathBuf],
    algos: &[Algorithm],
    cfg: &Config,
    format: Option<Format>,
    timings: bool,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for path in files {
        let stem = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parsed = std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| {
                Instance::parse(&text, format.unwrap_or_else(|| Format::from_path(path)))
                    .map_err(|e| e.to_string())
            });
        for &algo in algos {
            match &parsed {
                Err(_) => w.write_record([stem.as_str(), algo.name(), "error", "0", "0", "0", "0", "0.00"])?,
                Ok(inst) => {
                    let mut r = decide(inst, algo, cfg);
                    if !timings {
                        r.strip_timings();
                    }
                    w.write_record([
                        stem.clone(),
                        algo.name().to_string(),
                        r.verdict.to_string(),
                        r.wall_ms.to_string(),
                        r.solver_ms.to_string(),
                        r.iterations().to_string(),
                        r.pruned_total().to_string(),
                        format!("{:.2}", r.pruned_pct()),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
