//! Snapshot text files and ingestion of externally measured curves.
//!
//! ```text
//! # time_ms=12.5
//! # seed=7
//! # config_digest=3f2a…
//! # x_um density_per_um
//! -40.0 0.0001
//! …
//! ```
//!
//! Other `# key=value` lines carry the remaining metadata. Numbers are written
//! in Rust's shortest round-trip form, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::snapshot::{DensitySnapshot, MIN_GRID_POINTS};

pub const COLUMNS: &str = "x_um density_per_um";

/// Fraction of the grid, split between both ends, used for the baseline.
const BASELINE_FRACTION: f64 = 0.05;
/// Negative residue allowed after baseline removal, in baseline standard deviations.
const NEGATIVE_SIGMAS: f64 = 5.0;
/// ...and as a fraction of the peak, for noise-free curves.
const NEGATIVE_PEAK_FRACTION: f64 = 1e-3;

/// Text form of a snapshot.
pub fn format_snapshot(s: &DensitySnapshot) -> String {
    let mut out = String::with_capacity(32 * s.len() + 128);
    let _ = writeln!(out, "# time_ms={}", s.time);
    for key in ["seed", "config_digest"] {
        if let Some(v) = s.meta.get(key) {
            let _ = writeln!(out, "# {key}={v}");
        }
    }
    for (k, v) in &s.meta {
        if k != "seed" && k != "config_digest" {
            let _ = writeln!(out, "# {k}={v}");
        }
    }
    let _ = writeln!(out, "# {COLUMNS}");
    for (x, d) in s.x_grid.iter().zip(&s.density) {
        let _ = writeln!(out, "{x} {d}");
    }
    out
}

pub fn write_snapshot(path: impl AsRef<Path>, s: &DensitySnapshot) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_snapshot(s)).map_err(|e| Error::io(path, e))
}

/// Parses the text form; `origin` names the source in error messages.
pub fn parse_snapshot(text: &str, origin: &str) -> Result<DensitySnapshot> {
    let mut time = None;
    let mut meta = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(head) = line.strip_prefix('#') {
            if let Some((k, v)) = head.trim().split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                if k == "time_ms" {
                    time = Some(v.parse::<f64>().map_err(|_| {
                        Error::DataQuality(format!("{origin}: bad time_ms value {v:?}"))
                    })?);
                } else {
                    meta.push((k.to_string(), v.to_string()));
                }
            }
            continue;
        }
        let mut cols = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|c| !c.is_empty());
        let mut num = || -> Result<f64> {
            cols.next()
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::DataQuality(format!("{origin}: line {} is not two numbers", n + 1))
                })
        };
        x.push(num()?);
        y.push(num()?);
    }
    let time =
        time.ok_or_else(|| Error::DataQuality(format!("{origin}: missing `# time_ms=` header")))?;
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DataQuality(format!(
            "{origin}: x grid is not strictly increasing"
        )));
    }
    let mut s = DensitySnapshot::new(time, x, y).map_err(|e| match e {
        Error::Input(m) => Error::DataQuality(format!("{origin}: {m}")),
        other => other,
    })?;
    s.meta.extend(meta);
    Ok(s)
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<DensitySnapshot> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, &path.display().to_string())
}

/// Writes one file per snapshot as `<stem>_<index>.dat` and returns the paths.
pub fn write_series(
    dir: impl AsRef<Path>,
    stem: &str,
    series: &[DensitySnapshot],
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = series.len().max(1).to_string().len().max(2);
    series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = dir.join(format!("{stem}_{i:0width$}.dat"));
            write_snapshot(&p, s).map(|_| p)
        })
        .collect()
}

/// Removes a constant background estimated from the outer grid points and
/// rescales to unit integral.
pub fn clean_curve(raw: &DensitySnapshot, origin: &str) -> Result<DensitySnapshot> {
    let n = raw.len();
    if n < MIN_GRID_POINTS {
        return Err(Error::DataQuality(format!(
            "{origin}: {n} points, need at least {MIN_GRID_POINTS}"
        )));
    }
    let per_side = ((BASELINE_FRACTION * n as f64 / 2.0).round() as usize).max(1);
    let outer: Vec<f64> = raw.density[..per_side]
        .iter()
        .chain(&raw.density[n - per_side..])
        .copied()
        .collect();
    let m = outer.len() as f64;
    let baseline = outer.iter().sum::<f64>() / m;
    let spread = (outer.iter().map(|v| (v - baseline).powi(2)).sum::<f64>() / m).sqrt();
    let peak = raw.density.iter().cloned().fold(0.0, f64::max) - baseline;
    let allowed = (NEGATIVE_SIGMAS * spread).max(NEGATIVE_PEAK_FRACTION * peak.abs());
    let mut density = Vec::with_capacity(n);
    for (i, &v) in raw.density.iter().enumerate() {
        let d = v - baseline;
        if d < -allowed {
            return Err(Error::DataQuality(format!(
                "{origin}: density {d:.3e} at x = {} lies below the baseline beyond tolerance {allowed:.3e}",
                raw.x_grid[i]
            )));
        }
        density.push(d.max(0.0));
    }
    let mut out = DensitySnapshot::new(raw.time, raw.x_grid.clone(), density)?
        .normalized()
        .map_err(|_| {
            Error::DataQuality(format!("{origin}: nothing left after baseline removal"))
        })?;
    out.meta = raw.meta.clone();
    Ok(out.with_meta("baseline", baseline))
}

/// Reads, checks and cleans a series of measured curves.
///
/// Files may come in any order; the result is sorted by time. Duplicate
/// times are rejected.
pub fn ingest<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<DensitySnapshot>> {
    if paths.is_empty() {
        return Err(Error::Input("no files to ingest".into()));
    }
    let mut out = paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let origin = p.display().to_string();
            let raw = read_snapshot(p)?;
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            clean_curve(&raw, &origin).map(|s| s.with_meta("source_file", name))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    if let Some(w) = out.windows(2).find(|w| w[0].time == w[1].time) {
        return Err(Error::Input(format!(
            "duplicate snapshot time {} ms ({} and {})",
            w[0].time,
            w[0].meta
                .get("source_file")
                .map(String::as_str)
                .unwrap_or("?"),
            w[1].meta
                .get("source_file")
                .map(String::as_str)
                .unwrap_or("?"),
        )));
    }
    Ok(out)
}
