//! On-disk layout of a run.
//!
//! Matrices are headerless CSV with one row per scale, longest period
//! first, and one column per observation. Values use Rust's shortest
//! round-trip formatting, so reading a file back reproduces every bit;
//! undefined cells are written as `NaN`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use wavecoh::coherence::{PhaseArrow, SmoothingSpec};

use crate::error::{CliError, CliResult};

pub const META: &str = "meta.json";
pub const R2: &str = "r2.csv";
pub const PHASE: &str = "phase.csv";
pub const THRESHOLD: &str = "threshold.csv";
pub const MASK: &str = "mask.csv";
pub const COI: &str = "coi.csv";
pub const ARROWS: &str = "arrows.csv";
pub const PLOT: &str = "plot.png";
pub const CONFIG: &str = "config.toml";
const LOCK: &str = ".wavecoh.lock";

/// Matrix files written by every analysis run, in a fixed order.
pub const MATRIX_FILES: [&str; 4] = [R2, PHASE, THRESHOLD, MASK];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub s0: f64,
    pub dj: f64,
    pub dt: f64,
    pub omega0: f64,
    pub fourier_factor: f64,
    pub num_scales: usize,
    /// Longest first, matching the matrix rows.
    pub periods: Vec<f64>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar1Meta {
    pub label: String,
    pub alpha: f64,
    pub sigma2: f64,
    pub mean: f64,
}

/// Against the plain coherence of the same driver and outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub wtc_significant_area: usize,
    /// `pwc area / wtc area`; `null` when the WTC area is zero.
    pub area_ratio: Option<f64>,
    pub mean_abs_diff_in_coi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub driver: String,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioner: Option<String>,
    pub seed: u64,
    pub n_surrogates: usize,
    pub level: f64,
    pub config_hash: String,
    pub n_obs: usize,
    /// Observation `k` (1-based, the matrix column `k - 1`) falls on `dates[k - 1]`.
    pub dates: Vec<NaiveDate>,
    pub grid: GridMeta,
    pub smoothing: SmoothingSpec,
    pub ar1_models: Vec<Ar1Meta>,
    pub phase_convention: String,
    pub in_coi_cells: usize,
    pub degenerate_in_coi: usize,
    pub degenerate_fraction_in_coi: f64,
    pub significant_area: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orthogonalizations: Vec<crate::pipeline::Orthogonalization>,
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        let path = dir.join(LOCK);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked(dir.to_path_buf()))
            }
            Err(e) => Err(CliError::io(&path)(e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

/// Rows of `m` (ascending period) written longest period first.
pub fn matrix_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows().into_iter().rev() {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn mask_csv(m: &Array2<bool>) -> String {
    let mut out = String::new();
    for row in m.rows().into_iter().rev() {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn parse_rows<T>(path: &Path, parse: impl Fn(&str) -> Option<T>) -> CliResult<Array2<T>> {
    let text = read_text(path)?;
    let bad = |message: String| CliError::Artifact {
        path: path.to_path_buf(),
        message,
    };
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = line
            .split(',')
            .map(|cell| {
                parse(cell).ok_or_else(|| bad(format!("line {}: bad value `{cell}`", i + 1)))
            })
            .collect::<CliResult<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(bad(format!(
                    "line {} has {} columns, expected {}",
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    rows.reverse();
    let cols = rows.first().map_or(0, Vec::len);
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((flat.len() / cols.max(1), cols), flat).map_err(|e| bad(e.to_string()))
}

/// Inverse of [`matrix_csv`]: rows come back in ascending period order.
pub fn read_matrix(path: &Path) -> CliResult<Array2<f64>> {
    parse_rows(path, |s| s.parse::<f64>().ok())
}

pub fn read_mask(path: &Path) -> CliResult<Array2<bool>> {
    parse_rows(path, |s| match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    })
}

pub fn coi_csv(dates: &[NaiveDate], coi: &[f64]) -> String {
    let mut out = String::from("obs,date,coi\n");
    for (k, (d, c)) in dates.iter().zip(coi).enumerate() {
        writeln!(out, "{},{d},{c}", k + 1).unwrap();
    }
    out
}

pub fn read_coi(path: &Path) -> CliResult<Vec<f64>> {
    let text = read_text(path)?;
    text.lines()
        .skip(1)
        .map(|line| {
            line.rsplit(',')
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Artifact {
                    path: path.to_path_buf(),
                    message: format!("bad row `{line}`"),
                })
        })
        .collect()
}

/// `obs,date,period,angle,class`, one arrow per line.
pub fn arrows_csv(arrows: &[PhaseArrow], dates: &[NaiveDate], periods: &[f64]) -> String {
    let mut out = String::from("obs,date,period,angle,class\n");
    for a in arrows {
        writeln!(
            out,
            "{},{},{},{},{:?}",
            a.time + 1,
            dates[a.time],
            periods[a.scale],
            a.angle,
            a.class()
        )
        .unwrap();
    }
    out
}

pub fn write_meta(dir: &Path, meta: &Meta) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(meta).expect("metadata is serialisable");
    text.push('\n');
    write_text(&dir.join(META), &text)
}

pub fn read_meta(dir: &Path) -> CliResult<Meta> {
    let path = dir.join(META);
    serde_json::from_str(&read_text(&path)?).map_err(|e| CliError::Artifact {
        path,
        message: e.to_string(),
    })
}

/// A time series as `date,<label>` CSV.
pub fn series_csv(label: &str, dates: &[NaiveDate], values: &[f64]) -> String {
    let mut out = format!("date,{label}\n");
    for (d, v) in dates.iter().zip(values) {
        writeln!(out, "{d},{v}").unwrap();
    }
    out
}
