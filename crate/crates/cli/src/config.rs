//! The declarative analysis file.
//!
//! ```toml
//! [[series]]
//! label = "oil"
//! path = "wti.csv"            # relative to this file
//! date_column = "Date"
//! value_column = "Close"
//! orthogonalize_against = "gpr"
//!
//! [[series]]
//! label = "gpr"
//! path = "trends.csv"
//! date_column = "day"
//! value_column = "geopolitical risk"
//! transform = "none"
//!
//! [analysis]
//! driver = "oil"              # X
//! outcome = "spx"             # Y
//! conditioner = "cases"       # Z, PWC only
//! ```
//!
//! Every section other than `[[series]]` and `[analysis]` is optional. The
//! transform defaults to `log-diff`, or to `diff` for orthogonalized and
//! derived series, whose values need not be positive.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wavecoh::coherence::SmoothingSpec;
use wavecoh::cwt::{MotherWavelet, ScaleGrid};
use wavecoh::significance::MonteCarlo;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    LogDiff,
    Diff,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub label: String,
    pub path: PathBuf,
    pub date_column: String,
    pub value_column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
    /// Shift applied on the series' own calendar before alignment.
    #[serde(default)]
    pub lag: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthogonalize_against: Option<String>,
    /// Adds the sample mean back to orthogonalized residuals.
    #[serde(default)]
    pub add_back_mean: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
}

impl SeriesSpec {
    pub fn transform(&self) -> Transform {
        self.transform.unwrap_or(
            if self.orthogonalize_against.is_some() && !self.add_back_mean {
                Transform::Diff
            } else {
                Transform::LogDiff
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivedKind {
    FatalityRatio,
}

/// A series computed from two declared series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedSpec {
    pub label: String,
    pub kind: DerivedKind,
    pub deaths: String,
    pub cases: String,
    #[serde(default)]
    pub lag: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
}

impl DerivedSpec {
    pub fn transform(&self) -> Transform {
        self.transform.unwrap_or(Transform::Diff)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// X: the series whose lead shows as a positive WTC phase.
    pub driver: String,
    /// Y.
    pub outcome: String,
    /// Z, required for PWC.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub s0: f64,
    pub dj: f64,
    pub max_period: f64,
    /// Extends the grid to the series duration instead of `max_period`.
    pub full_range: bool,
    pub omega0: f64,
    pub dt: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            s0: 2.0,
            dj: 1.0 / 12.0,
            max_period: 32.0,
            full_range: false,
            omega0: 6.0,
            dt: 1.0,
        }
    }
}

impl GridSpec {
    pub fn build(&self, n: usize) -> CliResult<ScaleGrid> {
        let wavelet = MotherWavelet::morlet(self.omega0)?;
        let s0 = self.s0 * self.dt;
        Ok(if self.full_range {
            ScaleGrid::full_range(n, self.dt, s0, self.dj, wavelet)?
        } else {
            ScaleGrid::up_to_period(s0, self.dj, self.max_period, wavelet)?
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodAxis {
    /// Shortest period at the top of the panel.
    ShortTop,
    ShortBottom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub plot: bool,
    pub period_axis: PeriodAxis,
    /// Phase arrows are drawn every `arrow_stride_time` observations and
    /// `arrow_stride_scale` scale rows where `r2 >= arrow_threshold`.
    pub arrow_stride_time: usize,
    pub arrow_stride_scale: usize,
    pub arrow_threshold: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plot: true,
            period_axis: PeriodAxis::ShortTop,
            arrow_stride_time: 5,
            arrow_stride_scale: 6,
            arrow_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub series: Vec<SeriesSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derived: Vec<DerivedSpec>,
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub smoothing: SmoothingSpec,
    #[serde(default)]
    pub significance: MonteCarlo,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Command-line values that replace their config counterparts.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub surrogates: Option<usize>,
    pub level: Option<f64>,
    pub max_period: Option<f64>,
    pub out: Option<PathBuf>,
}

impl AnalysisConfig {
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.significance.seed = seed;
        }
        if let Some(n) = o.surrogates {
            self.significance.n_surrogates = n;
        }
        if let Some(level) = o.level {
            self.significance.level = level;
        }
        if let Some(p) = o.max_period {
            self.grid.max_period = p;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
    }

    /// Canonical TOML of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hash_text(&self.canonical())
    }

    /// Checks labels and references; `needs_conditioner` for PWC runs.
    pub fn validate(&self, needs_conditioner: bool) -> CliResult<()> {
        let mut labels = HashSet::new();
        let all = self
            .series
            .iter()
            .map(|s| &s.label)
            .chain(self.derived.iter().map(|d| &d.label));
        for label in all {
            if label.is_empty() || label.contains(['/', '\\']) {
                return Err(CliError::Config(format!(
                    "series label `{label}` must be non-empty and free of path separators"
                )));
            }
            if !labels.insert(label.as_str()) {
                return Err(CliError::Config(format!(
                    "series label `{label}` is declared twice"
                )));
            }
        }
        let known = |what: &str, label: &str| {
            if labels.contains(label) {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{what} `{label}` is not a declared [[series]] or [[derived]] label"
                )))
            }
        };
        for s in &self.series {
            if let Some(x) = &s.orthogonalize_against {
                known("orthogonalize_against", x)?;
                if x == &s.label {
                    return Err(CliError::Config(format!(
                        "series `{x}` cannot be orthogonalized against itself"
                    )));
                }
            }
            if s.delimiter.is_some_and(|d| !d.is_ascii()) {
                return Err(CliError::Config(format!(
                    "delimiter for `{}` must be a single ASCII character",
                    s.label
                )));
            }
        }
        for d in &self.derived {
            let declared = |l: &str| self.series.iter().any(|s| s.label == l);
            for input in [&d.deaths, &d.cases] {
                if !declared(input) {
                    return Err(CliError::Config(format!(
                        "derived `{}` refers to `{input}`, which is not a [[series]] label",
                        d.label
                    )));
                }
            }
        }
        let a = &self.analysis;
        known("analysis.driver", &a.driver)?;
        known("analysis.outcome", &a.outcome)?;
        if a.driver == a.outcome {
            return Err(CliError::Config(
                "analysis.driver and analysis.outcome must differ".into(),
            ));
        }
        match (&a.conditioner, needs_conditioner) {
            (Some(z), true) => known("analysis.conditioner", z)?,
            (None, true) => {
                return Err(CliError::Config(
                    "pwc needs analysis.conditioner (the series to partial out)".into(),
                ))
            }
            _ => {}
        }
        if !(self.grid.dt > 0.0 && self.grid.dj > 0.0 && self.grid.s0 > 0.0) {
            return Err(CliError::Config(
                "grid.s0, grid.dj and grid.dt must be > 0".into(),
            ));
        }
        Ok(())
    }
}

pub fn hash_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Reads, parses and overrides a config; returns it with its directory.
pub fn load(path: &Path, overrides: &Overrides) -> CliResult<(AnalysisConfig, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigIo {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config = AnalysisConfig::parse(&text, path)?;
    config.apply(overrides);
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, base))
}
