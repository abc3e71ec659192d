//! From raw CSV files to the aligned, transformed analysis panel.
//!
//! Order of operations: load, lag on each series' own calendar, derive
//! ratios, align levels, orthogonalize levels, transform, re-align.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use wavecoh::preprocess::{
    align, diff, fatality_ratio, lag, load_csv_with, log_diff, orthogonalize, CsvOptions,
    TimeSeries,
};

use crate::config::{AnalysisConfig, Transform};
use crate::error::{CliError, CliResult};

/// Summary of one level regression, reported in the run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orthogonalization {
    pub series: String,
    pub against: String,
    pub intercept: f64,
    pub slope: f64,
    pub add_back_mean: bool,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub dates: Vec<NaiveDate>,
    /// Analysis series in the requested order, on `dates`.
    pub columns: Vec<TimeSeries>,
    pub orthogonalizations: Vec<Orthogonalization>,
    /// Rows dropped at ingestion, per file label.
    pub dropped_rows: BTreeMap<String, usize>,
}

impl Prepared {
    pub fn values(&self, k: usize) -> &[f64] {
        self.columns[k].values()
    }
}

struct Stage<'a> {
    config: &'a AnalysisConfig,
    base: &'a Path,
    dropped: BTreeMap<String, usize>,
}

impl Stage<'_> {
    fn load(&mut self, label: &str) -> CliResult<TimeSeries> {
        if let Some(s) = self.config.series.iter().find(|s| s.label == label) {
            let mut opts = CsvOptions::new(&s.date_column, &s.value_column);
            if let Some(d) = s.delimiter {
                opts = opts.with_delimiter(d as u8);
            }
            let loaded = load_csv_with(&self.base.join(&s.path), &opts)?;
            if loaded.dropped_rows > 0 {
                self.dropped.insert(label.to_string(), loaded.dropped_rows);
            }
            let series = loaded.series.with_name(label);
            return Ok(if s.lag > 0 {
                lag(&series, s.lag)?
            } else {
                series
            });
        }
        let d = self
            .config
            .derived
            .iter()
            .find(|d| d.label == label)
            .ok_or_else(|| CliError::Config(format!("unknown series `{label}`")))?;
        let deaths = self.load(&d.deaths)?;
        let cases = self.load(&d.cases)?;
        let panel = align(&[deaths, cases])?;
        let cols = panel.to_series();
        let ratio = fatality_ratio(&cols[0], &cols[1])?.with_name(label);
        Ok(if d.lag > 0 {
            lag(&ratio, d.lag)?
        } else {
            ratio
        })
    }

    fn transform_of(&self, label: &str) -> Transform {
        match self.config.series.iter().find(|s| s.label == label) {
            Some(s) => s.transform(),
            None => self
                .config
                .derived
                .iter()
                .find(|d| d.label == label)
                .map(|d| d.transform())
                .unwrap_or(Transform::None),
        }
    }
}

/// Builds the panel for `labels`, in that order.
pub fn prepare(config: &AnalysisConfig, base: &Path, labels: &[&str]) -> CliResult<Prepared> {
    let mut stage = Stage {
        config,
        base,
        dropped: BTreeMap::new(),
    };

    let regressor = |label: &str| {
        config
            .series
            .iter()
            .find(|s| s.label == label)
            .and_then(|s| s.orthogonalize_against.clone())
    };
    // Level panel: analysis series plus any regressors, without duplicates.
    let mut level_labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    let mut seen: BTreeSet<String> = level_labels.iter().cloned().collect();
    for l in labels {
        if let Some(r) = regressor(l) {
            if seen.insert(r.clone()) {
                level_labels.push(r);
            }
        }
    }
    let levels = level_labels
        .iter()
        .map(|l| stage.load(l))
        .collect::<CliResult<Vec<_>>>()?;
    let level_panel = align(&levels)?;

    let mut orthogonalizations = Vec::new();
    let mut transformed = Vec::with_capacity(labels.len());
    for &label in labels {
        let mut series = level_panel.series(label).expect("label is in the panel");
        if let Some(r) = regressor(label) {
            let spec = config.series.iter().find(|s| s.label == label).unwrap();
            let x = level_panel.series(&r).expect("regressor is in the panel");
            let fit = orthogonalize(&series, &x)?;
            orthogonalizations.push(Orthogonalization {
                series: label.to_string(),
                against: r.clone(),
                intercept: fit.intercept,
                slope: fit.slope,
                add_back_mean: spec.add_back_mean,
            });
            series = fit.purged(&series, spec.add_back_mean)?;
        }
        transformed.push(match stage.transform_of(label) {
            Transform::LogDiff => log_diff(&series)?,
            Transform::Diff => diff(&series)?,
            Transform::None => series,
        });
    }

    let panel = align(&transformed)?;
    Ok(Prepared {
        dates: panel.dates().to_vec(),
        columns: panel.to_series(),
        orthogonalizations,
        dropped_rows: stage.dropped,
    })
}
