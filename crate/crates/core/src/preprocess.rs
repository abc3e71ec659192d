//! Ingestion and transformation of raw daily series.
//!
//! Everything here is a pure function over immutable inputs. Missing values
//! are never imputed: gaps are resolved only by the inner join in [`align`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::{Error, Result};

/// Minimum length accepted at ingestion.
pub const MIN_INGEST_LEN: usize = 2;

/// A named, date-indexed sequence of finite observations.
///
/// Dates are strictly increasing. Series produced by ingestion have at least
/// [`MIN_INGEST_LEN`] observations; derived series (for example the
/// differences of a two-point series) may be shorter but never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        if dates.is_empty() {
            return Err(Error::TooShort {
                series: name,
                len: 0,
                min: 1,
            });
        }
        if let Some(index) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Unordered {
                series: name,
                index: index + 1,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                series: name,
                index,
            });
        }
        Ok(Self {
            name,
            dates,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn derived(&self, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        Self::new(self.name.clone(), dates, values)
    }
}

/// Options for [`load_csv_with`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub date_column: String,
    pub value_column: String,
    pub delimiter: u8,
}

impl CsvOptions {
    pub fn new(date_column: impl Into<String>, value_column: impl Into<String>) -> Self {
        Self {
            date_column: date_column.into(),
            value_column: value_column.into(),
            delimiter: b',',
        }
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

/// A loaded series plus the number of rows skipped for an empty value.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub series: TimeSeries,
    pub dropped_rows: usize,
}

/// Reads one date column and one value column from a comma-separated file.
///
/// The series is named after the value column. Rows whose value cell is
/// empty are dropped and logged.
pub fn load_csv(
    path: impl AsRef<Path>,
    date_column: &str,
    value_column: &str,
) -> Result<TimeSeries> {
    let loaded = load_csv_with(path.as_ref(), &CsvOptions::new(date_column, value_column))?;
    if loaded.dropped_rows > 0 {
        log::warn!(
            "{}: dropped {} row(s) with an empty `{}` value",
            path.as_ref().display(),
            loaded.dropped_rows,
            value_column
        );
    }
    Ok(loaded.series)
}

pub fn load_csv_with(path: &Path, opts: &CsvOptions) -> Result<Loaded> {
    let owned = || path.to_path_buf();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: owned(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: owned(),
                column: name.to_string(),
            })
    };
    let date_idx = column(&opts.date_column)?;
    let value_idx = column(&opts.value_column)?;

    let mut rows: Vec<(NaiveDate, f64, u64)> = Vec::new();
    let mut dropped_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map_or(0, |p| p.line());
        let raw_date = record.get(date_idx).unwrap_or("");
        let raw_value = record.get(value_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| Error::BadDate {
            path: owned(),
            row,
            value: raw_date.to_string(),
        })?;
        if raw_value.is_empty() {
            dropped_rows += 1;
            continue;
        }
        let value = raw_value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::BadValue {
                path: owned(),
                row,
                value: raw_value.to_string(),
            })?;
        rows.push((date, value, row));
    }

    // Sources disagree on row order (many quote vendors list newest first).
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate {
            series: opts.value_column.clone(),
            date: w[1].0,
            row: w[0].2.max(w[1].2),
        });
    }
    if rows.len() < MIN_INGEST_LEN {
        return Err(Error::TooShort {
            series: opts.value_column.clone(),
            len: rows.len(),
            min: MIN_INGEST_LEN,
        });
    }
    let (dates, values) = rows.into_iter().map(|(d, v, _)| (d, v)).unzip();
    Ok(Loaded {
        series: TimeSeries::new(opts.value_column.clone(), dates, values)?,
        dropped_rows,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: PathBuf::from(path),
        message: e.to_string(),
    }
}

/// Series aligned on their common calendar dates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    dates: Vec<NaiveDate>,
    columns: Vec<(String, Vec<f64>)>,
}

impl AlignedPanel {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(l, _)| l.as_str())
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| v.as_slice())
    }

    pub fn series(&self, label: &str) -> Option<TimeSeries> {
        let values = self.column(label)?.to_vec();
        TimeSeries::new(label, self.dates.clone(), values).ok()
    }

    /// Splits the panel back into one series per column, in column order.
    pub fn to_series(&self) -> Vec<TimeSeries> {
        self.columns
            .iter()
            .map(|(label, values)| TimeSeries {
                name: label.clone(),
                dates: self.dates.clone(),
                values: values.clone(),
            })
            .collect()
    }
}

/// Inner-joins series on calendar date, preserving input order.
pub fn align(series: &[TimeSeries]) -> Result<AlignedPanel> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "alignment needs at least 2 series, got {}",
            series.len()
        )));
    }
    let mut names = BTreeSet::new();
    for s in series {
        if !names.insert(s.name()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate series label `{}`",
                s.name()
            )));
        }
    }

    let mut common: BTreeSet<NaiveDate> = series[0].dates.iter().copied().collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        common.retain(|d| other.contains(d));
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();

    let columns = series
        .iter()
        .map(|s| {
            // Both date lists are sorted, so a single merge pass suffices.
            let mut values = Vec::with_capacity(dates.len());
            let mut k = 0;
            for d in &dates {
                while s.dates[k] < *d {
                    k += 1;
                }
                values.push(s.values[k]);
            }
            (s.name.clone(), values)
        })
        .collect();
    Ok(AlignedPanel { dates, columns })
}

/// `ln(x[t+1]) - ln(x[t])`, dated at the later observation of each pair.
pub fn log_diff(s: &TimeSeries) -> Result<TimeSeries> {
    if let Some(i) = s.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositive {
            series: s.name.clone(),
            date: s.dates[i],
            value: s.values[i],
        });
    }
    differenced(s, |a, b| b.ln() - a.ln())
}

/// Plain first differences `x[t+1] - x[t]`, dated at the later observation.
pub fn diff(s: &TimeSeries) -> Result<TimeSeries> {
    differenced(s, |a, b| b - a)
}

fn differenced(s: &TimeSeries, f: impl Fn(f64, f64) -> f64) -> Result<TimeSeries> {
    if s.len() < 2 {
        return Err(Error::TooShort {
            series: s.name.clone(),
            len: s.len(),
            min: 2,
        });
    }
    let values = s.values.windows(2).map(|w| f(w[0], w[1])).collect();
    s.derived(s.dates[1..].to_vec(), values)
}

/// Shifts values forward by `k` positions on the series' own calendar.
///
/// The value reported at position `t` is the original value at `t - k`; the
/// first `k` dates have no value and are dropped.
pub fn lag(s: &TimeSeries, k: usize) -> Result<TimeSeries> {
    if k >= s.len() {
        return Err(Error::LagTooLarge {
            lag: k,
            len: s.len(),
        });
    }
    s.derived(s.dates[k..].to_vec(), s.values[..s.len() - k].to_vec())
}

/// Elementwise `deaths / cases` over identical calendars.
pub fn fatality_ratio(deaths: &TimeSeries, cases: &TimeSeries) -> Result<TimeSeries> {
    if deaths.dates != cases.dates {
        return Err(Error::DateMismatch {
            left: deaths.name.clone(),
            right: cases.name.clone(),
        });
    }
    if let Some(i) = cases.values.iter().position(|&c| c <= 0.0) {
        return Err(Error::NonPositive {
            series: cases.name.clone(),
            date: cases.dates[i],
            value: cases.values[i],
        });
    }
    let values = deaths
        .values
        .iter()
        .zip(&cases.values)
        .map(|(d, c)| d / c)
        .collect();
    TimeSeries::new(
        format!("{}_per_{}", deaths.name, cases.name),
        deaths.dates.clone(),
        values,
    )
}

/// Result of regressing a series on an intercept and one regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub slope: f64,
    pub residuals: Vec<f64>,
    /// Sample mean of the dependent series.
    pub y_mean: f64,
}

impl OlsFit {
    /// The purged series on the dependent series' calendar.
    ///
    /// With `add_back_mean` the residuals are shifted by the sample mean of
    /// the dependent series, which keeps price-like levels positive in
    /// typical use.
    pub fn purged(&self, y: &TimeSeries, add_back_mean: bool) -> Result<TimeSeries> {
        let offset = if add_back_mean { self.y_mean } else { 0.0 };
        let values = self.residuals.iter().map(|r| r + offset).collect();
        y.derived(y.dates.clone(), values)
    }
}

/// OLS of `y` on `1 + x`; the residuals are `y` with `x`'s linear influence removed.
pub fn orthogonalize(y: &TimeSeries, x: &TimeSeries) -> Result<OlsFit> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.len(),
        });
    }
    if y.dates != x.dates {
        return Err(Error::DateMismatch {
            left: y.name.clone(),
            right: x.name.clone(),
        });
    }
    if y.len() < 3 {
        return Err(Error::TooShort {
            series: y.name.clone(),
            len: y.len(),
            min: 3,
        });
    }

    let n = y.len() as f64;
    let x_mean = x.values.iter().sum::<f64>() / n;
    let y_mean = y.values.iter().sum::<f64>() / n;
    let (sxx, sxy) = x
        .values
        .iter()
        .zip(&y.values)
        .fold((0.0, 0.0), |(sxx, sxy), (&xv, &yv)| {
            let dx = xv - x_mean;
            (sxx + dx * dx, sxy + dx * (yv - y_mean))
        });
    if sxx == 0.0 {
        return Err(Error::ConstantRegressor(x.name.clone()));
    }

    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    // Centred form keeps the residual sum at rounding level even for large levels.
    let residuals = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(&xv, &yv)| (yv - y_mean) - slope * (xv - x_mean))
        .collect();
    Ok(OlsFit {
        intercept,
        slope,
        residuals,
        y_mean,
    })
}
