//! Synthetic inputs with planted structure, written as ordinary CSV files.
//!
//! ```toml
//! kind = "pair"              # pair | common-driver | single
//! n = 256
//! start_date = "2020-01-01"
//! calendar = "business"      # business | daily
//! seed = 1
//! lag_days = 2.0             # pair only: y trails x
//!
//! [[components]]
//! period = 16.0
//! amplitude = 1.0
//! window = [100, 200]
//!
//! [noise]
//! alpha = 0.3
//! sigma2 = 0.5
//! mean = 0.0
//! ```

use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use wavecoh::significance::{replicate_rng, Ar1Model};
use wavecoh::synthetic::{
    common_driver, coupled_pair, generate, Component, SignalSpec, DEFAULT_TAPER,
};

use crate::artifacts::{series_csv, write_text};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    Pair,
    CommonDriver,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Calendar {
    /// Monday to Friday.
    Business,
    Daily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub kind: SimKind,
    pub n: usize,
    pub start_date: NaiveDate,
    #[serde(default = "default_calendar")]
    pub calendar: Calendar,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lag_days: f64,
    #[serde(default = "default_taper")]
    pub taper: usize,
    #[serde(default)]
    pub components: Vec<Component>,
    #[serde(default)]
    pub noise: Option<Ar1Model>,
}

fn default_calendar() -> Calendar {
    Calendar::Business
}

fn default_taper() -> usize {
    DEFAULT_TAPER
}

impl SimSpec {
    pub fn signal(&self) -> SignalSpec {
        SignalSpec {
            n: self.n,
            components: self.components.clone(),
            noise: self.noise,
            taper: self.taper,
        }
    }
}

/// `n` dates from `start` on `calendar`; a weekend start rolls forward.
pub fn calendar_dates(start: NaiveDate, n: usize, calendar: Calendar) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        let weekend = matches!(d.weekday(), Weekday::Sat | Weekday::Sun);
        if calendar == Calendar::Daily || !weekend {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Writes the simulated series into `dir`; returns the file paths.
pub fn simulate(spec: &SimSpec, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let signal = spec.signal();
    let mut rng = replicate_rng(spec.seed, 0);
    let series: Vec<(&str, Vec<f64>)> = match spec.kind {
        SimKind::Single => vec![("x", generate(&signal, &mut rng)?)],
        SimKind::Pair => {
            let (x, y) = coupled_pair(&signal, spec.lag_days, &mut rng)?;
            vec![("x", x), ("y", y)]
        }
        SimKind::CommonDriver => {
            let t = common_driver(&signal, &mut rng)?;
            vec![("y", t.y), ("x", t.x), ("z", t.z)]
        }
    };
    let dates = calendar_dates(spec.start_date, spec.n, spec.calendar);
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut paths = Vec::new();
    for (label, values) in series {
        let path = dir.join(format!("{label}.csv"));
        write_text(&path, &series_csv(label, &dates, &values))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn load_spec(path: &Path) -> CliResult<SimSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigIo {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
