//! Time–frequency co-movement diagnostics for daily time series.
//!
//! The crate covers the whole chain from raw CSV ingestion to significance
//! masks:
//!
//! * [`preprocess`]: loading, calendar alignment, lags, ratios, OLS
//!   orthogonalization and (log-)differencing.
//! * [`cwt`]: Morlet continuous wavelet transform on a dyadic scale grid and
//!   its cone of influence.
//! * [`coherence`]: cross-wavelet spectra, the smoothing operator, squared
//!   wavelet coherence, phase differences and partial wavelet coherence.
//! * [`significance`]: AR(1) red-noise surrogates, pointwise Monte Carlo
//!   thresholds and contour extraction.
//! * [`synthetic`]: ground-truth generators used to verify all of the above.

pub mod coherence;
pub mod cwt;
mod error;
pub mod preprocess;
pub mod significance;
pub mod synthetic;

pub use error::{Error, Result};

pub use num_complex::Complex64;
