//! The smoothing operator applied to cross spectra before normalisation.
//!
//! Time smoothing uses a Gaussian whose standard deviation is proportional
//! to the scale; scale smoothing is a boxcar across neighbouring rows. Both
//! kernels are renormalised by the kernel mass that falls inside the domain,
//! so constant fields pass through unchanged, including at the edges.
//!
//! Convolutions are evaluated directly. All weights are positive, which keeps
//! `|S(a b*)|^2 <= S(|a|^2) S(|b|^2)` true to rounding in every cell.

use std::ops::{Add, Mul};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cwt::ScaleGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TimeKernel {
    None,
    /// `exp(-t^2 / (2 sigma^2))` with `sigma = sigma_factor * s`, cut off at
    /// `truncate * sigma`.
    Gaussian {
        sigma_factor: f64,
        truncate: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScaleKernel {
    None,
    /// Boxcar of `width` in units of octaves, i.e. `width / dj` rows rounded
    /// to the nearest odd count.
    Boxcar {
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingSpec {
    pub time_kernel: TimeKernel,
    pub scale_kernel: ScaleKernel,
}

impl SmoothingSpec {
    /// No smoothing at all. Coherence is then identically one.
    pub fn identity() -> Self {
        Self {
            time_kernel: TimeKernel::None,
            scale_kernel: ScaleKernel::None,
        }
    }
}

impl Default for SmoothingSpec {
    /// Gaussian with `sigma = s` truncated at four sigma, and the 0.6-octave
    /// Morlet decorrelation length across scales.
    fn default() -> Self {
        Self {
            time_kernel: TimeKernel::Gaussian {
                sigma_factor: 1.0,
                truncate: 4.0,
            },
            scale_kernel: ScaleKernel::Boxcar { width: 0.6 },
        }
    }
}

/// Number of rows covered by a scale boxcar of `width` octaves.
pub fn boxcar_rows(width: f64, dj: f64) -> usize {
    let bins = width / dj;
    let half = ((bins - 1.0) / 2.0).round().max(0.0);
    2 * half as usize + 1
}

#[derive(Debug, Clone)]
struct RowKernel {
    /// `w[k]` for offsets `0..=radius`.
    weights: Vec<f64>,
    /// Reciprocal in-domain kernel mass per time index.
    inv_mass: Vec<f64>,
}

/// Precomputed smoothing operator for a fixed series length and grid.
#[derive(Debug, Clone)]
pub struct Smoother {
    n: usize,
    rows: Option<Vec<RowKernel>>,
    scale_half: usize,
}

impl Smoother {
    pub fn new(n: usize, grid: &ScaleGrid, dt: f64, spec: &SmoothingSpec) -> Self {
        let rows = match spec.time_kernel {
            TimeKernel::None => None,
            TimeKernel::Gaussian {
                sigma_factor,
                truncate,
            } => Some(
                grid.scales()
                    .iter()
                    .map(|&s| gaussian_row(n, sigma_factor * s / dt, truncate))
                    .collect(),
            ),
        };
        let scale_half = match spec.scale_kernel {
            ScaleKernel::None => 0,
            ScaleKernel::Boxcar { width } => (boxcar_rows(width, grid.dj()) - 1) / 2,
        };
        Self {
            n,
            rows,
            scale_half,
        }
    }

    pub fn smooth_complex(&self, field: &Array2<Complex64>) -> Array2<Complex64> {
        self.apply(field)
    }

    pub fn smooth_real(&self, field: &Array2<f64>) -> Array2<f64> {
        self.apply(field)
    }

    fn apply<T>(&self, field: &Array2<T>) -> Array2<T>
    where
        T: Copy + Default + Send + Sync + Add<Output = T> + Mul<f64, Output = T>,
    {
        assert_eq!(
            field.ncols(),
            self.n,
            "field length does not match smoother"
        );
        let timed = match &self.rows {
            None => field.clone(),
            Some(rows) => {
                assert_eq!(field.nrows(), rows.len(), "field rows do not match grid");
                let mut out = Array2::<T>::from_elem(field.dim(), T::default());
                out.axis_iter_mut(Axis(0))
                    .into_par_iter()
                    .zip(field.axis_iter(Axis(0)).into_par_iter())
                    .zip(rows.par_iter())
                    .for_each(|((mut dst, src), kernel)| {
                        let src = src.as_slice().expect("rows are contiguous");
                        let dst = dst.as_slice_mut().expect("rows are contiguous");
                        convolve_row(src, kernel, dst);
                    });
                out
            }
        };
        if self.scale_half == 0 {
            return timed;
        }
        boxcar_scales(&timed, self.scale_half)
    }
}

fn gaussian_row(n: usize, sigma: f64, truncate: f64) -> RowKernel {
    let radius = ((truncate * sigma).ceil() as usize).min(n - 1);
    let weights: Vec<f64> = (0..=radius)
        .map(|k| {
            let t = k as f64 / sigma;
            (-0.5 * t * t).exp()
        })
        .collect();
    // prefix[k] = sum of w[0..k]
    let mut prefix = Vec::with_capacity(radius + 2);
    prefix.push(0.0);
    for w in &weights {
        prefix.push(prefix.last().unwrap() + w);
    }
    let inv_mass = (0..n)
        .map(|i| {
            let left = i.min(radius);
            let right = (n - 1 - i).min(radius);
            // offsets -left..=right: w[0] once, w[1..=left] and w[1..=right]
            let mass = prefix[left + 1] + prefix[right + 1] - weights[0];
            1.0 / mass
        })
        .collect();
    RowKernel { weights, inv_mass }
}

fn convolve_row<T>(src: &[T], kernel: &RowKernel, dst: &mut [T])
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = src.len();
    let radius = kernel.weights.len() - 1;
    let w = &kernel.weights;
    for i in 0..n {
        let mut acc = src[i] * w[0];
        let left = i.min(radius);
        for k in 1..=left {
            acc = acc + src[i - k] * w[k];
        }
        let right = (n - 1 - i).min(radius);
        for k in 1..=right {
            acc = acc + src[i + k] * w[k];
        }
        dst[i] = acc * kernel.inv_mass[i];
    }
}

fn boxcar_scales<T>(field: &Array2<T>, half: usize) -> Array2<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let rows = field.nrows();
    let mut out = Array2::<T>::from_elem(field.dim(), T::default());
    for j in 0..rows {
        let lo = j.saturating_sub(half);
        let hi = (j + half).min(rows - 1);
        let inv = 1.0 / (hi - lo + 1) as f64;
        let mut dst = out.row_mut(j);
        for r in lo..=hi {
            for (d, s) in dst.iter_mut().zip(field.row(r)) {
                *d = *d + *s;
            }
        }
        dst.mapv_inplace(|v| v * inv);
    }
    out
}

/// One-shot smoothing of a complex field.
pub fn smooth(
    field: &Array2<Complex64>,
    grid: &ScaleGrid,
    dt: f64,
    spec: &SmoothingSpec,
) -> Array2<Complex64> {
    Smoother::new(field.ncols(), grid, dt, spec).smooth_complex(field)
}
