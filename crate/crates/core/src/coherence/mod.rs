//! Cross-wavelet spectra, squared wavelet coherence and partial wavelet
//! coherence.
//!
//! With `S` the smoothing operator and every row weighted by `1/s` before
//! smoothing, the estimators are
//!
//! ```text
//! R(X,Y)      = S(Wx conj(Wy) / s) / sqrt(S(|Wx|^2 / s) S(|Wy|^2 / s))
//! R^2(X,Y)    = |R(X,Y)|^2
//! RP^2(Y,X:Z) = |R(Y,X) - R(Y,Z) conj(R(X,Z))|^2
//!               / ((1 - |R(Y,Z)|^2) (1 - |R(X,Z)|^2))
//! ```
//!
//! Cells where a smoothed auto-spectrum vanishes, or where a partial
//! denominator factor drops below [`PWC_DEGENERATE`], hold `NaN` in both the
//! coherence and phase matrices and are skipped by every statistic.

mod phase;
mod smoothing;

use std::f64::consts::PI;

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use phase::{circular_mean, phase_arrows, PhaseArrow, PhaseClass, DEFAULT_PHASE_TOLERANCE};
pub use smoothing::{boxcar_rows, smooth, ScaleKernel, Smoother, SmoothingSpec, TimeKernel};

use crate::cwt::{ScaleGrid, WaveletField};
use crate::{Error, Result};

/// Partial denominator factors below this mark a cell as degenerate.
pub const PWC_DEGENERATE: f64 = 1e-6;

/// Smoothed auto-spectra below this fraction of their field maximum are
/// treated as zero.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

/// Rounding slack tolerated on either side of `[0, 1]` before clamping.
pub const UNIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceKind {
    Wtc,
    Pwc,
}

impl CoherenceKind {
    /// Number of input series the estimator consumes.
    pub fn arity(self) -> usize {
        match self {
            CoherenceKind::Wtc => 2,
            CoherenceKind::Pwc => 3,
        }
    }
}

impl std::fmt::Display for CoherenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoherenceKind::Wtc => "wtc",
            CoherenceKind::Pwc => "pwc",
        })
    }
}

/// Squared coherence and phase over the time–scale plane.
#[derive(Debug, Clone)]
pub struct CoherenceField {
    /// Squared coherence, `NaN` at degenerate cells.
    pub r2: Array2<f64>,
    /// Phase in `(-pi, pi]`, `NaN` at degenerate cells.
    pub phase: Array2<f64>,
    pub coi: Vec<f64>,
    pub grid: ScaleGrid,
    pub dt: f64,
    pub smoothing: SmoothingSpec,
    pub kind: CoherenceKind,
    /// Input names in argument order: `[x, y]` for WTC, `[y, x, z]` for PWC.
    pub labels: Vec<String>,
}

impl CoherenceField {
    pub fn len(&self) -> usize {
        self.r2.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.r2.ncols() == 0
    }

    pub fn is_defined(&self, scale: usize, time: usize) -> bool {
        !self.r2[[scale, time]].is_nan()
    }

    pub fn inside_coi(&self, scale: usize, time: usize) -> bool {
        self.grid.periods()[scale] <= self.coi[time]
    }

    pub fn coi_mask(&self) -> Array2<bool> {
        coi_mask(&self.grid, &self.coi)
    }

    /// Count of degenerate cells, optionally restricted to the cone.
    pub fn degenerate_count(&self, inside_coi_only: bool) -> usize {
        self.cells()
            .filter(|&(j, n)| !inside_coi_only || self.inside_coi(j, n))
            .filter(|&(j, n)| !self.is_defined(j, n))
            .count()
    }

    /// Defined in-cone values of `r2`.
    pub fn in_coi_values(&self) -> Vec<f64> {
        self.cells()
            .filter(|&(j, n)| self.inside_coi(j, n) && self.is_defined(j, n))
            .map(|(j, n)| self.r2[[j, n]])
            .collect()
    }

    pub fn mean_in_coi(&self) -> Option<f64> {
        let v = self.in_coi_values();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (rows, cols) = self.r2.dim();
        (0..rows).flat_map(move |j| (0..cols).map(move |n| (j, n)))
    }
}

/// Cells whose period lies within the cone of influence.
pub fn coi_mask(grid: &ScaleGrid, coi: &[f64]) -> Array2<bool> {
    Array2::from_shape_fn((grid.len(), coi.len()), |(j, n)| {
        grid.periods()[j] <= coi[n]
    })
}

/// Smoothed, normalised cross spectrum `R(X,Y)`; `NaN` where undefined.
#[derive(Debug, Clone)]
pub struct ComplexCoherence {
    pub values: Array2<Complex64>,
}

impl ComplexCoherence {
    pub fn r2(&self) -> Array2<f64> {
        self.values.mapv(|c| c.norm_sqr())
    }
}

/// `wx * conj(wy)` elementwise.
pub fn cross_wavelet(wx: &WaveletField, wy: &WaveletField) -> Result<Array2<Complex64>> {
    check_compatible(wx, wy)?;
    Ok(Zip::from(&wx.coeffs)
        .and(&wy.coeffs)
        .map_collect(|a, b| a * b.conj()))
}

fn check_compatible(a: &WaveletField, b: &WaveletField) -> Result<()> {
    if a.coeffs.dim() != b.coeffs.dim() {
        return Err(Error::IncompatibleFields(format!(
            "`{}` is {:?} but `{}` is {:?}",
            a.series_name,
            a.coeffs.dim(),
            b.series_name,
            b.coeffs.dim()
        )));
    }
    if a.grid != b.grid {
        return Err(Error::IncompatibleFields(format!(
            "`{}` and `{}` use different scale grids",
            a.series_name, b.series_name
        )));
    }
    if a.dt != b.dt {
        return Err(Error::IncompatibleFields(format!(
            "`{}` and `{}` use different sampling intervals",
            a.series_name, b.series_name
        )));
    }
    Ok(())
}

/// Maps values within [`UNIT_SLACK`] outside `[0, 1]` onto the interval.
///
/// Anything further out is returned unchanged so that callers checking the
/// range still see genuine numerical failures.
pub fn clamp_unit(v: f64) -> f64 {
    if (-UNIT_SLACK..0.0).contains(&v) {
        0.0
    } else if v > 1.0 && v <= 1.0 + UNIT_SLACK {
        1.0
    } else {
        v
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    if angle <= -PI {
        angle + 2.0 * PI
    } else {
        angle
    }
}

/// Smoothed auto-spectrum of one series plus its degeneracy floor.
struct AutoSpectrum {
    values: Array2<f64>,
    floor: f64,
}

impl AutoSpectrum {
    fn is_zero(&self, j: usize, n: usize) -> bool {
        self.values[[j, n]] <= self.floor
    }
}

/// Coherence estimators bound to one length, grid and smoothing spec.
///
/// Building the smoother is the only setup cost; reuse the engine when many
/// fields of the same shape are processed.
#[derive(Debug, Clone)]
pub struct CoherenceEngine {
    smoother: Smoother,
    grid: ScaleGrid,
    dt: f64,
    spec: SmoothingSpec,
    inv_scales: Vec<f64>,
    n: usize,
}

impl CoherenceEngine {
    pub fn new(n: usize, grid: &ScaleGrid, dt: f64, spec: &SmoothingSpec) -> Self {
        Self {
            smoother: Smoother::new(n, grid, dt, spec),
            grid: grid.clone(),
            dt,
            spec: *spec,
            inv_scales: grid.scales().iter().map(|s| 1.0 / s).collect(),
            n,
        }
    }

    pub fn for_field(field: &WaveletField, spec: &SmoothingSpec) -> Self {
        Self::new(field.len(), &field.grid, field.dt, spec)
    }

    fn check(&self, fields: &[&WaveletField]) -> Result<()> {
        for f in fields {
            if f.len() != self.n || f.grid != self.grid || f.dt != self.dt {
                return Err(Error::IncompatibleFields(format!(
                    "`{}` does not match the engine's length, grid or dt",
                    f.series_name
                )));
            }
        }
        for pair in fields.windows(2) {
            check_compatible(pair[0], pair[1])?;
        }
        Ok(())
    }

    /// `S(a conj(b) / s)`.
    fn smoothed_cross(&self, a: &WaveletField, b: &WaveletField) -> Array2<Complex64> {
        let mut cross = Zip::from(&a.coeffs)
            .and(&b.coeffs)
            .map_collect(|a, b| a * b.conj());
        for (mut row, inv) in cross.axis_iter_mut(Axis(0)).zip(&self.inv_scales) {
            row.mapv_inplace(|v| v * *inv);
        }
        self.smoother.smooth_complex(&cross)
    }

    /// `S(|a|^2 / s)` for several fields, two at a time packed into the real
    /// and imaginary parts of one complex pass.
    fn auto_spectra(&self, fields: &[&WaveletField]) -> Vec<AutoSpectrum> {
        let mut out = Vec::with_capacity(fields.len());
        for chunk in fields.chunks(2) {
            let mut packed = Array2::<Complex64>::zeros(chunk[0].coeffs.dim());
            for (k, f) in chunk.iter().enumerate() {
                Zip::from(packed.rows_mut())
                    .and(f.coeffs.rows())
                    .and(&ndarray::ArrayView1::from(&self.inv_scales))
                    .for_each(|mut dst, src, inv| {
                        for (d, c) in dst.iter_mut().zip(src) {
                            let p = c.norm_sqr() * inv;
                            if k == 0 {
                                d.re = p;
                            } else {
                                d.im = p;
                            }
                        }
                    });
            }
            let smoothed = self.smoother.smooth_complex(&packed);
            for k in 0..chunk.len() {
                let values = smoothed.mapv(|c| if k == 0 { c.re } else { c.im });
                let max = values.iter().cloned().fold(0.0, f64::max);
                out.push(AutoSpectrum {
                    values,
                    floor: max * SPECTRUM_FLOOR,
                });
            }
        }
        out
    }

    fn normalise(
        &self,
        cross: &Array2<Complex64>,
        a: &AutoSpectrum,
        b: &AutoSpectrum,
    ) -> ComplexCoherence {
        let values = Array2::from_shape_fn(cross.dim(), |(j, n)| {
            if a.is_zero(j, n) || b.is_zero(j, n) {
                Complex64::new(f64::NAN, f64::NAN)
            } else {
                cross[[j, n]] / (a.values[[j, n]] * b.values[[j, n]]).sqrt()
            }
        });
        ComplexCoherence { values }
    }

    pub fn complex_coherence(
        &self,
        wx: &WaveletField,
        wy: &WaveletField,
    ) -> Result<ComplexCoherence> {
        self.check(&[wx, wy])?;
        let auto = self.auto_spectra(&[wx, wy]);
        Ok(self.normalise(&self.smoothed_cross(wx, wy), &auto[0], &auto[1]))
    }

    pub fn wtc(&self, wx: &WaveletField, wy: &WaveletField) -> Result<CoherenceField> {
        self.check(&[wx, wy])?;
        let auto = self.auto_spectra(&[wx, wy]);
        let cross = self.smoothed_cross(wx, wy);
        let (ax, ay) = (&auto[0], &auto[1]);
        let mut r2 = Array2::<f64>::zeros(cross.dim());
        let mut phase = Array2::<f64>::zeros(cross.dim());
        for ((j, n), c) in cross.indexed_iter() {
            if ax.is_zero(j, n) || ay.is_zero(j, n) {
                r2[[j, n]] = f64::NAN;
                phase[[j, n]] = f64::NAN;
            } else {
                let ratio = c.norm_sqr() / (ax.values[[j, n]] * ay.values[[j, n]]);
                r2[[j, n]] = clamp_unit(ratio);
                phase[[j, n]] = wrap_phase(c.arg());
            }
        }
        Ok(self.field(r2, phase, CoherenceKind::Wtc, &[wx, wy]))
    }

    pub fn pwc(
        &self,
        wy: &WaveletField,
        wx: &WaveletField,
        wz: &WaveletField,
    ) -> Result<CoherenceField> {
        self.check(&[wy, wx, wz])?;
        let auto = self.auto_spectra(&[wy, wx, wz]);
        let (ay, ax, az) = (&auto[0], &auto[1], &auto[2]);
        let r_yx = self.normalise(&self.smoothed_cross(wy, wx), ay, ax);
        let r_yz = self.normalise(&self.smoothed_cross(wy, wz), ay, az);
        let r_xz = self.normalise(&self.smoothed_cross(wx, wz), ax, az);
        let (r2, phase) = partial_coherence(&r_yx, &r_yz, &r_xz);
        if r2.iter().all(|v| v.is_nan()) {
            return Err(Error::AllDegenerate(format!(
                "conditioning on `{}` leaves no defined cell for `{}` vs `{}`",
                wz.series_name, wy.series_name, wx.series_name
            )));
        }
        Ok(self.field(r2, phase, CoherenceKind::Pwc, &[wy, wx, wz]))
    }

    fn field(
        &self,
        r2: Array2<f64>,
        phase: Array2<f64>,
        kind: CoherenceKind,
        inputs: &[&WaveletField],
    ) -> CoherenceField {
        CoherenceField {
            r2,
            phase,
            coi: inputs[0].coi.clone(),
            grid: self.grid.clone(),
            dt: self.dt,
            smoothing: self.spec,
            kind,
            labels: inputs.iter().map(|f| f.series_name.clone()).collect(),
        }
    }
}

/// Cellwise partial coherence from the three pairwise complex coherences.
///
/// Returns `(RP^2, phase)`; the phase is the argument of the partial
/// numerator `R(Y,X) - R(Y,Z) conj(R(X,Z))`.
pub fn partial_coherence(
    r_yx: &ComplexCoherence,
    r_yz: &ComplexCoherence,
    r_xz: &ComplexCoherence,
) -> (Array2<f64>, Array2<f64>) {
    let dim = r_yx.values.dim();
    let mut r2 = Array2::<f64>::zeros(dim);
    let mut phase = Array2::<f64>::zeros(dim);
    Zip::from(&mut r2)
        .and(&mut phase)
        .and(&r_yx.values)
        .and(&r_yz.values)
        .and(&r_xz.values)
        .for_each(|r2, phase, &yx, &yz, &xz| {
            let fy = 1.0 - yz.norm_sqr();
            let fx = 1.0 - xz.norm_sqr();
            // NaN inputs fail both comparisons and land in the degenerate arm.
            if fy >= PWC_DEGENERATE && fx >= PWC_DEGENERATE && !yx.re.is_nan() {
                let num = yx - yz * xz.conj();
                *r2 = clamp_unit(num.norm_sqr() / (fy * fx));
                *phase = wrap_phase(num.arg());
            } else {
                *r2 = f64::NAN;
                *phase = f64::NAN;
            }
        });
    (r2, phase)
}

pub fn wtc(wx: &WaveletField, wy: &WaveletField, spec: &SmoothingSpec) -> Result<CoherenceField> {
    check_compatible(wx, wy)?;
    CoherenceEngine::for_field(wx, spec).wtc(wx, wy)
}

pub fn complex_coherence(
    wx: &WaveletField,
    wy: &WaveletField,
    spec: &SmoothingSpec,
) -> Result<ComplexCoherence> {
    check_compatible(wx, wy)?;
    CoherenceEngine::for_field(wx, spec).complex_coherence(wx, wy)
}

/// Partial coherence of outcome `wy` and driver `wx` given conditioner `wz`.
pub fn pwc(
    wy: &WaveletField,
    wx: &WaveletField,
    wz: &WaveletField,
    spec: &SmoothingSpec,
) -> Result<CoherenceField> {
    check_compatible(wy, wx)?;
    check_compatible(wy, wz)?;
    CoherenceEngine::for_field(wy, spec).pwc(wy, wx, wz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwt::{cwt, MotherWavelet};

    fn field(values: &[f64]) -> WaveletField {
        let grid = ScaleGrid::new(2.0, 0.25, 12, MotherWavelet::default()).unwrap();
        cwt(values, &grid, 1.0).unwrap()
    }

    fn hand_field(coeffs: Array2<Complex64>) -> WaveletField {
        let grid = ScaleGrid::new(2.0, 1.0, coeffs.nrows(), MotherWavelet::default()).unwrap();
        let n = coeffs.ncols();
        WaveletField {
            coeffs,
            grid,
            dt: 1.0,
            coi: vec![0.0; n],
            series_name: "h".into(),
        }
    }

    #[test]
    fn cross_wavelet_by_hand() {
        let a = hand_field(Array2::from_elem((2, 2), Complex64::new(1.0, 1.0)));
        let b = hand_field(Array2::from_elem((2, 2), Complex64::new(2.0, -1.0)));
        let c = cross_wavelet(&a, &b).unwrap();
        assert!(c.iter().all(|v| *v == Complex64::new(1.0, 3.0)));
        let swapped = cross_wavelet(&b, &a).unwrap();
        assert!(swapped.iter().zip(&c).all(|(s, c)| *s == c.conj()));
        let auto = cross_wavelet(&a, &a).unwrap();
        assert!(auto.iter().all(|v| v.im == 0.0 && v.re == 2.0));
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let a = field(&(0..64).map(|i| (i as f64).sin()).collect::<Vec<_>>());
        let b = field(&(0..32).map(|i| (i as f64).cos()).collect::<Vec<_>>());
        assert!(matches!(
            cross_wavelet(&a, &b),
            Err(Error::IncompatibleFields(_))
        ));
        assert!(wtc(&a, &b, &SmoothingSpec::default()).is_err());
    }

    #[test]
    fn self_coherence_is_one_with_zero_phase() {
        let x: Vec<f64> = (0..96).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let f = field(&x);
        let c = wtc(&f, &f, &SmoothingSpec::default()).unwrap();
        for (&r, &p) in c.r2.iter().zip(&c.phase) {
            assert!((r - 1.0).abs() < 1e-9);
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn zero_series_is_fully_degenerate() {
        let z = field(&[0.0; 64]);
        let x = field(&(0..64).map(|i| (i as f64 * 0.3).sin()).collect::<Vec<_>>());
        let c = wtc(&x, &z, &SmoothingSpec::default()).unwrap();
        assert!(c.r2.iter().all(|v| v.is_nan()));
        assert_eq!(c.mean_in_coi(), None);
    }

    #[test]
    fn conditioning_on_the_driver_is_degenerate() {
        let x = field(&(0..64).map(|i| (i as f64 * 0.3).sin()).collect::<Vec<_>>());
        let y = field(&(0..64).map(|i| (i as f64 * 0.7).cos()).collect::<Vec<_>>());
        let err = pwc(&y, &x, &x, &SmoothingSpec::default()).unwrap_err();
        assert!(matches!(err, Error::AllDegenerate(_)));
    }

    #[test]
    fn partial_reduces_to_plain_when_conditioning_vanishes() {
        let ryx = ComplexCoherence {
            values: Array2::from_shape_fn((3, 4), |(j, n)| {
                Complex64::from_polar(0.1 + 0.2 * j as f64, n as f64)
            }),
        };
        let zero = ComplexCoherence {
            values: Array2::zeros((3, 4)),
        };
        let (r2, phase) = partial_coherence(&ryx, &zero, &zero);
        for ((r, p), v) in r2.iter().zip(&phase).zip(&ryx.values) {
            assert_eq!(*r, v.norm_sqr());
            assert_eq!(*p, wrap_phase(v.arg()));
        }
    }

    #[test]
    fn clamping_only_absorbs_rounding() {
        assert_eq!(clamp_unit(-1e-13), 0.0);
        assert_eq!(clamp_unit(1.0 + 1e-13), 1.0);
        assert_eq!(clamp_unit(1.5), 1.5);
        assert_eq!(clamp_unit(0.3), 0.3);
    }

    #[test]
    fn phase_wraps_into_half_open_interval() {
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(Complex64::new(-1.0, -0.0).arg(), -PI);
    }
}
