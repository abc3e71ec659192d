//! Morlet continuous wavelet transform.
//!
//! Coefficients are computed in the frequency domain after demeaning and
//! zero-padding. For a sampling interval `dt` and scale `s` the transform is
//!
//! ```text
//! W_n(s) = sqrt(dt / s) * sum_m x_m * conj(psi0((m - n) * dt / s))
//! ```
//!
//! i.e. each daughter wavelet carries unit energy, so white noise has the
//! same expected power at every scale.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shortest series accepted by the transform.
pub const MIN_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletKind {
    Morlet,
}

/// Mother wavelet configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotherWavelet {
    pub kind: WaveletKind,
    /// Non-dimensional centre frequency.
    pub omega0: f64,
}

impl MotherWavelet {
    /// Morlet wavelet; `omega0` below 5 is rejected because the wavelet is
    /// then no longer approximately admissible.
    pub fn morlet(omega0: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 >= 5.0) {
            return Err(Error::InvalidParameter(format!(
                "Morlet omega0 must be >= 5, got {omega0}"
            )));
        }
        Ok(Self {
            kind: WaveletKind::Morlet,
            omega0,
        })
    }

    /// Fourier period divided by scale.
    pub fn fourier_factor(&self) -> f64 {
        let w = self.omega0;
        4.0 * PI / (w + (2.0 + w * w).sqrt())
    }

    /// E-folding time of the wavelet power envelope divided by scale.
    pub fn efold_factor(&self) -> f64 {
        SQRT_2
    }

    /// `psi0(eta)` in the time domain.
    pub fn time_domain(&self, eta: f64) -> Complex64 {
        let envelope = PI.powf(-0.25) * (-0.5 * eta * eta).exp();
        Complex64::from_polar(envelope, self.omega0 * eta)
    }

    /// Fourier transform of `psi0` at `s * omega`, normalised so the daughter
    /// at scale `s` has unit energy: `sqrt(2 pi s / dt) * pi^-1/4 * exp(-(s w - w0)^2 / 2)`.
    fn daughter_spectrum(&self, scale: f64, omega: f64, dt: f64) -> f64 {
        let d = scale * omega - self.omega0;
        (2.0 * PI * scale / dt).sqrt() * PI.powf(-0.25) * (-0.5 * d * d).exp()
    }
}

impl Default for MotherWavelet {
    fn default() -> Self {
        Self {
            kind: WaveletKind::Morlet,
            omega0: 6.0,
        }
    }
}

/// Geometric set of scales `s_j = s0 * 2^(j * dj)` and their Fourier periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    s0: f64,
    dj: f64,
    scales: Vec<f64>,
    periods: Vec<f64>,
    wavelet: MotherWavelet,
}

impl ScaleGrid {
    pub fn new(s0: f64, dj: f64, num_scales: usize, wavelet: MotherWavelet) -> Result<Self> {
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::InvalidParameter(format!("s0 must be > 0, got {s0}")));
        }
        if !(dj.is_finite() && dj > 0.0) {
            return Err(Error::InvalidParameter(format!("dj must be > 0, got {dj}")));
        }
        if num_scales == 0 {
            return Err(Error::InvalidParameter("scale grid is empty".into()));
        }
        let scales: Vec<f64> = (0..num_scales)
            .map(|j| s0 * 2f64.powf(j as f64 * dj))
            .collect();
        let ff = wavelet.fourier_factor();
        let periods = scales.iter().map(|s| s * ff).collect();
        Ok(Self {
            s0,
            dj,
            scales,
            periods,
            wavelet,
        })
    }

    /// Smallest grid starting at `s0` whose largest period reaches `max_period`.
    pub fn up_to_period(s0: f64, dj: f64, max_period: f64, wavelet: MotherWavelet) -> Result<Self> {
        if !(max_period.is_finite() && max_period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "max period must be > 0, got {max_period}"
            )));
        }
        let first = s0 * wavelet.fourier_factor();
        let steps = ((max_period / first).log2() / dj).ceil().max(0.0);
        Self::new(s0, dj, steps as usize + 1, wavelet)
    }

    /// Grid spanning up to the series duration, `J = log2(N dt / s0) / dj`.
    pub fn full_range(n: usize, dt: f64, s0: f64, dj: f64, wavelet: MotherWavelet) -> Result<Self> {
        let steps = ((n as f64 * dt / s0).log2() / dj).floor().max(0.0);
        Self::new(s0, dj, steps as usize + 1, wavelet)
    }

    /// `s0 = 2 dt`, twelve voices per octave, periods up to 32 days.
    pub fn daily_default(dt: f64) -> Self {
        Self::up_to_period(2.0 * dt, 1.0 / 12.0, 32.0, MotherWavelet::default())
            .expect("default grid parameters are valid")
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn dj(&self) -> f64 {
        self.dj
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn wavelet(&self) -> &MotherWavelet {
        &self.wavelet
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }
}

/// Cone of influence in period units.
///
/// The edge effect at distance `d` from the nearest end has decayed by
/// `e^-2` for scales whose e-folding time `efold * s` equals `d`, so the
/// largest reliable period there is `fourier_factor * d * dt / efold`.
pub fn coi(n: usize, dt: f64, wavelet: &MotherWavelet) -> Vec<f64> {
    let factor = wavelet.fourier_factor() / wavelet.efold_factor() * dt;
    (0..n)
        .map(|i| factor * i.min(n.saturating_sub(1) - i) as f64)
        .collect()
}

/// CWT coefficients of one series, `rows = scales`, `cols = time`.
#[derive(Debug, Clone)]
pub struct WaveletField {
    pub coeffs: Array2<Complex64>,
    pub grid: ScaleGrid,
    pub dt: f64,
    pub coi: Vec<f64>,
    pub series_name: String,
}

impl WaveletField {
    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.ncols() == 0
    }

    /// `|W|^2`.
    pub fn power(&self) -> Array2<f64> {
        self.coeffs.mapv(|c| c.norm_sqr())
    }

    /// `|W|^2 / s`: a unit sinusoid then peaks at the same height at every scale.
    pub fn rectified_power(&self) -> Array2<f64> {
        let mut p = self.power();
        for (mut row, s) in p.axis_iter_mut(Axis(0)).zip(self.grid.scales()) {
            row.mapv_inplace(|v| v / s);
        }
        p
    }

    /// Time-averaged power per scale.
    pub fn global_power(&self) -> Vec<f64> {
        self.coeffs
            .axis_iter(Axis(0))
            .map(|row| row.iter().map(|c| c.norm_sqr()).sum::<f64>() / row.len() as f64)
            .collect()
    }

    pub fn inside_coi(&self, scale: usize, time: usize) -> bool {
        self.grid.periods()[scale] <= self.coi[time]
    }
}

/// Reusable transform for a fixed length and grid.
///
/// Daughter spectra and FFT plans are computed once, which matters for the
/// Monte Carlo loops that transform hundreds of surrogates of equal length.
pub struct CwtPlan {
    n: usize,
    padded: usize,
    dt: f64,
    grid: ScaleGrid,
    daughters: Vec<Vec<f64>>,
    coi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CwtPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CwtPlan")
            .field("n", &self.n)
            .field("padded", &self.padded)
            .field("dt", &self.dt)
            .field("scales", &self.grid.len())
            .finish()
    }
}

/// Padded length `2^(round(log2 n) + 1)`, at least about `1.4 n`, which
/// keeps the circular wrap-around of the FFT off the retained samples.
pub fn padded_len(n: usize) -> usize {
    let exp = (n as f64).log2().round() as u32 + 1;
    1usize << exp
}

impl CwtPlan {
    pub fn new(n: usize, grid: &ScaleGrid, dt: f64) -> Result<Self> {
        if n < MIN_LEN {
            return Err(Error::TooShort {
                series: "cwt input".into(),
                len: n,
                min: MIN_LEN,
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if grid.s0() >= n as f64 * dt {
            return Err(Error::InvalidParameter(format!(
                "smallest scale {} is not shorter than the series duration {}",
                grid.s0(),
                n as f64 * dt
            )));
        }

        let padded = padded_len(n);
        let omegas: Vec<f64> = (0..padded)
            .map(|k| {
                let k = if k <= padded / 2 {
                    k as f64
                } else {
                    k as f64 - padded as f64
                };
                2.0 * PI * k / (padded as f64 * dt)
            })
            .collect();
        let wavelet = *grid.wavelet();
        let daughters = grid
            .scales()
            .iter()
            .map(|&s| {
                omegas
                    .iter()
                    .map(|&w| wavelet.daughter_spectrum(s, w, dt))
                    .collect()
            })
            .collect();

        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            padded,
            dt,
            grid: grid.clone(),
            daughters,
            coi: coi(n, dt, &wavelet),
            forward: planner.plan_fft_forward(padded),
            inverse: planner.plan_fft_inverse(padded),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coi(&self) -> &[f64] {
        &self.coi
    }

    pub fn transform(&self, x: &[f64], name: &str) -> Result<WaveletField> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.n,
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                series: name.to_string(),
                index,
            });
        }

        let mean = x.iter().sum::<f64>() / self.n as f64;
        let mut spectrum: Vec<Complex64> = x
            .iter()
            .map(|&v| Complex64::new(v - mean, 0.0))
            .chain(std::iter::repeat_n(
                Complex64::new(0.0, 0.0),
                self.padded - self.n,
            ))
            .collect();
        self.forward.process(&mut spectrum);

        let mut coeffs = Array2::<Complex64>::zeros((self.grid.len(), self.n));
        let scale = 1.0 / self.padded as f64;
        coeffs
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(self.daughters.par_iter())
            .for_each(|(mut row, daughter)| {
                let mut buf: Vec<Complex64> =
                    spectrum.iter().zip(daughter).map(|(c, d)| c * d).collect();
                self.inverse.process(&mut buf);
                for (dst, src) in row.iter_mut().zip(&buf[..self.n]) {
                    *dst = src * scale;
                }
            });

        Ok(WaveletField {
            coeffs,
            grid: self.grid.clone(),
            dt: self.dt,
            coi: self.coi.clone(),
            series_name: name.to_string(),
        })
    }
}

/// One-shot transform of `x` over `grid`.
pub fn cwt(x: &[f64], grid: &ScaleGrid, dt: f64) -> Result<WaveletField> {
    CwtPlan::new(x.len(), grid, dt)?.transform(x, "x")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn morlet_factors() {
        let w = MotherWavelet::default();
        let ff = w.fourier_factor();
        assert!(ff > 1.032 && ff < 1.034, "{ff}");
        assert_eq!(w.efold_factor(), SQRT_2);
        assert!(MotherWavelet::morlet(4.0).is_err());
        assert!(MotherWavelet::morlet(5.0).is_ok());
    }

    #[test]
    fn default_grid_reaches_32_days() {
        let g = ScaleGrid::daily_default(1.0);
        assert_eq!(g.s0(), 2.0);
        assert!(g.periods()[0] >= 2.0);
        assert!(*g.periods().last().unwrap() >= 32.0);
        assert!(g.periods()[g.len() - 2] < 32.0);
        assert!(g.len() <= 60);
        let ratio = 2f64.powf(1.0 / 12.0);
        for w in g.scales().windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        let w = MotherWavelet::default();
        assert!(ScaleGrid::new(0.0, 0.1, 3, w).is_err());
        assert!(ScaleGrid::new(2.0, -0.1, 3, w).is_err());
        assert!(ScaleGrid::new(2.0, 0.1, 0, w).is_err());
        let full = ScaleGrid::full_range(128, 1.0, 2.0, 0.25, w).unwrap();
        assert_eq!(full.len(), 25);
    }

    #[test]
    fn coi_edges_and_symmetry() {
        let w = MotherWavelet::default();
        assert_eq!(coi(2, 1.0, &w), vec![0.0, 0.0]);
        let c = coi(126, 1.0, &w);
        for i in 0..126 {
            assert_eq!(c[i], c[125 - i]);
        }
        assert_eq!(c[0], 0.0);
        let peak = c.iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, c[62]);
    }

    #[test]
    fn zeros_transform_to_zeros() {
        let g = ScaleGrid::daily_default(1.0);
        let f = cwt(&[0.0; 64], &g, 1.0).unwrap();
        assert!(f.coeffs.iter().all(|c| c.norm() == 0.0));
        assert!(f.power().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn rejects_short_or_non_finite_input() {
        let g = ScaleGrid::daily_default(1.0);
        assert!(matches!(
            cwt(&[1.0; 7], &g, 1.0),
            Err(Error::TooShort { .. })
        ));
        let mut x = vec![1.0; 16];
        x[3] = f64::NAN;
        assert!(matches!(
            cwt(&x, &g, 1.0),
            Err(Error::NonFinite { index: 3, .. })
        ));
        let wide = ScaleGrid::new(20.0, 0.25, 4, MotherWavelet::default()).unwrap();
        assert!(cwt(&[1.0; 16], &wide, 1.0).is_err());
    }

    #[test]
    fn power_of_single_entry() {
        let g = ScaleGrid::new(2.0, 1.0, 1, MotherWavelet::default()).unwrap();
        let field = WaveletField {
            coeffs: Array2::from_elem((1, 1), Complex64::new(3.0, 4.0)),
            grid: g,
            dt: 1.0,
            coi: vec![0.0],
            series_name: "t".into(),
        };
        assert_eq!(field.power()[[0, 0]], 25.0);
    }

    #[test]
    fn padding_rule() {
        assert_eq!(padded_len(128), 256);
        assert_eq!(padded_len(126), 256);
        assert_eq!(padded_len(129), 256);
        assert_eq!(padded_len(10_000), 16_384);
    }
}
