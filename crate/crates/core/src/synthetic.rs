//! Signals with known time–frequency content.
//!
//! A signal is a sum of (possibly windowed) cosines plus optional AR(1)
//! noise. Windows that end inside the series are tapered over a few samples
//! with a raised cosine; window edges that coincide with the series ends are
//! left sharp so a full-length component is an exact cosine.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::significance::{surrogate, Ar1Model};
use crate::{Error, Result};

pub const DEFAULT_TAPER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    /// Period in samples.
    pub period: f64,
    pub amplitude: f64,
    /// Phase offset in radians.
    #[serde(default)]
    pub phase: f64,
    /// Active half-open index range; `None` spans the whole series.
    #[serde(default)]
    pub window: Option<(usize, usize)>,
}

impl Component {
    pub fn new(period: f64, amplitude: f64) -> Self {
        Self {
            period,
            amplitude,
            phase: 0.0,
            window: None,
        }
    }

    pub fn windowed(mut self, start: usize, end: usize) -> Self {
        self.window = Some((start, end));
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// Value at continuous time `tau` for a series of length `n`.
    fn value_at(&self, tau: f64, n: usize, taper: usize) -> f64 {
        let weight = match self.window {
            None => 1.0,
            Some((start, end)) => window_weight(tau, start, end, n, taper),
        };
        if weight == 0.0 {
            return 0.0;
        }
        weight * self.amplitude * (2.0 * PI * tau / self.period + self.phase).cos()
    }
}

fn window_weight(tau: f64, start: usize, end: usize, n: usize, taper: usize) -> f64 {
    let (s, e) = (start as f64, end as f64);
    if tau < s || tau > e - 1.0 {
        return 0.0;
    }
    let ramp = |k: f64| {
        // k = number of samples from the edge, 0-based
        if taper == 0 || k >= taper as f64 {
            1.0
        } else {
            0.5 * (1.0 - (PI * (k + 1.0) / (taper as f64 + 1.0)).cos())
        }
    };
    let mut w = 1.0;
    if start > 0 {
        w *= ramp(tau - s);
    }
    if end < n {
        w *= ramp(e - 1.0 - tau);
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub n: usize,
    #[serde(default)]
    pub components: Vec<Component>,
    /// Additive noise; `None` for a purely deterministic signal.
    #[serde(default)]
    pub noise: Option<Ar1Model>,
    #[serde(default = "default_taper")]
    pub taper: usize,
}

fn default_taper() -> usize {
    DEFAULT_TAPER
}

impl SignalSpec {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            components: Vec::new(),
            noise: None,
            taper: DEFAULT_TAPER,
        }
    }

    pub fn with_component(mut self, c: Component) -> Self {
        self.components.push(c);
        self
    }

    pub fn with_noise(mut self, noise: Ar1Model) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("signal length must be > 0".into()));
        }
        for c in &self.components {
            if !(c.period.is_finite() && c.period >= 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "component period {} is below the Nyquist limit of 2 samples",
                    c.period
                )));
            }
            if !(c.amplitude.is_finite() && c.phase.is_finite()) {
                return Err(Error::InvalidParameter("component must be finite".into()));
            }
            if let Some((s, e)) = c.window {
                if s >= e || e > self.n {
                    return Err(Error::InvalidParameter(format!(
                        "window [{s}, {e}) does not lie within [0, {})",
                        self.n
                    )));
                }
            }
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }

    /// Sum of components evaluated at `t - delay`, no noise.
    pub fn deterministic(&self, delay: f64) -> Vec<f64> {
        (0..self.n)
            .map(|t| {
                let tau = t as f64 - delay;
                self.components
                    .iter()
                    .map(|c| c.value_at(tau, self.n, self.taper))
                    .sum()
            })
            .collect()
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.noise {
            Some(m) => surrogate(m, self.n, rng),
            None => vec![0.0; self.n],
        }
    }
}

/// Deterministic part plus one draw of the noise.
pub fn generate<R: Rng + ?Sized>(spec: &SignalSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let noise = spec.noise(rng);
    Ok(spec
        .deterministic(0.0)
        .into_iter()
        .zip(noise)
        .map(|(s, e)| s + e)
        .collect())
}

/// `(x, y)` where `y`'s deterministic part is `x`'s delayed by `lag` samples.
///
/// The two noise draws come from consecutive stretches of `rng` and are
/// therefore independent.
pub fn coupled_pair<R: Rng + ?Sized>(
    spec: &SignalSpec,
    lag: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    if !lag.is_finite() {
        return Err(Error::InvalidParameter("lag must be finite".into()));
    }
    let x = add(spec.deterministic(0.0), spec.noise(rng));
    let y = add(spec.deterministic(lag), spec.noise(rng));
    Ok((x, y))
}

/// Outcome, driver and conditioner sharing one common driver.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonDriver {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

/// `y = S + N1`, `x = S + N2`, `z = S` with `S` the deterministic part of
/// `spec` and `N1`, `N2` independent draws of its noise.
pub fn common_driver<R: Rng + ?Sized>(spec: &SignalSpec, rng: &mut R) -> Result<CommonDriver> {
    spec.validate()?;
    let s = spec.deterministic(0.0);
    let y = add(s.clone(), spec.noise(rng));
    let x = add(s.clone(), spec.noise(rng));
    Ok(CommonDriver { y, x, z: s })
}

fn add(a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.into_iter().zip(b).map(|(a, b)| a + b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::significance::replicate_rng;

    #[test]
    fn empty_spec_is_silent() {
        let x = generate(&SignalSpec::new(32), &mut replicate_rng(0, 0)).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_window_is_an_exact_cosine() {
        let spec = SignalSpec::new(256).with_component(Component::new(16.0, 1.0));
        let x = generate(&spec, &mut replicate_rng(0, 0)).unwrap();
        for (t, v) in x.iter().enumerate() {
            assert!((v - (2.0 * PI * t as f64 / 16.0).cos()).abs() <= 1e-12);
        }
    }

    #[test]
    fn taper_is_monotone_and_bounded() {
        let spec = SignalSpec::new(100).with_component(Component::new(1e9, 1.0).windowed(20, 60));
        let x = spec.deterministic(0.0);
        for w in x[20..25].windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(x[20] > 0.0 && x[24] < 1.0);
        assert!((x[40] - 1.0).abs() < 1e-12);
        assert_eq!(x[19], 0.0);
        assert_eq!(x[60], 0.0);
    }

    #[test]
    fn validation() {
        let bad = SignalSpec::new(10).with_component(Component::new(1.5, 1.0));
        assert!(bad.validate().is_err());
        let bad = SignalSpec::new(10).with_component(Component::new(4.0, 1.0).windowed(5, 11));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_lag_pairs_share_the_deterministic_part() {
        let spec = SignalSpec::new(64).with_component(Component::new(8.0, 2.0).windowed(10, 50));
        let (x, y) = coupled_pair(&spec, 0.0, &mut replicate_rng(1, 0)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn quarter_cycle_lag_is_a_sine() {
        let spec = SignalSpec::new(64).with_component(Component::new(16.0, 1.0));
        let (x, y) = coupled_pair(&spec, 4.0, &mut replicate_rng(1, 0)).unwrap();
        for t in 0..64 {
            let a = 2.0 * PI * t as f64 / 16.0;
            assert!((x[t] - a.cos()).abs() < 1e-12);
            assert!((y[t] - a.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn common_driver_conditioner_is_the_clean_driver() {
        let spec = SignalSpec::new(64)
            .with_component(Component::new(16.0, 1.0))
            .with_noise(Ar1Model::new(0.2, 0.1, 0.0).unwrap());
        let t = common_driver(&spec, &mut replicate_rng(5, 0)).unwrap();
        assert_eq!(t.z, spec.deterministic(0.0));
        assert_ne!(t.x, t.y);
    }
}
