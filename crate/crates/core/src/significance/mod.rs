//! Pointwise Monte Carlo significance against an AR(1) red-noise null.
//!
//! Each input series is replaced by an AR(1) process with its own lag-1
//! autocorrelation and variance. Every surrogate replicate runs the exact
//! transform and coherence pipeline of the observed field, and the
//! `(1 - level)` quantile of the replicates in each cell becomes the
//! threshold.
//!
//! Replicate `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`,
//! so the result depends only on the master seed and not on how rayon
//! schedules the replicates.

mod contour;

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use contour::{contour, Contour};

use crate::coherence::{CoherenceEngine, CoherenceField, CoherenceKind};
use crate::cwt::CwtPlan;
use crate::{Error, Result};

/// Fitted coefficients are clamped to this magnitude.
pub const MAX_ALPHA: f64 = 0.99;

/// Samples discarded before a surrogate is recorded.
pub const BURN_IN: usize = 100;

pub const MIN_SURROGATES: usize = 100;

/// Stationary AR(1): `x_t = mean + alpha (x_{t-1} - mean) + e_t`, `e_t ~ N(0, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Model {
    pub alpha: f64,
    pub sigma2: f64,
    pub mean: f64,
}

impl Ar1Model {
    pub fn new(alpha: f64, sigma2: f64, mean: f64) -> Result<Self> {
        let model = Self {
            alpha,
            sigma2,
            mean,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "AR(1) coefficient must lie in (-1, 1), got {}",
                self.alpha
            )));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "AR(1) innovation variance must be > 0, got {}",
                self.sigma2
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidParameter("AR(1) mean must be finite".into()));
        }
        Ok(())
    }

    /// `sigma2 / (1 - alpha^2)`.
    pub fn process_variance(&self) -> f64 {
        self.sigma2 / (1.0 - self.alpha * self.alpha)
    }
}

/// Lag-1 autocorrelation with divisor `N` on both autocovariances.
pub fn lag1_autocorrelation(x: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c0 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if c0 == 0.0 || x.len() < 2 {
        return None;
    }
    let c1 = x
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>()
        / n;
    Some(c1 / c0)
}

/// Moment fit of an AR(1) model.
///
/// `sigma2 = var * (1 - alpha^2)` so the fitted process reproduces the
/// sample variance `var` (divisor `N`).
pub fn fit_ar1(x: &[f64]) -> Result<Ar1Model> {
    if x.len() < 10 {
        return Err(Error::TooShort {
            series: "AR(1) fit input".into(),
            len: x.len(),
            min: 10,
        });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            series: "AR(1) fit input".into(),
            index,
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut alpha = lag1_autocorrelation(x)
        .filter(|_| var > 0.0)
        .ok_or_else(|| Error::ConstantSeries("AR(1) fit input".into()))?;
    if alpha.abs() > MAX_ALPHA {
        log::warn!("lag-1 autocorrelation {alpha:.4} clamped to ±{MAX_ALPHA}");
        alpha = alpha.clamp(-MAX_ALPHA, MAX_ALPHA);
    }
    Ar1Model::new(alpha, var * (1.0 - alpha * alpha), mean)
}

/// A length-`n` realisation of `model`, fully determined by `rng`.
///
/// The recursion starts from a draw of the stationary distribution and runs
/// [`BURN_IN`] steps before the first recorded sample.
pub fn surrogate<R: Rng + ?Sized>(model: &Ar1Model, n: usize, rng: &mut R) -> Vec<f64> {
    let sd = model.sigma2.sqrt();
    let mut dev: f64 = rng.sample::<f64, _>(StandardNormal) * model.process_variance().sqrt();
    for _ in 0..BURN_IN {
        dev = model.alpha * dev + sd * rng.sample::<f64, _>(StandardNormal);
    }
    (0..n)
        .map(|_| {
            dev = model.alpha * dev + sd * rng.sample::<f64, _>(StandardNormal);
            model.mean + dev
        })
        .collect()
}

/// Random stream for replicate `index` under `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarlo {
    pub n_surrogates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            n_surrogates: 300,
            level: 0.05,
            seed: 0,
        }
    }
}

impl MonteCarlo {
    fn validate(&self) -> Result<()> {
        if self.n_surrogates < MIN_SURROGATES {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_SURROGATES} surrogates are required, got {}",
                self.n_surrogates
            )));
        }
        validate_level(self.level)
    }
}

fn validate_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// Sorted null coherence values per cell.
#[derive(Debug, Clone)]
pub struct NullEnsemble {
    dim: (usize, usize),
    /// Row-major cells, each sorted ascending with undefined replicates dropped.
    cells: Vec<Vec<f64>>,
    n_surrogates: usize,
    seed: u64,
}

impl NullEnsemble {
    /// Runs `n_surrogates` replicates of the pipeline that produced `observed`.
    ///
    /// `models` follow the argument order of the observed estimator:
    /// `[x, y]` for WTC and `[y, x, z]` for PWC.
    pub fn simulate(
        observed: &CoherenceField,
        models: &[Ar1Model],
        n_surrogates: usize,
        seed: u64,
    ) -> Result<Self> {
        let kind = observed.kind;
        if models.len() != kind.arity() {
            return Err(Error::InvalidParameter(format!(
                "{kind} significance needs {} AR(1) models, got {}",
                kind.arity(),
                models.len()
            )));
        }
        for m in models {
            m.validate()?;
        }
        if n_surrogates < MIN_SURROGATES {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_SURROGATES} surrogates are required, got {n_surrogates}"
            )));
        }

        let n = observed.len();
        let plan = CwtPlan::new(n, &observed.grid, observed.dt)?;
        let engine = CoherenceEngine::new(n, &observed.grid, observed.dt, &observed.smoothing);

        let replicates: Vec<Array2<f64>> = (0..n_surrogates as u64)
            .into_par_iter()
            .map(|i| -> Result<Array2<f64>> {
                let mut rng = replicate_rng(seed, i);
                let fields = models
                    .iter()
                    .enumerate()
                    .map(|(k, m)| plan.transform(&surrogate(m, n, &mut rng), &format!("s{k}")))
                    .collect::<Result<Vec<_>>>()?;
                let field = match kind {
                    CoherenceKind::Wtc => engine.wtc(&fields[0], &fields[1])?,
                    CoherenceKind::Pwc => match engine.pwc(&fields[0], &fields[1], &fields[2]) {
                        Ok(f) => f,
                        Err(Error::AllDegenerate(_)) => {
                            return Ok(Array2::from_elem(observed.r2.dim(), f64::NAN))
                        }
                        Err(e) => return Err(e),
                    },
                };
                Ok(field.r2)
            })
            .collect::<Result<_>>()?;

        let dim = observed.r2.dim();
        let cells = (0..dim.0 * dim.1)
            .into_par_iter()
            .map(|c| {
                let (j, t) = (c / dim.1, c % dim.1);
                let mut v: Vec<f64> = replicates
                    .iter()
                    .map(|r| r[[j, t]])
                    .filter(|v| !v.is_nan())
                    .collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        Ok(Self {
            dim,
            cells,
            n_surrogates,
            seed,
        })
    }

    /// Cellwise `q` quantile with linear interpolation between order
    /// statistics; `NaN` when fewer than ten replicates are defined.
    pub fn quantile(&self, q: f64) -> Array2<f64> {
        Array2::from_shape_fn(self.dim, |(j, t)| {
            quantile_sorted(&self.cells[j * self.dim.1 + t], q)
        })
    }

    /// Threshold and mask for `observed` at `level`.
    pub fn evaluate(&self, observed: &CoherenceField, level: f64) -> Result<SignificanceResult> {
        validate_level(level)?;
        if observed.r2.dim() != self.dim {
            return Err(Error::IncompatibleFields(
                "observed field does not match the null ensemble".into(),
            ));
        }
        let threshold = self.quantile(1.0 - level);
        let inside = observed.coi_mask();
        let mask = Zip::from(&observed.r2)
            .and(&threshold)
            .and(&inside)
            .map_collect(|&r, &t, &c| c && !t.is_nan() && r > t);
        Ok(SignificanceResult {
            threshold,
            mask,
            n_surrogates: self.n_surrogates,
            seed: self.seed,
            level,
        })
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() < 10 {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceResult {
    /// Null `(1 - level)` quantile per cell.
    pub threshold: Array2<f64>,
    /// Observed coherence above threshold inside the cone.
    pub mask: Array2<bool>,
    pub n_surrogates: usize,
    pub seed: u64,
    pub level: f64,
}

impl SignificanceResult {
    pub fn significant_area(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Pointwise significance of `observed` under independent AR(1) nulls.
pub fn mc_significance(
    observed: &CoherenceField,
    models: &[Ar1Model],
    mc: &MonteCarlo,
) -> Result<SignificanceResult> {
    mc.validate()?;
    NullEnsemble::simulate(observed, models, mc.n_surrogates, mc.seed)?.evaluate(observed, mc.level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_sequence_autocorrelation() {
        let x: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        // mean 0, c0 = 1, c1 = -99/100
        let m = fit_ar1(&x).unwrap();
        assert!((m.alpha + 0.99).abs() < 1e-12);
        assert!(m.alpha.abs() < 1.0);
        assert!(m.mean.abs() < 1e-15);
    }

    #[test]
    fn near_unit_root_is_clamped() {
        let x: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let m = fit_ar1(&x).unwrap();
        assert!(m.alpha <= MAX_ALPHA);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_ar1(&[1.0; 50]), Err(Error::ConstantSeries(_))));
        assert!(matches!(fit_ar1(&[1.0, 2.0]), Err(Error::TooShort { .. })));
        assert!(Ar1Model::new(1.0, 1.0, 0.0).is_err());
        assert!(Ar1Model::new(0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn fitted_variance_matches_sample_variance() {
        let mut rng = replicate_rng(3, 0);
        let x = surrogate(&Ar1Model::new(0.4, 2.0, 1.0).unwrap(), 500, &mut rng);
        let m = fit_ar1(&x).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((m.process_variance() - var).abs() < 1e-12 * var);
    }

    #[test]
    fn identical_streams_give_identical_surrogates() {
        let m = Ar1Model::new(0.7, 1.0, 0.0).unwrap();
        let a = surrogate(&m, 64, &mut replicate_rng(11, 4));
        let b = surrogate(&m, 64, &mut replicate_rng(11, 4));
        let c = surrogate(&m, 64, &mut replicate_rng(11, 5));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn quantile_interpolates() {
        let v: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.95), 9.5);
        assert_eq!(quantile_sorted(&v, 1.0), 10.0);
        assert!(quantile_sorted(&v[..5], 0.5).is_nan());
    }

    #[test]
    fn monte_carlo_parameters_are_validated() {
        let mc = MonteCarlo {
            n_surrogates: 50,
            ..MonteCarlo::default()
        };
        assert!(mc.validate().is_err());
        let mc = MonteCarlo {
            level: 1.5,
            ..MonteCarlo::default()
        };
        assert!(mc.validate().is_err());
        assert!(MonteCarlo::default().validate().is_ok());
    }
}
