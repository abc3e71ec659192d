//! CWT checks against a direct time-domain evaluation of the transform.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use wavecoh::cwt::{coi, cwt, MotherWavelet, ScaleGrid};
use wavecoh::significance::replicate_rng;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = replicate_rng(seed, 0);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `sqrt(dt/s) * sum_m (x_m - mean) * conj(psi0((m - n) dt / s))`, literally.
fn direct_cwt(x: &[f64], scale: f64, dt: f64, omega0: f64) -> Vec<Complex64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let psi = |eta: f64| {
        Complex64::from_polar(
            std::f64::consts::PI.powf(-0.25) * (-0.5 * eta * eta).exp(),
            omega0 * eta,
        )
    };
    (0..n)
        .map(|tau| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &v) in x.iter().enumerate() {
                let eta = (m as f64 - tau as f64) * dt / scale;
                acc += (v - mean) * psi(eta).conj();
            }
            acc * (dt / scale).sqrt()
        })
        .collect()
}

fn max_norm<'a>(v: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    v.into_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn fft_path_matches_direct_convolution() {
    let x = noise(128, 42);
    let grid = ScaleGrid::new(4.0, 1.0, 3, MotherWavelet::default()).unwrap();
    let field = cwt(&x, &grid, 1.0).unwrap();
    for (j, &s) in grid.scales().iter().enumerate() {
        let oracle = direct_cwt(&x, s, 1.0, 6.0);
        let row = field.coeffs.row(j);
        let diff: Vec<Complex64> = row.iter().zip(&oracle).map(|(a, b)| a - b).collect();
        let rel = max_norm(&diff) / max_norm(&oracle);
        assert!(rel < 1e-8, "scale {s}: relative error {rel:e}");
    }
}

#[test]
fn direct_oracle_agrees_with_morlet_helper() {
    let w = MotherWavelet::default();
    for eta in [-2.0, -0.3, 0.0, 0.7, 3.1] {
        let expected = Complex64::from_polar(
            std::f64::consts::PI.powf(-0.25) * (-0.5f64 * eta * eta).exp(),
            6.0 * eta,
        );
        assert!((w.time_domain(eta) - expected).norm() < 1e-15);
    }
}

#[test]
fn cosine_power_peaks_at_its_period() {
    let x: Vec<f64> = (0..512)
        .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 16.0).cos())
        .collect();
    let grid = ScaleGrid::daily_default(1.0);
    let field = cwt(&x, &grid, 1.0).unwrap();
    let gp = field.global_power();
    let best = (0..gp.len())
        .max_by(|&a, &b| gp[a].total_cmp(&gp[b]))
        .unwrap();
    let period = grid.periods()[best];
    let ratio = period.max(16.0) / period.min(16.0);
    assert!(ratio <= 2f64.powf(1.0 / 12.0), "peak period {period}");

    // Rectified power moves the peak by less than one voice.
    let rp = field.rectified_power();
    let means: Vec<f64> = rp.rows().into_iter().map(|r| r.mean().unwrap()).collect();
    let best_r = (0..means.len())
        .max_by(|&a, &b| means[a].total_cmp(&means[b]))
        .unwrap();
    assert!(best_r.abs_diff(best) <= 1);
}

#[test]
fn scalar_multiple_scales_coefficients() {
    let x = noise(200, 7);
    let grid = ScaleGrid::daily_default(1.0);
    let a = cwt(&x, &grid, 1.0).unwrap();
    let scaled: Vec<f64> = x.iter().map(|v| 3.7 * v).collect();
    let b = cwt(&scaled, &grid, 1.0).unwrap();
    let peak = max_norm(b.coeffs.iter());
    for (u, v) in a.coeffs.iter().zip(b.coeffs.iter()) {
        assert!((u * 3.7 - v).norm() <= 1e-10 * peak);
    }
}

#[test]
fn time_shift_moves_columns_away_from_edges() {
    let k = 10;
    let n = 512;
    let z = noise(n + k, 9);
    let x = &z[k..];
    let shifted = &z[..n];
    let grid = ScaleGrid::daily_default(1.0);
    let a = cwt(x, &grid, 1.0).unwrap();
    let b = cwt(shifted, &grid, 1.0).unwrap();
    for (j, &s) in grid.scales().iter().enumerate() {
        // Near Nyquist the daughter spectrum is cut off, which gives the
        // discrete kernel long tails; only well-resolved scales are local.
        let at_nyquist = (s * std::f64::consts::PI - 6.0).powi(2) / 2.0;
        if at_nyquist < 20.0 {
            continue;
        }
        // The Gaussian envelope is below 1e-7 beyond six scales from an edge.
        let margin = (6.0 * s).ceil() as usize + k;
        if 2 * margin >= n {
            continue;
        }
        let peak = max_norm(a.coeffs.row(j).iter());
        for t in margin..n - margin {
            let d = (a.coeffs[[j, t]] - b.coeffs[[j, t + k]]).norm();
            assert!(d <= 1e-6 * peak, "scale {s}, t {t}: {d:e}");
        }
    }
}

#[test]
fn coi_centre_from_closed_forms() {
    // Fourier factor and e-folding factor evaluated independently.
    let omega0: f64 = 6.0;
    let fourier = 4.0 * std::f64::consts::PI / (omega0 + (2.0 + omega0 * omega0).sqrt());
    let efold = 2f64.sqrt();
    let c = coi(126, 1.0, &MotherWavelet::default());
    let expected = fourier / efold * 62.0;
    assert!((c[62] - expected).abs() < 1e-12);
    assert!((c[62] - 45.29).abs() < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_is_linear(seed in 0u64..1000, alpha in -5.0f64..5.0, beta in -5.0f64..5.0) {
        let x = noise(96, seed);
        let y = noise(96, seed + 10_000);
        let grid = ScaleGrid::daily_default(1.0);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
        let wx = cwt(&x, &grid, 1.0).unwrap();
        let wy = cwt(&y, &grid, 1.0).unwrap();
        let wc = cwt(&combo, &grid, 1.0).unwrap();
        let peak = max_norm(wc.coeffs.iter()).max(max_norm(wx.coeffs.iter()));
        for ((a, b), c) in wx.coeffs.iter().zip(wy.coeffs.iter()).zip(wc.coeffs.iter()) {
            prop_assert!((a * alpha + b * beta - c).norm() <= 1e-10 * peak.max(1e-300));
        }
    }

    #[test]
    fn power_is_nonnegative_and_finite(seed in 0u64..1000) {
        let grid = ScaleGrid::daily_default(1.0);
        let f = cwt(&noise(64, seed), &grid, 1.0).unwrap();
        prop_assert!(f.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        prop_assert!(f.power().iter().all(|&p| p >= 0.0));
    }
}
