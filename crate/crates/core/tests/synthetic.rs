use wavecoh::significance::{lag1_autocorrelation, replicate_rng, Ar1Model};
use wavecoh::synthetic::{coupled_pair, generate, Component, SignalSpec};

#[test]
fn windowed_component_is_silent_outside_its_window() {
    let spec = SignalSpec::new(512).with_component(Component::new(4.0, 1.5).windowed(100, 200));
    let x = generate(&spec, &mut replicate_rng(0, 0)).unwrap();
    assert!(x[..100].iter().chain(&x[200..]).all(|&v| v == 0.0));
    let peak = x[100..200].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak - 1.5).abs() < 1e-12);
}

fn cross_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn pair_noise_streams_are_independent() {
    let n = 4096;
    let spec = SignalSpec::new(n).with_noise(Ar1Model::new(0.0, 1.0, 0.0).unwrap());
    for seed in 0..5 {
        let (x, y) = coupled_pair(&spec, 3.0, &mut replicate_rng(seed, 0)).unwrap();
        let r = cross_correlation(&x, &y);
        assert!(r.abs() < 3.0 / (n as f64).sqrt(), "seed {seed}: r = {r}");
    }
}

#[test]
fn ar1_noise_has_requested_memory() {
    let spec = SignalSpec::new(20_000).with_noise(Ar1Model::new(0.6, 1.0, 2.0).unwrap());
    let x = generate(&spec, &mut replicate_rng(3, 0)).unwrap();
    let alpha = lag1_autocorrelation(&x).unwrap();
    assert!((alpha - 0.6).abs() < 0.03);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    assert!((mean - 2.0).abs() < 0.1);
}

#[test]
fn generation_is_reproducible() {
    let spec = SignalSpec::new(300)
        .with_component(Component::new(16.0, 1.0).with_phase(0.3))
        .with_noise(Ar1Model::new(0.5, 0.2, 0.0).unwrap());
    let a = generate(&spec, &mut replicate_rng(8, 2)).unwrap();
    let b = generate(&spec, &mut replicate_rng(8, 2)).unwrap();
    let c = generate(&spec, &mut replicate_rng(8, 3)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
