use std::collections::BTreeSet;
use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use proptest::prelude::*;
use wavecoh::preprocess::{
    align, diff, fatality_ratio, lag, load_csv, log_diff, orthogonalize, TimeSeries,
};
use wavecoh::Error;

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// NYSE sessions between two dates for 2020, from the weekday rule and the
/// holidays that fall in February–August.
fn trading_days(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let holidays = [
        date(2020, 2, 17),
        date(2020, 4, 10),
        date(2020, 5, 25),
        date(2020, 7, 3),
    ];
    let mut out = Vec::new();
    let mut d = from;
    while d <= to {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !holidays.contains(&d) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn series(name: &str, dates: Vec<NaiveDate>, f: impl Fn(usize) -> f64) -> TimeSeries {
    let values = (0..dates.len()).map(f).collect();
    TimeSeries::new(name, dates, values).unwrap()
}

#[test]
fn trading_window_gives_126_returns() {
    let dates = trading_days(date(2020, 2, 14), date(2020, 8, 14));
    assert_eq!(dates.len(), 127);
    let closes = series("spx", dates, |i| 3000.0 + (i as f64).sin() * 50.0);
    let r = log_diff(&closes).unwrap();
    assert_eq!(r.len(), 126);
    assert_eq!(r.dates()[0], date(2020, 2, 18));
    assert_eq!(r.dates()[59], date(2020, 5, 12));
    assert_eq!(r.dates()[119], date(2020, 8, 6));
    assert_eq!(*r.dates().last().unwrap(), date(2020, 8, 14));
}

#[test]
fn csv_round_trip_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oil.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "Date,Close,Volume").unwrap();
    writeln!(f, "2020-02-19, 53.3 ,10").unwrap();
    writeln!(f, "2020-02-18,52.1,11").unwrap();
    writeln!(f, "2020-02-20,,12").unwrap();
    writeln!(f, "2020-02-21,50.9,13").unwrap();
    drop(f);
    let s = load_csv(&path, "Date", "Close").unwrap();
    assert_eq!(s.name(), "Close");
    assert_eq!(
        s.dates(),
        &[date(2020, 2, 18), date(2020, 2, 19), date(2020, 2, 21)]
    );
    assert_eq!(s.values(), &[52.1, 53.3, 50.9]);

    assert!(matches!(
        load_csv(&path, "Date", "Open"),
        Err(Error::MissingColumn { .. })
    ));
}

/// Date-set intersection computed with a `BTreeSet`.
fn intersect(all: &[TimeSeries]) -> Vec<NaiveDate> {
    let mut set: BTreeSet<NaiveDate> = all[0].dates().iter().copied().collect();
    for s in &all[1..] {
        let other: BTreeSet<NaiveDate> = s.dates().iter().copied().collect();
        set = set.intersection(&other).copied().collect();
    }
    set.into_iter().collect()
}

#[test]
fn staggered_gaps_align_to_the_intersection() {
    let base = trading_days(date(2020, 2, 3), date(2020, 6, 30));
    let keep = |k: usize| -> Vec<NaiveDate> {
        base.iter()
            .enumerate()
            .filter(|(i, _)| i % k != 1)
            .map(|(_, d)| *d)
            .collect()
    };
    let a = series("a", keep(3), |i| i as f64);
    let b = series("b", keep(5), |i| 2.0 * i as f64);
    let c = series("c", base[4..].to_vec(), |i| -(i as f64));
    let all = [a.clone(), b.clone(), c.clone()];
    let panel = align(&all).unwrap();
    let expected = intersect(&all);
    assert_eq!(panel.dates(), expected.as_slice());
    assert_eq!(panel.labels().collect::<Vec<_>>(), vec!["a", "b", "c"]);
    for s in &all {
        let col = panel.column(s.name()).unwrap();
        for (d, v) in expected.iter().zip(col) {
            let k = s.dates().iter().position(|x| x == d).unwrap();
            assert_eq!(*v, s.values()[k]);
        }
    }
}

#[test]
fn disjoint_series_have_no_alignment() {
    let a = series("a", vec![date(2020, 1, 1), date(2020, 1, 2)], |_| 1.0);
    let b = series("b", vec![date(2020, 1, 3), date(2020, 1, 4)], |_| 1.0);
    assert!(matches!(align(&[a, b]), Err(Error::EmptyIntersection)));
}

#[test]
fn log_diff_matches_direct_computation() {
    let dates = trading_days(date(2020, 3, 2), date(2020, 3, 31))[..20].to_vec();
    let s = series("p", dates, |i| 1.0 + ((i * 37 % 11) as f64) * 0.73);
    let r = log_diff(&s).unwrap();
    for t in 0..19 {
        let expected = s.values()[t + 1].ln() - s.values()[t].ln();
        assert!((r.values()[t] - expected).abs() < 1e-12);
    }
    let d = diff(&s).unwrap();
    assert_eq!(d.values()[3], s.values()[4] - s.values()[3]);
}

#[test]
fn log_diff_rejects_non_positive_levels() {
    let s = series("p", vec![date(2020, 1, 1), date(2020, 1, 2)], |i| i as f64);
    assert!(matches!(log_diff(&s), Err(Error::NonPositive { .. })));
}

#[test]
fn one_day_lag_shifts_values() {
    let dates = trading_days(date(2020, 2, 18), date(2020, 8, 14));
    assert_eq!(dates.len(), 126);
    let s = series("oil", dates.clone(), |i| i as f64 * 0.5);
    let l = lag(&s, 1).unwrap();
    assert_eq!(l.len(), 125);
    assert_eq!(l.dates(), &dates[1..]);
    for t in 0..125 {
        assert_eq!(l.values()[t], s.values()[t]);
    }
    assert!(matches!(lag(&s, 126), Err(Error::LagTooLarge { .. })));
}

#[test]
fn fatality_ratio_is_elementwise() {
    let dates: Vec<NaiveDate> = (0..30)
        .map(|k| date(2020, 3, 1) + Duration::days(k))
        .collect();
    let cases = series("cases", dates.clone(), |i| 100.0 * (i + 1) as f64);
    let deaths = series("deaths", dates.clone(), |i| 3.0 * i as f64 + 0.5);
    let r = fatality_ratio(&deaths, &cases).unwrap();
    assert_eq!(r.name(), "deaths_per_cases");
    for t in 0..30 {
        let expected = deaths.values()[t] / cases.values()[t];
        assert!((r.values()[t] - expected).abs() <= 1e-15);
    }
    let shorter = series("cases", dates[1..].to_vec(), |_| 1.0);
    assert!(fatality_ratio(&deaths, &shorter).is_err());
}

#[test]
fn ols_matches_cramers_rule() {
    let dates: Vec<NaiveDate> = (0..4)
        .map(|k| date(2020, 1, 1) + Duration::days(k))
        .collect();
    let y = TimeSeries::new("y", dates.clone(), vec![1.0, 2.0, 3.0, 5.0]).unwrap();
    let x = TimeSeries::new("x", dates, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    // Normal equations [[n, Σx], [Σx, Σx²]] [a, b] = [Σy, Σxy].
    let (n, sx, sxx, sy, sxy): (f64, f64, f64, f64, f64) = (4.0, 6.0, 14.0, 11.0, 23.0);
    let det = n * sxx - sx * sx;
    let a = (sy * sxx - sx * sxy) / det;
    let b = (n * sxy - sx * sy) / det;
    assert!((a - 0.8).abs() < 1e-12 && (b - 1.3).abs() < 1e-12);

    let fit = orthogonalize(&y, &x).unwrap();
    assert!((fit.intercept - a).abs() < 1e-12);
    assert!((fit.slope - b).abs() < 1e-12);
    for (r, e) in fit.residuals.iter().zip([0.2, -0.1, -0.4, 0.3]) {
        assert!((r - e).abs() < 1e-12);
    }
    let purged = fit.purged(&y, true).unwrap();
    assert!((purged.values()[0] - (0.2 + 2.75)).abs() < 1e-12);
}

#[test]
fn constant_regressor_is_rejected() {
    let dates: Vec<NaiveDate> = (0..5)
        .map(|k| date(2020, 1, 1) + Duration::days(k))
        .collect();
    let y = series("y", dates.clone(), |i| i as f64);
    let x = series("x", dates, |_| 4.0);
    assert!(matches!(
        orthogonalize(&y, &x),
        Err(Error::ConstantRegressor(_))
    ));
}

fn dated(values: Vec<f64>) -> TimeSeries {
    let dates = (0..values.len() as i64)
        .map(|k| date(2020, 1, 1) + Duration::days(k))
        .collect();
    TimeSeries::new("s", dates, values).unwrap()
}

proptest! {
    #[test]
    fn residuals_are_orthogonal_to_regressor(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60)
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
        prop_assume!(xs.iter().map(|v| (v - x_mean).powi(2)).sum::<f64>() > 1e-3);
        let y = dated(ys.clone());
        let x = dated(xs.clone()).with_name("x");
        let fit = orthogonalize(&y, &x).unwrap();
        let scale = ys.iter().map(|v| v.abs()).fold(1.0, f64::max)
            * xs.iter().map(|v| v.abs()).fold(1.0, f64::max)
            * xs.len() as f64;
        let sum: f64 = fit.residuals.iter().sum();
        let dot: f64 = fit.residuals.iter().zip(&xs).map(|(r, x)| r * x).sum();
        prop_assert!(sum.abs() <= 1e-9 * scale);
        prop_assert!(dot.abs() <= 1e-9 * scale);
    }

    #[test]
    fn exp_cumsum_inverts_log_diff(
        start in 0.1f64..1000.0,
        steps in prop::collection::vec(-0.2f64..0.2, 1..80)
    ) {
        let mut levels = vec![start];
        for r in &steps {
            levels.push(levels.last().unwrap() * r.exp());
        }
        let back = log_diff(&dated(levels.clone())).unwrap();
        let mut rebuilt = start;
        for (r, expected) in back.values().iter().zip(&levels[1..]) {
            rebuilt *= r.exp();
            prop_assert!((rebuilt - expected).abs() <= 1e-9 * expected);
        }
    }

    #[test]
    fn aligning_aligned_series_is_idempotent(
        mask_a in prop::collection::vec(any::<bool>(), 40),
        mask_b in prop::collection::vec(any::<bool>(), 40)
    ) {
        let pick = |mask: &[bool], name: &str| {
            let dates: Vec<NaiveDate> = mask
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| date(2020, 1, 1) + Duration::days(i as i64))
                .collect();
            (!dates.is_empty()).then(|| series(name, dates, |i| i as f64))
        };
        let (Some(a), Some(b)) = (pick(&mask_a, "a"), pick(&mask_b, "b")) else {
            return Ok(());
        };
        let Ok(once) = align(&[a, b]) else {
            return Ok(());
        };
        let twice = align(&once.to_series()).unwrap();
        prop_assert_eq!(once, twice);
    }
}
