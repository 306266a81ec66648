mod common;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use scorebench_core::panel::*;

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn levels(cols: &[&[f64]]) -> SeriesPanel {
    let t = cols[0].len();
    let dates = business_days(date(2020, 1, 1), t);
    let m = DMatrix::from_fn(t, cols.len(), |i, k| cols[k][i]);
    let labels = (0..cols.len()).map(|k| format!("c{k}")).collect();
    SeriesPanel::new(dates, m, labels, PanelKind::Levels).unwrap()
}

#[test]
fn log_returns_and_differences() {
    let e = std::f64::consts::E;
    let p = levels(&[&[1.0, e, e * e], &[5.0, 4.5, 4.7]]);
    let r = to_changes(&p, ChangeMode::LogReturn).unwrap();
    assert_eq!(r.rows(), 2);
    assert_eq!(r.kind(), PanelKind::LogReturns);
    assert!((r.values()[(0, 0)] - 1.0).abs() < 1e-15 && (r.values()[(1, 0)] - 1.0).abs() < 1e-15);
    let d = to_changes(&p, ChangeMode::Difference).unwrap();
    assert!((d.values()[(0, 1)] + 0.5).abs() < 1e-12);
    assert!((d.values()[(1, 1)] - 0.2).abs() < 1e-12);
}

#[test]
fn log_return_rejects_non_positive_level() {
    let p = levels(&[&[1.0, -1.0], &[1.0, 2.0]]);
    assert_eq!(to_changes(&p, ChangeMode::LogReturn), Err(PanelError::NonPositiveLevel { row: 1, column: 0 }));
}

#[test]
fn changes_cumulate_back_to_levels() {
    let a: Vec<f64> = (0..50).map(|i| 100.0 * (1.0 + 0.01 * (i as f64).sin())).collect();
    let b: Vec<f64> = (0..50).map(|i| 3.0 + 0.1 * (i as f64 * 0.7).cos()).collect();
    let p = levels(&[&a, &b]);
    for mode in [ChangeMode::LogReturn, ChangeMode::Difference] {
        let c = to_changes(&p, mode).unwrap();
        let back = cumulate_changes(&c, p.dates()[0], &[a[0], b[0]]).unwrap();
        assert_eq!(back.dates(), p.dates());
        for (x, y) in back.values().iter().zip(p.values().iter()) {
            assert!((x - y).abs() <= 1e-12 * y.abs());
        }
    }
}

#[test]
fn panel_validation() {
    let dates = vec![date(2020, 1, 1), date(2020, 1, 2), date(2020, 1, 2)];
    let m = DMatrix::from_element(3, 2, 1.0);
    let r = SeriesPanel::new(dates, m, vec!["a".into(), "b".into()], PanelKind::Levels);
    assert_eq!(r, Err(PanelError::NonMonotoneDates { row: 2 }));
    let m = DMatrix::from_element(3, 1, 1.0);
    let r = SeriesPanel::new(business_days(date(2020, 1, 1), 3), m, vec!["a".into()], PanelKind::Levels);
    assert_eq!(r, Err(PanelError::TooFewColumns(1)));
}

#[test]
fn summary_statistics_examples() {
    let n = 1_000_000;
    let a = common::normals(5, n);
    let b = common::normals(6, n);
    let p = levels(&[&a, &b]);
    let s = summary_statistics(&p).unwrap();
    assert!((s.columns[0].kurtosis - 3.0).abs() < 0.05, "{}", s.columns[0].kurtosis);
    assert!(s.columns.iter().all(|c| c.volatility >= 0.0 && c.kurtosis > 0.0));

    let p = levels(&[&[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0, 3.0, 4.0]]);
    assert_eq!(summary_statistics(&p), Err(PanelError::DegenerateColumn(0)));

    let p = levels(&[&[-2.0, 2.0, -2.0, 2.0], &[1.0, 2.0, 3.0, 5.0]]);
    let s = summary_statistics(&p).unwrap();
    assert_eq!(s.columns[0].mean, 0.0);
    assert_eq!(s.columns[0].skewness, 0.0);
}

#[test]
fn synthetic_panels_are_deterministic() {
    let spec = SyntheticSpec::Gaussian { volatility: 0.01, correlation: 0.3 };
    let a = generate_synthetic_panel(&spec, 500, 3, 7, false, default_start_date()).unwrap();
    let b = generate_synthetic_panel(&spec, 500, 3, 7, false, default_start_date()).unwrap();
    assert_eq!(a, b);
    let c = generate_synthetic_panel(&spec, 500, 3, 8, false, default_start_date()).unwrap();
    assert_ne!(a.values(), c.values());
    assert_eq!(a.kind(), PanelKind::LogReturns);
    let l = generate_synthetic_panel(&spec, 500, 3, 7, true, default_start_date()).unwrap();
    assert_eq!(l.kind(), PanelKind::Levels);
}

#[test]
fn uncorrelated_gaussian_panel() {
    let spec = SyntheticSpec::Gaussian { volatility: 1.0, correlation: 0.0 };
    let p = generate_synthetic_panel(&spec, 100_000, 3, 13, false, default_start_date()).unwrap();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let r = common::correlation(&p.column(i), &p.column(j));
            assert!(r.abs() < 0.02, "{r}");
        }
    }
}

#[test]
fn garch_panel_clusters_volatility() {
    let spec = SyntheticSpec::TCopulaGarch { nu: 6.0, omega: 2e-6, alpha: 0.08, beta: 0.90, correlation: 0.4 };
    let p = generate_synthetic_panel(&spec, 20_000, 2, 3, false, default_start_date()).unwrap();
    let sq: Vec<f64> = p.column(0).iter().map(|x| x * x).collect();
    let r = common::correlation(&sq[..sq.len() - 1], &sq[1..]);
    assert!(r > 0.0, "{r}");
}

#[test]
fn garch_panel_unconditional_variance() {
    let (omega, alpha, beta) = (1e-5, 0.05, 0.90);
    let spec = SyntheticSpec::TCopulaGarch { nu: 10.0, omega, alpha, beta, correlation: 0.2 };
    let p = generate_synthetic_panel(&spec, 1_000_000, 2, 17, false, default_start_date()).unwrap();
    let target = omega / (1.0 - alpha - beta);
    for k in 0..2 {
        let x = p.column(k);
        let m = common::mean(&x);
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64;
        assert!((v / target - 1.0).abs() < 0.05, "{v} vs {target}");
    }
}

#[test]
fn business_days_skip_weekends() {
    let d = business_days(date(2021, 1, 1), 3);
    assert_eq!(d, vec![date(2021, 1, 1), date(2021, 1, 4), date(2021, 1, 5)]);
}
