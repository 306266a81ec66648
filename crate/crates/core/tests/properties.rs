use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use proptest::prelude::*;
use scorebench_core::harness::evaluation_dates;
use scorebench_core::metrics::*;
use scorebench_core::models::{fit_edf_copula, monotone_quantile_curve, sample_edf_copula};
use scorebench_core::panel::{business_days, cumulate_changes, to_changes, ChangeMode, PanelKind, SeriesPanel};
use scorebench_core::scoring::*;

/// `n × d` ensemble rows with entries in [-5, 5].
fn ensemble(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = (Vec<f64>, usize)> {
    n.prop_flat_map(move |n| (prop::collection::vec(-5.0f64..5.0, n * d), Just(d)))
}

fn obs(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, d)
}

/// Dyadic values so that shifts by integers are exact.
fn dyadic(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-512i32..512).prop_map(|k| k as f64 / 64.0), n)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_score_translation_invariance(x in dyadic(3 * 20), y in dyadic(3), c in prop::collection::vec(-8i32..8, 3)) {
        let c: Vec<f64> = c.into_iter().map(f64::from).collect();
        let ens = ForecastEnsemble::from_rows(x.clone(), 3).unwrap();
        let moved: Vec<f64> = x.chunks(3).flat_map(|r| r.iter().zip(&c).map(|(a, b)| a + b).collect::<Vec<_>>()).collect();
        let moved = ForecastEnsemble::from_rows(moved, 3).unwrap();
        let ym: Vec<f64> = y.iter().zip(&c).map(|(a, b)| a + b).collect();
        for beta in [0.5, 1.0, 1.5] {
            prop_assert_eq!(energy_score(&ens, &y, beta).unwrap().value, energy_score(&moved, &ym, beta).unwrap().value);
        }
    }

    #[test]
    fn energy_score_homogeneity((x, d) in ensemble(2..40, 3), y in obs(3), a in 0.1f64..10.0, beta in 0.2f64..1.9) {
        let ens = ForecastEnsemble::from_rows(x.clone(), d).unwrap();
        let scaled = ForecastEnsemble::from_rows(x.iter().map(|v| a * v).collect(), d).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| a * v).collect();
        let s0 = energy_score(&ens, &y, beta).unwrap().value;
        let s1 = energy_score(&scaled, &ys, beta).unwrap().value;
        prop_assert!((s1 - a.powf(beta) * s0).abs() <= 1e-10 * s1.abs().max(1e-300) + 1e-13, "{} {}", s1, s0);
    }

    #[test]
    fn univariate_energy_score_is_crps(x in prop::collection::vec(-5.0f64..5.0, 2..200), y in -6.0f64..6.0) {
        let ens = ForecastEnsemble::univariate(&x).unwrap();
        let es = energy_score(&ens, &[y], 1.0).unwrap().value;
        let crps = crps_ensemble(&x, y).unwrap().value;
        prop_assert!((es - crps).abs() < 1e-12);
    }

    #[test]
    fn variogram_common_bias_blindness((x, d) in ensemble(1..40, 4), y in obs(4), b in -10.0f64..10.0, p in 0.2f64..2.5) {
        let ens = ForecastEnsemble::from_rows(x.clone(), d).unwrap();
        let biased = ForecastEnsemble::from_rows(x.iter().map(|v| v + b).collect(), d).unwrap();
        let a = variogram_score(&ens, &y, p).unwrap().value;
        let c = variogram_score(&biased, &y, p).unwrap().value;
        prop_assert!(close(a, c, 1e-12) || (a - c).abs() < 1e-10, "{} {}", a, c);
    }

    #[test]
    fn permutation_equivariance((x, d) in ensemble(2..30, 4), y in obs(4), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let ens = ForecastEnsemble::from_rows(x.clone(), d).unwrap();
        let px: Vec<f64> = x.chunks(d).flat_map(|r| perm.iter().map(|&k| r[k]).collect::<Vec<_>>()).collect();
        let pens = ForecastEnsemble::from_rows(px, d).unwrap();
        let py: Vec<f64> = perm.iter().map(|&k| y[k]).collect();
        for p in [0.5, 1.0, 2.0] {
            let a = variogram_score(&ens, &y, p).unwrap().value;
            let b = variogram_score(&pens, &py, p).unwrap().value;
            prop_assert!(close(a, b, 1e-12));
        }
        let a = energy_score(&ens, &y, 1.0).unwrap().value;
        let b = energy_score(&pens, &py, 1.0).unwrap().value;
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn scores_are_nonnegative((x, d) in ensemble(2..40, 3), y in obs(3)) {
        let ens = ForecastEnsemble::from_rows(x.clone(), d).unwrap();
        prop_assert!(energy_score(&ens, &y, 1.0).unwrap().value >= -1e-12);
        for p in [0.5, 1.0, 2.0] {
            prop_assert!(variogram_score(&ens, &y, p).unwrap().value >= 0.0);
        }
        prop_assert!(crps_ensemble(&ens.component(0), y[0]).unwrap().value >= -1e-12);
        prop_assert_eq!(energy_score(&ens, &y, 1.0).unwrap(), energy_score(&ens, &y, 1.0).unwrap());
    }

    #[test]
    fn point_mass_variogram_is_zero(y in obs(5), n in 1usize..20, p in 0.1f64..3.0) {
        let ens = ForecastEnsemble::from_rows(y.repeat(n), 5).unwrap();
        prop_assert_eq!(variogram_score(&ens, &y, p).unwrap().value, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weighted_crps_agrees_with_kernel(mut x in prop::collection::vec(-3.0f64..3.0, 100..300), y in -2.0f64..2.0) {
        let kernel = crps_ensemble(&x, y).unwrap().value;
        x.sort_by(f64::total_cmp);
        let q = empirical_quantile_fn(&x);
        let f = empirical_cdf_fn(&x);
        let vq = crps_quantile_weighted(&q, y, QuantileWeight::Table(Emphasis::Uniform), 100_000).unwrap().value;
        let vt = crps_threshold_weighted(&f, y, ThresholdWeight::Table(Emphasis::Uniform), (y - 10.0, y + 10.0), 100_000)
            .unwrap()
            .value;
        // midpoint error on a step integrand is bounded by N_steps · h
        let tol = 2.0 * (x.len() as f64 * 20.0 / 100_000.0).max(x.len() as f64 * 6.0 / 100_000.0);
        prop_assert!((vq - kernel).abs() < tol, "{} {}", vq, kernel);
        prop_assert!((vt - kernel).abs() < tol, "{} {}", vt, kernel);
    }

    #[test]
    fn copula_correlation_is_valid_and_draws_stay_in_support(x in prop::collection::vec(-1.0f64..1.0, 4 * 60), seed in any::<u64>()) {
        let w = DMatrix::from_row_slice(60, 4, &x);
        let m = fit_edf_copula(&w).unwrap();
        let c = &m.correlation;
        for i in 0..4 {
            prop_assert_eq!(c[(i, i)], 1.0);
            for j in 0..4 {
                prop_assert!((c[(i, j)] - c[(j, i)]).abs() <= 1e-12);
            }
        }
        prop_assert!(c.clone().symmetric_eigen().eigenvalues.min() >= -1e-10);
        let e = sample_edf_copula(&m, 200, seed).unwrap();
        for k in 0..4 {
            for v in e.component(k) {
                prop_assert!(m.support[k].contains(&v));
            }
        }
        prop_assert_eq!(e, sample_edf_copula(&m, 200, seed).unwrap());
    }

    #[test]
    fn quantile_curve_is_monotone(q in prop::collection::vec(-10.0f64..10.0, 2..20)) {
        let n = q.len();
        let taus: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        let c = monotone_quantile_curve(&taus, &q).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=2000 {
            let v = c.eval(k as f64 / 2000.0);
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn changes_round_trip(levels in prop::collection::vec(0.5f64..200.0, 2 * 30)) {
        let dates = business_days(NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), 30);
        let m = DMatrix::from_row_slice(30, 2, &levels);
        let p = SeriesPanel::new(dates, m, vec!["a".into(), "b".into()], PanelKind::Levels).unwrap();
        for mode in [ChangeMode::LogReturn, ChangeMode::Difference] {
            let c = to_changes(&p, mode).unwrap();
            let back = cumulate_changes(&c, p.dates()[0], &[levels[0], levels[1]]).unwrap();
            for (a, b) in back.values().iter().zip(p.values().iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs() * 30.0, "{} {}", a, b);
            }
        }
    }

    #[test]
    fn quarterly_dates_one_per_quarter(start in 0i64..3000, len in 70usize..1500, min_history in 0usize..60) {
        let s = NaiveDate::from_ymd_opt(1995, 1, 1).unwrap() + chrono::Duration::days(start);
        let dates = business_days(s, len);
        let p = SeriesPanel::new(dates, DMatrix::from_element(len, 2, 0.0), vec!["a".into(), "b".into()], PanelKind::LogReturns).unwrap();
        let ev = evaluation_dates(&p, min_history).unwrap();
        for w in ev.windows(2) {
            prop_assert!(w[0].1 < w[1].1);
            let q = |d: NaiveDate| d.year() * 4 + (d.month0() / 3) as i32;
            prop_assert!(q(w[0].1) < q(w[1].1));
        }
        for (row, d) in &ev {
            prop_assert!(*row >= min_history);
            prop_assert_eq!(p.dates()[*row], *d);
        }
    }
}

fn positive_scores(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn error_rate_is_scale_free(a in positive_scores(50), b in positive_scores(50), k in 0.001f64..1000.0) {
        let d = score_differences(&a, &b).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| v * k).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * k).collect();
        let ds = score_differences(&sa, &sb).unwrap();
        let e = error_rate(&d).unwrap();
        prop_assert_eq!(e, error_rate(&ds).unwrap());
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn ratios_are_scale_free(a in positive_scores(40), b in positive_scores(40), k in 0.001f64..1000.0) {
        let r = mean_relative_score(&a, &b, RATIO_GUARD).unwrap().value;
        let sa: Vec<f64> = a.iter().map(|v| v * k).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * k).collect();
        prop_assert!(close(r, mean_relative_score(&sa, &sb, RATIO_GUARD).unwrap().value, 1e-12));
        let means = [b.iter().sum::<f64>(), a.iter().sum::<f64>()];
        let h = discrimination_heuristic(&means, 0).unwrap();
        let hs = discrimination_heuristic(&[means[0] * k, means[1] * k], 0).unwrap();
        prop_assert!(close(h, hs, 1e-12));
        prop_assert!(h >= 0.5);
    }

    #[test]
    fn heuristic_is_at_least_one_over_m(means in positive_scores(8), dgp in 0usize..8) {
        prop_assert!(discrimination_heuristic(&means, dgp).unwrap() >= 1.0 / 8.0);
    }

    #[test]
    fn band_is_ordered(x in prop::collection::vec(-5.0f64..5.0, 20..200), seed in any::<u64>()) {
        let (lo, hi) = bootstrap_band(&x, 20, 200, (0.25, 0.75), seed).unwrap();
        prop_assert!(lo <= hi);
    }
}
