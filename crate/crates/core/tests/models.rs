mod common;

use nalgebra::DMatrix;
use scorebench_core::models::mvgarch::{fit_mv_garch_from_stage, fit_univariate_stage, DccState};
use scorebench_core::models::quantreg::{pinball_loss, quantile_regression_from};
use scorebench_core::models::*;
use scorebench_core::math::norm_ppf;

fn gaussian_window(t: usize, d: usize, seed: u64) -> DMatrix<f64> {
    DMatrix::from_row_slice(t, d, &common::normals(seed, t * d))
}

#[test]
fn edf_copula_correlation_oracles() {
    let x = common::normals(1, 300);
    let w = DMatrix::from_fn(300, 2, |i, k| if k == 0 { x[i] } else { x[i].powi(3) + 2.0 });
    let m = fit_edf_copula(&w).unwrap();
    assert!(m.correlation[(0, 1)] >= 0.99);

    let m = fit_edf_copula(&gaussian_window(2000, 2, 2)).unwrap();
    assert!(m.correlation[(0, 1)].abs() < 0.08);
    assert_eq!(m.correlation[(0, 0)], 1.0);
    assert_eq!(m.correlation[(1, 1)], 1.0);
    common::assert_correlation_matrix(&m.correlation, 1e-10);

    let mut w = gaussian_window(100, 3, 3);
    w.column_mut(1).fill(0.5);
    assert_eq!(fit_edf_copula(&w), Err(ModelError::DegenerateColumn(1)));
}

#[test]
fn edf_copula_sampling() {
    let constant = EdfCopulaModel { support: vec![vec![1.5; 4], vec![-2.0; 4]], correlation: DMatrix::identity(2, 2) };
    let e = sample_edf_copula(&constant, 50, 9).unwrap();
    assert!(e.draws().all(|r| r == [1.5, -2.0]));

    let w = gaussian_window(500, 2, 4);
    let mut m = fit_edf_copula(&w).unwrap();
    m.correlation = DMatrix::identity(2, 2);
    let e = sample_edf_copula(&m, 100_000, 5).unwrap();
    let r = common::correlation(&common::ranks(&e.component(0)), &common::ranks(&e.component(1)));
    assert!(r.abs() < 0.02, "{r}");
    for k in 0..2 {
        assert!(e.component(k).iter().all(|v| m.support[k].binary_search_by(|s| s.total_cmp(v)).is_ok()));
    }
    assert_eq!(sample_edf_copula(&m, 100, 6).unwrap(), sample_edf_copula(&m, 100, 6).unwrap());
}

#[test]
fn pca_examples() {
    let x = common::normals(7, 500);
    let noise = common::normals(8, 500);
    let w = DMatrix::from_fn(500, 2, |i, k| if k == 0 { x[i] } else { x[i] + 1e-9 * noise[i] });
    let p = pca_factors(&w, FactorSelection::FirstM, 1).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((p.loadings[(0, 0)] - s).abs() < 1e-6 && (p.loadings[(1, 0)] - s).abs() < 1e-6);
    let last = pca_factors(&w, FactorSelection::LastM, 1).unwrap();
    let f = last.factors.column(0);
    assert!(f.iter().map(|v| v * v).sum::<f64>() / 499.0 < 1e-15);

    let p = pca_factors(&gaussian_window(100_000, 4, 9), FactorSelection::FirstM, 1).unwrap();
    let (lo, hi) = (p.eigenvalues[3], p.eigenvalues[0]);
    assert!(hi / lo < 1.05, "{:?}", p.eigenvalues);
    assert!(p.eigenvalues.windows(2).all(|w| w[0] >= w[1]));

    let w = gaussian_window(400, 4, 10);
    let first = pca_factors(&w, FactorSelection::FirstM, 3).unwrap();
    let last = pca_factors(&w, FactorSelection::LastM, 1).unwrap();
    let proj = &first.loadings * first.loadings.transpose() + &last.loadings * last.loadings.transpose();
    assert!((proj - DMatrix::identity(4, 4)).abs().max() < 1e-8);
    for k in 0..4 {
        let v = p.eigenvectors.column(k);
        let lead = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        assert!(lead > 0.0);
    }
}

#[test]
fn pca_rank_deficient_window() {
    let x = common::normals(11, 100);
    let w = DMatrix::from_fn(100, 3, |i, k| if k == 2 { x[i] } else { x[i] * (k as f64 + 1.0) });
    assert!(matches!(pca_factors(&w, FactorSelection::FirstM, 1), Err(ModelError::RankDeficientWindow)));
}

fn design(x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] })
}

#[test]
fn quantile_regression_exact_line() {
    let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0 - 2.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    for tau in [0.1, 0.5, 0.9] {
        let b = quantile_regression(&design(&x), &y, tau).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-4 && (b[1] - 2.0).abs() < 1e-4, "{tau}: {b:?}");
    }
}

#[test]
fn quantile_regression_gaussian_intercepts() {
    let n = 100_000;
    let x = common::normals(12, n);
    let e = common::normals(13, n);
    let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + b).collect();
    let xm = design(&x);
    let b5 = quantile_regression(&xm, &y, 0.5).unwrap();
    let b9 = quantile_regression(&xm, &y, 0.9).unwrap();
    assert!((b9[0] - b5[0] - norm_ppf(0.9)).abs() < 0.05, "{b5:?} {b9:?}");
    assert!((norm_ppf(0.9) - 1.2816).abs() < 1e-4);
}

#[test]
fn median_regression_matches_grid_search() {
    let x = common::normals(14, 20);
    let e = common::normals(15, 20);
    let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| 0.5 + 1.5 * a + 0.3 * b).collect();
    let xm = design(&x);
    let b = quantile_regression(&xm, &y, 0.5).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let step = 0.002;
    for i in 0..=1500 {
        let b0 = -1.0 + i as f64 * step;
        for j in 0..=1500 {
            let b1 = j as f64 * step;
            let l = pinball_loss(&xm, &y, &[b0, b1], 0.5);
            if l < best.0 {
                best = (l, b0, b1);
            }
        }
    }
    assert!((b[0] - best.1).abs() < 0.05 && (b[1] - best.2).abs() < 0.05, "{b:?} vs {best:?}");
    assert!(pinball_loss(&xm, &y, &b, 0.5) <= best.0 + 1e-9);
}

#[test]
fn quantile_curve_examples() {
    let c = monotone_quantile_curve(&[0.25, 0.5, 0.75], &[-1.0, 0.0, 1.0]).unwrap();
    assert_eq!(c.eval(0.5), 0.0);
    let c = monotone_quantile_curve(&[0.25, 0.5, 0.75], &[0.0, -1.0, 1.0]).unwrap();
    assert_eq!(c.knots().1, &[-1.0, 0.0, 1.0]);
    let mut prev = f64::NEG_INFINITY;
    for k in 0..=1000 {
        let v = c.eval(k as f64 / 1000.0);
        assert!(v >= prev);
        prev = v;
    }
    let taus: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    let q: Vec<f64> = taus.iter().map(|&t| norm_ppf(t)).collect();
    let c = monotone_quantile_curve(&taus, &q).unwrap();
    assert!((c.eval(0.975) - 1.95996).abs() < 0.01);
    assert_eq!(c.eval(0.001), q[0]);
    assert_eq!(c.eval(0.9999), q[98]);
}

#[test]
fn fq_al_gaussian_median() {
    let w = gaussian_window(2000, 3, 16);
    let cfg = FqConfig { factors: 1, ..FqConfig::al() };
    let m = fit_fq(&w, &cfg, 0).unwrap();
    assert_eq!(m.quantiles.len(), 19);
    for c in &m.curves {
        assert!(c.eval(0.5).abs() < 0.1);
    }
    common::assert_correlation_matrix(&m.correlation, 1e-10);
    let e = sample_fq(&m, 100_000, 3).unwrap();
    for (k, c) in m.curves.iter().enumerate() {
        let mut v = e.component(k);
        v.sort_by(f64::total_cmp);
        for tau in [0.25, 0.5, 0.75] {
            let emp = scorebench_core::math::sorted_quantile(&v, tau);
            assert!((emp - c.eval(tau)).abs() < 0.03, "{k} {tau}: {emp} vs {}", c.eval(tau));
        }
    }
    assert_eq!(sample_fq(&m, 100, 4).unwrap(), sample_fq(&m, 100, 4).unwrap());
}

#[test]
fn fq_ab_single_identity_bag_equals_plain_first_m_fit() {
    let w = gaussian_window(250, 3, 17);
    let cfg = FqConfig { bags: 1, resampling: Resampling::Identity, ..FqConfig::ab() };
    let m = fit_fq(&w, &cfg, 99).unwrap();

    let pca = pca_factors(&w, FactorSelection::FirstM, cfg.factors).unwrap();
    let x = DMatrix::from_fn(250, cfg.factors + 1, |i, j| if j == 0 { 1.0 } else { pca.factors[(i, j - 1)] });
    for k in 0..3 {
        let y: Vec<f64> = w.column(k).iter().copied().collect();
        let mut warm: Option<Vec<f64>> = None;
        let mut q = Vec::new();
        for &tau in &cfg.quantiles {
            let b = quantile_regression_from(&x, &y, tau, warm.as_deref()).unwrap();
            q.push(b[0]);
            warm = Some(b);
        }
        q.sort_by(f64::total_cmp);
        assert_eq!(m.curves[k].knots().1, q.as_slice());
    }
}

#[test]
fn fq_fit_is_deterministic() {
    let w = gaussian_window(250, 3, 18);
    let cfg = FqConfig { bags: 3, ..FqConfig::ab() };
    assert_eq!(fit_fq(&w, &cfg, 5).unwrap(), fit_fq(&w, &cfg, 5).unwrap());
    assert_ne!(fit_fq(&w, &cfg, 5).unwrap(), fit_fq(&w, &cfg, 6).unwrap());
}

#[test]
fn egarch_recovers_simulated_parameters() {
    let x = egarch::simulate_egarch_t(-0.1, 0.1, -0.05, 0.95, 7.0, 20_000, 2024);
    let p = fit_egarch_t(&x).unwrap();
    assert!((p.beta - 0.95).abs() < 0.03, "{p:?}");
    assert!(p.gamma < 0.0);
    assert!(p.beta.abs() < 1.0 && p.nu > 2.0);
    assert!(p.unconditional_variance().is_finite());
}

#[test]
fn egarch_on_iid_gaussian_series() {
    let x = common::normals(19, 20_000);
    let p = fit_egarch_t(&x).unwrap();
    assert!(p.alpha.abs() < 0.05, "{p:?}");
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    assert!((p.unconditional_variance() / var - 1.0).abs() < 0.05, "{} vs {var}", p.unconditional_variance());
}

#[test]
fn egarch_constant_series_fails() {
    assert!(matches!(fit_egarch_t(&[0.01; 400]), Err(ModelError::NonConvergence(_))));
}

#[test]
fn dcc_on_constant_correlation_data() {
    let w = common::ccc_egarch_data(2000, 3, 0.5, 20);
    let ccc = fit_mv_garch(&w, CorrelationKind::CCC).unwrap();
    let dcc = fit_mv_garch(&w, CorrelationKind::DCC).unwrap();
    assert_eq!(ccc.univariate, dcc.univariate);
    let state = dcc.dcc.as_ref().unwrap();
    assert!(state.a >= 0.0 && state.b >= 0.0 && state.a + state.b < 0.1, "a={} b={}", state.a, state.b);
    let ct = dcc.next_correlation();
    assert!((&ct - &ccc.correlation).abs().max() < 0.05);
    common::assert_correlation_matrix(&ct, 1e-10);
    common::assert_correlation_matrix(&ccc.correlation, 1e-10);
    assert!(state.q_bar.clone().cholesky().is_some());
}

#[test]
fn zero_parameter_dcc_reproduces_ccc_forecasts() {
    let w = common::ccc_egarch_data(2000, 3, 0.3, 21);
    let stage = fit_univariate_stage(&w).unwrap();
    let ccc = fit_mv_garch_from_stage(&stage, CorrelationKind::CCC).unwrap();
    let mut dcc = fit_mv_garch_from_stage(&stage, CorrelationKind::DCC).unwrap();
    let s = dcc.dcc.take().unwrap();
    dcc.dcc = Some(DccState { a: 0.0, b: 0.0, ..s });
    assert_eq!(dcc.next_correlation(), ccc.correlation);
    assert_eq!(sample_mv_garch(&dcc, 500, 8).unwrap(), sample_mv_garch(&ccc, 500, 8).unwrap());
}

#[test]
fn mv_garch_needs_long_window() {
    let w = common::ccc_egarch_data(250, 3, 0.3, 22);
    assert_eq!(
        fit_mv_garch(&w, CorrelationKind::DCC),
        Err(ModelError::WindowTooShort { needed: 2000, got: 250 })
    );
}

fn flat_params(log_var: f64, nu: f64) -> EgarchTParams {
    EgarchTParams {
        omega: log_var,
        alpha: 0.0,
        gamma: 0.0,
        beta: 0.0,
        nu,
        mean: 0.0,
        last_log_variance: log_var,
        last_z: 0.0,
        log_likelihood: 0.0,
    }
}

fn fixed_model(c12: f64, log_vars: [f64; 2]) -> MvGarchModel {
    MvGarchModel {
        kind: CorrelationKind::CCC,
        univariate: vec![flat_params(log_vars[0], 8.0), flat_params(log_vars[1], 8.0)],
        correlation: DMatrix::from_row_slice(2, 2, &[1.0, c12, c12, 1.0]),
        dcc: None,
    }
}

#[test]
fn mv_garch_sampling_moments() {
    let m = fixed_model(0.0, [0.0, 0.0]);
    let e = sample_mv_garch(&m, 100_000, 1).unwrap();
    let r = common::correlation(&e.component(0), &e.component(1));
    assert!(r.abs() < 0.02, "{r}");

    let m = fixed_model(0.6, [0.2, -0.5]);
    let e = sample_mv_garch(&m, 1_000_000, 2).unwrap();
    let target = m.next_covariance();
    let cov = scorebench_core::math::covariance(&e.to_matrix());
    let rel = (&cov - &target).norm() / target.norm();
    assert!(rel < 0.03, "{rel}");
    assert_eq!(sample_mv_garch(&m, 100, 3).unwrap(), sample_mv_garch(&m, 100, 3).unwrap());
}

#[test]
fn calibrated_model_json_round_trip() {
    let w = gaussian_window(250, 3, 23);
    let m = fit_model(&ModelSpec::Edf { window: 250 }, &w, 0).unwrap();
    let s = serde_json::to_string(&m).unwrap();
    let back: CalibratedModel = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m);
}
