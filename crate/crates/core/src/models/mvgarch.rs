//! Constant and dynamic conditional correlation models over univariate
//! Student-t EGARCH(1,1) marginals, estimated in two steps.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_distr::StudentT;
use serde::{Deserialize, Serialize};

use super::egarch::{fit_egarch_t, filter, standardized_t, EgarchTParams};
use super::optim::{nelder_mead_polished, NelderMeadOptions};
use super::ModelError;
use crate::math;
use crate::rng::rng_from_seed;
use crate::scoring::ForecastEnsemble;

pub const MIN_MV_GARCH_WINDOW: usize = 2000;
/// Upper bound on `a + b` in the DCC search.
pub const DCC_PERSISTENCE_CAP: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationKind {
    CCC,
    DCC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccState {
    pub a: f64,
    pub b: f64,
    /// Correlation target `Q̄`.
    #[serde(with = "crate::math::serde_matrix")]
    pub q_bar: DMatrix<f64>,
    /// `Q_T` at the last observation.
    #[serde(with = "crate::math::serde_matrix")]
    pub q_last: DMatrix<f64>,
    /// `z_T` at the last observation.
    pub z_last: Vec<f64>,
    pub log_likelihood: f64,
}

impl DccState {
    /// `Q_{T+1} = (1 − a − b) Q̄ + a z_T z_T' + b Q_T`.
    pub fn next_q(&self) -> DMatrix<f64> {
        let d = self.q_bar.nrows();
        DMatrix::from_fn(d, d, |i, j| {
            (1.0 - self.a - self.b) * self.q_bar[(i, j)]
                + self.a * self.z_last[i] * self.z_last[j]
                + self.b * self.q_last[(i, j)]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvGarchModel {
    pub kind: CorrelationKind,
    pub univariate: Vec<EgarchTParams>,
    /// CCC correlation; for DCC the normalized target.
    #[serde(with = "crate::math::serde_matrix")]
    pub correlation: DMatrix<f64>,
    pub dcc: Option<DccState>,
}

impl MvGarchModel {
    /// Correlation matrix for the next step.
    pub fn next_correlation(&self) -> DMatrix<f64> {
        match (&self.kind, &self.dcc) {
            (CorrelationKind::DCC, Some(state)) => math::normalize_to_correlation(&state.next_q()),
            _ => self.correlation.clone(),
        }
    }

    pub fn next_volatilities(&self) -> Vec<f64> {
        self.univariate.iter().map(|p| (0.5 * p.next_log_variance()).exp()).collect()
    }

    pub fn next_covariance(&self) -> DMatrix<f64> {
        let s = self.next_volatilities();
        let c = self.next_correlation();
        DMatrix::from_fn(s.len(), s.len(), |i, j| s[i] * c[(i, j)] * s[j])
    }
}

/// First-step output shared by CCC and DCC fits on the same window.
#[derive(Debug, Clone)]
pub struct UnivariateStage {
    pub params: Vec<EgarchTParams>,
    /// `T × d` standardized residuals.
    pub z: DMatrix<f64>,
}

pub fn fit_univariate_stage(window: &DMatrix<f64>) -> Result<UnivariateStage, ModelError> {
    let (t, d) = window.shape();
    let mut params = Vec::with_capacity(d);
    let mut z = DMatrix::<f64>::zeros(t, d);
    for k in 0..d {
        let col: Vec<f64> = window.column(k).iter().copied().collect();
        let p = fit_egarch_t(&col).map_err(|e| e.in_column(k))?;
        let eps: Vec<f64> = col.iter().map(|x| x - p.mean).collect();
        let lv0 = math::variance(&eps).ln();
        let f = filter(&eps, lv0, &p);
        for (i, v) in f.z.into_iter().enumerate() {
            z[(i, k)] = v;
        }
        params.push(p);
    }
    Ok(UnivariateStage { params, z })
}

/// Gaussian DCC quasi log-likelihood (terms not involving `C_t` dropped).
/// Also returns `Q_T`.
pub fn dcc_log_likelihood(z: &DMatrix<f64>, q_bar: &DMatrix<f64>, a: f64, b: f64) -> (f64, DMatrix<f64>) {
    let (t, d) = z.shape();
    if !(a >= 0.0 && b >= 0.0 && a + b <= DCC_PERSISTENCE_CAP) {
        return (f64::NEG_INFINITY, q_bar.clone());
    }
    let mut q = q_bar.clone();
    let mut c = DMatrix::<f64>::zeros(d, d);
    let mut zt = vec![0.0; d];
    let mut prev = vec![0.0; d];
    let mut ll = 0.0;
    let w = 1.0 - a - b;
    for i in 0..t {
        if i > 0 {
            for r in 0..d {
                for s in 0..=r {
                    let v = w * q_bar[(r, s)] + a * prev[r] * prev[s] + b * q[(r, s)];
                    q[(r, s)] = v;
                    q[(s, r)] = v;
                }
            }
        }
        for r in 0..d {
            zt[r] = z[(i, r)];
        }
        for r in 0..d {
            for s in 0..d {
                c[(r, s)] = q[(r, s)] / (q[(r, r)] * q[(s, s)]).sqrt();
            }
        }
        let Some(ch) = c.clone().cholesky() else {
            return (f64::NEG_INFINITY, q);
        };
        let l = ch.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        // forward substitution for L⁻¹ z
        let mut maha = 0.0;
        let mut y = vec![0.0; d];
        for r in 0..d {
            let mut s = zt[r];
            for k in 0..r {
                s -= l[(r, k)] * y[k];
            }
            y[r] = s / l[(r, r)];
            maha += y[r] * y[r];
        }
        let zz: f64 = zt.iter().map(|v| v * v).sum();
        ll += -0.5 * (log_det + maha - zz);
        prev.copy_from_slice(&zt);
    }
    (ll, q)
}

pub fn fit_mv_garch(window: &DMatrix<f64>, kind: CorrelationKind) -> Result<MvGarchModel, ModelError> {
    let stage = fit_univariate_stage_checked(window)?;
    fit_mv_garch_from_stage(&stage, kind)
}

fn fit_univariate_stage_checked(window: &DMatrix<f64>) -> Result<UnivariateStage, ModelError> {
    if window.nrows() < MIN_MV_GARCH_WINDOW {
        return Err(ModelError::WindowTooShort { needed: MIN_MV_GARCH_WINDOW, got: window.nrows() });
    }
    super::copula::check_columns(window)?;
    fit_univariate_stage(window)
}

/// Second step: correlation from the standardized residuals.
pub fn fit_mv_garch_from_stage(stage: &UnivariateStage, kind: CorrelationKind) -> Result<MvGarchModel, ModelError> {
    let z = &stage.z;
    let (t, d) = z.shape();
    let q_bar = math::covariance(z);
    let correlation = math::normalize_to_correlation(&q_bar);
    let correlation = if math::min_eigenvalue(&correlation) < 0.0 {
        math::clip_to_correlation(&correlation)
    } else {
        correlation
    };
    let dcc = match kind {
        CorrelationKind::CCC => None,
        CorrelationKind::DCC => {
            let objective = |th: &[f64]| -dcc_log_likelihood(z, &q_bar, th[0], th[1]).0;
            let starts = [[0.02, 0.95], [0.05, 0.90], [0.01, 0.50], [0.005, 0.05]];
            let mut best: Option<(f64, Vec<f64>)> = None;
            for s in &starts {
                let m = nelder_mead_polished(objective, s, &[0.01, 0.03], NelderMeadOptions::default(), 2);
                if m.f.is_finite() && best.as_ref().is_none_or(|(f, _)| m.f < *f) {
                    best = Some((m.f, m.x));
                }
            }
            let fixed = -objective(&[0.0, 0.0]);
            let (f, x) = best.ok_or_else(|| ModelError::NonConvergence("DCC likelihood not finite".into()))?;
            let (a, b, ll) = if -f >= fixed { (x[0], x[1], -f) } else { (0.0, 0.0, fixed) };
            let (_, q_last) = dcc_log_likelihood(z, &q_bar, a, b);
            Some(DccState {
                a,
                b,
                q_bar: q_bar.clone(),
                q_last,
                z_last: (0..d).map(|k| z[(t - 1, k)]).collect(),
                log_likelihood: ll,
            })
        }
    };
    Ok(MvGarchModel { kind, univariate: stage.params.clone(), correlation, dcc })
}

/// One-step-ahead draws `μ + D_{T+1} L u` with `L` the Cholesky factor of
/// `C_{T+1}` and `u` independent unit-variance Student-t coordinates.
pub fn sample_mv_garch(model: &MvGarchModel, n_draws: usize, seed: u64) -> Result<ForecastEnsemble, ModelError> {
    let d = model.univariate.len();
    let c = model.next_correlation();
    let l = math::correlation_cholesky(&c).ok_or(ModelError::CholeskyFailure)?;
    let sd = model.next_volatilities();
    let dists: Vec<(StudentT<f64>, f64)> = model
        .univariate
        .iter()
        .map(|p| StudentT::new(p.nu).map(|s| (s, p.nu)).map_err(|_| ModelError::InvalidSpec("bad nu".into())))
        .collect::<Result<_, _>>()?;
    let mut rng = rng_from_seed(seed);
    let mut out = vec![0.0; n_draws * d];
    let mut u = vec![0.0; d];
    for row in out.chunks_exact_mut(d) {
        for (k, uk) in u.iter_mut().enumerate() {
            *uk = standardized_t(&mut rng, &dists[k].0, dists[k].1);
        }
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..=i {
                s += l[(i, j)] * u[j];
            }
            row[i] = model.univariate[i].mean + sd[i] * s;
        }
    }
    ForecastEnsemble::from_rows(out, d).map_err(|_| ModelError::InvalidSpec("non-finite draw".into()))
}
