//! Student-t EGARCH(1,1):
//!
//! `ln σ_t² = ω + α(|z_{t−1}| − E|z|) + γ z_{t−1} + β ln σ_{t−1}²`,
//! `z_t = ε_t / σ_t` unit-variance Student-t with `ν` degrees of freedom.

use alloc::vec::Vec;

use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};

use super::optim::{nelder_mead, nelder_mead_polished, NelderMeadOptions};
use super::ModelError;
use crate::math;
use crate::rng::rng_from_seed;

pub const MIN_EGARCH_OBSERVATIONS: usize = 250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgarchTParams {
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub nu: f64,
    /// Mean removed before fitting.
    pub mean: f64,
    /// `ln σ_T²` at the last observation.
    pub last_log_variance: f64,
    /// `z_T` at the last observation.
    pub last_z: f64,
    pub log_likelihood: f64,
}

impl EgarchTParams {
    /// `ln σ_{T+1}²` implied by the stored state.
    pub fn next_log_variance(&self) -> f64 {
        self.omega
            + self.alpha * (self.last_z.abs() - math::standardized_t_abs_mean(self.nu))
            + self.gamma * self.last_z
            + self.beta * self.last_log_variance
    }

    /// Mean of `ln σ²` under stationarity, `ω / (1 − β)`.
    pub fn unconditional_log_variance(&self) -> f64 {
        self.omega / (1.0 - self.beta)
    }

    /// Finite unconditional variance `E σ²` of the fitted process, by a
    /// long deterministic-seed simulation of the log-variance recursion.
    pub fn unconditional_variance(&self) -> f64 {
        let sim = simulate_egarch_t(self.omega, self.alpha, self.gamma, self.beta, self.nu, 200_000, 0x5eed);
        sim.iter().map(|x| x * x).sum::<f64>() / sim.len() as f64
    }
}

/// Log-variance path, standardized residuals and log-likelihood for a
/// demeaned series.
pub struct Filtered {
    pub log_variance: Vec<f64>,
    pub z: Vec<f64>,
    pub log_likelihood: f64,
}

#[inline]
fn feasible(alpha: f64, gamma: f64, beta: f64, nu: f64) -> bool {
    beta.abs() < 0.9999 && nu > 2.05 && nu <= 200.0 && alpha.abs() <= 2.0 && gamma.abs() <= 2.0
}

/// Runs the recursion from `ln σ_1² = log_var0`. Returns `-∞` when the
/// parameters leave the feasible box or the variance path explodes.
pub fn log_likelihood(eps: &[f64], log_var0: f64, omega: f64, alpha: f64, gamma: f64, beta: f64, nu: f64) -> f64 {
    if !feasible(alpha, gamma, beta, nu) {
        return f64::NEG_INFINITY;
    }
    let abs_mean = math::standardized_t_abs_mean(nu);
    let norm = math::standardized_t_log_norm(nu);
    let scale = 1.0 / (nu - 2.0);
    let half_nu1 = 0.5 * (nu + 1.0);
    let mut lv = log_var0;
    let mut acc = 0.0;
    let mut sum_lv = 0.0;
    for &e in eps {
        if !(lv.abs() < 700.0) {
            return f64::NEG_INFINITY;
        }
        let z = e * (-0.5 * lv).exp();
        sum_lv += lv;
        acc += (z * z * scale).ln_1p();
        lv = omega + alpha * (z.abs() - abs_mean) + gamma * z + beta * lv;
    }
    let n = eps.len() as f64;
    n * norm - 0.5 * sum_lv - half_nu1 * acc
}

pub fn filter(eps: &[f64], log_var0: f64, p: &EgarchTParams) -> Filtered {
    let abs_mean = math::standardized_t_abs_mean(p.nu);
    let mut lv = log_var0;
    let mut log_variance = Vec::with_capacity(eps.len());
    let mut z = Vec::with_capacity(eps.len());
    for &e in eps {
        let zt = e * (-0.5 * lv).exp();
        log_variance.push(lv);
        z.push(zt);
        lv = p.omega + p.alpha * (zt.abs() - abs_mean) + p.gamma * zt + p.beta * lv;
    }
    let log_likelihood = log_likelihood(eps, log_var0, p.omega, p.alpha, p.gamma, p.beta, p.nu);
    Filtered { log_variance, z, log_likelihood }
}

/// Maximum-likelihood fit by Nelder–Mead from five deterministic starts.
///
/// The search runs over `(μ, α, γ, β, ν)` with `ω = μ(1 − β)`, which keeps
/// the simplex away from the long `ω`–`β` ridge. Each start gets a coarse
/// run; the best is then polished to a `1e-8` likelihood tolerance.
pub fn fit_egarch_t(series: &[f64]) -> Result<EgarchTParams, ModelError> {
    if series.len() < MIN_EGARCH_OBSERVATIONS {
        return Err(ModelError::WindowTooShort { needed: MIN_EGARCH_OBSERVATIONS, got: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidSpec("non-finite series value".into()));
    }
    let mean = math::mean(series);
    let eps: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let var = math::variance(&eps);
    if !(var > 0.0) || !var.is_finite() {
        return Err(ModelError::NonConvergence("series has zero variance".into()));
    }
    let lv0 = var.ln();

    let objective = |th: &[f64]| {
        let (mu, alpha, gamma, beta, nu) = (th[0], th[1], th[2], th[3], th[4]);
        -log_likelihood(&eps, lv0, mu * (1.0 - beta), alpha, gamma, beta, nu)
    };

    // benchmark: constant variance at the sample level, best ν on a grid
    let flat = [3.0, 5.0, 8.0, 15.0, 30.0, 100.0]
        .iter()
        .map(|&nu| -objective(&[lv0, 0.0, 0.0, 0.0, nu]))
        .fold(f64::NEG_INFINITY, f64::max);

    let starts: [[f64; 5]; 5] = [
        [lv0, 0.10, 0.00, 0.95, 8.0],
        [lv0, 0.05, -0.05, 0.98, 6.0],
        [lv0, 0.20, 0.05, 0.80, 10.0],
        [lv0, 0.10, -0.10, 0.50, 5.0],
        [lv0, 0.00, 0.00, 0.00, 30.0],
    ];
    let steps = [0.5, 0.05, 0.05, 0.03, 2.0];
    let coarse = NelderMeadOptions { ftol: 1e-6, max_evals: 800 };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let m = nelder_mead(objective, s, &steps, coarse);
        if m.f.is_finite() && best.as_ref().is_none_or(|(_, f)| m.f < *f) {
            best = Some((m.x, m.f));
        }
    }
    let Some((x0, _)) = best else {
        return Err(ModelError::NonConvergence("no start produced a finite likelihood".into()));
    };
    let polished = nelder_mead_polished(objective, &x0, &[0.1, 0.02, 0.02, 0.01, 0.5], NelderMeadOptions::default(), 3);
    let ll = -polished.f;
    if !ll.is_finite() || ll < flat {
        return Err(ModelError::NonConvergence("fit does not improve on constant volatility".into()));
    }
    let th = polished.x;
    let mut params = EgarchTParams {
        omega: th[0] * (1.0 - th[3]),
        alpha: th[1],
        gamma: th[2],
        beta: th[3],
        nu: th[4],
        mean,
        last_log_variance: 0.0,
        last_z: 0.0,
        log_likelihood: ll,
    };
    let f = filter(&eps, lv0, &params);
    params.last_log_variance = *f.log_variance.last().unwrap_or(&lv0);
    params.last_z = *f.z.last().unwrap_or(&0.0);
    Ok(params)
}

/// Standardized residuals of `series` under fitted parameters, re-running
/// the filter from the sample log-variance like the fit does.
pub fn standardized_residuals(series: &[f64], p: &EgarchTParams) -> Vec<f64> {
    let eps: Vec<f64> = series.iter().map(|x| x - p.mean).collect();
    let lv0 = math::variance(&eps).ln();
    filter(&eps, lv0, p).z
}

/// Unit-variance Student-t draw.
pub fn standardized_t<R: rand::Rng + ?Sized>(rng: &mut R, dist: &StudentT<f64>, nu: f64) -> f64 {
    dist.sample(rng) * ((nu - 2.0) / nu).sqrt()
}

/// Simulates `t` observations of the EGARCH-t recursion started at its
/// unconditional log-variance, after a burn-in of 500 steps.
pub fn simulate_egarch_t(omega: f64, alpha: f64, gamma: f64, beta: f64, nu: f64, t: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let dist = StudentT::new(nu).expect("nu > 0");
    let abs_mean = math::standardized_t_abs_mean(nu);
    let mut lv = omega / (1.0 - beta);
    let burn = 500;
    let mut out = Vec::with_capacity(t);
    for i in 0..(t + burn) {
        let z = standardized_t(&mut rng, &dist, nu);
        if i >= burn {
            out.push((0.5 * lv).exp() * z);
        }
        lv = omega + alpha * (z.abs() - abs_mean) + gamma * z + beta * lv;
    }
    out
}
