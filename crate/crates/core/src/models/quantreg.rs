//! Linear quantile regression by iteratively reweighted least squares.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::ModelError;

pub const MAX_ITERATIONS: usize = 200;
pub const MIN_SMOOTHING: f64 = 1e-6;

/// Pinball (check) loss `ρ_τ(u) = u (τ − 1{u < 0})`.
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

pub fn pinball_loss(x: &DMatrix<f64>, y: &[f64], beta: &[f64], tau: f64) -> f64 {
    (0..y.len())
        .map(|i| {
            let fit: f64 = (0..beta.len()).map(|j| x[(i, j)] * beta[j]).sum();
            pinball(y[i] - fit, tau)
        })
        .sum()
}

fn weighted_ls(rows: &[f64], k: usize, y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    // packed upper triangle of X'WX, then X'Wy
    let tri = k * (k + 1) / 2;
    let mut acc = vec![0.0; tri + k];
    for ((row, &wi), &yi) in rows.chunks_exact(k).zip(w).zip(y) {
        let mut idx = 0;
        for a in 0..k {
            let wa = wi * row[a];
            acc[tri + a] += wa * yi;
            for &rb in &row[a..] {
                acc[idx] += wa * rb;
                idx += 1;
            }
        }
    }
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut idx = 0;
    for a in 0..k {
        for b in a..k {
            xtx[(a, b)] = acc[idx];
            xtx[(b, a)] = acc[idx];
            idx += 1;
        }
    }
    let xty = DVector::from_column_slice(&acc[tri..]);
    let sol = xtx.clone().cholesky().map(|c| c.solve(&xty)).or_else(|| xtx.lu().solve(&xty))?;
    let out: Vec<f64> = sol.iter().copied().collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    let (t, k) = x.shape();
    let mut out = vec![0.0; t * k];
    for i in 0..t {
        for j in 0..k {
            out[i * k + j] = x[(i, j)];
        }
    }
    out
}

/// Minimizes `Σ ρ_τ(y − Xb)` for a design `x` that already carries its
/// intercept column.
///
/// Starts from least squares and reweights with
/// `w_i = τ / max(r_i, ε)` (`r_i ≥ 0`) or `(1 − τ) / max(−r_i, ε)`, with the
/// smoothing `ε` shrinking geometrically to `1e-6`. The best iterate by
/// pinball loss is returned.
pub fn quantile_regression(x: &DMatrix<f64>, y: &[f64], tau: f64) -> Result<Vec<f64>, ModelError> {
    quantile_regression_from(x, y, tau, None)
}

/// As [`quantile_regression`], optionally warm-started from `start`.
pub fn quantile_regression_from(
    x: &DMatrix<f64>,
    y: &[f64],
    tau: f64,
    start: Option<&[f64]>,
) -> Result<Vec<f64>, ModelError> {
    let (t, k) = x.shape();
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ModelError::InvalidSpec(alloc::format!("quantile level {tau} outside (0,1)")));
    }
    if t != y.len() || t <= k {
        return Err(ModelError::InvalidSpec(alloc::format!("need more than {k} rows, got {t}")));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidSpec("non-finite regression input".into()));
    }
    let rows = row_major(x);
    let mut beta = match start {
        Some(s) if s.len() == k => s.to_vec(),
        _ => weighted_ls(&rows, k, y, &vec![1.0; t]).ok_or(ModelError::SolverDivergence { iterations: 0 })?,
    };
    let start_loss = pinball_loss(x, y, &beta, tau);
    let mut best = beta.clone();
    let mut best_loss = start_loss;
    if start_loss == 0.0 {
        return Ok(best);
    }

    let mut resid = vec![0.0; t];
    let mut w = vec![0.0; t];
    let fill_resid = |beta: &[f64], resid: &mut [f64]| {
        for (i, row) in rows.chunks_exact(k).enumerate() {
            let fit: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            resid[i] = y[i] - fit;
        }
    };
    fill_resid(&beta, &mut resid);
    let scale = resid.iter().map(|r| r.abs()).sum::<f64>() / t as f64;
    let mut eps = (0.1 * scale).max(MIN_SMOOTHING);
    let mut decreased = false;
    let mut stalls = 0;

    for _ in 0..MAX_ITERATIONS {
        for (wi, &r) in w.iter_mut().zip(&resid) {
            *wi = if r >= 0.0 { tau / r.max(eps) } else { (1.0 - tau) / (-r).max(eps) };
        }
        let Some(next) = weighted_ls(&rows, k, y, &w) else { break };
        let step: f64 = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let size: f64 = next.iter().map(|v| v.abs()).fold(0.0, f64::max);
        beta = next;
        fill_resid(&beta, &mut resid);
        let loss: f64 = resid.iter().map(|&r| pinball(r, tau)).sum();
        if loss < best_loss {
            if loss < start_loss {
                decreased = true;
            }
            let rel = (best_loss - loss) / best_loss.max(f64::MIN_POSITIVE);
            best_loss = loss;
            best.copy_from_slice(&beta);
            stalls = if rel < 1e-6 { stalls + 1 } else { 0 };
        } else {
            stalls += 1;
        }
        if eps <= MIN_SMOOTHING && (step <= 1e-10 * (1.0 + size) || stalls >= 3) {
            return Ok(best);
        }
        eps = (eps * 0.2).max(MIN_SMOOTHING);
    }
    let y_scale: f64 = y.iter().map(|v| v.abs()).sum::<f64>();
    if !decreased && start_loss > 1e-12 * (1.0 + y_scale) {
        return Err(ModelError::SolverDivergence { iterations: MAX_ITERATIONS });
    }
    Ok(best)
}
