#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

/// Closed-form CRPS of N(0,1) at `y`, `y(2Φ(y) − 1) + 2φ(y) − 1/√π`.
pub fn gaussian_crps(y: f64) -> f64 {
    let phi = (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cdf = 0.5 * libm::erfc(-y / std::f64::consts::SQRT_2);
    y * (2.0 * cdf - 1.0) + 2.0 * phi - 1.0 / std::f64::consts::PI.sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Ranks 0..n of `x` (no ties expected).
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut r = vec![0.0; x.len()];
    for (k, &i) in idx.iter().enumerate() {
        r[i] = k as f64;
    }
    r
}

/// Lower end of a one-sided bootstrap confidence interval for the mean.
pub fn bootstrap_lower_bound(x: &[f64], level: f64, reps: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = x.len();
    let mut means: Vec<f64> = (0..reps)
        .map(|_| (0..n).map(|_| x[r.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    means[((1.0 - level) * reps as f64).floor() as usize]
}

/// `t × d` returns with EGARCH(1,1) Gaussian marginals and constant
/// equicorrelation `rho` between the standardized innovations.
pub fn ccc_egarch_data(t: usize, d: usize, rho: f64, seed: u64) -> nalgebra::DMatrix<f64> {
    let (omega, alpha, gamma, beta): (f64, f64, f64, f64) = (-0.46, 0.10, -0.05, 0.95);
    let abs_mean = (2.0 / std::f64::consts::PI).sqrt();
    let c = nalgebra::DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho });
    let l = c.cholesky().unwrap().l();
    let mut r = rng(seed);
    let mut lv: Vec<f64> = vec![omega / (1.0 - beta); d];
    let burn = 500;
    let mut out = nalgebra::DMatrix::zeros(t, d);
    for i in 0..(t + burn) {
        let u: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
        for k in 0..d {
            let z: f64 = (0..=k).map(|j| l[(k, j)] * u[j]).sum();
            if i >= burn {
                out[(i - burn, k)] = (0.5 * lv[k]).exp() * z;
            }
            lv[k] = omega + alpha * (z.abs() - abs_mean) + gamma * z + beta * lv[k];
        }
    }
    out
}

pub fn assert_correlation_matrix(c: &nalgebra::DMatrix<f64>, tol: f64) {
    let d = c.nrows();
    for i in 0..d {
        assert!((c[(i, i)] - 1.0).abs() <= 1e-12, "diag {}", c[(i, i)]);
        for j in 0..d {
            assert!((c[(i, j)] - c[(j, i)]).abs() <= 1e-12);
        }
    }
    let min = c.clone().symmetric_eigen().eigenvalues.min();
    assert!(min >= -tol, "min eigenvalue {min}");
}
