//! Special functions and small dense linear-algebra helpers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard normal quantile function.
///
/// Acklam's rational approximation followed by one Halley step against
/// `erfc`, which brings the error down to a few ulps over (0, 1).
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let e = norm_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `E|Z|` for a Student-t variable rescaled to unit variance (`nu > 2`).
pub fn standardized_t_abs_mean(nu: f64) -> f64 {
    (nu - 2.0).sqrt() * (ln_gamma(0.5 * (nu - 1.0)) - ln_gamma(0.5 * nu)).exp()
        / core::f64::consts::PI.sqrt()
}

/// Constant part of the unit-variance Student-t log density.
pub fn standardized_t_log_norm(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (core::f64::consts::PI * (nu - 2.0)).ln()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` divisor.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linear-interpolated empirical quantile of already sorted data.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sample covariance of the columns of `data` (rows are observations).
pub fn covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let means = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    centered.transpose() * &centered / (n as f64 - 1.0)
}

/// Rescales a covariance-like matrix to unit diagonal.
pub fn normalize_to_correlation(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let inv_sd: Vec<f64> = (0..d).map(|i| 1.0 / cov[(i, i)].sqrt()).collect();
    let mut out = DMatrix::from_fn(d, d, |i, j| cov[(i, j)] * inv_sd[i] * inv_sd[j]);
    for i in 0..d {
        out[(i, i)] = 1.0;
    }
    symmetrize(&mut out);
    out
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Projects a symmetric matrix onto the correlation matrices by clipping
/// negative eigenvalues at zero and restoring the unit diagonal.
pub fn clip_to_correlation(m: &DMatrix<f64>) -> DMatrix<f64> {
    if min_eigenvalue(m) >= 0.0 {
        return normalize_to_correlation(m);
    }
    let eig = SymmetricEigen::new(m.clone());
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    normalize_to_correlation(&rebuilt)
}

/// Lower Cholesky factor of a correlation matrix. On failure the matrix
/// is clipped and nudged towards the identity once before giving up.
pub fn correlation_cholesky(c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = c.clone().cholesky() {
        return Some(ch.l());
    }
    let d = c.nrows();
    let clipped = clip_to_correlation(c);
    let jittered = clipped * (1.0 - 1e-10) + DMatrix::<f64>::identity(d, d) * 1e-10;
    jittered.cholesky().map(|ch| ch.l())
}

/// Pearson correlation of normal scores `Φ⁻¹((rank - 0.5)/n)` per column.
/// Ties receive their average rank.
pub fn normal_score_correlation(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let d = data.ncols();
    let mut scores = DMatrix::<f64>::zeros(n, d);
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..d {
        let col = data.column(k);
        idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && col[idx[end]] == col[idx[start]] {
                end += 1;
            }
            // ranks are 1-based; ties share the average rank
            let rank = 0.5 * ((start + 1) + end) as f64;
            let z = norm_ppf((rank - 0.5) / n as f64);
            for &i in &idx[start..end] {
                scores[(i, k)] = z;
            }
            start = end;
        }
    }
    clip_to_correlation(&covariance(&scores))
}

pub fn dvector(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}


/// Serde adapter storing a matrix as a list of rows.
pub mod serde_matrix {
    use alloc::vec::Vec;

    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != nc) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
    }
}
