//! Derivative-free Nelder–Mead minimizer.

use alloc::vec;
use alloc::vec::Vec;


#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop when `f_max − f_min ≤ ftol · (1 + |f_min|)` over the simplex.
    pub ftol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { ftol: 1e-8, max_evals: 4000 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with per-coordinate initial simplex `steps`.
/// Non-finite objective values are treated as `+∞`, which is how box
/// constraints are imposed (penalty outside the feasible set).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], steps: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut evals = n + 1;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    while evals < opts.max_evals {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];
        let (fb, fw) = (values[best], values[worst]);
        if fb.is_finite() && fw - fb <= opts.ftol * (1.0 + fb.abs()) {
            converged = true;
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let point = |coef: f64, out: &mut [f64], worst_x: &[f64]| {
            for k in 0..n {
                out[k] = centroid[k] + coef * (worst_x[k] - centroid[k]);
            }
        };

        point(-1.0, &mut trial, &simplex[worst]);
        let fr = eval(&trial);
        evals += 1;
        if fr < values[best] {
            point(-2.0, &mut trial2, &simplex[worst]);
            let fe = eval(&trial2);
            evals += 1;
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        // contraction, outside if the reflection improved on the worst point
        let (coef, target) = if fr < fw { (-0.5, fr) } else { (0.5, fw) };
        point(coef, &mut trial2, &simplex[worst]);
        let fc = eval(&trial2);
        evals += 1;
        if fc < target {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = fc;
            continue;
        }
        // shrink towards the best vertex
        let xb = simplex[best].clone();
        for &i in &order[1..] {
            for k in 0..n {
                simplex[i][k] = xb[k] + 0.5 * (simplex[i][k] - xb[k]);
            }
            values[i] = eval(&simplex[i]);
            evals += 1;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum { x: simplex[best].clone(), f: values[best], evals, converged }
}

/// Nelder–Mead followed by restarts from the returned point until a
/// restart no longer improves the objective.
pub fn nelder_mead_polished<F>(mut f: F, x0: &[f64], steps: &[f64], opts: NelderMeadOptions, restarts: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = nelder_mead(&mut f, x0, steps, opts);
    let mut small: Vec<f64> = steps.iter().map(|s| 0.1 * s).collect();
    for _ in 0..restarts {
        let next = nelder_mead(&mut f, &best.x, &small, opts);
        let improved = next.f < best.f - opts.ftol * (1.0 + best.f.abs());
        let evals = best.evals + next.evals;
        if next.f <= best.f {
            best = Minimum { evals, ..next };
        } else {
            best.evals = evals;
        }
        if !improved {
            break;
        }
        small.iter_mut().for_each(|s| *s *= 0.5);
    }
    best
}
