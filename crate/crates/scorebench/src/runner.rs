//! Parallel execution of the grid. Units run on a rayon pool and are merged
//! in unit order, so the tensor does not depend on the thread count.

use std::sync::atomic::{AtomicUsize, Ordering};

use scorebench_core::harness::{
    empty_tensor, grid_units, run_unit, run_unit_keeping_models, GridSettings, GridUnit, HarnessError, NamedPanel,
    ScoreTensor,
};
use scorebench_core::CalibratedModel;

pub const THREADS_ENV: &str = "SCOREBENCH_THREADS";

/// Thread count from the flag, then `SCOREBENCH_THREADS`, else rayon's
/// default.
pub fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
}

pub fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build()
}

/// A calibrated model with the unit it belongs to.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub panel: usize,
    pub unit: GridUnit,
    pub key: String,
    pub model: CalibratedModel,
}

#[derive(Debug, Default)]
pub struct GridRun {
    pub tensor: ScoreTensor,
    pub models: Vec<FittedModel>,
}

/// Runs the grid on `pool`. `progress` is called after each finished unit
/// with (done, total).
pub fn run_grid_parallel(
    panels: &[NamedPanel],
    settings: &GridSettings,
    pool: &rayon::ThreadPool,
    keep_models: bool,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<GridRun, HarnessError> {
    use rayon::prelude::*;
    let units = grid_units(panels, settings)?;
    let total = units.len();
    let done = AtomicUsize::new(0);
    let outputs: Vec<_> = pool.install(|| {
        units
            .par_iter()
            .map(|u| {
                let p = &panels[u.panel];
                let out = if keep_models { run_unit_keeping_models(p, *u, settings) } else { run_unit(p, *u, settings) };
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                out
            })
            .collect()
    });
    let mut run = GridRun { tensor: empty_tensor(settings), models: Vec::new() };
    for (u, mut out) in units.iter().zip(outputs) {
        for (key, model) in std::mem::take(&mut out.models) {
            run.models.push(FittedModel { panel: u.panel, unit: *u, key, model });
        }
        run.tensor.insert(out);
    }
    Ok(run)
}
