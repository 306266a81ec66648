//! Forecasting models: calibration on a rolling window and one-step-ahead
//! ensemble sampling.

pub mod copula;
pub mod egarch;
pub mod fq;
pub mod mvgarch;
pub mod optim;
pub mod pca;
pub mod quantreg;
pub mod spline;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use copula::{fit_edf_copula, sample_edf_copula, EdfCopulaModel};
pub use egarch::{fit_egarch_t, EgarchTParams};
pub use fq::{fit_fq, sample_fq, FqConfig, FqModel, FqVariant, Resampling};
pub use mvgarch::{fit_mv_garch, sample_mv_garch, CorrelationKind, MvGarchModel};
pub use pca::{pca_factors, FactorSelection, PcaFactors};
pub use quantreg::quantile_regression;
pub use spline::{monotone_quantile_curve, MonotoneQuantileCurve};

use crate::scoring::ForecastEnsemble;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("column {0} is constant over the window")]
    DegenerateColumn(usize),
    #[error("window covariance is rank deficient")]
    RankDeficientWindow,
    #[error("quantile regression failed to decrease the loss in {iterations} iterations")]
    SolverDivergence { iterations: usize },
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    #[error("correlation matrix is not positive definite")]
    CholeskyFailure,
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("window has {got} rows, model needs {needed}")]
    WindowTooShort { needed: usize, got: usize },
}

impl ModelError {
    /// Attaches a column index to errors raised by univariate fits.
    pub fn in_column(self, k: usize) -> Self {
        match self {
            ModelError::NonConvergence(msg) => ModelError::NonConvergence(format!("column {k}: {msg}")),
            ModelError::InvalidSpec(msg) => ModelError::InvalidSpec(format!("column {k}: {msg}")),
            ModelError::DegenerateColumn(_) => ModelError::DegenerateColumn(k),
            other => other,
        }
    }
}

/// One roster entry. Optional fields fall back to the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Edf {
        window: usize,
    },
    FqAl {
        window: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factors: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quantiles: Option<Vec<f64>>,
    },
    FqAb {
        window: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factors: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quantiles: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bags: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resampling: Option<Resampling>,
    },
    CccGarch {
        window: usize,
    },
    DccGarch {
        window: usize,
    },
    /// Diagnostic model: every draw equals the last row of the window.
    PointMass {
        window: usize,
    },
}

impl ModelSpec {
    /// The eight-model roster: EDF, FQ-AL and FQ-AB at 250 and 2000 rows,
    /// then CCC and DCC at 2000.
    pub fn standard_roster() -> Vec<ModelSpec> {
        let mut out = Vec::with_capacity(8);
        for &n in &[250, 2000] {
            out.push(ModelSpec::Edf { window: n });
        }
        for &n in &[250, 2000] {
            out.push(ModelSpec::FqAl { window: n, factors: None, quantiles: None });
        }
        for &n in &[250, 2000] {
            out.push(ModelSpec::FqAb { window: n, factors: None, quantiles: None, bags: None, resampling: None });
        }
        out.push(ModelSpec::CccGarch { window: 2000 });
        out.push(ModelSpec::DccGarch { window: 2000 });
        out
    }

    pub fn window(&self) -> usize {
        match *self {
            ModelSpec::Edf { window }
            | ModelSpec::FqAl { window, .. }
            | ModelSpec::FqAb { window, .. }
            | ModelSpec::CccGarch { window }
            | ModelSpec::DccGarch { window }
            | ModelSpec::PointMass { window } => window,
        }
    }

    /// Display name, e.g. `EDF250`, `FQ-AB2000`, `DCC-GARCH`.
    pub fn label(&self) -> String {
        let base = match self {
            ModelSpec::Edf { window } => format!("EDF{window}"),
            ModelSpec::FqAl { window, .. } => format!("FQ-AL{window}"),
            ModelSpec::FqAb { window, .. } => format!("FQ-AB{window}"),
            ModelSpec::CccGarch { window } if *window == mvgarch::MIN_MV_GARCH_WINDOW => "CCC-GARCH".into(),
            ModelSpec::DccGarch { window } if *window == mvgarch::MIN_MV_GARCH_WINDOW => "DCC-GARCH".into(),
            ModelSpec::CccGarch { window } => format!("CCC-GARCH{window}"),
            ModelSpec::DccGarch { window } => format!("DCC-GARCH{window}"),
            ModelSpec::PointMass { window } => format!("POINT{window}"),
        };
        let cfg = self.fq_config();
        match cfg {
            Some(c) => {
                let default = match c.variant {
                    FqVariant::AL => FqConfig::al(),
                    FqVariant::AB => FqConfig::ab(),
                };
                if c == default {
                    base
                } else {
                    let mut s = format!("{base}[m={}", c.factors);
                    if c.variant == FqVariant::AB {
                        s.push_str(&format!(",bags={}", c.bags));
                        if c.resampling == Resampling::Identity {
                            s.push_str(",identity");
                        }
                    }
                    if c.quantiles != fq::default_quantile_partition() {
                        s.push_str(&format!(",q={:?}", c.quantiles));
                    }
                    s.push(']');
                    s
                }
            }
            None => base,
        }
    }

    /// Stable identifier of the fitted object, used for seed derivation and
    /// as the model key in outputs. Two specs with equal keys describe the
    /// same model.
    pub fn key(&self) -> String {
        self.label()
    }

    pub fn fq_config(&self) -> Option<FqConfig> {
        match self {
            ModelSpec::FqAl { factors, quantiles, .. } => {
                let mut c = FqConfig::al();
                if let Some(m) = factors {
                    c.factors = *m;
                }
                if let Some(q) = quantiles {
                    c.quantiles = q.clone();
                }
                Some(c)
            }
            ModelSpec::FqAb { factors, quantiles, bags, resampling, .. } => {
                let mut c = FqConfig::ab();
                if let Some(m) = factors {
                    c.factors = *m;
                }
                if let Some(q) = quantiles {
                    c.quantiles = q.clone();
                }
                if let Some(b) = bags {
                    c.bags = *b;
                }
                if let Some(r) = resampling {
                    c.resampling = *r;
                }
                Some(c)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.window() < 2 {
            return Err(ModelError::InvalidSpec(format!("{}: window must be at least 2", self.label())));
        }
        if let Some(c) = self.fq_config() {
            if c.factors == 0 {
                return Err(ModelError::InvalidSpec(format!("{}: factors must be at least 1", self.label())));
            }
            if c.bags == 0 {
                return Err(ModelError::InvalidSpec(format!("{}: bags must be at least 1", self.label())));
            }
            let q = &c.quantiles;
            if q.is_empty() || q.windows(2).any(|w| !(w[0] < w[1])) || !(q[0] > 0.0 && q[q.len() - 1] < 1.0) {
                return Err(ModelError::InvalidSpec(format!(
                    "{}: quantiles must increase strictly within (0,1)",
                    self.label()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "kebab-case")]
pub enum CalibratedModel {
    Edf(EdfCopulaModel),
    Fq(FqModel),
    MvGarch(MvGarchModel),
    PointMass(Vec<f64>),
}

impl CalibratedModel {
    pub fn dim(&self) -> usize {
        match self {
            CalibratedModel::Edf(m) => m.support.len(),
            CalibratedModel::Fq(m) => m.curves.len(),
            CalibratedModel::MvGarch(m) => m.univariate.len(),
            CalibratedModel::PointMass(v) => v.len(),
        }
    }

    pub fn sample(&self, n_draws: usize, seed: u64) -> Result<ForecastEnsemble, ModelError> {
        match self {
            CalibratedModel::Edf(m) => sample_edf_copula(m, n_draws, seed),
            CalibratedModel::Fq(m) => sample_fq(m, n_draws, seed),
            CalibratedModel::MvGarch(m) => sample_mv_garch(m, n_draws, seed),
            CalibratedModel::PointMass(v) => {
                let d = v.len();
                let mut data = vec![0.0; n_draws * d];
                for row in data.chunks_exact_mut(d) {
                    row.copy_from_slice(v);
                }
                ForecastEnsemble::from_rows(data, d).map_err(|_| ModelError::InvalidSpec("non-finite point".into()))
            }
        }
    }
}

/// Fits one roster entry on a window of exactly `spec.window()` rows.
pub fn fit_model(spec: &ModelSpec, window: &DMatrix<f64>, seed: u64) -> Result<CalibratedModel, ModelError> {
    spec.validate()?;
    if window.nrows() != spec.window() {
        return Err(ModelError::WindowTooShort { needed: spec.window(), got: window.nrows() });
    }
    match spec {
        ModelSpec::Edf { .. } => fit_edf_copula(window).map(CalibratedModel::Edf),
        ModelSpec::FqAl { .. } | ModelSpec::FqAb { .. } => {
            let cfg = spec.fq_config().expect("fq spec");
            fit_fq(window, &cfg, seed).map(CalibratedModel::Fq)
        }
        ModelSpec::CccGarch { .. } => fit_mv_garch(window, CorrelationKind::CCC).map(CalibratedModel::MvGarch),
        ModelSpec::DccGarch { .. } => fit_mv_garch(window, CorrelationKind::DCC).map(CalibratedModel::MvGarch),
        ModelSpec::PointMass { .. } => {
            let last = window.nrows() - 1;
            Ok(CalibratedModel::PointMass(window.row(last).iter().copied().collect()))
        }
    }
}
