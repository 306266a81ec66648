//! Versioned JSON documents for calibrated models.

use std::path::Path;

use chrono::NaiveDate;
use scorebench_core::harness::{ensemble_seed, fit_seed};
use scorebench_core::{CalibratedModel, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::tensor_io::{path_component, write_json, TensorIoError};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const EGARCH_FORM: &str =
    "ln s2_t = omega + alpha (|z_{t-1}| - E|z|) + gamma z_{t-1} + beta ln s2_{t-1}; z_t unit-variance Student-t(nu)";
pub const DCC_FORM: &str = "Q_t = (1 - a - b) Q_bar + a z_{t-1} z_{t-1}' + b Q_{t-1}; C_t = diag(Q_t)^-1/2 Q_t diag(Q_t)^-1/2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub root: u64,
    pub fit: u64,
    pub ensemble: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub key: String,
    pub spec: Option<ModelSpec>,
    pub panel: String,
    pub evaluation_date: NaiveDate,
    /// Last date inside the calibration window.
    pub window_end: NaiveDate,
    pub window_rows: usize,
    pub seeds: SeedLineage,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forms: Vec<String>,
    pub model: CalibratedModel,
}

impl ModelDocument {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        key: &str,
        spec: Option<ModelSpec>,
        panel: &str,
        evaluation_date: NaiveDate,
        window_end: NaiveDate,
        root: u64,
        model: CalibratedModel,
    ) -> Self {
        let forms = match &model {
            CalibratedModel::MvGarch(m) => {
                let mut f = vec![EGARCH_FORM.to_string()];
                if m.dcc.is_some() {
                    f.push(DCC_FORM.to_string());
                }
                f
            }
            _ => Vec::new(),
        };
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            key: key.into(),
            window_rows: spec.as_ref().map(|s| s.window()).unwrap_or(0),
            spec,
            panel: panel.into(),
            evaluation_date,
            window_end,
            seeds: SeedLineage {
                root,
                fit: fit_seed(root, panel, evaluation_date, key),
                ensemble: ensemble_seed(root, panel, evaluation_date, key),
            },
            forms,
            model,
        }
    }

    pub fn relative_path(&self) -> String {
        format!("models/{}/{}/{}.json", path_component(&self.panel), self.evaluation_date, path_component(&self.key))
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), TensorIoError> {
        write_json(self, &out_dir.join(self.relative_path()))
    }

    pub fn read(path: &Path) -> Result<ModelDocument, TensorIoError> {
        let text = std::fs::read_to_string(path).map_err(|source| TensorIoError::Io { path: path.into(), source })?;
        let doc: ModelDocument =
            serde_json::from_str(&text).map_err(|source| TensorIoError::Json { path: path.into(), source })?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(TensorIoError::Corrupt {
                path: path.into(),
                reason: format!("unsupported model format version {}", doc.format_version),
            });
        }
        Ok(doc)
    }
}
