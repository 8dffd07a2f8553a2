//! Feature standardization, correlation-based feature selection, a
//! multinomial logistic regression classifier, k-fold evaluation and the
//! savings report.

mod correlation;
mod cv;
mod mnr;
mod savings;
mod standardize;

pub use correlation::{correlation_report, pearson_r, select_features, CorrelationReport, CorrelationRow};
pub use cv::{cross_validate, fold_assignment, CvReport, FoldDetail};
pub use mnr::{
    mnr_fit, mnr_fit_traced, mnr_predict, mnr_predict_proba, softmax, MnrHyperparams, MnrModel,
    Problem, MODEL_VERSION,
};
pub use savings::{savings_pct, savings_report, SavingsRow};
pub use standardize::{zscore_apply, zscore_fit, StandardizationParams};

use crate::dom::{PageFeatures, FEATURE_NAMES};
use crate::error::{Error, Result};

/// Row-major table of named feature columns, one row per page.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    column_names: Vec<String>,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(column_names: Vec<String>, ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::Input(format!("{} ids for {} rows", ids.len(), rows.len())));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != column_names.len()) {
            return Err(Error::Input(format!(
                "row {i} has {} values, expected {}",
                r.len(),
                column_names.len()
            )));
        }
        Ok(FeatureMatrix {
            column_names,
            ids,
            rows,
        })
    }

    /// All nine page features, in [`FEATURE_NAMES`] order.
    pub fn from_features(pages: &[PageFeatures]) -> Self {
        FeatureMatrix {
            column_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            ids: pages.iter().map(|p| p.page_id.clone()).collect(),
            rows: pages.iter().map(|p| p.values().to_vec()).collect(),
        }
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::Input(format!("unknown feature `{n}`")))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            column_names: names.to_vec(),
            ids: self.ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
        })
    }

    /// Keeps the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            column_names: self.column_names.clone(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}
