use serde::{Deserialize, Serialize};

use super::FeatureMatrix;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationParams {
    /// `(x - mean) / std`; zero-variance columns map to 0.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }
}

pub fn zscore_fit(matrix: &FeatureMatrix) -> StandardizationParams {
    let n = matrix.len() as f64;
    let (mean, std) = (0..matrix.width())
        .map(|j| {
            let col = matrix.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .unzip();
    StandardizationParams { mean, std }
}

pub fn zscore_apply(matrix: &FeatureMatrix, params: &StandardizationParams) -> FeatureMatrix {
    FeatureMatrix {
        column_names: matrix.column_names.clone(),
        ids: matrix.ids.clone(),
        rows: matrix.rows.iter().map(|r| params.transform(r)).collect(),
    }
}
