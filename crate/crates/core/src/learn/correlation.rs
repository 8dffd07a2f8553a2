use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Input(format!(
            "pearson_r needs two equal-length columns of at least 2 values, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant column".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// R for every (feature, target) pair. `None` where either column is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub features: Vec<String>,
    pub targets: Vec<String>,
    /// `r[feature][target]`
    pub r: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub feature: String,
    pub target: String,
    pub r: Option<f64>,
}

impl CorrelationReport {
    pub fn max_abs(&self, feature: usize) -> Option<f64> {
        self.r[feature]
            .iter()
            .flatten()
            .map(|v| v.abs())
            .max_by(f64::total_cmp)
    }

    pub fn rows(&self) -> Vec<CorrelationRow> {
        let mut out = Vec::new();
        for (f, name) in self.features.iter().enumerate() {
            for (t, target) in self.targets.iter().enumerate() {
                out.push(CorrelationRow {
                    feature: name.clone(),
                    target: target.clone(),
                    r: self.r[f][t],
                });
            }
        }
        out
    }
}

pub fn correlation_report(
    matrix: &FeatureMatrix,
    targets: &[(String, Vec<f64>)],
) -> Result<CorrelationReport> {
    if let Some((name, _)) = targets.iter().find(|(_, v)| v.len() != matrix.len()) {
        return Err(Error::Input(format!(
            "target {name} has a different length than the feature matrix"
        )));
    }
    let mut r = Vec::with_capacity(matrix.width());
    for j in 0..matrix.width() {
        let col = matrix.column(j);
        let row = targets
            .iter()
            .map(|(_, y)| match pearson_r(&col, y) {
                Ok(v) => Ok(Some(v)),
                Err(Error::UndefinedCorrelation(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        r.push(row);
    }
    Ok(CorrelationReport {
        features: matrix.column_names().to_vec(),
        targets: targets.iter().map(|(n, _)| n.clone()).collect(),
        r,
    })
}

/// Features whose strongest |R| across targets exceeds `threshold`.
/// A threshold of 0 or below keeps every feature.
pub fn select_features(report: &CorrelationReport, threshold: f64) -> Vec<String> {
    report
        .features
        .iter()
        .enumerate()
        .filter(|&(j, _)| threshold <= 0.0 || report.max_abs(j).is_some_and(|r| r > threshold))
        .map(|(_, n)| n.clone())
        .collect()
}
