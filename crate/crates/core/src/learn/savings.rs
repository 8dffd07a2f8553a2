use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{by_page, AggregatedMeasurement};

/// Per-page comparison of the default, predicted and best configurations.
/// Times are median styling times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsRow {
    pub page_id: String,
    pub ideal_label: usize,
    pub model_label: usize,
    pub default_ms: f64,
    pub model_ms: f64,
    pub ideal_ms: f64,
    pub perf_savings_pct: f64,
    pub energy_savings_pct: Option<f64>,
}

impl SavingsRow {
    pub fn model_normalized(&self) -> f64 {
        self.model_ms / self.ideal_ms
    }

    pub fn default_normalized(&self) -> f64 {
        self.default_ms / self.ideal_ms
    }
}

/// Percentage of the default cost avoided by the model's choice.
pub fn savings_pct(default: f64, model: f64) -> f64 {
    (default - model) / default * 100.0
}

/// Builds one row per page in `predicted`. `ideal` carries the reference
/// label for each page; `ideal_ms` is the fastest measured configuration.
pub fn savings_report(
    aggs: &[AggregatedMeasurement],
    predicted: &BTreeMap<String, usize>,
    ideal: &BTreeMap<String, usize>,
    default_threads: usize,
) -> Result<Vec<SavingsRow>> {
    let pages: BTreeMap<&str, &[AggregatedMeasurement]> = by_page(aggs)
        .into_iter()
        .map(|g| (g[0].page_id.as_str(), g))
        .collect();

    predicted
        .iter()
        .map(|(page_id, &model_label)| {
            let group = pages
                .get(page_id.as_str())
                .ok_or_else(|| Error::Report(format!("no measurements for page {page_id}")))?;
            let at = |threads: usize| {
                group.iter().find(|a| a.threads == threads).ok_or_else(|| {
                    Error::Report(format!("page {page_id} has no measurement at {threads} threads"))
                })
            };
            let ideal_label = *ideal
                .get(page_id)
                .ok_or_else(|| Error::Report(format!("no reference label for page {page_id}")))?;
            let default = at(default_threads)?;
            let model = at(model_label)?;
            let ideal_ms = group
                .iter()
                .map(|a| a.median_style_ms)
                .fold(f64::INFINITY, f64::min);
            let energy_savings_pct = match (default.median_energy_j, model.median_energy_j) {
                (Some(d), Some(m)) => Some(savings_pct(d, m)),
                _ => None,
            };
            Ok(SavingsRow {
                page_id: page_id.clone(),
                ideal_label,
                model_label,
                default_ms: default.median_style_ms,
                model_ms: model.median_style_ms,
                ideal_ms,
                perf_savings_pct: savings_pct(default.median_style_ms, model.median_style_ms),
                energy_savings_pct,
            })
        })
        .collect()
}
