//! Multinomial logistic regression.
//!
//! Class 0 (the smallest thread count) is the reference class with an
//! implicit all-zero weight row; every other class `k` scores
//! `w_k . [x, 1]`. Training maximizes the mean log-likelihood minus
//! `l2 / 2 * |W|^2` (intercepts unpenalized) by full-batch gradient ascent
//! with backtracking, starting from zero weights.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::standardize::{zscore_apply, zscore_fit, StandardizationParams};
use super::FeatureMatrix;
use crate::dom::PageFeatures;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnrHyperparams {
    pub l2: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for MnrHyperparams {
    fn default() -> Self {
        MnrHyperparams {
            l2: 1e-4,
            max_iterations: 2000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnrModel {
    pub version: u32,
    pub classes: Vec<usize>,
    pub selected_features: Vec<String>,
    pub standardization: StandardizationParams,
    /// One row per non-reference class; the last column is the intercept.
    pub weights: Vec<Vec<f64>>,
    pub hyperparams: MnrHyperparams,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

impl MnrModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: MnrModel = serde_json::from_str(&text)?;
        if model.version != MODEL_VERSION {
            return Err(Error::Input(format!(
                "model version {} is not supported (expected {MODEL_VERSION})",
                model.version
            )));
        }
        Ok(model)
    }

    /// Picks this model's features out of a page's feature row.
    pub fn features_of(&self, page: &PageFeatures) -> Result<Vec<f64>> {
        self.selected_features
            .iter()
            .map(|n| {
                page.get(n)
                    .ok_or_else(|| Error::Input(format!("unknown feature `{n}` in model")))
            })
            .collect()
    }
}

/// Numerically safe softmax (shifted by the maximum score).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// The regularized likelihood over standardized rows and class indices.
/// Parameters are flattened row-major: `(classes - 1) x (features + 1)`.
pub struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    classes: usize,
    l2: f64,
}

impl<'a> Problem<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [usize], classes: usize, l2: f64) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(classes >= 2);
        Problem { x, y, classes, l2 }
    }

    fn features(&self) -> usize {
        self.x.first().map_or(0, |r| r.len())
    }

    fn stride(&self) -> usize {
        self.features() + 1
    }

    pub fn dim(&self) -> usize {
        (self.classes - 1) * self.stride()
    }

    fn scores(&self, w: &[f64], xi: &[f64], out: &mut [f64]) {
        let s = self.stride();
        out[0] = 0.0;
        for k in 1..self.classes {
            let row = &w[(k - 1) * s..k * s];
            out[k] = row[..s - 1].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() + row[s - 1];
        }
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        let s = self.stride();
        w.chunks(s)
            .map(|row| row[..s - 1].iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            * self.l2
            / 2.0
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let n = self.x.len() as f64;
        let mut scores = vec![0.0; self.classes];
        let mut ll = 0.0;
        for (xi, &yi) in self.x.iter().zip(self.y) {
            self.scores(w, xi, &mut scores);
            ll += scores[yi] - log_sum_exp(&scores);
        }
        ll / n - self.penalty(w)
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.value_and_gradient(w).1
    }

    pub fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let n = self.x.len() as f64;
        let s = self.stride();
        let mut grad = vec![0.0; self.dim()];
        let mut scores = vec![0.0; self.classes];
        let mut ll = 0.0;
        for (xi, &yi) in self.x.iter().zip(self.y) {
            self.scores(w, xi, &mut scores);
            ll += scores[yi] - log_sum_exp(&scores);
            let probs = softmax(&scores);
            for k in 1..self.classes {
                let resid = f64::from(u8::from(yi == k)) - probs[k];
                let g = &mut grad[(k - 1) * s..k * s];
                for (gj, xj) in g.iter_mut().zip(xi) {
                    *gj += resid * xj;
                }
                g[s - 1] += resid;
            }
        }
        for (j, g) in grad.iter_mut().enumerate() {
            *g /= n;
            if j % s != s - 1 {
                *g -= self.l2 * w[j];
            }
        }
        (ll / n - self.penalty(w), grad)
    }
}

struct Fit {
    weights: Vec<f64>,
    converged: bool,
    iterations: usize,
    trace: Vec<f64>,
}

fn ascend(problem: &Problem<'_>, hp: &MnrHyperparams) -> Fit {
    let mut w = vec![0.0; problem.dim()];
    let (mut f, mut g) = problem.value_and_gradient(&w);
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < hp.max_iterations {
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2.sqrt() < hp.tolerance {
            converged = true;
            break;
        }
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let fc = problem.objective(&cand);
            if fc >= f + ARMIJO * step * gnorm2 {
                accepted = Some(cand);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // No ascent direction left at machine precision.
            break;
        };
        w = next;
        (f, g) = problem.value_and_gradient(&w);
        trace.push(f);
        iterations += 1;
        step = (step * 2.0).min(MAX_STEP);
    }
    if !converged {
        converged = g.iter().map(|v| v * v).sum::<f64>().sqrt() < hp.tolerance;
    }
    Fit {
        weights: w,
        converged,
        iterations,
        trace,
    }
}

/// Fits standardization on `x` and then the classifier on the standardized
/// rows. Also returns the objective value after every accepted step.
pub fn mnr_fit_traced(
    x: &FeatureMatrix,
    labels: &[usize],
    hp: &MnrHyperparams,
) -> Result<(MnrModel, Vec<f64>)> {
    if x.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} feature rows but {} labels",
            x.len(),
            labels.len()
        )));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "need at least two distinct labels, found {classes:?}"
        )));
    }
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is in class list"))
        .collect();

    let standardization = zscore_fit(x);
    let z = zscore_apply(x, &standardization);
    let problem = Problem::new(z.rows(), &y, classes.len(), hp.l2);
    let fit = ascend(&problem, hp);

    let stride = x.width() + 1;
    let model = MnrModel {
        version: MODEL_VERSION,
        classes,
        selected_features: x.column_names().to_vec(),
        standardization,
        weights: fit.weights.chunks(stride).map(<[f64]>::to_vec).collect(),
        hyperparams: hp.clone(),
        converged: fit.converged,
        iterations: fit.iterations,
        objective: *fit.trace.last().expect("trace has the starting value"),
    };
    Ok((model, fit.trace))
}

pub fn mnr_fit(x: &FeatureMatrix, labels: &[usize], hp: &MnrHyperparams) -> Result<MnrModel> {
    mnr_fit_traced(x, labels, hp).map(|(m, _)| m)
}

/// Class probabilities, aligned with `model.classes`, for raw feature values
/// in `model.selected_features` order.
pub fn mnr_predict_proba(model: &MnrModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.selected_features.len() {
        return Err(Error::Input(format!(
            "expected {} features, got {}",
            model.selected_features.len(),
            x.len()
        )));
    }
    let z = model.standardization.transform(x);
    let mut scores = vec![0.0];
    for row in &model.weights {
        let (w, b) = row.split_at(row.len() - 1);
        scores.push(w.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + b[0]);
    }
    Ok(softmax(&scores))
}

/// Most probable class; ties go to the smallest thread count.
pub fn mnr_predict(model: &MnrModel, x: &[f64]) -> Result<usize> {
    let p = mnr_predict_proba(model, x)?;
    let mut best = 0;
    for k in 1..p.len() {
        if p[k] > p[best] {
            best = k;
        }
    }
    Ok(model.classes[best])
}
