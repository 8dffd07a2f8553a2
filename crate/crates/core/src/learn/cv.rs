use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mnr::{mnr_fit, mnr_predict, MnrHyperparams};
use super::standardize::{zscore_fit, StandardizationParams};
use super::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldDetail {
    pub test_rows: Vec<usize>,
    pub accuracy: f64,
    /// Standardization the fold's model was fit with (training rows only).
    pub standardization: StandardizationParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub max_accuracy: f64,
    /// `(true, predicted) -> count`, pooled over folds.
    pub confusion: BTreeMap<(usize, usize), usize>,
    pub label_distribution: BTreeMap<usize, usize>,
    pub folds: Vec<FoldDetail>,
}

/// Assigns each row to one of `k` folds. When every class has at least `k`
/// members, rows are shuffled within their class and dealt round-robin
/// class by class, so each fold keeps the class proportions; otherwise all
/// rows are shuffled together. Returns the assignment and whether it was
/// stratified.
pub fn fold_assignment(labels: &[usize], k: usize, seed: u64) -> Result<(Vec<usize>, bool)> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!(
            "{k} folds requested for {} rows",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let stratified = by_class.values().all(|rows| rows.len() >= k);
    let order: Vec<usize> = if stratified {
        by_class
            .into_values()
            .flat_map(|mut rows| {
                rows.shuffle(&mut rng);
                rows
            })
            .collect()
    } else {
        let mut rows: Vec<usize> = (0..labels.len()).collect();
        rows.shuffle(&mut rng);
        rows
    };
    let mut fold = vec![0; labels.len()];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    Ok((fold, stratified))
}

/// k-fold cross-validation of the classifier. Each fold's model (including
/// its standardization) is fit on the other k-1 folds only.
pub fn cross_validate(
    x: &FeatureMatrix,
    labels: &[usize],
    k: usize,
    seed: u64,
    hp: &MnrHyperparams,
) -> Result<CvReport> {
    if x.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} feature rows but {} labels",
            x.len(),
            labels.len()
        )));
    }
    let (assignment, stratified) = fold_assignment(labels, k, seed)?;

    let mut confusion = BTreeMap::new();
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| assignment[i] == f);
        let train_y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let train_x = x.subset(&train);
        // Unstratified folds can leave a rare class only in the test fold;
        // a single-class training set can only predict that class.
        let model = if train_y.iter().all(|&l| l == train_y[0]) {
            None
        } else {
            Some(mnr_fit(&train_x, &train_y, hp)?)
        };
        let mut correct = 0;
        for &i in &test {
            let predicted = match &model {
                Some(m) => mnr_predict(m, &x.rows()[i])?,
                None => train_y[0],
            };
            *confusion.entry((labels[i], predicted)).or_insert(0) += 1;
            if predicted == labels[i] {
                correct += 1;
            }
        }
        folds.push(FoldDetail {
            accuracy: correct as f64 / test.len() as f64,
            test_rows: test,
            standardization: match model {
                Some(m) => m.standardization,
                None => zscore_fit(&train_x),
            },
        });
    }

    let fold_accuracies: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let mut label_distribution = BTreeMap::new();
    for &l in labels {
        *label_distribution.entry(l).or_insert(0) += 1;
    }
    Ok(CvReport {
        k,
        seed,
        stratified,
        mean_accuracy: fold_accuracies.iter().sum::<f64>() / k as f64,
        max_accuracy: fold_accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fold_accuracies,
        confusion,
        label_distribution,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_of_535_rows() {
        let labels: Vec<usize> = (0..535)
            .map(|i| match i % 11 {
                0 => 2,
                1..=4 => 4,
                _ => 1,
            })
            .collect();
        let (fold, stratified) = fold_assignment(&labels, 10, 42).unwrap();
        assert!(stratified);
        let mut sizes = vec![0; 10];
        for &f in &fold {
            sizes[f] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 53 || s == 54), "{sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), 535);

        // Every fold sees every class.
        for f in 0..10 {
            let mut seen: Vec<usize> = (0..535).filter(|&i| fold[i] == f).map(|i| labels[i]).collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen, vec![1, 2, 4]);
        }
    }

    #[test]
    fn small_classes_fall_back_to_shuffling() {
        let labels = [1, 1, 1, 1, 2, 4, 4, 4, 4, 4];
        let (fold, stratified) = fold_assignment(&labels, 3, 1).unwrap();
        assert!(!stratified);
        assert_eq!(fold.len(), 10);
    }

    #[test]
    fn invalid_fold_counts() {
        assert!(matches!(fold_assignment(&[1, 2], 3, 0), Err(Error::Config(_))));
        assert!(matches!(fold_assignment(&[1, 2], 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic_for_seed() {
        let labels: Vec<usize> = (0..40).map(|i| [1, 2, 4][i % 3]).collect();
        assert_eq!(fold_assignment(&labels, 4, 7).unwrap(), fold_assignment(&labels, 4, 7).unwrap());
        assert_ne!(fold_assignment(&labels, 4, 7).unwrap(), fold_assignment(&labels, 4, 8).unwrap());
    }

    #[test]
    fn lone_rare_class_does_not_abort() {
        let labels: Vec<usize> = (0..20).map(|i| if i == 7 { 4 } else { 1 }).collect();
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let x = FeatureMatrix::new(vec!["a".into()], (0..20).map(|i| i.to_string()).collect(), rows).unwrap();
        let report = cross_validate(&x, &labels, 10, 0, &MnrHyperparams::default()).unwrap();
        assert!(!report.stratified);
        // The fold holding row 7 trained on class 1 alone and predicts it.
        assert_eq!(report.confusion.get(&(4, 1)), Some(&1));
        assert_eq!(report.confusion.values().sum::<usize>(), 20);
        for fold in &report.folds {
            let train: Vec<usize> = (0..20).filter(|i| !fold.test_rows.contains(i)).collect();
            assert_eq!(fold.standardization, zscore_fit(&x.subset(&train)));
        }
    }

    #[test]
    fn cv_on_threshold_rule() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64, ((i * 7) % 13) as f64]).collect();
        let labels: Vec<usize> = (0..60).map(|i| if i < 30 { 1 } else { 4 }).collect();
        let x = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            (0..60).map(|i| i.to_string()).collect(),
            rows,
        )
        .unwrap();
        let report = cross_validate(&x, &labels, 5, 3, &MnrHyperparams::default()).unwrap();
        assert_eq!(report.fold_accuracies.len(), 5);
        assert!(report.mean_accuracy >= 0.9, "{report:?}");
        assert_eq!(report.confusion.values().sum::<usize>(), 60);
        assert_eq!(report.label_distribution[&1], 30);
        let mean = report.fold_accuracies.iter().sum::<f64>() / 5.0;
        assert_eq!(report.mean_accuracy, mean);
    }
}
