//! Confusion matrices and sensitivity / specificity / accuracy.
//!
//! Binary problems report the positive (seizure) class's sensitivity and
//! the negative class's specificity. Problems with more classes report the
//! macro average of one-vs-rest values; per-class values are always kept.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::SegmentedExample;
use crate::error::{Error, Result};
use crate::nn::{predict, ModelParams};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_pairs(classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = Self::new(classes);
        for (truth, predicted) in pairs {
            if truth >= classes || predicted >= classes {
                return Err(Error::argument(format!(
                    "pair ({truth}, {predicted}) out of range for {classes} classes"
                )));
            }
            m.counts[truth][predicted] += 1;
        }
        Ok(m)
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes()).map(|k| self.counts[k][k]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: u64,
    /// `None` when the class is absent from the evaluated set.
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Averaging {
    Binary { positive_class: usize },
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fold: Option<usize>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: f64,
    pub averaging: Averaging,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix, positive_class: usize, fold: Option<usize>) -> Result<Self> {
        let k = confusion.classes();
        let total = confusion.total();
        if total == 0 {
            return Err(Error::argument("metrics of an empty test set"));
        }
        if positive_class >= k {
            return Err(Error::argument(format!("positive class {positive_class} out of range")));
        }
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let support = confusion.support(c);
                if support == 0 {
                    warn!("class {c} is absent from the test set; its metrics are undefined");
                    return ClassMetrics {
                        class: c,
                        support,
                        sensitivity: None,
                        specificity: None,
                    };
                }
                let tp = confusion.counts[c][c];
                let fp = confusion.predicted(c) - tp;
                let negatives = total - support;
                ClassMetrics {
                    class: c,
                    support,
                    sensitivity: ratio(tp, support),
                    specificity: ratio(negatives - fp, negatives),
                }
            })
            .collect();

        let (sensitivity, specificity, averaging) = if k == 2 {
            let pos = positive_class;
            let neg = 1 - pos;
            let sens = ratio(confusion.counts[pos][pos], confusion.support(pos));
            let spec = ratio(confusion.counts[neg][neg], confusion.support(neg));
            (sens, spec, Averaging::Binary { positive_class: pos })
        } else {
            (
                mean_defined(per_class.iter().map(|c| c.sensitivity)),
                mean_defined(per_class.iter().map(|c| c.specificity)),
                Averaging::Macro,
            )
        };

        Ok(Self {
            fold,
            sensitivity,
            specificity,
            accuracy: confusion.accuracy(),
            averaging,
            per_class,
            confusion,
        })
    }
}

/// Predicts every test example and summarizes the outcome.
pub fn evaluate(
    params: &ModelParams,
    examples: &[SegmentedExample],
    test_indices: &[usize],
    positive_class: usize,
    fold: Option<usize>,
) -> Result<MetricsReport> {
    if test_indices.is_empty() {
        return Err(Error::argument("empty test set"));
    }
    let pairs = test_indices
        .par_iter()
        .map(|&i| Ok((examples[i].label, predict(params, &examples[i])?)))
        .collect::<Result<Vec<_>>>()?;
    let confusion = ConfusionMatrix::from_pairs(params.dims().classes, pairs)?;
    MetricsReport::from_confusion(confusion, positive_class, fold)
}

/// Unweighted mean over folds, plus the pooled confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub folds: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: f64,
    pub pooled_confusion: ConfusionMatrix,
}

impl AggregateMetrics {
    pub fn from_reports(reports: &[MetricsReport]) -> Result<Self> {
        let first = reports.first().ok_or_else(|| Error::argument("no fold reports to aggregate"))?;
        let mut pooled = ConfusionMatrix::new(first.confusion.classes());
        for r in reports {
            pooled.add(&r.confusion);
        }
        Ok(Self {
            folds: reports.len(),
            sensitivity: mean_defined(reports.iter().map(|r| r.sensitivity)),
            specificity: mean_defined(reports.iter().map(|r| r.specificity)),
            accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / reports.len() as f64,
            pooled_confusion: pooled,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix {
            counts: rows.iter().map(|r| r.to_vec()).collect(),
        }
    }

    #[test]
    fn perfect_predictions() {
        let r = MetricsReport::from_confusion(matrix(&[&[20, 0], &[0, 20]]), 1, None).unwrap();
        assert_eq!((r.sensitivity, r.specificity, r.accuracy), (Some(1.0), Some(1.0), 1.0));
    }

    #[test]
    fn binary_arithmetic() {
        let r = MetricsReport::from_confusion(matrix(&[&[90, 10], &[0, 100]]), 1, None).unwrap();
        assert_eq!(r.sensitivity, Some(1.0));
        assert_eq!(r.specificity, Some(0.9));
        assert_eq!(r.accuracy, 0.95);
    }

    #[test]
    fn constant_predictor_on_unbalanced_fold() {
        let r = MetricsReport::from_confusion(matrix(&[&[80, 0], &[20, 0]]), 1, None).unwrap();
        assert_eq!(r.accuracy, 0.8);
        assert_eq!(r.sensitivity, Some(0.0));
        assert_eq!(r.specificity, Some(1.0));
    }

    #[test]
    fn macro_metrics_are_means_of_per_class_values() {
        let m = matrix(&[&[8, 1, 1], &[2, 6, 2], &[0, 3, 7]]);
        let r = MetricsReport::from_confusion(m.clone(), 2, Some(0)).unwrap();
        let sens: Vec<f64> = r.per_class.iter().map(|c| c.sensitivity.unwrap()).collect();
        assert_eq!(sens, vec![0.8, 0.6, 0.7]);
        assert!((r.sensitivity.unwrap() - 0.7).abs() < 1e-12);
        // class 0: TN = 30 - 10 - 2 = 18 of 20 negatives
        assert!((r.per_class[0].specificity.unwrap() - 0.9).abs() < 1e-12);
        let spec_mean = r.per_class.iter().map(|c| c.specificity.unwrap()).sum::<f64>() / 3.0;
        assert!((r.specificity.unwrap() - spec_mean).abs() < 1e-12);
        assert!((r.accuracy - m.correct() as f64 / m.total() as f64).abs() < 1e-12);
    }

    #[test]
    fn absent_class_is_excluded_from_macro_average() {
        let r = MetricsReport::from_confusion(matrix(&[&[5, 0, 0], &[0, 0, 0], &[1, 0, 4]]), 2, None).unwrap();
        assert_eq!(r.per_class[1].sensitivity, None);
        assert_eq!(r.per_class[1].specificity, None);
        assert!((r.sensitivity.unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn single_example_fold_has_undefined_sensitivity() {
        let r = MetricsReport::from_confusion(matrix(&[&[1, 0], &[0, 0]]), 1, Some(3)).unwrap();
        assert_eq!(r.sensitivity, None);
        assert_eq!(r.specificity, Some(1.0));
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn aggregate_is_fold_mean() {
        let a = MetricsReport::from_confusion(matrix(&[&[1, 0], &[0, 0]]), 1, Some(0)).unwrap();
        let b = MetricsReport::from_confusion(matrix(&[&[0, 0], &[1, 0]]), 1, Some(1)).unwrap();
        let agg = AggregateMetrics::from_reports(&[a, b]).unwrap();
        assert_eq!(agg.accuracy, 0.5);
        assert_eq!(agg.sensitivity, Some(0.0));
        assert_eq!(agg.specificity, Some(1.0));
        assert_eq!(agg.pooled_confusion.total(), 2);
    }

    #[test]
    fn out_of_range_pairs() {
        assert!(ConfusionMatrix::from_pairs(2, [(0, 2)]).is_err());
        assert!(MetricsReport::from_confusion(ConfusionMatrix::new(2), 1, None).is_err());
    }
}
