use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Evaluation protocol. Text form: `holdout:<train fraction>`, `kfold:<k>`, `loo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SplitKind {
    Holdout { train_fraction: f64 },
    KFold { k: usize },
    LeaveOneOut,
}

impl SplitKind {
    /// Column text used in result tables, e.g. `Hold-out (80.00-20.00%)`.
    pub fn table_label(&self) -> String {
        match *self {
            SplitKind::Holdout { train_fraction } => format!(
                "Hold-out ({:.2}-{:.2}%)",
                100.0 * train_fraction,
                100.0 * (1.0 - train_fraction)
            ),
            SplitKind::KFold { k } => format!("{k}-folds cross-validation"),
            SplitKind::LeaveOneOut => "Leave-one-out CV".to_string(),
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitKind::Holdout { train_fraction } => write!(f, "holdout:{train_fraction}"),
            SplitKind::KFold { k } => write!(f, "kfold:{k}"),
            SplitKind::LeaveOneOut => write!(f, "loo"),
        }
    }
}

impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad split {s:?}; use holdout:<frac>, kfold:<k> or loo"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (kind, arg) {
            ("holdout", Some(a)) => Ok(SplitKind::Holdout {
                train_fraction: a.parse().map_err(|_| bad())?,
            }),
            ("holdout", None) => Ok(SplitKind::Holdout { train_fraction: 0.8 }),
            ("kfold", Some(a)) => Ok(SplitKind::KFold {
                k: a.parse().map_err(|_| bad())?,
            }),
            ("loo", None) => Ok(SplitKind::LeaveOneOut),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for SplitKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SplitKind> for String {
    fn from(k: SplitKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Builds stratified folds over `labels.len()` examples.
///
/// Each class's indices are shuffled independently. Hold-out keeps
/// `round(fraction * n_class)` of every class for training. K-fold deals
/// the shuffled per-class lists round-robin, continuing the deal across
/// classes so fold sizes differ by at most one. Index lists are sorted.
pub fn make_splits(labels: &[usize], kind: SplitKind, seed: u64) -> Result<SplitPlan> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::argument("cannot split an empty dataset"));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = rng_from_seed(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }

    let folds = match kind {
        SplitKind::Holdout { train_fraction } => {
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(Error::argument(format!(
                    "train fraction must lie in (0, 1), got {train_fraction}"
                )));
            }
            let mut fold = Fold {
                train: Vec::new(),
                test: Vec::new(),
            };
            for members in &by_class {
                let n_train = (train_fraction * members.len() as f64).round() as usize;
                fold.train.extend_from_slice(&members[..n_train]);
                fold.test.extend_from_slice(&members[n_train..]);
            }
            if fold.train.is_empty() || fold.test.is_empty() {
                return Err(Error::argument(format!(
                    "hold-out fraction {train_fraction} leaves an empty side on {n} examples"
                )));
            }
            vec![fold]
        }
        SplitKind::KFold { k } => {
            if k < 2 || k > n {
                return Err(Error::argument(format!("k-fold needs 2 <= k <= {n}, got k = {k}")));
            }
            let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
            let mut position = 0;
            for members in &by_class {
                for &idx in members {
                    tests[position % k].push(idx);
                    position += 1;
                }
            }
            tests.into_iter().map(|test| complement_fold(n, test)).collect()
        }
        SplitKind::LeaveOneOut => (0..n).map(|i| complement_fold(n, vec![i])).collect(),
    };

    let folds = folds
        .into_iter()
        .map(|mut f: Fold| {
            f.train.sort_unstable();
            f.test.sort_unstable();
            f
        })
        .collect();
    Ok(SplitPlan { kind, seed, folds })
}

fn complement_fold(n: usize, test: Vec<usize>) -> Fold {
    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    Fold {
        train: (0..n).filter(|&i| !in_test[i]).collect(),
        test,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn balanced(per_class: &[usize]) -> Vec<usize> {
        per_class
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect()
    }

    #[test]
    fn holdout_80_20_on_100_100() {
        let labels = balanced(&[100, 100]);
        let plan = make_splits(&labels, SplitKind::Holdout { train_fraction: 0.8 }, 1).unwrap();
        let fold = &plan.folds[0];
        assert_eq!(fold.train.len(), 160);
        assert_eq!(fold.test.len(), 40);
        let class0_train = fold.train.iter().filter(|&&i| labels[i] == 0).count();
        assert_eq!(class0_train, 80);
    }

    #[test]
    fn leave_one_out_has_one_fold_per_example() {
        let plan = make_splits(&balanced(&[5, 5]), SplitKind::LeaveOneOut, 0).unwrap();
        assert_eq!(plan.folds.len(), 10);
        assert!(plan.folds.iter().all(|f| f.test.len() == 1 && f.train.len() == 9));
    }

    #[test]
    fn ten_fold_covers_every_example_once() {
        let labels = balanced(&[400, 100]);
        let plan = make_splits(&labels, SplitKind::KFold { k: 10 }, 3).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in &plan.folds {
            for &i in &f.test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn argument_errors() {
        let labels = balanced(&[3, 3]);
        assert!(make_splits(&labels, SplitKind::KFold { k: 7 }, 0).is_err());
        assert!(make_splits(&labels, SplitKind::KFold { k: 1 }, 0).is_err());
        assert!(make_splits(&labels, SplitKind::Holdout { train_fraction: 1.0 }, 0).is_err());
        assert!(make_splits(&labels, SplitKind::Holdout { train_fraction: 0.0 }, 0).is_err());
        assert!(make_splits(&[], SplitKind::LeaveOneOut, 0).is_err());
    }

    #[test]
    fn text_forms() {
        for s in ["holdout:0.8", "kfold:10", "loo"] {
            assert_eq!(s.parse::<SplitKind>().unwrap().to_string(), s);
        }
        assert!("kfold".parse::<SplitKind>().is_err());
        assert_eq!(SplitKind::Holdout { train_fraction: 0.8 }.table_label(), "Hold-out (80.00-20.00%)");
    }

    proptest! {
        #[test]
        fn folds_are_disjoint_stratified_and_deterministic(
            counts in proptest::collection::vec(1usize..40, 2..=5),
            k in 2usize..11,
            seed in any::<u64>(),
        ) {
            let labels = balanced(&counts);
            let n = labels.len();
            prop_assume!(k <= n);
            let plan = make_splits(&labels, SplitKind::KFold { k }, seed).unwrap();
            prop_assert_eq!(&plan, &make_splits(&labels, SplitKind::KFold { k }, seed).unwrap());
            let mut tested = vec![0; n];
            for f in &plan.folds {
                let mut all: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                for &i in &f.test { tested[i] += 1; }
                for (c, &nc) in counts.iter().enumerate() {
                    let in_test = f.test.iter().filter(|&&i| labels[i] == c).count() as f64;
                    let expected = nc as f64 / k as f64;
                    prop_assert!((in_test - expected).abs() < 1.0,
                        "class {} has {} in a test fold of {}, expected {}", c, in_test, f.test.len(), expected);
                }
            }
            prop_assert!(tested.iter().all(|&t| t == 1));
        }
    }
}
