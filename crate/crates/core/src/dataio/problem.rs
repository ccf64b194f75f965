use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use super::{EegSignal, SetLabel};
use crate::error::{Error, Result};

/// A grouping of Bonn sets into classes, written as dash-separated groups:
/// `A-E`, `ABCD-E`, `A-C-E`, `A-B-C-D-E`. Group order gives class indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClassProblem {
    groups: Vec<Vec<SetLabel>>,
}

impl ClassProblem {
    pub fn new(groups: Vec<Vec<SetLabel>>) -> Result<Self> {
        if !matches!(groups.len(), 2 | 3 | 5) {
            return Err(Error::Config(format!(
                "a class problem needs 2, 3 or 5 classes, got {}",
                groups.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for group in &groups {
            if group.is_empty() {
                return Err(Error::Config("empty class group".into()));
            }
            for &set in group {
                if !seen.insert(set) {
                    return Err(Error::Config(format!("set {set} assigned to two classes")));
                }
            }
        }
        Ok(Self { groups })
    }

    pub fn two_class_a_e() -> Self {
        Self::new(vec![vec![SetLabel::A], vec![SetLabel::E]]).unwrap()
    }

    pub fn two_class_abcd_e() -> Self {
        Self::new(vec![
            vec![SetLabel::A, SetLabel::B, SetLabel::C, SetLabel::D],
            vec![SetLabel::E],
        ])
        .unwrap()
    }

    pub fn three_class_a_c_e() -> Self {
        Self::new(vec![vec![SetLabel::A], vec![SetLabel::C], vec![SetLabel::E]]).unwrap()
    }

    pub fn five_class() -> Self {
        Self::new(SetLabel::ALL.iter().map(|&s| vec![s]).collect()).unwrap()
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn groups(&self) -> &[Vec<SetLabel>] {
        &self.groups
    }

    pub fn num_classes(&self) -> usize {
        self.groups.len()
    }

    pub fn class_of(&self, set: SetLabel) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&set))
    }

    /// The seizure class: the group holding set E, or the last group.
    pub fn positive_class(&self) -> usize {
        self.class_of(SetLabel::E).unwrap_or(self.groups.len() - 1)
    }

    pub fn class_names(&self) -> Vec<String> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|s| s.as_char()).collect())
            .collect()
    }
}

impl fmt::Display for ClassProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.class_names().join("-"))
    }
}

impl FromStr for ClassProblem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let groups = s
            .split('-')
            .map(|g| {
                g.trim()
                    .chars()
                    .map(|c| {
                        SetLabel::from_char(c)
                            .ok_or_else(|| Error::Config(format!("unknown set {c:?} in problem {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }
}

impl TryFrom<String> for ClassProblem {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ClassProblem> for String {
    fn from(p: ClassProblem) -> String {
        p.to_string()
    }
}

/// Signals tagged with class indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub signals: Vec<EegSignal>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub positive_class: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.signals
            .first()
            .map_or(super::BONN_SAMPLING_RATE_HZ, |s| s.sampling_rate_hz)
    }
}

/// Keeps the signals of the problem's sets and tags each with its class.
pub fn build_problem(signals: &[EegSignal], problem: &ClassProblem) -> Result<Dataset> {
    let present: BTreeSet<SetLabel> = signals.iter().map(|s| s.set_label).collect();
    for set in problem.groups().iter().flatten() {
        if !present.contains(set) {
            return Err(Error::Config(format!(
                "problem {problem} needs set {set}, which is not in the loaded data"
            )));
        }
    }
    let mut kept = Vec::new();
    let mut labels = Vec::new();
    for s in signals {
        if let Some(class) = problem.class_of(s.set_label) {
            kept.push(s.clone());
            labels.push(class);
        }
    }
    let dataset = Dataset {
        signals: kept,
        labels,
        class_names: problem.class_names(),
        positive_class: problem.positive_class(),
    };
    for (name, count) in dataset.class_names.iter().zip(dataset.class_counts()) {
        info!("problem {problem}: class {name} has {count} examples");
    }
    Ok(dataset)
}
