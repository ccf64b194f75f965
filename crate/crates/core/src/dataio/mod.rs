//! Bonn-format ingestion, class problems, segmentation, splits and scaling.

mod normalize;
mod problem;
mod segment;
mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use normalize::{normalize, normalize_samples, Normalization};
pub use problem::{build_problem, ClassProblem, Dataset};
pub use segment::{flatten, segment, segment_dataset, segment_samples, SegmentedExample};
pub use split::{make_splits, Fold, SplitKind, SplitPlan};

/// Samples kept per Bonn recording.
pub const SIGNAL_LENGTH: usize = 4096;
pub const BONN_SAMPLING_RATE_HZ: f64 = 173.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SetLabel {
    A,
    B,
    C,
    D,
    E,
}

impl SetLabel {
    pub const ALL: [SetLabel; 5] = [SetLabel::A, SetLabel::B, SetLabel::C, SetLabel::D, SetLabel::E];

    pub fn as_char(self) -> char {
        match self {
            SetLabel::A => 'A',
            SetLabel::B => 'B',
            SetLabel::C => 'C',
            SetLabel::D => 'D',
            SetLabel::E => 'E',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(SetLabel::A),
            'B' => Some(SetLabel::B),
            'C' => Some(SetLabel::C),
            'D' => Some(SetLabel::D),
            'E' => Some(SetLabel::E),
            _ => None,
        }
    }
}

impl fmt::Display for SetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for SetLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next().and_then(SetLabel::from_char), chars.next()) {
            (Some(set), None) => Ok(set),
            _ => Err(Error::Config(format!("unknown set {s:?}, expected one of A..E"))),
        }
    }
}

/// One single-channel recording, samples in µV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegSignal {
    pub samples: Vec<f64>,
    pub set_label: SetLabel,
    pub source_id: String,
    pub sampling_rate_hz: f64,
}

impl EegSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Set letter → directory of one-sample-per-line text files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub sets: BTreeMap<SetLabel, PathBuf>,
}

impl Manifest {
    /// Reads a JSON object such as `{"A": "data/Z", "E": "data/S"}`.
    /// Relative directories resolve against the manifest's own directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: BTreeMap<String, PathBuf> = serde_json::from_str(&text).map_err(|source| Error::Json {
            what: format!("manifest {}", path.display()),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut sets = BTreeMap::new();
        for (key, dir) in raw {
            let set: SetLabel = key.parse()?;
            let dir = if dir.is_absolute() { dir } else { base.join(dir) };
            sets.insert(set, dir);
        }
        if sets.is_empty() {
            return Err(Error::Config(format!("manifest {} lists no sets", path.display())));
        }
        Ok(Self { sets })
    }
}

/// Parses one signal file: one decimal sample per line, surrounding
/// whitespace and CRLF tolerated, blank lines skipped.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_samples(&text, path)
}

fn parse_samples(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut samples = Vec::with_capacity(SIGNAL_LENGTH + 1);
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => samples.push(v),
            _ => {
                return Err(Error::Parse {
                    file: path.to_path_buf(),
                    line: i + 1,
                    content: trimmed.to_string(),
                })
            }
        }
    }
    Ok(samples)
}

/// Writes samples one per line using the shortest exact decimal form.
pub fn write_samples(path: &Path, samples: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(samples.len() * 12);
    for s in samples {
        text.push_str(&format!("{s}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn signal_files(set: SetLabel, dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Ingestion {
        set: set.as_char(),
        reason: format!("cannot read directory {}: {e}", dir.display()),
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Ingestion {
            set: set.as_char(),
            reason: format!("directory {} contains no signal files", dir.display()),
        });
    }
    Ok(files)
}

fn load_signal(set: SetLabel, path: &Path) -> Result<EegSignal> {
    let mut samples = read_samples(path)?;
    if samples.len() < SIGNAL_LENGTH {
        return Err(Error::SignalLength {
            file: path.to_path_buf(),
            len: samples.len(),
            required: SIGNAL_LENGTH,
        });
    }
    // Bonn files usually carry 4097 samples.
    samples.truncate(SIGNAL_LENGTH);
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(EegSignal {
        samples,
        set_label: set,
        source_id,
        sampling_rate_hz: BONN_SAMPLING_RATE_HZ,
    })
}

/// Loads every signal named by the manifest, ordered by (set, file name).
pub fn load_dataset(manifest_path: &Path) -> Result<Vec<EegSignal>> {
    let manifest = Manifest::read(manifest_path)?;
    load_manifest(&manifest)
}

pub fn load_manifest(manifest: &Manifest) -> Result<Vec<EegSignal>> {
    let mut jobs = Vec::new();
    for (&set, dir) in &manifest.sets {
        for file in signal_files(set, dir)? {
            jobs.push((set, file));
        }
    }
    let signals = jobs
        .par_iter()
        .map(|(set, file)| load_signal(*set, file))
        .collect::<Result<Vec<_>>>()?;
    for (set, count) in set_counts(&signals) {
        info!("set {set}: {count} signals");
    }
    Ok(signals)
}

pub fn set_counts(signals: &[EegSignal]) -> BTreeMap<SetLabel, usize> {
    let mut counts = BTreeMap::new();
    for s in signals {
        *counts.entry(s.set_label).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_set(dir: &Path, files: usize, lines: usize) {
        fs::create_dir_all(dir).unwrap();
        for f in 0..files {
            let body: String = (0..lines).map(|i| format!("{}\n", (i as i64 % 97) - 40)).collect();
            fs::write(dir.join(format!("F{f:03}.txt")), body).unwrap();
        }
    }

    fn manifest(root: &Path, sets: &[(&str, &str)]) -> PathBuf {
        let map: BTreeMap<&str, &str> = sets.iter().copied().collect();
        let path = root.join("manifest.json");
        fs::write(&path, serde_json::to_string(&map).unwrap()).unwrap();
        path
    }

    #[test]
    fn truncates_4097_sample_files() {
        let tmp = tempfile::tempdir().unwrap();
        write_set(&tmp.path().join("a"), 1, 4097);
        let text = fs::read_to_string(tmp.path().join("a/F000.txt")).unwrap();
        assert_eq!(text.lines().count(), 4097);
        let signals = load_dataset(&manifest(tmp.path(), &[("A", "a")])).unwrap();
        assert_eq!(signals[0].samples.len(), 4096);
        assert_eq!(signals[0].source_id, "F000");
        assert_eq!(signals[0].set_label, SetLabel::A);
    }

    #[test]
    fn subset_manifest_loads_only_named_sets() {
        let tmp = tempfile::tempdir().unwrap();
        write_set(&tmp.path().join("z"), 3, 4097);
        write_set(&tmp.path().join("s"), 2, 4096);
        let signals = load_dataset(&manifest(tmp.path(), &[("A", "z"), ("E", "s")])).unwrap();
        let counts = set_counts(&signals);
        assert_eq!(counts[&SetLabel::A], 3);
        assert_eq!(counts[&SetLabel::E], 2);
        assert_eq!(counts.len(), 2);
        assert!(signals.windows(2).all(|w| (w[0].set_label, &w[0].source_id) <= (w[1].set_label, &w[1].source_id)));
    }

    #[test]
    fn crlf_and_whitespace_are_tolerated() {
        let v = parse_samples("  12\r\n-3.5 \r\n\t7\r\n", Path::new("x")).unwrap();
        assert_eq!(v, vec![12.0, -3.5, 7.0]);
    }

    #[test]
    fn non_numeric_line_reports_file_and_line() {
        let err = parse_samples("1\n2\nabc\n", Path::new("bad.txt")).unwrap_err();
        match err {
            Error::Parse { file, line, content } => {
                assert_eq!(file, PathBuf::from("bad.txt"));
                assert_eq!(line, 3);
                assert_eq!(content, "abc");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(parse_samples("nan\n", Path::new("x")).is_err());
    }

    #[test]
    fn short_signal_is_a_length_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_set(&tmp.path().join("a"), 1, 4000);
        let err = load_dataset(&manifest(tmp.path(), &[("A", "a")])).unwrap_err();
        assert!(matches!(err, Error::SignalLength { len: 4000, .. }));
    }

    #[test]
    fn missing_and_empty_directories_name_the_set() {
        let tmp = tempfile::tempdir().unwrap();
        let err = load_dataset(&manifest(tmp.path(), &[("C", "nope")])).unwrap_err();
        assert!(matches!(err, Error::Ingestion { set: 'C', .. }), "{err}");
        fs::create_dir_all(tmp.path().join("empty")).unwrap();
        let err = load_dataset(&manifest(tmp.path(), &[("D", "empty")])).unwrap_err();
        assert!(matches!(err, Error::Ingestion { set: 'D', .. }), "{err}");
    }

    #[test]
    fn manifest_rejects_unknown_set() {
        let tmp = tempfile::tempdir().unwrap();
        let err = Manifest::read(&manifest(tmp.path(), &[("F", "x")])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn write_then_read_is_exact() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("s.txt");
        let samples = vec![0.1, -2.0, 1e-300, 123456.789];
        write_samples(&path, &samples).unwrap();
        assert_eq!(read_samples(&path).unwrap(), samples);
    }
}
