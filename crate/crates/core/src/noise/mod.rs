//! Artifact synthesis and SNR-calibrated corruption.
//!
//! Three artifact models are supported:
//!
//! * muscle activity: Gaussian noise band-passed to 20-60 Hz,
//! * eye blinks: Gaussian noise band-passed to 1-3 Hz,
//! * electrical noise: additive white Gaussian noise.
//!
//! Muscle noise would normally be projected through a scalp map; for
//! single-channel recordings that projection is a scalar gain, which the
//! SNR scaling in [`mix_at_snr`] absorbs.

mod filter;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use filter::{apply_filter, design_bandpass, magnitude_response, FilterSpec};
pub(crate) use filter::filter_valid;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Gaussian};

pub const MUSCLE_BAND_HZ: (f64, f64) = (20.0, 60.0);
pub const EYEBLINK_BAND_HZ: (f64, f64) = (1.0, 3.0);
pub const DEFAULT_NUM_TAPS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Muscle,
    EyeBlink,
    White,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Muscle, NoiseKind::EyeBlink, NoiseKind::White];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Muscle => "muscle",
            NoiseKind::EyeBlink => "eyeblink",
            NoiseKind::White => "white",
        }
    }

    /// Band-pass used to shape the kind, `None` for white noise.
    pub fn filter(self, sampling_rate_hz: f64) -> Option<FilterSpec> {
        let (low_hz, high_hz) = match self {
            NoiseKind::Muscle => MUSCLE_BAND_HZ,
            NoiseKind::EyeBlink => EYEBLINK_BAND_HZ,
            NoiseKind::White => return None,
        };
        Some(FilterSpec {
            low_hz,
            high_hz,
            num_taps: DEFAULT_NUM_TAPS,
            sampling_rate_hz,
        })
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "muscle" => Ok(NoiseKind::Muscle),
            "eyeblink" | "eye-blink" | "eye_blink" => Ok(NoiseKind::EyeBlink),
            "white" => Ok(NoiseKind::White),
            other => Err(Error::Config(format!(
                "unknown noise kind {other:?}; use muscle, eyeblink or white"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::argument(format!("SNR must be finite, got {}", self.snr_db)));
        }
        Ok(())
    }

    /// Parses `<kind>:<snr_db>` with the given seed.
    pub fn parse_with_seed(s: &str, seed: u64) -> Result<Self> {
        let (kind, snr) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("noise {s:?} must look like <kind>:<snr_db>")))?;
        let snr_db = snr
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad SNR {snr:?} in {s:?}")))?;
        let spec = NoiseSpec {
            kind: kind.parse()?,
            snr_db,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Draws `length` samples of the given artifact kind.
///
/// Filtered kinds are produced from `length + taps - 1` white samples
/// filtered in valid mode, so the realization has no edge transient.
pub fn synthesize_noise(kind: NoiseKind, length: usize, sampling_rate_hz: f64, rng: &mut Gaussian) -> Result<Vec<f64>> {
    match kind.filter(sampling_rate_hz) {
        None => Ok(rng.fill(length)),
        Some(spec) => {
            let taps = design_bandpass(&spec)?;
            let white = rng.fill(length + taps.len() - 1);
            Ok(filter::filter_valid(&taps, &white))
        }
    }
}

/// Mean of squared samples.
pub fn signal_power(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::argument("power of an empty signal"));
    }
    Ok(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
}

pub fn snr_db(signal: &[f64], noise: &[f64]) -> Result<f64> {
    Ok(10.0 * (signal_power(signal)? / signal_power(noise)?).log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub noisy: Vec<f64>,
    /// The scaled noise actually added: `noisy = clean + noise`.
    pub noise: Vec<f64>,
    pub scale: f64,
}

/// Adds `noise` to `clean`, scaled so the mixture has the requested SNR:
/// `alpha = sqrt(P_clean / (P_noise * 10^(snr_db / 10)))`.
pub fn mix_at_snr(clean: &[f64], noise: &[f64], snr_db: f64) -> Result<Mixture> {
    if clean.len() != noise.len() {
        return Err(Error::shape(format!(
            "clean signal has {} samples, noise has {}",
            clean.len(),
            noise.len()
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::argument(format!("SNR must be finite, got {snr_db}")));
    }
    let p_clean = signal_power(clean)?;
    let p_noise = signal_power(noise)?;
    if p_clean <= 0.0 || p_noise <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "cannot calibrate SNR with signal power {p_clean} and noise power {p_noise}"
        )));
    }
    let scale = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled: Vec<f64> = noise.iter().map(|n| scale * n).collect();
    let noisy = clean.iter().zip(&scaled).map(|(c, n)| c + n).collect();
    Ok(Mixture {
        noisy,
        noise: scaled,
        scale,
    })
}

/// Corrupts one signal with a fresh realization drawn from `seed`.
pub fn corrupt_samples(clean: &[f64], kind: NoiseKind, snr_db: f64, seed: u64, sampling_rate_hz: f64) -> Result<Mixture> {
    let mut rng = Gaussian::new(seed);
    let noise = synthesize_noise(kind, clean.len(), sampling_rate_hz, &mut rng)?;
    mix_at_snr(clean, &noise, snr_db)
}

/// Seed of the realization added to signal `index`.
pub fn signal_seed(spec_seed: u64, index: usize) -> u64 {
    derive_seed(spec_seed, index as u64)
}

/// Returns a copy of the dataset with every signal corrupted independently.
pub fn corrupt_dataset(dataset: &Dataset, spec: &NoiseSpec) -> Result<Dataset> {
    spec.validate()?;
    let signals = dataset
        .signals
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mix = corrupt_samples(&s.samples, spec.kind, spec.snr_db, signal_seed(spec.seed, i), s.sampling_rate_hz)?;
            let mut out = s.clone();
            out.samples = mix.noisy;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        signals,
        ..dataset.clone()
    })
}
