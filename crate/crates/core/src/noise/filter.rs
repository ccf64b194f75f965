//! Windowed-sinc FIR band-pass design and zero-phase application.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub num_taps: usize,
    pub sampling_rate_hz: f64,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sampling_rate_hz / 2.0;
        if !(self.sampling_rate_hz > 0.0 && self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < nyquist) {
            return Err(Error::argument(format!(
                "band-pass needs 0 < low < high < fs/2, got low={} high={} fs={}",
                self.low_hz, self.high_hz, self.sampling_rate_hz
            )));
        }
        if self.num_taps.is_multiple_of(2) {
            return Err(Error::argument(format!("num_taps must be odd, got {}", self.num_taps)));
        }
        Ok(())
    }
}

fn hamming(n: usize, len: usize) -> f64 {
    if len == 1 {
        return 1.0;
    }
    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
}

/// Hamming-windowed ideal band-pass, scaled to unit gain at the band centre.
/// The returned taps are exactly symmetric.
pub fn design_bandpass(spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.num_taps;
    let centre = (n - 1) / 2;
    let w_lo = 2.0 * PI * spec.low_hz / spec.sampling_rate_hz;
    let w_hi = 2.0 * PI * spec.high_hz / spec.sampling_rate_hz;

    let mut taps = vec![0.0; n];
    taps[centre] = (w_hi - w_lo) / PI;
    for k in 1..=centre {
        let x = k as f64;
        let ideal = ((w_hi * x).sin() - (w_lo * x).sin()) / (PI * x);
        let v = ideal * hamming(centre + k, n);
        taps[centre + k] = v;
        taps[centre - k] = v;
    }

    let f_mid = 0.5 * (spec.low_hz + spec.high_hz);
    let gain = magnitude_response(&taps, f_mid, spec.sampling_rate_hz);
    taps.iter_mut().for_each(|t| *t /= gain);
    Ok(taps)
}

/// `|H(f)|` of an FIR filter, evaluated directly from the taps.
pub fn magnitude_response(taps: &[f64], freq_hz: f64, sampling_rate_hz: f64) -> f64 {
    let w = 2.0 * PI * freq_hz / sampling_rate_hz;
    let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &h)| {
        let phase = w * n as f64;
        (re + h * phase.cos(), im - h * phase.sin())
    });
    re.hypot(im)
}

/// Convolves `x` with `taps`, shifted by the group delay `(len - 1) / 2`
/// so a symmetric filter adds no phase. Output has the input's length;
/// samples outside `x` are treated as zero.
pub fn apply_filter(taps: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if taps.is_empty() {
        return Err(Error::argument("filter has no taps"));
    }
    let delay = (taps.len() - 1) / 2;
    let n = x.len() as isize;
    Ok((0..x.len())
        .map(|i| {
            let mut acc = 0.0;
            for (k, &h) in taps.iter().enumerate() {
                let j = i as isize + delay as isize - k as isize;
                if (0..n).contains(&j) {
                    acc += h * x[j as usize];
                }
            }
            acc
        })
        .collect())
}

/// Filters `x` and keeps only outputs whose window lies fully inside `x`,
/// giving `x.len() - taps.len() + 1` samples free of edge transients.
pub(crate) fn filter_valid(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let m = taps.len();
    (0..=x.len() - m)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(k, &h)| h * x[i + m - 1 - k])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 173.6;

    fn spec(low: f64, high: f64) -> FilterSpec {
        FilterSpec {
            low_hz: low,
            high_hz: high,
            num_taps: 1001,
            sampling_rate_hz: FS,
        }
    }

    #[test]
    fn taps_are_symmetric() {
        let h = design_bandpass(&spec(20.0, 60.0)).unwrap();
        assert_eq!(h.len(), 1001);
        for i in 0..h.len() {
            assert_eq!(h[i], h[h.len() - 1 - i]);
        }
    }

    // The responses below are checked through an independent DFT of the taps.
    fn dft_magnitude(h: &[f64], f: f64) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (n, &v) in h.iter().enumerate() {
            let ang = -2.0 * PI * f * n as f64 / FS;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn muscle_band_response() {
        let h = design_bandpass(&spec(20.0, 60.0)).unwrap();
        let pass = dft_magnitude(&h, 40.0);
        assert!((0.99..=1.01).contains(&pass), "{pass}");
        assert!(dft_magnitude(&h, 5.0) <= 0.01);
        assert!(dft_magnitude(&h, 80.0) <= 0.01);
    }

    #[test]
    fn eyeblink_band_response() {
        let h = design_bandpass(&spec(1.0, 3.0)).unwrap();
        let pass = dft_magnitude(&h, 2.0);
        assert!((0.95..=1.05).contains(&pass), "{pass}");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(design_bandpass(&spec(60.0, 20.0)).is_err());
        assert!(design_bandpass(&spec(0.0, 20.0)).is_err());
        assert!(design_bandpass(&spec(20.0, 90.0)).is_err());
        assert!(design_bandpass(&FilterSpec { num_taps: 1000, ..spec(20.0, 60.0) }).is_err());
    }

    #[test]
    fn identity_and_zero_input() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sqrt()).collect();
        assert_eq!(apply_filter(&[1.0], &x).unwrap(), x);
        assert!(apply_filter(&[0.2, 0.5, 0.2], &[0.0; 20]).unwrap().iter().all(|&v| v == 0.0));
        assert!(apply_filter(&[], &x).is_err());
    }

    #[test]
    fn passband_sinusoid_keeps_its_rms() {
        let h = design_bandpass(&spec(20.0, 60.0)).unwrap();
        let x: Vec<f64> = (0..4096).map(|n| (2.0 * PI * 40.0 * n as f64 / FS).sin()).collect();
        let y = apply_filter(&h, &x).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        let (a, b) = (1024, 3072);
        let ratio = rms(&y[a..b]) / rms(&x[a..b]);
        assert!((ratio - 1.0).abs() <= 0.02, "{ratio}");
    }

    #[test]
    fn symmetric_input_gives_symmetric_output() {
        let h = design_bandpass(&FilterSpec { num_taps: 101, ..spec(1.0, 3.0) }).unwrap();
        let half: Vec<f64> = (0..300).map(|i| ((i * 7919) % 97) as f64 - 48.0).collect();
        let x: Vec<f64> = half.iter().chain(half.iter().rev()).copied().collect();
        let y = apply_filter(&h, &x).unwrap();
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..y.len() {
            assert!((y[i] - y[y.len() - 1 - i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn valid_mode_matches_same_mode_interior() {
        let h = [0.1, 0.3, 0.5, 0.3, 0.1];
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).cos()).collect();
        let same = apply_filter(&h, &x).unwrap();
        let valid = filter_valid(&h, &x);
        assert_eq!(valid.len(), 36);
        for (i, v) in valid.iter().enumerate() {
            assert!((v - same[i + 2]).abs() < 1e-15);
        }
    }
}
