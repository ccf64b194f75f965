//! Synthetic two-class data for desk-scale runs without recordings.
//!
//! Class 0 is band-limited Gaussian noise. Class 1 is the same kind of
//! noise plus Hann-windowed 10 Hz bursts whose total power equals the
//! background power. The default uses one burst spanning the whole record.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, EegSignal, SetLabel, BONN_SAMPLING_RATE_HZ};
use crate::error::{Error, Result};
use crate::noise::{design_bandpass, signal_power, FilterSpec};
use crate::rng::{derive_seed, rng_from_seed, uniform_in, Gaussian};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixtureSpec {
    pub signals_per_class: usize,
    pub length: usize,
    pub sampling_rate_hz: f64,
    pub band_hz: (f64, f64),
    pub num_taps: usize,
    pub burst_hz: f64,
    pub bursts: usize,
    pub burst_length: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            signals_per_class: 100,
            length: 256,
            sampling_rate_hz: BONN_SAMPLING_RATE_HZ,
            band_hz: (40.0, 80.0),
            num_taps: 101,
            burst_hz: 10.0,
            bursts: 1,
            burst_length: 256,
            seed: 7,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.signals_per_class == 0 || self.length == 0 || self.bursts == 0 {
            return Err(Error::Config("fixture counts must be positive".into()));
        }
        if self.burst_length == 0 || self.burst_length > self.length {
            return Err(Error::Config(format!(
                "burst length {} must be in 1..={}",
                self.burst_length, self.length
            )));
        }
        if !(self.burst_hz > 0.0 && self.burst_hz < self.sampling_rate_hz / 2.0) {
            return Err(Error::Config(format!("burst frequency {} Hz out of range", self.burst_hz)));
        }
        self.filter().validate()
    }

    fn filter(&self) -> FilterSpec {
        FilterSpec {
            low_hz: self.band_hz.0,
            high_hz: self.band_hz.1,
            num_taps: self.num_taps,
            sampling_rate_hz: self.sampling_rate_hz,
        }
    }
}

fn unit_power(mut x: Vec<f64>) -> Result<Vec<f64>> {
    let p = signal_power(&x)?;
    if p <= 0.0 {
        return Err(Error::DegenerateInput("fixture component has zero power".into()));
    }
    let s = p.sqrt();
    x.iter_mut().for_each(|v| *v /= s);
    Ok(x)
}

fn background(spec: &FixtureSpec, taps: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut g = Gaussian::new(seed);
    let white = g.fill(spec.length + taps.len() - 1);
    unit_power(crate::noise::filter_valid(taps, &white))
}

fn bursts(spec: &FixtureSpec, seed: u64) -> Result<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let mut out = vec![0.0; spec.length];
    let w = 2.0 * PI * spec.burst_hz / spec.sampling_rate_hz;
    let span = spec.burst_length;
    for _ in 0..spec.bursts {
        let onset = rng.gen_range(0..=spec.length - span);
        let phase = uniform_in(&mut rng, 0.0, 2.0 * PI);
        for k in 0..span {
            let window = 0.5 - 0.5 * (2.0 * PI * (k as f64 + 0.5) / span as f64).cos();
            out[onset + k] += window * (w * k as f64 + phase).sin();
        }
    }
    unit_power(out)
}

/// Builds the fixture. Class 0 signals are tagged as set A, class 1 as set E.
pub fn synthetic_fixture(spec: &FixtureSpec) -> Result<Dataset> {
    spec.validate()?;
    let taps = design_bandpass(&spec.filter())?;
    let mut signals = Vec::with_capacity(2 * spec.signals_per_class);
    let mut labels = Vec::with_capacity(signals.capacity());
    for class in 0..2 {
        for i in 0..spec.signals_per_class {
            let index = (class * spec.signals_per_class + i) as u64;
            let mut samples = background(spec, &taps, derive_seed(spec.seed, 2 * index))?;
            if class == 1 {
                let b = bursts(spec, derive_seed(spec.seed, 2 * index + 1))?;
                samples.iter_mut().zip(&b).for_each(|(s, v)| *s += v);
            }
            signals.push(EegSignal {
                samples,
                set_label: if class == 0 { SetLabel::A } else { SetLabel::E },
                source_id: format!("fixture-{class}-{i:03}"),
                sampling_rate_hz: spec.sampling_rate_hz,
            });
            labels.push(class);
        }
    }
    Ok(Dataset {
        signals,
        labels,
        class_names: vec!["background".into(), "burst".into()],
        positive_class: 1,
    })
}
