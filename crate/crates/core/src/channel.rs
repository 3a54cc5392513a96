//! AWGN impairment, jammer tone injection and per-frame magnitude statistics.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::phy::ComplexFrame;
use crate::{seed, Error, Result};

/// Phase advance of the jammer tone per sample, in radians.
pub const JAMMER_PHASE_STEP: f64 = 0.3;

/// Mean and population standard deviation of per-sample magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalStats {
    pub mean_strength: f64,
    pub sd_strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammerSpec {
    pub amplitude: f64,
    pub active: bool,
}

impl JammerSpec {
    pub const OFF: JammerSpec = JammerSpec {
        amplitude: 0.0,
        active: false,
    };

    pub fn on(amplitude: f64) -> Self {
        JammerSpec {
            amplitude: amplitude.max(0.0),
            active: true,
        }
    }
}

/// Noise power for a frame of mean power `es` at the given Es/N0.
pub fn noise_power(es: f64, snr_db: f64) -> f64 {
    es / 10f64.powf(snr_db / 10.0)
}

/// Adds circularly-symmetric complex Gaussian noise at Es/N0 = `snr_db`,
/// with Es measured on the input frame. `f64::INFINITY` adds no noise.
pub fn awgn_apply(frame: &ComplexFrame, snr_db: f64, seed: u64) -> ComplexFrame {
    if snr_db == f64::INFINITY || frame.is_empty() {
        return frame.clone();
    }
    let n0 = noise_power(frame.mean_power(), snr_db);
    let sigma = (n0 / 2.0).sqrt();
    let mut rng = seed::rng(seed);
    let samples = frame
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    ComplexFrame::new(samples)
}

/// Adds a constant-envelope tone `amplitude * exp(j * step * n)` when active.
pub fn jammer_apply(frame: &ComplexFrame, jammer: &JammerSpec) -> ComplexFrame {
    if !jammer.active {
        return frame.clone();
    }
    let samples = frame
        .samples
        .iter()
        .enumerate()
        .map(|(n, &s)| s + Complex64::from_polar(jammer.amplitude, JAMMER_PHASE_STEP * n as f64))
        .collect();
    ComplexFrame::new(samples)
}

pub fn signal_stats(frame: &ComplexFrame) -> Result<SignalStats> {
    magnitude_stats(frame.samples.iter().map(|s| s.norm()))
}

/// Statistics over the concatenation of several frames.
pub fn window_stats<'a>(frames: impl IntoIterator<Item = &'a ComplexFrame>) -> Result<SignalStats> {
    magnitude_stats(
        frames
            .into_iter()
            .flat_map(|f| f.samples.iter().map(|s| s.norm())),
    )
}

fn magnitude_stats(magnitudes: impl Iterator<Item = f64>) -> Result<SignalStats> {
    // Welford; exact zero spread when every magnitude is identical.
    let mut count = 0u64;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in magnitudes {
        count += 1;
        let delta = x - mean;
        mean += delta / count as f64;
        m2 += delta * (x - mean);
    }
    if count == 0 {
        return Err(Error::EmptyFrame);
    }
    Ok(SignalStats {
        mean_strength: mean,
        sd_strength: (m2 / count as f64).max(0.0).sqrt(),
    })
}
