//! The re-modulation test bench.
//!
//! Each received frame is decoded, re-encoded and re-modulated. The frame is
//! flagged erroneous when the standard deviations of the received and the
//! re-modulated sample magnitudes differ by at least `value_x`. A window's
//! estimated BER is the fraction of flagged frames.

use rayon::prelude::*;

use crate::channel::{signal_stats, SignalStats};
use crate::link::{transmit_window, LinkConditions, SentFrame};
use crate::phy::{remodulate, rx_chain, BitFrame, ComplexFrame, PhyProfile};
use crate::{Error, Result};

pub const DEFAULT_JAMMING_ALPHA: f64 = 0.2;
pub const CALIBRATION_TOLERANCE: f64 = 0.01;
pub const MAX_BISECTION_STEPS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVerdict {
    pub sd_rx: f64,
    pub sd_remod: f64,
    pub sd_diff: f64,
    pub erroneous: bool,
}

impl FrameVerdict {
    pub fn from_sds(sd_rx: f64, sd_remod: f64, value_x: f64) -> Self {
        let sd_diff = (sd_rx - sd_remod).abs();
        FrameVerdict {
            sd_rx,
            sd_remod,
            sd_diff,
            erroneous: sd_diff >= value_x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub total_frames: usize,
    pub erroneous_frames: usize,
    pub est_ber: f64,
    pub mapped_snr_db: Option<f64>,
    pub profile_id: String,
    pub timestamp: f64,
}

impl WindowResult {
    pub fn from_counts(profile_id: &str, erroneous_frames: usize, total_frames: usize) -> Self {
        WindowResult {
            total_frames,
            erroneous_frames,
            est_ber: erroneous_frames as f64 / total_frames as f64,
            mapped_snr_db: None,
            profile_id: profile_id.to_string(),
            timestamp: 0.0,
        }
    }
}

fn inspect(received: &ComplexFrame, profile: &PhyProfile) -> Result<(FrameVerdict, BitFrame)> {
    let decoded = rx_chain(received, profile)?;
    let reference = remodulate(&decoded, profile)?;
    let sd_rx = signal_stats(received)?.sd_strength;
    let sd_remod = signal_stats(&reference)?.sd_strength;
    Ok((
        FrameVerdict::from_sds(sd_rx, sd_remod, profile.value_x),
        decoded,
    ))
}

pub fn frame_check(received: &ComplexFrame, profile: &PhyProfile) -> Result<FrameVerdict> {
    inspect(received, profile).map(|(v, _)| v)
}

fn check_window_size(profile: &PhyProfile, got: usize) -> Result<()> {
    if got != profile.frames_per_window {
        return Err(Error::WindowSize {
            profile: profile.id.clone(),
            expected: profile.frames_per_window,
            got,
        });
    }
    Ok(())
}

/// Runs the frame check over one window and counts flagged frames.
/// `mapped_snr_db` is left unset.
pub fn estimate_window(frames: &[ComplexFrame], profile: &PhyProfile) -> Result<WindowResult> {
    check_window_size(profile, frames.len())?;
    let verdicts: Vec<FrameVerdict> = frames
        .par_iter()
        .map(|f| frame_check(f, profile))
        .collect::<Result<_>>()?;
    let flagged = verdicts.iter().filter(|v| v.erroneous).count();
    Ok(WindowResult::from_counts(
        &profile.id,
        flagged,
        frames.len(),
    ))
}

/// A window evaluated with access to the transmitted bits.
#[derive(Debug, Clone)]
pub struct WindowMeasurement {
    pub result: WindowResult,
    pub verdicts: Vec<FrameVerdict>,
    pub bit_errors: usize,
    pub total_bits: usize,
}

impl WindowMeasurement {
    /// Post-decode bit error rate from a genie bit comparison.
    pub fn actual_ber(&self) -> f64 {
        if self.total_bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.total_bits as f64
        }
    }

    pub fn sd_diffs(&self) -> Vec<f64> {
        self.verdicts.iter().map(|v| v.sd_diff).collect()
    }
}

/// Like [`estimate_window`], but also counts true bit errors. The window
/// may have any length.
pub fn measure_window(sent: &[SentFrame], profile: &PhyProfile) -> Result<WindowMeasurement> {
    let inspected: Vec<(FrameVerdict, usize)> = sent
        .par_iter()
        .map(|f| {
            let (verdict, decoded) = inspect(&f.received, profile)?;
            Ok((verdict, decoded.bit_errors(&f.bits)))
        })
        .collect::<Result<_>>()?;
    let flagged = inspected.iter().filter(|(v, _)| v.erroneous).count();
    Ok(WindowMeasurement {
        result: WindowResult::from_counts(&profile.id, flagged, sent.len()),
        bit_errors: inspected.iter().map(|(_, e)| e).sum(),
        total_bits: sent.len() * profile.bits_per_frame,
        verdicts: inspected.into_iter().map(|(v, _)| v).collect(),
    })
}

/// Estimated BER a fixed frame set would yield under threshold `value_x`.
pub fn est_ber_at(sd_diffs: &[f64], value_x: f64) -> f64 {
    if sd_diffs.is_empty() {
        return 0.0;
    }
    sd_diffs.iter().filter(|&&d| d >= value_x).count() as f64 / sd_diffs.len() as f64
}

/// State of the jamming detector, threaded through successive windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammingState {
    /// EMA of the mean strength of past unjammed windows.
    pub baseline_strength: f64,
    pub alpha: f64,
    /// Difference between the last window's mean strength and the baseline.
    pub d: f64,
    /// False until the first window has seeded the baseline.
    pub primed: bool,
}

impl JammingState {
    pub fn new(alpha: f64) -> Self {
        JammingState {
            baseline_strength: 0.0,
            alpha,
            d: 0.0,
            primed: false,
        }
    }

    pub fn with_baseline(baseline_strength: f64, alpha: f64) -> Self {
        JammingState {
            baseline_strength,
            alpha,
            d: 0.0,
            primed: true,
        }
    }
}

impl Default for JammingState {
    fn default() -> Self {
        JammingState::new(DEFAULT_JAMMING_ALPHA)
    }
}

/// Flags jamming when the shift of the window mean strength away from the
/// baseline exceeds the window's strength spread. The baseline follows
/// unjammed windows only.
pub fn detect_jamming(window: &SignalStats, state: &JammingState) -> (bool, JammingState) {
    debug_assert!(state.alpha > 0.0 && state.alpha <= 1.0);
    if !state.primed {
        return (
            false,
            JammingState::with_baseline(window.mean_strength, state.alpha),
        );
    }
    let d = (window.mean_strength - state.baseline_strength).abs();
    let jamming = d > window.sd_strength;
    let baseline_strength = if jamming {
        state.baseline_strength
    } else {
        state.alpha * window.mean_strength + (1.0 - state.alpha) * state.baseline_strength
    };
    (
        jamming,
        JammingState {
            baseline_strength,
            alpha: state.alpha,
            d,
            primed: true,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub value_x: f64,
    pub achieved_est_ber: f64,
    pub target_ber: f64,
    pub residual: f64,
    pub iterations: u32,
    pub sd_diff_max: f64,
}

/// Bisects `value_x` over `[0, max sd_diff]` until the flagged fraction of
/// the given frame set is within `tolerance` of `target_ber`.
pub fn calibrate_on_sd_diffs(
    sd_diffs: &[f64],
    target_ber: f64,
    tolerance: f64,
) -> Result<Calibration> {
    if sd_diffs.is_empty() {
        return Err(Error::InvalidArgument(
            "calibration needs at least one frame".into(),
        ));
    }
    if !(0.0..=1.0).contains(&target_ber) {
        return Err(Error::InvalidArgument(format!(
            "target BER {target_ber} outside [0, 1]"
        )));
    }
    let sd_diff_max = sd_diffs.iter().copied().fold(0.0, f64::max);
    let mut lo = 0.0;
    // An all-zero probe (noiseless) still needs a positive bracket.
    let mut hi = if sd_diff_max > 0.0 {
        sd_diff_max
    } else {
        f64::MIN_POSITIVE
    };
    let evaluate = |value_x: f64| {
        let est = est_ber_at(sd_diffs, value_x);
        (value_x, est, (est - target_ber).abs())
    };
    let mut best = evaluate(lo);
    for iteration in 1..=MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let candidate = evaluate(mid);
        if candidate.2 < best.2 {
            best = candidate;
        }
        if candidate.2 <= tolerance {
            return Ok(Calibration {
                value_x: mid,
                achieved_est_ber: candidate.1,
                target_ber,
                residual: candidate.2,
                iterations: iteration,
                sd_diff_max,
            });
        }
        if candidate.1 > target_ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let upper = evaluate(hi);
    if upper.2 < best.2 {
        best = upper;
    }
    Err(Error::Unreachable {
        target: target_ber,
        nearest_value_x: best.0,
        achieved: best.1,
        residual: best.2,
    })
}

/// Runs a probe window of `profile.frames_per_window` frames at `snr_db`.
pub fn probe_window(profile: &PhyProfile, snr_db: f64, seed: u64) -> Result<WindowMeasurement> {
    let sent = transmit_window(
        profile,
        &LinkConditions::awgn(snr_db),
        seed,
        profile.frames_per_window,
    )?;
    measure_window(&sent, profile)
}

pub fn calibrate_value_x(
    profile: &PhyProfile,
    snr_db: f64,
    target_ber: f64,
    seed: u64,
) -> Result<Calibration> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(
            "calibration SNR must be finite".into(),
        ));
    }
    let probe = probe_window(profile, snr_db, seed)?;
    calibrate_on_sd_diffs(&probe.sd_diffs(), target_ber, CALIBRATION_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::generate_bits;
    use crate::phy::tx_chain;

    #[test]
    fn noiseless_frame_has_zero_sd_diff() {
        for p in [
            PhyProfile::wlan80211a(),
            PhyProfile::wimax(),
            PhyProfile::bpsk_stub(64),
        ] {
            let tx = tx_chain(&generate_bits(5, &p), &p).unwrap();
            let v = frame_check(&tx, &p.clone().with_value_x(1e-12)).unwrap();
            assert_eq!(v.sd_diff, 0.0);
            assert!(!v.erroneous);
        }
    }

    #[test]
    fn comparator_uses_inclusive_threshold() {
        let v = FrameVerdict::from_sds(0.105, 0.1027, 0.00205);
        assert!((v.sd_diff - 0.0023).abs() < 1e-12);
        assert!(v.erroneous);
        let v = FrameVerdict::from_sds(0.101, 0.1, 0.00205);
        assert!(!v.erroneous);
        let v = FrameVerdict::from_sds(0.5, 0.25, 0.25);
        assert!(v.erroneous);
    }

    #[test]
    fn window_ber_is_a_frame_ratio() {
        assert_eq!(WindowResult::from_counts("w", 36, 500).est_ber, 0.072);
        assert_eq!(WindowResult::from_counts("w", 0, 500).est_ber, 0.0);
        assert_eq!(WindowResult::from_counts("w", 387, 500).est_ber, 0.774);
    }

    #[test]
    fn estimate_window_rejects_wrong_frame_count() {
        let p = PhyProfile::bpsk_stub(4);
        let frames = vec![ComplexFrame::from_real(&[1.0; 4]); 3];
        assert!(matches!(
            estimate_window(&frames, &p),
            Err(Error::WindowSize {
                expected: 500,
                got: 3,
                ..
            })
        ));
    }

    #[test]
    fn jamming_examples() {
        let state = JammingState::with_baseline(1.0, 0.2);
        let (jam, next) = detect_jamming(
            &SignalStats {
                mean_strength: 5.0,
                sd_strength: 0.0,
            },
            &state,
        );
        assert!(jam);
        assert_eq!(next.d, 4.0);
        assert_eq!(next.baseline_strength, 1.0);

        let (jam, next) = detect_jamming(
            &SignalStats {
                mean_strength: 1.0,
                sd_strength: 0.52,
            },
            &state,
        );
        assert!(!jam);
        assert_eq!(next.d, 0.0);
    }

    #[test]
    fn first_window_seeds_baseline_and_never_alarms() {
        let (jam, s) = detect_jamming(
            &SignalStats {
                mean_strength: 9.0,
                sd_strength: 0.0,
            },
            &JammingState::default(),
        );
        assert!(!jam);
        assert!(s.primed);
        assert_eq!(s.baseline_strength, 9.0);
    }

    #[test]
    fn baseline_tracks_by_ema() {
        let s = JammingState::with_baseline(1.0, 0.2);
        let (_, s) = detect_jamming(
            &SignalStats {
                mean_strength: 1.5,
                sd_strength: 1.0,
            },
            &s,
        );
        assert!((s.baseline_strength - 1.1).abs() < 1e-12);
    }

    #[test]
    fn degenerate_thresholds() {
        let diffs = [0.1, 0.2, 0.3];
        assert_eq!(est_ber_at(&diffs, 0.0), 1.0);
        assert_eq!(est_ber_at(&diffs, f64::INFINITY), 0.0);
    }

    #[test]
    fn calibration_hits_target_on_synthetic_diffs() {
        let diffs: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let c = calibrate_on_sd_diffs(&diffs, 0.3, 0.01).unwrap();
        assert!(c.residual <= 0.01);
        assert!(c.iterations <= MAX_BISECTION_STEPS);
        assert!((est_ber_at(&diffs, c.value_x) - c.achieved_est_ber).abs() < 1e-15);
    }

    #[test]
    fn calibration_reports_unreachable_targets() {
        // All frames tie: only 0 and 1 are achievable.
        let diffs = vec![0.0; 50];
        match calibrate_on_sd_diffs(&diffs, 0.5, 0.01) {
            Err(Error::Unreachable { residual, .. }) => assert_eq!(residual, 0.5),
            other => panic!("unexpected {other:?}"),
        }
        // Noiseless probe, target 0: any positive threshold works.
        let c = calibrate_on_sd_diffs(&diffs, 0.0, 0.01).unwrap();
        assert!(c.value_x > 0.0);
        assert_eq!(c.achieved_est_ber, 0.0);
        // Twenty frames: the smallest nonzero rate is 0.05.
        let diffs: Vec<f64> = (1..=20).map(f64::from).collect();
        assert!(matches!(
            calibrate_on_sd_diffs(&diffs, 0.0, 0.01),
            Err(Error::Unreachable { .. })
        ));
    }
}
