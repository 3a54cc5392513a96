//! Seeded generation of transmitted/received frame windows.
//!
//! Frame `i` of a window keyed by `window_seed` draws its bits and its noise
//! from independent streams derived from `(window_seed, i)`. Using the same
//! window seed at different SNRs therefore reuses the same data and the same
//! unit noise realisation, only scaled.

use rayon::prelude::*;

use crate::channel::{awgn_apply, jammer_apply, JammerSpec};
use crate::phy::{generate_bits, tx_chain, BitFrame, ComplexFrame, PhyProfile};
use crate::seed::{self, STREAM_BITS, STREAM_NOISE};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConditions {
    pub snr_db: f64,
    pub jammer: JammerSpec,
}

impl LinkConditions {
    pub fn awgn(snr_db: f64) -> Self {
        LinkConditions {
            snr_db,
            jammer: JammerSpec::OFF,
        }
    }
}

/// A frame as sent (genie bits) and as received.
#[derive(Debug, Clone)]
pub struct SentFrame {
    pub bits: BitFrame,
    pub received: ComplexFrame,
}

pub fn frame_seeds(window_seed: u64, index: u64) -> (u64, u64) {
    (
        seed::derive(window_seed, &[index, STREAM_BITS]),
        seed::derive(window_seed, &[index, STREAM_NOISE]),
    )
}

pub fn transmit_frame(
    profile: &PhyProfile,
    conditions: &LinkConditions,
    window_seed: u64,
    index: u64,
) -> Result<SentFrame> {
    let (bits_seed, noise_seed) = frame_seeds(window_seed, index);
    let bits = generate_bits(bits_seed, profile);
    let tx = tx_chain(&bits, profile)?;
    let noisy = awgn_apply(&tx, conditions.snr_db, noise_seed);
    let received = jammer_apply(&noisy, &conditions.jammer);
    Ok(SentFrame { bits, received })
}

pub fn transmit_window(
    profile: &PhyProfile,
    conditions: &LinkConditions,
    window_seed: u64,
    frames: usize,
) -> Result<Vec<SentFrame>> {
    (0..frames as u64)
        .into_par_iter()
        .map(|i| transmit_frame(profile, conditions, window_seed, i))
        .collect()
}
