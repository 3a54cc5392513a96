//! Simplified transmit and receive chains.
//!
//! `tx_chain` = convolutional encoding followed by unit-power constellation
//! mapping. `rx_chain` = hard-decision demapping followed by Viterbi
//! decoding. `remodulate` runs the transmit chain on receiver-side decoded
//! bits to rebuild a noise-free reference for the test bench.

pub mod convolutional;
pub mod modem;
mod profile;

use num_complex::Complex64;
use rand::RngCore;

pub use profile::{
    CodeRate, Modulation, PhyProfile, ProfileSet, DEFAULT_FRAMES_PER_WINDOW,
    DEFAULT_WINDOW_DURATION_S,
};

use crate::{seed, Error, Result};

/// Information bits of one frame, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFrame {
    pub bits: Vec<u8>,
    /// Seed that produced the bits, or of the frame they were decoded from.
    pub seed: u64,
}

impl BitFrame {
    pub fn new(bits: Vec<u8>, seed: u64) -> Self {
        BitFrame { bits, seed }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit_errors(&self, other: &BitFrame) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
            + self.bits.len().abs_diff(other.bits.len())
    }
}

/// One frame of complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    pub samples: Vec<Complex64>,
}

impl ComplexFrame {
    pub fn new(samples: Vec<Complex64>) -> Self {
        ComplexFrame { samples }
    }

    pub fn from_real(values: &[f64]) -> Self {
        ComplexFrame {
            samples: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Bernoulli(1/2) bits for one frame, fully determined by `seed`.
pub fn generate_bits(seed: u64, profile: &PhyProfile) -> BitFrame {
    let n = profile.bits_per_frame;
    let mut rng = seed::rng(seed);
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let word = rng.next_u64();
        let take = (n - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    BitFrame::new(bits, seed)
}

fn encode(bits: &[u8], profile: &PhyProfile) -> Vec<u8> {
    if profile.code_rate == CodeRate::HALF {
        convolutional::encode(bits)
    } else {
        bits.to_vec()
    }
}

fn decode(coded: &[u8], profile: &PhyProfile) -> Vec<u8> {
    if profile.code_rate == CodeRate::HALF {
        convolutional::decode(coded)
    } else {
        coded.to_vec()
    }
}

pub fn tx_chain(bits: &BitFrame, profile: &PhyProfile) -> Result<ComplexFrame> {
    if bits.len() != profile.bits_per_frame {
        return Err(Error::LengthMismatch {
            profile: profile.id.clone(),
            unit: "bits",
            expected: profile.bits_per_frame,
            got: bits.len(),
        });
    }
    let coded = encode(&bits.bits, profile);
    Ok(ComplexFrame::new(modem::modulate(
        &coded,
        profile.modulation,
    )))
}

pub fn rx_chain(frame: &ComplexFrame, profile: &PhyProfile) -> Result<BitFrame> {
    if frame.len() != profile.symbols_per_frame() {
        return Err(Error::LengthMismatch {
            profile: profile.id.clone(),
            unit: "symbols",
            expected: profile.symbols_per_frame(),
            got: frame.len(),
        });
    }
    let hard = modem::demodulate(&frame.samples, profile.modulation);
    Ok(BitFrame::new(decode(&hard, profile), 0))
}

/// Receiver-side re-encoding and re-modulation of decoded bits.
pub fn remodulate(decoded: &BitFrame, profile: &PhyProfile) -> Result<ComplexFrame> {
    tx_chain(decoded, profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming(a: &BitFrame, b: &BitFrame) -> usize {
        a.bit_errors(b)
    }

    #[test]
    fn generate_bits_is_deterministic_per_seed() {
        let wlan = PhyProfile::wlan80211a();
        let a = generate_bits(10, &wlan);
        assert_eq!(a, generate_bits(10, &wlan));
        assert_eq!(a.len(), 2100);
        assert!(hamming(&a, &generate_bits(40, &wlan)) > 0);
    }

    #[test]
    fn generate_bits_is_balanced() {
        let p = PhyProfile::bpsk_stub(1_000_000);
        let ones = generate_bits(10, &p)
            .bits
            .iter()
            .filter(|&&b| b == 1)
            .count();
        let frac = ones as f64 / 1e6;
        assert!((0.497..=0.503).contains(&frac), "{frac}");
    }

    #[test]
    fn bpsk_stub_examples() {
        let p = PhyProfile::bpsk_stub(3);
        let tx = tx_chain(&BitFrame::new(vec![0, 1, 0], 0), &p).unwrap();
        assert_eq!(tx, ComplexFrame::from_real(&[1.0, -1.0, 1.0]));
        let p = PhyProfile::bpsk_stub(2);
        let rx = rx_chain(&ComplexFrame::from_real(&[0.2, -0.9]), &p).unwrap();
        assert_eq!(rx.bits, vec![0, 1]);
    }

    #[test]
    fn exhaustive_round_trip_on_8_bit_frames() {
        let p = PhyProfile::bpsk_stub(8);
        for v in 0..=255u8 {
            let bits = BitFrame::new((0..8).map(|i| (v >> i) & 1).collect(), 0);
            let tx = tx_chain(&bits, &p).unwrap();
            assert_eq!(rx_chain(&tx, &p).unwrap().bits, bits.bits);
            assert_eq!(remodulate(&rx_chain(&tx, &p).unwrap(), &p).unwrap(), tx);
        }
    }

    #[test]
    fn wlan_symbol_count() {
        let wlan = PhyProfile::wlan80211a();
        let tx = tx_chain(&generate_bits(10, &wlan), &wlan).unwrap();
        assert_eq!(tx.len(), 1050);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let wlan = PhyProfile::wlan80211a();
        assert!(matches!(
            tx_chain(&BitFrame::new(vec![0; 10], 0), &wlan),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            rx_chain(&ComplexFrame::from_real(&[1.0; 10]), &wlan),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn flipped_information_bit_changes_remodulated_frame() {
        for profile in [PhyProfile::wlan80211a(), PhyProfile::wimax()] {
            let bits = generate_bits(3, &profile);
            let mut flipped = bits.clone();
            flipped.bits[17] ^= 1;
            let a = tx_chain(&bits, &profile).unwrap();
            let b = remodulate(&flipped, &profile).unwrap();
            assert!(a.samples.iter().zip(&b.samples).any(|(x, y)| x != y));
            assert_eq!(b, remodulate(&flipped, &profile).unwrap());
        }
    }
}
