//! Gray-mapped BPSK/QPSK/16-QAM with per-frame power normalization.
//!
//! The transmitter scales every frame to unit mean power. For BPSK and QPSK
//! this is a no-op; for 16-QAM the gain depends on the symbol mix, so the
//! demapper re-derives it from its own decisions until they are stable.

use num_complex::Complex64;

use super::profile::Modulation;

const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)
const MAX_GAIN_ITERATIONS: usize = 6;

/// 802.11a 16-QAM axis mapping: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
fn pam4_level(b0: u8, b1: u8) -> f64 {
    match (b0 & 1, b1 & 1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

fn pam4_bits(level: i8) -> (u8, u8) {
    match level {
        -3 => (0, 0),
        -1 => (0, 1),
        1 => (1, 1),
        _ => (1, 0),
    }
}

fn pam4_decide(x: f64) -> i8 {
    if x < -2.0 {
        -3
    } else if x < 0.0 {
        -1
    } else if x < 2.0 {
        1
    } else {
        3
    }
}

pub fn modulate(coded: &[u8], modulation: Modulation) -> Vec<Complex64> {
    let mut symbols: Vec<Complex64> = match modulation {
        Modulation::Bpsk => coded
            .iter()
            .map(|&b| Complex64::new(1.0 - 2.0 * f64::from(b & 1), 0.0))
            .collect(),
        Modulation::Qpsk => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            coded
                .chunks_exact(2)
                .map(|c| {
                    Complex64::new(
                        s * (1.0 - 2.0 * f64::from(c[0] & 1)),
                        s * (1.0 - 2.0 * f64::from(c[1] & 1)),
                    )
                })
                .collect()
        }
        Modulation::Qam16 => coded
            .chunks_exact(4)
            .map(|c| {
                Complex64::new(
                    QAM16_SCALE * pam4_level(c[0], c[1]),
                    QAM16_SCALE * pam4_level(c[2], c[3]),
                )
            })
            .collect(),
    };
    if modulation == Modulation::Qam16 && !symbols.is_empty() {
        let power = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64;
        let gain = power.sqrt().recip();
        for s in &mut symbols {
            *s *= gain;
        }
    }
    symbols
}

/// Hard-decision nearest-point demapping.
pub fn demodulate(symbols: &[Complex64], modulation: Modulation) -> Vec<u8> {
    match modulation {
        Modulation::Bpsk => symbols.iter().map(|s| u8::from(s.re < 0.0)).collect(),
        Modulation::Qpsk => symbols
            .iter()
            .flat_map(|s| [u8::from(s.re < 0.0), u8::from(s.im < 0.0)])
            .collect(),
        Modulation::Qam16 => demodulate_qam16(symbols),
    }
}

fn demodulate_qam16(symbols: &[Complex64]) -> Vec<u8> {
    let mut gain = 1.0;
    let mut levels: Vec<(i8, i8)> = Vec::new();
    for _ in 0..MAX_GAIN_ITERATIONS {
        let scale = 1.0 / (gain * QAM16_SCALE);
        let next: Vec<(i8, i8)> = symbols
            .iter()
            .map(|s| (pam4_decide(s.re * scale), pam4_decide(s.im * scale)))
            .collect();
        let settled = next == levels;
        levels = next;
        if settled || levels.is_empty() {
            break;
        }
        let power = levels
            .iter()
            .map(|&(i, q)| f64::from(i * i + q * q) * QAM16_SCALE * QAM16_SCALE)
            .sum::<f64>()
            / levels.len() as f64;
        gain = power.sqrt().recip();
    }
    levels
        .into_iter()
        .flat_map(|(i, q)| {
            let (b0, b1) = pam4_bits(i);
            let (b2, b3) = pam4_bits(q);
            [b0, b1, b2, b3]
        })
        .collect()
}
