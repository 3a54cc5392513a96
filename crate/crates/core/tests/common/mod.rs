//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Upper Gaussian tail, by composite Simpson quadrature of the density on [0, x].
pub fn q_function(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_function(-x);
    }
    let n = 20_000;
    let h = x / n as f64;
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * PI).sqrt();
    let mut sum = pdf(0.0) + pdf(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * pdf(i as f64 * h);
    }
    0.5 - sum * h / 3.0
}

/// Uncoded BPSK bit error probability at Es/N0 in dB.
pub fn bpsk_ber(snr_db: f64) -> f64 {
    q_function((2.0 * 10f64.powf(snr_db / 10.0)).sqrt())
}

pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Rounds to `decimals` places the way a printed table does.
pub fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

/// Parses table text into `(snr, seed, actual, estimated text, frames)`.
pub fn raw_table_rows(text: &str) -> Vec<(f64, u64, f64, String, u32)> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].to_string(),
                f[4].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn q_function_reference_points() {
    assert!((q_function(0.0) - 0.5).abs() < 1e-12);
    assert!((q_function(1.0) - 0.158_655_253_9).abs() < 1e-9);
    assert!((bpsk_ber(0.0) - 0.0786).abs() < 5e-5);
}
