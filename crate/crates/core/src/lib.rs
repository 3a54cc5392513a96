//! Cognitive mobile terminal simulator.
//!
//! A baseband link simulator wrapped around a re-modulation test bench.
//! The test bench decodes each received frame, re-encodes and re-modulates
//! the decoded bits, and flags the frame as erroneous when the standard
//! deviations of the received and re-modulated sample magnitudes differ by
//! at least a per-profile threshold (`value_x`). The flag rate over a window
//! is the estimated BER, which is mapped to an SNR through lookup tables and
//! fed to a controller that stores estimates, detects jamming, and performs
//! vertical handovers.
//!
//! Module layout:
//!
//! - [`phy`]: profiles, bit generation, transmit/receive/re-modulation chains
//! - [`channel`]: AWGN, jammer tone, per-frame magnitude statistics
//! - [`link`]: seeded window generation (tx → channel) with genie bits
//! - [`testbench`]: frame verdicts, window estimation, jamming, calibration
//! - [`mapping`]: lookup tables, MAP function, threshold store
//! - [`controller`]: the outer decision loop, repository, scenarios
//! - [`cli`]: the `cogterm` command-line front end

pub mod channel;
pub mod cli;
pub mod controller;
mod error;
pub mod link;
pub mod mapping;
pub mod phy;
pub mod seed;
pub mod testbench;

pub use error::{Error, Result};
