//! Differential generalized spatial modulation (D-GSM / D-MGSM) link-level
//! simulator, together with the GD-SM and coherent GSM baselines, the
//! closed-form union bound on the bit error probability, and the detection
//! complexity and throughput calculators.

pub mod analysis;
pub mod bits;
pub mod channel;
pub mod cli;
pub mod detect;
pub mod engine;
mod error;
pub mod modem;
pub mod spatial;
pub mod tables;
pub mod txframe;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the crate.
pub type Cf64 = num_complex::Complex<f64>;
