//! Foundational signal primitives: complex waveforms, discrete Fourier
//! transforms, Gray-coded QAM constellations and root-raised-cosine taps.
//!
//! Everything here is a pure function of its inputs and safe to call from any
//! number of threads.

mod fft;
mod qam;
mod rrc;

pub use fft::{fft, ifft};
pub use qam::{gray_decode, gray_encode, Constellation};
pub use rrc::rrc_taps;

use num_complex::Complex64;
use thiserror::Error;

/// Errors from the signal-primitive layer.
#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("FFT length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
    #[error("constellation order {0} must be a power of two in [2, 1024]")]
    InvalidOrder(usize),
    #[error("bit sequence length {len} is not a multiple of {bits_per_symbol} bits/symbol")]
    BitLengthMismatch { len: usize, bits_per_symbol: usize },
    #[error("roll-off {0} must lie in [0, 1]")]
    InvalidRolloff(f64),
    #[error("samples per symbol must be >= 1")]
    InvalidSps,
    #[error("filter span {0} must be an even integer >= 2")]
    InvalidSpan(usize),
    #[error("waveform invariant violated: {0}")]
    InvalidWaveform(String),
}

/// A sampled complex baseband signal.
#[derive(Debug, Clone)]
pub struct ComplexWaveform {
    pub samples: Vec<Complex64>,
    /// Sample rate in Sa/s.
    pub sample_rate: f64,
}

impl ComplexWaveform {
    /// Builds a waveform, rejecting non-finite samples or a non-positive rate.
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self, DspError> {
        if !(sample_rate > 0.0) {
            return Err(DspError::InvalidWaveform(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        if let Some(idx) = samples
            .iter()
            .position(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return Err(DspError::InvalidWaveform(format!(
                "non-finite sample at index {idx}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }
}
