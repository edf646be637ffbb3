//! Simulation core for an ultra-high-speed VCSEL optical wireless link.
//!
//! The crate models the full DCO-OFDM transmission chain end to end:
//!
//! - [`dsp`] — FFT, Gray-coded QAM constellations, root-raised-cosine taps
//! - [`modem`] — Hermitian-symmetric framing, cyclic prefix, synchronization,
//!   demodulation and the full 450-frame stream runner
//! - [`loading`] — SNR-gap analysis, Hughes-Hartogs bit/power loading and
//!   discrete/integral achievable-rate bounds
//! - [`channel`] — parametric link emulator: VCSEL LIV nonlinearity, cascaded
//!   frequency responses, detection and AWGN
//! - [`analysis`] — pilot channel estimation, moving-average smoothing,
//!   piecewise-linear SNR regression and extrapolation, BER counting
//! - [`fiber`] — RMS spectral width and MMF dispersion/reach budgets

pub mod analysis;
pub mod channel;
pub mod dsp;
pub mod fiber;
pub mod loading;
pub mod modem;

pub use num_complex::Complex64;

pub use analysis::{ChannelEstimate, PwlModel};
pub use channel::{LinkPreset, ResponseStage, VcselModel};
pub use dsp::Constellation;
pub use loading::{GapParams, LoadingPlan, SnrProfile};
pub use modem::{OfdmConfig, OfdmFrame, StreamReport};
