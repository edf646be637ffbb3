//! DCO-OFDM transmitter and receiver.
//!
//! Frames carry N_SC QAM symbols on bins 1..=N_SC of an N_FFT-point
//! Hermitian-symmetric spectrum, so the inverse transform is real-valued. A
//! cyclic prefix of N_CP samples is prepended, the concatenated stream is
//! pulse-shaped, pushed through the link emulator, re-aligned by
//! cross-correlation against the known transmit waveform, transformed back
//! and equalized with one tap per subcarrier.
//!
//! A measurement run is 150 pilot frames followed by 300 data frames; the
//! pilots are a fixed seeded 4-QAM sequence repeated in every pilot frame.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{self, AnalysisError, ChannelEstimate};
use crate::channel::{self, ChannelError, LinkPreset, VcselModel};
use crate::dsp::{self, Constellation, DspError};
use crate::loading::{self, LoadingPlan, SnrProfile};

pub const PILOT_FRAMES: usize = 150;
pub const DATA_FRAMES: usize = 300;
/// RRC span in symbols used for pulse shaping and matched filtering.
pub const RRC_SPAN: usize = 32;

const PILOT_SEED: u64 = 0x7069_6c6f;
const PROBE_DATA_SALT: u64 = 0x0dda_7a00;

#[derive(Debug, Error)]
pub enum ModemError {
    #[error("invalid OFDM config: {0}")]
    InvalidConfig(String),
    #[error("payload carries {got} symbols, expected {expected}")]
    PayloadLength { got: usize, expected: usize },
    #[error("pilot frame symbol {0} is not a unit-variance 4-QAM point")]
    InvalidPilotSymbol(usize),
    #[error("synchronizer input is empty")]
    EmptySync,
    #[error("reference ({reference} samples) longer than received sequence ({rx})")]
    ReferenceTooLong { reference: usize, rx: usize },
    #[error("received block has {got} samples, expected {expected}")]
    BlockLength { got: usize, expected: usize },
    #[error("gain vector has {got} entries, expected {expected}")]
    GainsLength { got: usize, expected: usize },
    #[error("zero channel gain on subcarrier {0}")]
    ZeroGain(usize),
    #[error("loading plan covers {got} subcarriers, config has {expected}")]
    PlanSize { got: usize, expected: usize },
    #[error("got {got} payload bits, plan requires {expected} (300 frames x {per_frame})")]
    BitCountMismatch {
        got: usize,
        expected: usize,
        per_frame: u64,
    },
    #[error("transmit waveform has zero variance")]
    ZeroWaveform,
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Framing and sampling constants of the DCO-OFDM signal.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    n_fft: usize,
    n_cp: usize,
    rolloff: f64,
    sample_rate_hz: f64,
    n_sps: usize,
}

impl Default for OfdmConfig {
    /// N_FFT = 1024, N_CP = 15, roll-off 0.1, 32 GSa/s, one sample per
    /// symbol (B = 16 GHz).
    fn default() -> Self {
        Self {
            n_fft: 1024,
            n_cp: 15,
            rolloff: 0.1,
            sample_rate_hz: 32e9,
            n_sps: 1,
        }
    }
}

impl OfdmConfig {
    pub fn new(
        n_fft: usize,
        n_cp: usize,
        rolloff: f64,
        sample_rate_hz: f64,
        n_sps: usize,
    ) -> Result<Self, ModemError> {
        let cfg = Self {
            n_fft,
            n_cp,
            rolloff,
            sample_rate_hz,
            n_sps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModemError> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 8 {
            return Err(ModemError::InvalidConfig(format!(
                "n_fft {} must be a power of two >= 8",
                self.n_fft
            )));
        }
        if self.n_cp > self.n_fft {
            return Err(ModemError::InvalidConfig(format!(
                "n_cp {} exceeds n_fft {}",
                self.n_cp, self.n_fft
            )));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(ModemError::InvalidConfig(format!(
                "roll-off {} outside [0, 1]",
                self.rolloff
            )));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(ModemError::InvalidConfig(format!(
                "sample rate {} must be positive",
                self.sample_rate_hz
            )));
        }
        if self.n_sps < 1 {
            return Err(ModemError::InvalidConfig("n_sps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn n_cp(&self) -> usize {
        self.n_cp
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn n_sps(&self) -> usize {
        self.n_sps
    }

    /// Data-carrying subcarriers: N_FFT/2 - 1.
    pub fn n_sc(&self) -> usize {
        self.n_fft / 2 - 1
    }

    /// Signal bandwidth B = (F_s/2)/N_SPS.
    pub fn bandwidth_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0 / self.n_sps as f64
    }

    /// Rate of the OFDM symbol stream before upsampling.
    pub fn chip_rate_hz(&self) -> f64 {
        self.sample_rate_hz / self.n_sps as f64
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.chip_rate_hz() / self.n_fft as f64
    }

    /// Center frequency of data subcarrier `k` (0-based), bins 1..=N_SC.
    pub fn subcarrier_frequency_hz(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.subcarrier_spacing_hz()
    }

    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        (0..self.n_sc())
            .map(|k| self.subcarrier_frequency_hz(k))
            .collect()
    }

    /// Samples per frame at the chip rate: N_FFT + N_CP.
    pub fn frame_len(&self) -> usize {
        self.n_fft + self.n_cp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Pilot,
    Data,
}

/// One OFDM frame of N_SC payload symbols.
#[derive(Debug, Clone)]
pub struct OfdmFrame {
    payload: Vec<Complex64>,
    kind: FrameKind,
}

impl OfdmFrame {
    pub fn new(
        payload: Vec<Complex64>,
        kind: FrameKind,
        cfg: &OfdmConfig,
    ) -> Result<Self, ModemError> {
        if payload.len() != cfg.n_sc() {
            return Err(ModemError::PayloadLength {
                got: payload.len(),
                expected: cfg.n_sc(),
            });
        }
        if kind == FrameKind::Pilot {
            let level = std::f64::consts::FRAC_1_SQRT_2;
            for (k, s) in payload.iter().enumerate() {
                if (s.re.abs() - level).abs() > 1e-9 || (s.im.abs() - level).abs() > 1e-9 {
                    return Err(ModemError::InvalidPilotSymbol(k));
                }
            }
        }
        Ok(Self { payload, kind })
    }

    pub fn payload(&self) -> &[Complex64] {
        &self.payload
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }
}

/// Real time-domain samples of a frame: Hermitian-symmetric spectrum,
/// inverse transform, cyclic prefix. Output length N_FFT + N_CP.
pub fn build_frame(frame: &OfdmFrame, cfg: &OfdmConfig) -> Result<Vec<f64>, ModemError> {
    build_frame_payload(frame.payload(), cfg)
}

fn build_frame_payload(payload: &[Complex64], cfg: &OfdmConfig) -> Result<Vec<f64>, ModemError> {
    let n = cfg.n_fft();
    let n_sc = cfg.n_sc();
    if payload.len() != n_sc {
        return Err(ModemError::PayloadLength {
            got: payload.len(),
            expected: n_sc,
        });
    }
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for (k, &s) in payload.iter().enumerate() {
        spectrum[k + 1] = s;
        spectrum[n - 1 - k] = s.conj();
    }
    // DC and Nyquist bins stay empty.
    let time = dsp::ifft(&spectrum)?;
    let body: Vec<f64> = time.iter().map(|c| c.re).collect();
    let mut out = Vec::with_capacity(cfg.frame_len());
    out.extend_from_slice(&body[n - cfg.n_cp()..]);
    out.extend_from_slice(&body);
    Ok(out)
}

/// A pulse-shaped sample stream along with the shaping filter's group delay
/// (in output samples), needed to re-align at the receiver.
#[derive(Debug, Clone)]
pub struct ShapedStream {
    pub samples: Vec<f64>,
    pub group_delay: usize,
}

/// Upsamples by N_SPS and applies the RRC shaping filter.
///
/// At one sample per symbol there is no excess band to shape (the RRC tap
/// energy collapses onto the center tap) and shaping is the identity.
pub fn pulse_shape(samples: &[f64], cfg: &OfdmConfig) -> Result<ShapedStream, ModemError> {
    if cfg.n_sps == 1 {
        return Ok(ShapedStream {
            samples: samples.to_vec(),
            group_delay: 0,
        });
    }
    let taps = dsp::rrc_taps(cfg.rolloff, cfg.n_sps, RRC_SPAN)?;
    Ok(ShapedStream {
        samples: upsample_filter(samples, &taps, cfg.n_sps),
        group_delay: RRC_SPAN * cfg.n_sps / 2,
    })
}

fn upsample_filter(x: &[f64], taps: &[f64], sps: usize) -> Vec<f64> {
    let up_len = x.len() * sps;
    let mut out = vec![0.0; up_len + taps.len() - 1];
    for (i, &v) in x.iter().enumerate() {
        if v != 0.0 {
            let base = i * sps;
            for (j, &h) in taps.iter().enumerate() {
                out[base + j] += v * h;
            }
        }
    }
    out
}

fn convolve(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len() + taps.len() - 1];
    for (i, &v) in x.iter().enumerate() {
        if v != 0.0 {
            for (j, &h) in taps.iter().enumerate() {
                out[i + j] += v * h;
            }
        }
    }
    out
}

/// Sample offset maximizing the normalized cross-correlation of `rx`
/// against `reference`. Earliest offset wins ties.
pub fn synchronize(rx: &[f64], reference: &[f64]) -> Result<usize, ModemError> {
    if rx.is_empty() || reference.is_empty() {
        return Err(ModemError::EmptySync);
    }
    if reference.len() > rx.len() {
        return Err(ModemError::ReferenceTooLong {
            reference: reference.len(),
            rx: rx.len(),
        });
    }
    let l = reference.len();
    let lags = rx.len() - l + 1;
    let ref_energy: f64 = reference.iter().map(|v| v * v).sum();
    if ref_energy == 0.0 {
        return Ok(0);
    }

    let numerator = cross_correlation(rx, reference, lags);
    let mut prefix = vec![0.0f64; rx.len() + 1];
    for (i, &v) in rx.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v * v;
    }

    let mut best = 0usize;
    let mut best_ncc = f64::NEG_INFINITY;
    for (d, &num) in numerator.iter().enumerate() {
        let window_energy = prefix[d + l] - prefix[d];
        if window_energy <= 0.0 {
            continue;
        }
        let ncc = num / (window_energy * ref_energy).sqrt();
        if ncc > best_ncc {
            best_ncc = ncc;
            best = d;
        }
    }
    Ok(best)
}

fn cross_correlation(rx: &[f64], reference: &[f64], lags: usize) -> Vec<f64> {
    let l = reference.len();
    // Direct form for small problems, FFT otherwise.
    if rx.len() * l <= 1 << 22 {
        return (0..lags)
            .map(|d| {
                reference
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| rx[d + i] * r)
                    .sum()
            })
            .collect();
    }
    let m = (rx.len() + l).next_power_of_two();
    let mut a: Vec<Complex64> = rx.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(m, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = reference.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(m, Complex64::new(0.0, 0.0));
    let fa = dsp::fft(&a).expect("power-of-two length");
    let fb = dsp::fft(&b).expect("power-of-two length");
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    let corr = dsp::ifft(&prod).expect("power-of-two length");
    corr[..lags].iter().map(|c| c.re).collect()
}

/// Strips the cyclic prefix, transforms, and equalizes bin k+1 by gains[k].
pub fn demodulate_frame(
    rx_block: &[f64],
    gains: &[Complex64],
    cfg: &OfdmConfig,
) -> Result<Vec<Complex64>, ModemError> {
    if rx_block.len() != cfg.frame_len() {
        return Err(ModemError::BlockLength {
            got: rx_block.len(),
            expected: cfg.frame_len(),
        });
    }
    let n_sc = cfg.n_sc();
    if gains.len() != n_sc {
        return Err(ModemError::GainsLength {
            got: gains.len(),
            expected: n_sc,
        });
    }
    if let Some(k) = gains.iter().position(|g| g.norm_sqr() == 0.0) {
        return Err(ModemError::ZeroGain(k));
    }
    let body: Vec<Complex64> = rx_block[cfg.n_cp()..]
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let spectrum = dsp::fft(&body)?;
    Ok((0..n_sc).map(|k| spectrum[k + 1] / gains[k]).collect())
}

/// The fixed pilot payload: seeded pseudo-random unit-variance 4-QAM,
/// identical in every pilot frame.
pub fn pilot_payload(cfg: &OfdmConfig) -> Vec<Complex64> {
    let c4 = Constellation::new(4).expect("4-QAM is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(PILOT_SEED);
    let bits: Vec<bool> = (0..2 * cfg.n_sc()).map(|_| rng.gen()).collect();
    c4.modulate(&bits).expect("bit count matches")
}

/// Measurement outcome of one 450-frame stream.
#[derive(Debug, Clone)]
pub struct StreamReport {
    pub ber: f64,
    pub rate_bps: f64,
    pub snr_profile: SnrProfile,
    pub bit_errors: usize,
    pub bits_compared: usize,
    pub clipped_fraction: f64,
    pub clipping_warning: bool,
    pub sync_offset: usize,
}

/// Pushes 150 pilot + 300 data frames through the link, estimates the
/// channel from the pilots, equalizes, demaps and counts bit errors.
/// Deterministic for a fixed seed.
pub fn run_stream(
    tx_bits: &[bool],
    plan: &LoadingPlan,
    preset: &LinkPreset,
    model: &VcselModel,
    cfg: &OfdmConfig,
    seed: u64,
) -> Result<StreamReport, ModemError> {
    cfg.validate()?;
    let n_sc = cfg.n_sc();
    if plan.n_subcarriers() != n_sc {
        return Err(ModemError::PlanSize {
            got: plan.n_subcarriers(),
            expected: n_sc,
        });
    }
    let per_frame = plan.total_bits();
    let expected = DATA_FRAMES * per_frame as usize;
    if tx_bits.len() != expected {
        return Err(ModemError::BitCountMismatch {
            got: tx_bits.len(),
            expected,
            per_frame,
        });
    }

    let mut constellations: HashMap<u8, Constellation> = HashMap::new();
    for &b in plan.bits() {
        if b > 0 {
            constellations
                .entry(b)
                .or_insert_with(|| Constellation::new(1 << b).expect("order within range"));
        }
    }

    // Assemble pilot and data frames; bits are consumed subcarrier-ascending
    // within each frame, frames in order.
    let pilot = pilot_payload(cfg);
    let mut frames: Vec<Vec<Complex64>> = Vec::with_capacity(PILOT_FRAMES + DATA_FRAMES);
    frames.extend(std::iter::repeat(pilot.clone()).take(PILOT_FRAMES));
    let mut tx_labels: Vec<Vec<usize>> = Vec::with_capacity(DATA_FRAMES);
    let mut pos = 0usize;
    for _ in 0..DATA_FRAMES {
        let mut payload = vec![Complex64::new(0.0, 0.0); n_sc];
        let mut labels = vec![0usize; n_sc];
        for k in 0..n_sc {
            let b = plan.bits()[k] as usize;
            if b == 0 {
                continue;
            }
            let label = tx_bits[pos..pos + b]
                .iter()
                .fold(0usize, |acc, &bit| (acc << 1) | bit as usize);
            pos += b;
            labels[k] = label;
            let point = constellations[&plan.bits()[k]].points()[label];
            payload[k] = point * plan.power_scales()[k].sqrt();
        }
        frames.push(payload);
        tx_labels.push(labels);
    }

    let transmission = transmit_frames(&frames, preset, model, cfg, seed)?;

    let pilot_tx: Vec<Vec<Complex64>> = vec![pilot; PILOT_FRAMES];
    let estimate = analysis::estimate_channel(
        &pilot_tx,
        &transmission.raw_frames[..PILOT_FRAMES],
        &cfg.subcarrier_frequencies(),
    )?;
    // Dead subcarriers estimate to exactly zero gain on a noiseless link;
    // they carry no bits, so equalize them with a unit tap instead.
    let gains: Vec<Complex64> = estimate
        .gains()
        .iter()
        .map(|&g| {
            if g.norm_sqr() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                g
            }
        })
        .collect();

    let mut bit_errors = 0usize;
    for (frame_idx, raw) in transmission.raw_frames[PILOT_FRAMES..].iter().enumerate() {
        for k in 0..n_sc {
            let b = plan.bits()[k];
            if b == 0 {
                continue;
            }
            let eq = raw[k] / gains[k] / plan.power_scales()[k].sqrt();
            let decided = constellations[&b].decide(eq);
            bit_errors += (decided ^ tx_labels[frame_idx][k]).count_ones() as usize;
        }
    }

    let bits_compared = expected;
    Ok(StreamReport {
        ber: if bits_compared > 0 {
            bit_errors as f64 / bits_compared as f64
        } else {
            0.0
        },
        rate_bps: loading::data_rate(per_frame, cfg),
        snr_profile: estimate.snr().clone(),
        bit_errors,
        bits_compared,
        clipped_fraction: transmission.clipped_fraction,
        clipping_warning: transmission.clipping_warning,
        sync_offset: transmission.sync_offset,
    })
}

struct Transmission {
    raw_frames: Vec<Vec<Complex64>>,
    clipped_fraction: f64,
    clipping_warning: bool,
    sync_offset: usize,
}

/// Shared transmit/receive path: frames to waveform, link, synchronization,
/// matched filtering and per-frame transform (no equalization).
fn transmit_frames(
    frames: &[Vec<Complex64>],
    preset: &LinkPreset,
    model: &VcselModel,
    cfg: &OfdmConfig,
    seed: u64,
) -> Result<Transmission, ModemError> {
    let flen = cfg.frame_len();
    let mut chip_stream = Vec::with_capacity(frames.len() * flen);
    for payload in frames {
        chip_stream.extend(build_frame_payload(payload, cfg)?);
    }
    let shaped = pulse_shape(&chip_stream, cfg)?;

    let mean = shaped.samples.iter().sum::<f64>() / shaped.samples.len() as f64;
    let var = shaped
        .samples
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .sum::<f64>()
        / shaped.samples.len() as f64;
    if var <= 0.0 {
        return Err(ModemError::ZeroWaveform);
    }
    let std = var.sqrt();
    let tx_norm: Vec<f64> = shaped.samples.iter().map(|&x| x / std).collect();

    let link = channel::apply_link(&tx_norm, preset, model, cfg.sample_rate_hz(), seed)?;

    // The link is zero-phase and length-preserving, so the true delay is
    // zero; the correlation against the known transmit waveform mirrors the
    // scope's wired trigger channel.
    let sync_offset = synchronize(&link.samples, &tx_norm)?;

    let sym_stream: Vec<f64> = if cfg.n_sps() == 1 {
        link.samples[sync_offset..].to_vec()
    } else {
        let taps = dsp::rrc_taps(cfg.rolloff(), cfg.n_sps(), RRC_SPAN)?;
        let matched = convolve(&link.samples[sync_offset..], &taps);
        // Two cascaded half-span group delays.
        let delay = RRC_SPAN * cfg.n_sps();
        let total_chips = frames.len() * flen;
        (0..total_chips)
            .map(|m| matched[delay + m * cfg.n_sps()])
            .collect()
    };

    let ones = vec![Complex64::new(1.0, 0.0); cfg.n_sc()];
    let mut raw_frames = Vec::with_capacity(frames.len());
    for i in 0..frames.len() {
        let block = &sym_stream[i * flen..(i + 1) * flen];
        raw_frames.push(demodulate_frame(block, &ones, cfg)?);
    }

    Ok(Transmission {
        raw_frames,
        clipped_fraction: link.clipped_fraction,
        clipping_warning: link.clipping_warning,
        sync_offset,
    })
}

fn random_qam4_frames(count: usize, cfg: &OfdmConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<Complex64>> {
    let c4 = Constellation::new(4).expect("4-QAM is valid");
    (0..count)
        .map(|_| {
            let bits: Vec<bool> = (0..2 * cfg.n_sc()).map(|_| rng.gen()).collect();
            c4.modulate(&bits).expect("bit count matches")
        })
        .collect()
}

/// Channel estimate as a receiver measures it: the standard 450-frame stream
/// with repeated pilots, estimated over the pilot section.
pub fn pilot_probe(
    preset: &LinkPreset,
    model: &VcselModel,
    cfg: &OfdmConfig,
    seed: u64,
) -> Result<ChannelEstimate, ModemError> {
    let pilot = pilot_payload(cfg);
    let mut frames: Vec<Vec<Complex64>> = Vec::with_capacity(PILOT_FRAMES + DATA_FRAMES);
    frames.extend(std::iter::repeat(pilot.clone()).take(PILOT_FRAMES));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PROBE_DATA_SALT);
    frames.extend(random_qam4_frames(DATA_FRAMES, cfg, &mut rng));
    let transmission = transmit_frames(&frames, preset, model, cfg, seed)?;
    let pilot_tx: Vec<Vec<Complex64>> = vec![pilot; PILOT_FRAMES];
    Ok(analysis::estimate_channel(
        &pilot_tx,
        &transmission.raw_frames[..PILOT_FRAMES],
        &cfg.subcarrier_frequencies(),
    )?)
}

/// Channel estimate from distinct random 4-QAM frames, so deterministic ISI
/// and nonlinear distortion show up as residual variance rather than being
/// folded into the gains. Used for calibration.
pub fn random_probe(
    preset: &LinkPreset,
    model: &VcselModel,
    cfg: &OfdmConfig,
    seed: u64,
) -> Result<ChannelEstimate, ModemError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PROBE_DATA_SALT);
    let frames = random_qam4_frames(PILOT_FRAMES + DATA_FRAMES, cfg, &mut rng);
    let transmission = transmit_frames(&frames, preset, model, cfg, seed)?;
    Ok(analysis::estimate_channel(
        &frames[..PILOT_FRAMES],
        &transmission.raw_frames[..PILOT_FRAMES],
        &cfg.subcarrier_frequencies(),
    )?)
}
