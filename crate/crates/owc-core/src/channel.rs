//! Parametric end-to-end link emulator.
//!
//! The transmit waveform (unit standard deviation) is mapped onto a drive
//! current around the DC bias, pushed through the VCSEL LIV nonlinearity,
//! filtered by a cascade of zero-phase frequency responses, detected with a
//! fixed responsivity and disturbed by additive white Gaussian noise.
//! Zero-phase filtering keeps one-tap equalization exact in the noiseless
//! case; the physical channel phase is not modelled.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dsp;
use crate::loading::SnrProfile;
use crate::modem::{self, OfdmConfig};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("drive current {0} mA is negative")]
    NegativeCurrent(f64),
    #[error("invalid VCSEL model: {0}")]
    InvalidVcsel(String),
    #[error("invalid link preset: {0}")]
    InvalidPreset(String),
    #[error("input waveform is empty")]
    EmptyInput,
    #[error("input std {0} is not unit (expected within [0.9, 1.1])")]
    NotUnitStd(f64),
    #[error("calibration target has {got} entries, expected {expected} subcarriers")]
    TargetSize { got: usize, expected: usize },
    #[error("calibration target is zero everywhere")]
    AllZeroTarget,
    #[error("channel is dead: no subcarrier carries signal")]
    DeadChannel,
    #[error("calibration probe failed: {0}")]
    Probe(String),
}

/// LIV curve parameters of the transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcselModel {
    pub i_threshold_ma: f64,
    pub slope_w_per_a: f64,
    pub i_rollover_ma: f64,
    pub p_max_mw: f64,
    /// Forward-current range with constant slope efficiency, in mA.
    pub linear_range_ma: (f64, f64),
}

impl Default for VcselModel {
    fn default() -> Self {
        Self {
            i_threshold_ma: 1.5,
            slope_w_per_a: 0.6,
            i_rollover_ma: 30.0,
            p_max_mw: 14.0,
            linear_range_ma: (5.0, 20.0),
        }
    }
}

impl VcselModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let (lo, hi) = self.linear_range_ma;
        if !(self.i_threshold_ma > 0.0 && self.i_threshold_ma < lo && lo < hi
            && hi < self.i_rollover_ma)
        {
            return Err(ChannelError::InvalidVcsel(format!(
                "require 0 < threshold ({}) < linear low ({lo}) < linear high ({hi}) < rollover ({})",
                self.i_threshold_ma, self.i_rollover_ma
            )));
        }
        if !(self.slope_w_per_a > 0.0) {
            return Err(ChannelError::InvalidVcsel(format!(
                "slope efficiency {} must be positive",
                self.slope_w_per_a
            )));
        }
        if !(self.p_max_mw > 0.0) {
            return Err(ChannelError::InvalidVcsel(format!(
                "maximum power {} must be positive",
                self.p_max_mw
            )));
        }
        Ok(())
    }

    /// LIV evaluation without the nonnegative-current check; `i_ma >= 0`.
    fn emitted_mw(&self, i_ma: f64) -> f64 {
        let (_, lin_hi) = self.linear_range_ma;
        if i_ma <= self.i_threshold_ma {
            0.0
        } else if i_ma <= lin_hi {
            self.slope_w_per_a * (i_ma - self.i_threshold_ma)
        } else if i_ma < self.i_rollover_ma {
            // Cubic Hermite easing to (rollover, p_max) with zero end slope.
            let p0 = self.slope_w_per_a * (lin_hi - self.i_threshold_ma);
            let h = self.i_rollover_ma - lin_hi;
            let t = (i_ma - lin_hi) / h;
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * p0
                + (t3 - 2.0 * t2 + t) * h * self.slope_w_per_a
                + (-2.0 * t3 + 3.0 * t2) * self.p_max_mw
        } else {
            self.p_max_mw
        }
    }
}

/// Optical power in mW emitted at forward current `i_ma`.
pub fn vcsel_power(i_ma: f64, model: &VcselModel) -> Result<f64, ChannelError> {
    if i_ma < 0.0 {
        return Err(ChannelError::NegativeCurrent(i_ma));
    }
    model.validate()?;
    Ok(model.emitted_mw(i_ma))
}

/// One linear stage of the link frequency response. All stages are applied as
/// zero-phase magnitude responses.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseStage {
    SecondOrderLowpass {
        f_resonance_hz: f64,
        damping: f64,
        gain: f64,
    },
    FirstOrderLowpass {
        f_3db_hz: f64,
        gain: f64,
    },
    /// Unit gain below the cutoff, zero at and above it.
    Brickwall {
        cutoff_hz: f64,
    },
    /// Gain ripple in dB, e.g. from reflections at an impedance mismatch.
    SinusoidalRippleDb {
        amplitude_db: f64,
        period_hz: f64,
        phase_rad: f64,
    },
    /// Piecewise-linear magnitude over frequency; ends extend flat.
    GainProfile {
        frequencies_hz: Vec<f64>,
        gains: Vec<f64>,
    },
}

impl ResponseStage {
    pub fn magnitude(&self, f_hz: f64) -> f64 {
        match self {
            Self::SecondOrderLowpass {
                f_resonance_hz,
                damping,
                gain,
            } => {
                let r = f_hz / f_resonance_hz;
                let r2 = r * r;
                gain / ((1.0 - r2).powi(2) + (2.0 * damping * r).powi(2)).sqrt()
            }
            Self::FirstOrderLowpass { f_3db_hz, gain } => {
                let r = f_hz / f_3db_hz;
                gain / (1.0 + r * r).sqrt()
            }
            Self::Brickwall { cutoff_hz } => {
                if f_hz < *cutoff_hz {
                    1.0
                } else {
                    0.0
                }
            }
            Self::SinusoidalRippleDb {
                amplitude_db,
                period_hz,
                phase_rad,
            } => {
                let db = amplitude_db * (std::f64::consts::TAU * f_hz / period_hz + phase_rad).sin();
                10f64.powf(db / 20.0)
            }
            Self::GainProfile {
                frequencies_hz,
                gains,
            } => {
                let f = frequencies_hz;
                let n = f.len();
                if n == 0 {
                    return 1.0;
                }
                if f_hz <= f[0] {
                    return gains[0];
                }
                if f_hz >= f[n - 1] {
                    return gains[n - 1];
                }
                let idx = match f.binary_search_by(|x| x.total_cmp(&f_hz)) {
                    Ok(i) => return gains[i],
                    Err(i) => i - 1,
                };
                let t = (f_hz - f[idx]) / (f[idx + 1] - f[idx]);
                gains[idx] * (1.0 - t) + gains[idx + 1] * t
            }
        }
    }
}

/// DC operating point, drive mapping, response cascade and noise level of
/// one end-to-end link configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPreset {
    pub name: String,
    pub v_dc: f64,
    pub i_dc_ma: f64,
    /// Transmitted optical power at the bias point, mW (reference value).
    pub p_t_mw: f64,
    /// Received optical power at the bias point, µW (reference value).
    pub p_r_uw: f64,
    /// Drive scale κ: mA of current swing per unit signal standard deviation.
    pub drive_scale_ma: f64,
    pub response_stages: Vec<ResponseStage>,
    /// Standard deviation of the AWGN added per output sample.
    pub noise_std: f64,
    pub responsivity_a_per_w: f64,
}

/// κ keeping ±3σ of the drive inside the linear LIV range around either
/// Table-I bias point.
pub const DEFAULT_DRIVE_SCALE_MA: f64 = 1.1;
/// Default receiver noise level; places the DC subcarrier SNR near 25 dB on
/// the Config-I cascade at the default OFDM parameters.
pub const DEFAULT_NOISE_STD: f64 = 0.0186;
pub const DEFAULT_RESPONSIVITY_A_PER_W: f64 = 0.5;

impl LinkPreset {
    /// Transmitter dynamics (18 GHz), bias-tee roll-off (12 GHz) and the
    /// receiver-side hard cutoff (11 GHz).
    pub fn paper_stages() -> Vec<ResponseStage> {
        vec![
            ResponseStage::SecondOrderLowpass {
                f_resonance_hz: 18e9,
                damping: std::f64::consts::FRAC_1_SQRT_2,
                gain: 1.0,
            },
            ResponseStage::FirstOrderLowpass {
                f_3db_hz: 12e9,
                gain: 1.0,
            },
            ResponseStage::Brickwall { cutoff_hz: 11e9 },
        ]
    }

    /// DC operating configuration I: (2.40 V, 8.42 mA, 4.26 mW, 445 µW).
    pub fn config_i() -> Self {
        Self {
            name: "Config-I".into(),
            v_dc: 2.40,
            i_dc_ma: 8.42,
            p_t_mw: 4.26,
            p_r_uw: 445.0,
            drive_scale_ma: DEFAULT_DRIVE_SCALE_MA,
            response_stages: Self::paper_stages(),
            noise_std: DEFAULT_NOISE_STD,
            responsivity_a_per_w: DEFAULT_RESPONSIVITY_A_PER_W,
        }
    }

    /// DC operating configuration II: (2.44 V, 9.46 mA, 4.95 mW, 510 µW).
    pub fn config_ii() -> Self {
        Self {
            name: "Config-II".into(),
            v_dc: 2.44,
            i_dc_ma: 9.46,
            p_t_mw: 4.95,
            p_r_uw: 510.0,
            drive_scale_ma: DEFAULT_DRIVE_SCALE_MA,
            response_stages: Self::paper_stages(),
            noise_std: DEFAULT_NOISE_STD,
            responsivity_a_per_w: DEFAULT_RESPONSIVITY_A_PER_W,
        }
    }

    /// Flat, noise-free, strictly linear chain; the whole transmit stream is
    /// recovered exactly after one-tap equalization.
    pub fn noiseless() -> Self {
        Self {
            name: "noiseless".into(),
            response_stages: Vec::new(),
            noise_std: 0.0,
            drive_scale_ma: 1.0,
            ..Self::config_i()
        }
    }

    pub fn validate(&self, model: &VcselModel) -> Result<(), ChannelError> {
        model.validate()?;
        let (lo, hi) = model.linear_range_ma;
        if !(self.i_dc_ma >= lo && self.i_dc_ma <= hi) {
            return Err(ChannelError::InvalidPreset(format!(
                "DC bias {} mA outside the linear range [{lo}, {hi}] mA",
                self.i_dc_ma
            )));
        }
        if !(self.drive_scale_ma > 0.0) {
            return Err(ChannelError::InvalidPreset(format!(
                "drive scale {} must be positive",
                self.drive_scale_ma
            )));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(ChannelError::InvalidPreset(format!(
                "noise std {} must be nonnegative",
                self.noise_std
            )));
        }
        if !(self.responsivity_a_per_w > 0.0) {
            return Err(ChannelError::InvalidPreset(format!(
                "responsivity {} must be positive",
                self.responsivity_a_per_w
            )));
        }
        for stage in &self.response_stages {
            let ok = match stage {
                ResponseStage::SecondOrderLowpass {
                    f_resonance_hz,
                    damping,
                    gain,
                } => *f_resonance_hz > 0.0 && *damping > 0.0 && *gain > 0.0,
                ResponseStage::FirstOrderLowpass { f_3db_hz, gain } => {
                    *f_3db_hz > 0.0 && *gain > 0.0
                }
                ResponseStage::Brickwall { cutoff_hz } => *cutoff_hz > 0.0,
                ResponseStage::SinusoidalRippleDb { period_hz, .. } => *period_hz > 0.0,
                ResponseStage::GainProfile {
                    frequencies_hz,
                    gains,
                } => {
                    frequencies_hz.len() == gains.len()
                        && frequencies_hz.windows(2).all(|w| w[1] > w[0])
                        && gains.iter().all(|&g| g >= 0.0 && g.is_finite())
                }
            };
            if !ok {
                return Err(ChannelError::InvalidPreset(format!(
                    "invalid stage parameters: {stage:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Combined complex gain of the response cascade at `f_hz` (zero phase, so
/// the imaginary part is always zero; DC gain is 1 for unit stage gains).
pub fn frequency_response(preset: &LinkPreset, f_hz: f64) -> Complex64 {
    let mag = preset
        .response_stages
        .iter()
        .map(|s| s.magnitude(f_hz))
        .product::<f64>();
    Complex64::new(mag, 0.0)
}

/// Output of [`apply_link`].
#[derive(Debug, Clone)]
pub struct LinkOutput {
    pub samples: Vec<f64>,
    /// Fraction of drive samples clipped outside [0, i_rollover].
    pub clipped_fraction: f64,
    /// Set when more than 1% of samples were clipped.
    pub clipping_warning: bool,
}

/// Pushes a unit-std waveform through drive mapping, LIV curve, response
/// cascade, detection and AWGN. Deterministic for a fixed seed.
pub fn apply_link(
    tx: &[f64],
    preset: &LinkPreset,
    model: &VcselModel,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<LinkOutput, ChannelError> {
    if tx.is_empty() {
        return Err(ChannelError::EmptyInput);
    }
    preset.validate(model)?;
    let mean = tx.iter().sum::<f64>() / tx.len() as f64;
    let var = tx.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / tx.len() as f64;
    let std = var.sqrt();
    if !(0.9..=1.1).contains(&std) {
        return Err(ChannelError::NotUnitStd(std));
    }

    let mut clipped = 0usize;
    let mut optical: Vec<f64> = tx
        .iter()
        .map(|&x| {
            let i = preset.i_dc_ma + preset.drive_scale_ma * x;
            let i = if i < 0.0 {
                clipped += 1;
                0.0
            } else if i > model.i_rollover_ma {
                clipped += 1;
                model.i_rollover_ma
            } else {
                i
            };
            model.emitted_mw(i)
        })
        .collect();

    if !preset.response_stages.is_empty() {
        optical = zero_phase_filter(&optical, preset, sample_rate_hz);
    }

    let mut samples: Vec<f64> = optical
        .iter()
        .map(|&p| preset.responsivity_a_per_w * p)
        .collect();

    if preset.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, preset.noise_std)
            .map_err(|e| ChannelError::InvalidPreset(e.to_string()))?;
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }

    let clipped_fraction = clipped as f64 / tx.len() as f64;
    Ok(LinkOutput {
        samples,
        clipped_fraction,
        clipping_warning: clipped_fraction > 0.01,
    })
}

fn zero_phase_filter(x: &[f64], preset: &LinkPreset, sample_rate_hz: f64) -> Vec<f64> {
    let n = x.len();
    let m = (n + n / 4 + 4096).next_power_of_two();
    let mut buf: Vec<Complex64> = Vec::with_capacity(m);
    buf.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
    buf.resize(m, Complex64::new(0.0, 0.0));
    let mut spec = dsp::fft(&buf).expect("padded length is a power of two");
    for (i, bin) in spec.iter_mut().enumerate() {
        let k = i.min(m - i);
        let f = k as f64 * sample_rate_hz / m as f64;
        *bin *= frequency_response(preset, f).re;
    }
    let time = dsp::ifft(&spec).expect("padded length is a power of two");
    time[..n].iter().map(|c| c.re).collect()
}

/// Result of [`calibrate_noise`].
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    /// Pilot-estimated SNR profile of the calibrated link.
    pub achieved: SnrProfile,
    /// Subcarriers whose target lies above the distortion-limited ceiling
    /// (or that carry no signal at all).
    pub unreachable: Vec<usize>,
    /// Mean |achieved - target| in dB over reachable subcarriers with
    /// target above 0 dB.
    pub mean_abs_error_db: f64,
}

const CAL_PROBE_SEED: u64 = 0xCA11_0001;
const CAL_VERIFY_SEED: u64 = 0xCA11_0002;

/// Adjusts `noise_std` and appends a per-frequency gain stage so the
/// pilot-estimated SNR profile of the simulated link matches `target`.
///
/// The AWGN floor is common to all subcarriers, so the shaping stage sets
/// each subcarrier's signal level against that floor; distortion measured in
/// a noise-free probe bounds what shaping can reach, and subcarriers whose
/// target exceeds that ceiling are reported as unreachable together with the
/// achieved profile.
pub fn calibrate_noise(
    preset: &LinkPreset,
    target: &SnrProfile,
    model: &VcselModel,
    cfg: &OfdmConfig,
) -> Result<(LinkPreset, CalibrationReport), ChannelError> {
    let n = cfg.n_sc();
    if target.len() != n {
        return Err(ChannelError::TargetSize {
            got: target.len(),
            expected: n,
        });
    }
    let t = target.snr_linear();
    if t.iter().all(|&v| v <= 0.0) {
        return Err(ChannelError::AllZeroTarget);
    }

    let mut base = preset.clone();
    base.noise_std = 0.0;
    // Distinct random frames expose ISI and nonlinear distortion as residual
    // variance; repeated pilots would fold deterministic ISI into the gains.
    let probe = modem::random_probe(&base, model, cfg, CAL_PROBE_SEED)
        .map_err(|e| ChannelError::Probe(e.to_string()))?;
    let a: Vec<f64> = probe.gains().iter().map(|g| g.norm()).collect();
    let d = probe.noise_var();

    let a_max = a.iter().cloned().fold(0.0, f64::max);
    if a_max <= 0.0 {
        return Err(ChannelError::DeadChannel);
    }
    let alive = |k: usize| a[k] > 1e-6 * a_max;

    // Reference subcarrier: strongest gain among positive targets; its
    // shaping gain is pinned to one and the noise floor set from it.
    let reference = (0..n)
        .filter(|&k| t[k] > 0.0 && alive(k))
        .max_by(|&x, &y| a[x].total_cmp(&a[y]))
        .ok_or(ChannelError::DeadChannel)?;
    let denom_ref = a[reference] * a[reference] - t[reference] * d[reference];
    let bin_noise_var = if denom_ref > 0.0 {
        denom_ref / t[reference]
    } else {
        a[reference] * a[reference] * 1e-6
    };
    let noise_std = (bin_noise_var / cfg.n_fft() as f64).sqrt();

    let mut gains = vec![0.0f64; n];
    let mut unreachable = Vec::new();
    for k in 0..n {
        if t[k] <= 0.0 {
            continue;
        }
        if !alive(k) {
            unreachable.push(k);
            continue;
        }
        let denom = a[k] * a[k] - t[k] * d[k];
        let g2 = if denom > 0.01 * a[k] * a[k] {
            bin_noise_var * t[k] / denom
        } else {
            // Distortion-limited: boost toward the ceiling and flag it.
            unreachable.push(k);
            bin_noise_var * t[k] / (0.01 * a[k] * a[k])
        };
        gains[k] = g2.sqrt();
    }

    let mut frequencies_hz = Vec::with_capacity(n + 1);
    frequencies_hz.push(0.0);
    frequencies_hz.extend(cfg.subcarrier_frequencies());
    let mut gain_values = Vec::with_capacity(n + 1);
    gain_values.push(gains[0]);
    gain_values.extend(gains.iter().copied());

    let mut calibrated = preset.clone();
    calibrated.noise_std = noise_std;
    calibrated.response_stages.push(ResponseStage::GainProfile {
        frequencies_hz,
        gains: gain_values,
    });

    let check = modem::pilot_probe(&calibrated, model, cfg, CAL_VERIFY_SEED)
        .map_err(|e| ChannelError::Probe(e.to_string()))?;
    let achieved = check.snr().clone();
    let mut mae = 0.0;
    let mut count = 0usize;
    for k in 0..n {
        if t[k] > 1.0 && alive(k) && !unreachable.contains(&k) {
            let ach_db = 10.0 * achieved.snr_linear()[k].max(1e-12).log10();
            let tgt_db = 10.0 * t[k].log10();
            mae += (ach_db - tgt_db).abs();
            count += 1;
        }
    }
    let mean_abs_error_db = if count > 0 { mae / count as f64 } else { 0.0 };

    Ok((
        calibrated,
        CalibrationReport {
            achieved,
            unreachable,
            mean_abs_error_db,
        },
    ))
}
