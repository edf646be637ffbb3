//! Measurement-side algorithms: pilot-based channel/SNR estimation,
//! moving-average smoothing, two-breakpoint piecewise-linear SNR regression
//! with extrapolation past the instrument cutoff, and BER counting.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{LinkPreset, VcselModel};
use crate::loading::{self, LoadingError, SnrFunction, SnrProfile};
use crate::modem::{self, OfdmConfig};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least 2 pilot frames, got {0}")]
    TooFewPilotFrames(usize),
    #[error("pilot dimensions mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pilot symbol is zero at frame {frame}, subcarrier {subcarrier}")]
    ZeroPilotSymbol { frame: usize, subcarrier: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("window {window} invalid for length {len}")]
    InvalidWindow { window: usize, len: usize },
    #[error("profile has {got} points below the cutoff, need at least {need}")]
    ProfileTooShort { got: usize, need: usize },
    #[error("profile ends at {last} Hz, below the cutoff {cutoff} Hz")]
    ProfileDoesNotCoverCutoff { last: f64, cutoff: f64 },
    #[error("no valid breakpoint candidate between the profile start and f2")]
    NoBreakpointCandidate,
    #[error("segment-2 slope {0} dB/Hz is not negative; no 0 dB crossing exists")]
    NonNegativeSlope(f64),
    #[error("bit sequences differ in length: {tx} vs {rx}")]
    BitLengthMismatch { tx: usize, rx: usize },
    #[error(transparent)]
    Loading(#[from] LoadingError),
    #[error("sweep failed at target BER {target_ber}: {message}")]
    SweepFailed { target_ber: f64, message: String },
}

/// Estimated SNRs are capped at this sentinel where the residual variance
/// vanishes, keeping dB arithmetic finite.
pub const SNR_CAP_DB: f64 = 60.0;

/// Per-subcarrier complex gains, residual noise variances and the derived
/// SNR profile.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    gains: Vec<Complex64>,
    noise_var: Vec<f64>,
    snr: SnrProfile,
}

impl ChannelEstimate {
    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    pub fn snr(&self) -> &SnrProfile {
        &self.snr
    }
}

/// Least-squares one-tap channel estimate from known pilot symbols.
///
/// `gains[k]` is the mean over frames of rx/tx; `noise_var[k]` the unbiased
/// variance of the residuals rx − g·tx; the SNR follows as |g|²/var for
/// unit-variance pilots, capped at [`SNR_CAP_DB`].
pub fn estimate_channel(
    pilot_tx: &[Vec<Complex64>],
    pilot_rx: &[Vec<Complex64>],
    frequencies_hz: &[f64],
) -> Result<ChannelEstimate, AnalysisError> {
    let frames = pilot_tx.len();
    if frames < 2 {
        return Err(AnalysisError::TooFewPilotFrames(frames));
    }
    if pilot_rx.len() != frames {
        return Err(AnalysisError::DimensionMismatch(format!(
            "{} tx frames vs {} rx frames",
            frames,
            pilot_rx.len()
        )));
    }
    let n = frequencies_hz.len();
    for (i, (tx, rx)) in pilot_tx.iter().zip(pilot_rx).enumerate() {
        if tx.len() != n || rx.len() != n {
            return Err(AnalysisError::DimensionMismatch(format!(
                "frame {i}: tx {} / rx {} symbols, expected {n}",
                tx.len(),
                rx.len()
            )));
        }
    }

    let cap = 10f64.powf(SNR_CAP_DB / 10.0);
    let mut gains = Vec::with_capacity(n);
    let mut noise_var = Vec::with_capacity(n);
    let mut snr = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (frame, tx) in pilot_tx.iter().enumerate() {
            if tx[k].norm_sqr() == 0.0 {
                return Err(AnalysisError::ZeroPilotSymbol {
                    frame,
                    subcarrier: k,
                });
            }
            acc += pilot_rx[frame][k] / tx[k];
        }
        let g = acc / frames as f64;
        let mut resid = 0.0;
        for (frame, tx) in pilot_tx.iter().enumerate() {
            resid += (pilot_rx[frame][k] - g * tx[k]).norm_sqr();
        }
        let var = resid / (frames - 1) as f64;
        let s = if var > 0.0 {
            (g.norm_sqr() / var).min(cap)
        } else if g.norm_sqr() > 0.0 {
            cap
        } else {
            0.0
        };
        gains.push(g);
        noise_var.push(var);
        snr.push(s);
    }

    Ok(ChannelEstimate {
        gains,
        noise_var,
        snr: SnrProfile::new(frequencies_hz.to_vec(), snr)?,
    })
}

/// Centered moving mean with shrinking windows at the edges; the output has
/// the input's length. Even windows take one extra point on the left.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if window < 1 || window > values.len() {
        return Err(AnalysisError::InvalidWindow {
            window,
            len: values.len(),
        });
    }
    let n = values.len();
    let before = window / 2;
    let after = (window - 1) / 2;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lo = k.saturating_sub(before);
        let hi = (k + after).min(n - 1);
        let sum: f64 = values[lo..=hi].iter().sum();
        out.push(sum / (hi - lo + 1) as f64);
    }
    Ok(out)
}

/// One line in dB over frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineDb {
    pub intercept_db: f64,
    pub slope_db_per_hz: f64,
}

impl LineDb {
    pub fn value_at(&self, f_hz: f64) -> f64 {
        self.intercept_db + self.slope_db_per_hz * f_hz
    }
}

/// Fitted two-segment SNR trend in dB, connected at `f1_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlModel {
    pub f1_hz: f64,
    pub f2_hz: f64,
    pub f_cutoff_hz: f64,
    /// Trend over [0, f1).
    pub seg1: LineDb,
    /// Trend over [f1, f2], extended beyond f2 for bounds and extrapolation.
    pub seg2: LineDb,
    /// 0 dB crossing of segment 2; populated by [`extrapolate`].
    pub f_ext_hz: Option<f64>,
    /// Set when the smoothed profile never fell below 1 dB before the
    /// cutoff, forcing f2 = f_cutoff.
    pub f2_clamped_to_cutoff: bool,
}

impl PwlModel {
    /// Trend value in dB at `f_hz` (segment 2 extended rightward).
    pub fn snr_db_at(&self, f_hz: f64) -> f64 {
        if f_hz < self.f1_hz {
            self.seg1.value_at(f_hz)
        } else {
            self.seg2.value_at(f_hz)
        }
    }
}

impl SnrFunction for PwlModel {
    fn snr_linear_at(&self, f_hz: f64) -> f64 {
        if f_hz > self.max_frequency() {
            return 0.0;
        }
        10f64.powf(self.snr_db_at(f_hz) / 10.0)
    }

    fn max_frequency(&self) -> f64 {
        self.f_ext_hz.unwrap_or(self.f_cutoff_hz)
    }
}

/// Fits a connected two-segment line to the SNR trend in dB.
///
/// The smoothed profile (window-`window` moving average) only selects f2 —
/// the last frequency at or before the cutoff where it still reaches 1 dB;
/// the least-squares fit itself runs on the raw dB data over [0, f2] for
/// every candidate breakpoint f1 on the profile grid, keeping the residual
/// zero on exactly piecewise-linear inputs.
pub fn pwl_fit(
    profile: &SnrProfile,
    f_cutoff_hz: f64,
    window: usize,
) -> Result<PwlModel, AnalysisError> {
    let freqs = profile.frequencies();
    let step = profile.grid_step();
    let last = *freqs.last().expect("profile non-empty");
    if last < f_cutoff_hz - 1.5 * step {
        return Err(AnalysisError::ProfileDoesNotCoverCutoff {
            last,
            cutoff: f_cutoff_hz,
        });
    }
    // Index of the last grid point at or below the cutoff.
    let cut_idx = freqs
        .iter()
        .rposition(|&f| f <= f_cutoff_hz * (1.0 + 1e-12))
        .ok_or(AnalysisError::NoBreakpointCandidate)?;
    if cut_idx + 1 < 20 {
        return Err(AnalysisError::ProfileTooShort {
            got: cut_idx + 1,
            need: 20,
        });
    }

    // dB view floored at -60 dB so dead subcarriers stay finite.
    let y: Vec<f64> = profile
        .snr_linear()
        .iter()
        .map(|&s| 10.0 * s.max(1e-6).log10())
        .collect();
    let smoothed = moving_average(&y, window.min(y.len()))?;

    let crossing = (0..=cut_idx).rev().find(|&j| smoothed[j] >= 1.0);
    let (j2, f2_clamped) = match crossing {
        Some(j) if j < cut_idx => (j, false),
        // Still >= 1 dB at the cutoff, or never >= 1 dB at all.
        _ => (cut_idx, true),
    };
    let f2_hz = if f2_clamped { f_cutoff_hz } else { freqs[j2] };

    // The smoothing window lags a sharp roll-off, so trailing points that
    // are themselves below the 1 dB usable boundary still slip inside f2;
    // trim them from the fit domain.
    let mut end = j2;
    while end > 0 && y[end] < 1.0 {
        end -= 1;
    }

    // Work in GHz so the normal equations stay well conditioned.
    let fg: Vec<f64> = freqs[..=end].iter().map(|&f| f * 1e-9).collect();
    let yy = &y[..=end];
    if fg.len() < 4 {
        return Err(AnalysisError::NoBreakpointCandidate);
    }

    // Each segment must hold a real share of the data so a couple of outlier
    // points at the domain edge cannot masquerade as a trend segment.
    let min_seg = (fg.len() / 20).max(2);
    let mut best: Option<(f64, usize, [f64; 3])> = None;
    for i in min_seg..=fg.len() - min_seg {
        let f1 = fg[i];
        if let Some(params) = solve_connected_fit(&fg, yy, f1) {
            let sse = fit_sse(&fg, yy, f1, &params);
            let better = match &best {
                Some((best_sse, _, _)) => sse < *best_sse,
                None => true,
            };
            if better {
                best = Some((sse, i, params));
            }
        }
    }
    let (_, i1, [a, b, c]) = best.ok_or(AnalysisError::NoBreakpointCandidate)?;
    let f1_ghz = fg[i1];

    Ok(PwlModel {
        f1_hz: freqs[i1],
        f2_hz,
        f_cutoff_hz,
        seg1: LineDb {
            intercept_db: a,
            slope_db_per_hz: b * 1e-9,
        },
        seg2: LineDb {
            intercept_db: a + (b - c) * f1_ghz,
            slope_db_per_hz: c * 1e-9,
        },
        f_ext_hz: None,
        f2_clamped_to_cutoff: f2_clamped,
    })
}

/// Least squares for y = a + b·min(f, f1) + c·max(f − f1, 0), which is the
/// two-segment line continuous at f1.
fn solve_connected_fit(f: &[f64], y: &[f64], f1: f64) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&fi, &yi) in f.iter().zip(y) {
        let row = [1.0, fi.min(f1), (fi - f1).max(0.0)];
        for r in 0..3 {
            for cidx in 0..3 {
                m[r][cidx] += row[r] * row[cidx];
            }
            rhs[r] += row[r] * yi;
        }
    }
    solve3(m, rhs)
}

fn fit_sse(f: &[f64], y: &[f64], f1: f64, p: &[f64; 3]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&fi, &yi)| {
            let pred = p[0] + p[1] * fi.min(f1) + p[2] * (fi - f1).max(0.0);
            (yi - pred) * (yi - pred)
        })
        .sum()
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let factor = m[row][col] / m[col][col];
                for k in col..3 {
                    m[row][k] -= factor * m[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    Some([b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2]])
}

/// Extends the fitted trend past the cutoff: segment 2 continues its decline
/// until it crosses 0 dB at f_ext, and the SNR is zero beyond.
pub fn extrapolate(model: &PwlModel) -> Result<PwlModel, AnalysisError> {
    if !(model.seg2.slope_db_per_hz < 0.0) {
        return Err(AnalysisError::NonNegativeSlope(model.seg2.slope_db_per_hz));
    }
    let f_ext = -model.seg2.intercept_db / model.seg2.slope_db_per_hz;
    let mut out = model.clone();
    out.f_ext_hz = Some(f_ext);
    Ok(out)
}

/// Fraction of differing bits (Hamming distance over length).
pub fn measure_ber(tx_bits: &[bool], rx_bits: &[bool]) -> Result<f64, AnalysisError> {
    if tx_bits.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if tx_bits.len() != rx_bits.len() {
        return Err(AnalysisError::BitLengthMismatch {
            tx: tx_bits.len(),
            rx: rx_bits.len(),
        });
    }
    let errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// One row of a BER-vs-rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub target_ber: f64,
    pub gamma: f64,
    /// Bits per OFDM frame under the loading plan.
    pub total_bits: u64,
    pub rate_bps: f64,
    pub measured_ber: f64,
    pub seed_count: usize,
}

const SWEEP_PROBE_SEED: u64 = 0x0b5e_0001;
const SWEEP_BITS_SALT: u64 = 0xb175_b175;

/// For each target BER: estimate the channel, run Hughes-Hartogs loading,
/// push 450-frame streams for every seed and record the rate and the
/// measured BER. Rows come back sorted by target.
///
/// A single pilot probe (fixed seed) feeds every target so the achieved
/// rates reflect the gap alone and stay monotone in the target BER.
pub fn ber_rate_sweep(
    preset: &LinkPreset,
    model: &VcselModel,
    cfg: &OfdmConfig,
    ber_targets: &[f64],
    seeds: &[u64],
    power_budget: f64,
    b_max: u32,
) -> Result<Vec<SweepRow>, AnalysisError> {
    if ber_targets.is_empty() || seeds.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut targets = ber_targets.to_vec();
    targets.sort_by(f64::total_cmp);

    let annotate = |target_ber: f64, message: String| AnalysisError::SweepFailed {
        target_ber,
        message,
    };

    let probe = modem::pilot_probe(preset, model, cfg, SWEEP_PROBE_SEED)
        .map_err(|e| annotate(targets[0], format!("channel probe: {e}")))?;

    let mut rows = Vec::with_capacity(targets.len());
    for &target in &targets {
        let gap = loading::snr_gap(target).map_err(|e| annotate(target, e.to_string()))?;
        let plan = loading::hughes_hartogs(probe.snr(), &gap, power_budget, b_max, cfg)
            .map_err(|e| annotate(target, e.to_string()))?;
        let bits_per_stream = (modem::DATA_FRAMES as u64 * plan.total_bits()) as usize;

        let mut errors = 0u64;
        let mut compared = 0u64;
        if bits_per_stream > 0 {
            for &seed in seeds {
                let bits = random_bits(bits_per_stream, seed ^ SWEEP_BITS_SALT);
                let report = modem::run_stream(&bits, &plan, preset, model, cfg, seed)
                    .map_err(|e| annotate(target, e.to_string()))?;
                errors += report.bit_errors as u64;
                compared += report.bits_compared as u64;
            }
        }
        rows.push(SweepRow {
            target_ber: target,
            gamma: gap.gamma,
            total_bits: plan.total_bits(),
            rate_bps: plan.rate_bps(),
            measured_ber: if compared > 0 {
                errors as f64 / compared as f64
            } else {
                0.0
            },
            seed_count: seeds.len(),
        });
    }
    Ok(rows)
}

/// Deterministic pseudo-random bit sequence.
pub fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// Anchor frequencies and levels for a synthetic SNR trend on the subcarrier
/// grid: two connected dB segments, segment 2 aimed at a 0 dB crossing at
/// `f_ext_hz`, a cliff to the noise floor right after `f2_hz`, and a deeper
/// floor past `f_cutoff_hz`.
#[derive(Debug, Clone, Copy)]
pub struct TrendAnchors {
    pub f1_hz: f64,
    pub f2_hz: f64,
    pub f_cutoff_hz: f64,
    pub f_ext_hz: f64,
    /// Segment-2 level at f2, dB; fixes the slope via the f_ext crossing.
    pub snr_at_f2_db: f64,
    /// Extra dB of segment-1 level at DC above the segment-2 line.
    pub dc_offset_db: f64,
}

impl TrendAnchors {
    /// Anchors of the Config-I link trend; the f2 level makes the integral
    /// rate bound at the 11 GHz cutoff meet the measured 72 Gb/s at a target
    /// BER of 3.3e-2.
    pub fn config_i() -> Self {
        Self {
            f1_hz: 2.38e9,
            f2_hz: 10.80e9,
            f_cutoff_hz: 11e9,
            f_ext_hz: 23.26e9,
            snr_at_f2_db: 14.39,
            dc_offset_db: 2.0,
        }
    }

    /// Anchors of the Config-II link trend (71.6 Gb/s at BER 3.1e-2).
    pub fn config_ii() -> Self {
        Self {
            f1_hz: 3.00e9,
            f2_hz: 10.80e9,
            f_cutoff_hz: 11e9,
            f_ext_hz: 24.36e9,
            snr_at_f2_db: 14.85,
            dc_offset_db: 2.0,
        }
    }
}

/// Noise floor between f2 and the cutoff, dB. Deep enough that a window-10
/// moving average falls below 1 dB one grid step after f2 even when a
/// pilot estimate of the profile sits a couple of dB above the true floor.
const TREND_FLOOR_DB: f64 = -18.0;
const TREND_STOP_DB: f64 = -35.0;

/// Builds the synthetic SNR profile described by `anchors` on the subcarrier
/// grid of `cfg`.
pub fn synthetic_snr_trend(cfg: &OfdmConfig, anchors: &TrendAnchors) -> SnrProfile {
    let slope2 = -anchors.snr_at_f2_db / (anchors.f_ext_hz - anchors.f2_hz);
    let level2_at = |f: f64| slope2 * (f - anchors.f_ext_hz);
    let y0 = level2_at(anchors.f1_hz) + anchors.dc_offset_db;
    let frequencies = cfg.subcarrier_frequencies();
    let snr: Vec<f64> = frequencies
        .iter()
        .map(|&f| {
            let db = if f < anchors.f1_hz {
                y0 + (level2_at(anchors.f1_hz) - y0) * f / anchors.f1_hz
            } else if f <= anchors.f2_hz {
                level2_at(f)
            } else if f <= anchors.f_cutoff_hz {
                TREND_FLOOR_DB
            } else {
                TREND_STOP_DB
            };
            10f64.powf(db / 10.0)
        })
        .collect();
    SnrProfile::new(frequencies, snr).expect("subcarrier grid is uniform")
}
