//! Experiment configuration: a flat sectioned TOML document with paper
//! defaults for every omitted key and rejection of unknown keys.

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use owc_core::channel::{LinkPreset, ResponseStage, VcselModel};
use owc_core::modem::OfdmConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error at {path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    seeds: Option<Vec<u64>>,
    output_dir: Option<PathBuf>,
    ofdm: OfdmSection,
    preset: PresetSection,
    vcsel: VcselSection,
    loading: LoadingSection,
    analysis: AnalysisSection,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct OfdmSection {
    n_fft: Option<usize>,
    n_cp: Option<usize>,
    rolloff: Option<f64>,
    sample_rate_hz: Option<f64>,
    n_sps: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct PresetSection {
    name: Option<String>,
    v_dc: Option<f64>,
    i_dc_ma: Option<f64>,
    p_t_mw: Option<f64>,
    p_r_uw: Option<f64>,
    drive_scale_ma: Option<f64>,
    noise_std: Option<f64>,
    responsivity_a_per_w: Option<f64>,
    stages: Option<Vec<StageConfig>>,
    calibration: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum StageConfig {
    SecondOrderLowpass {
        f_resonance_hz: f64,
        damping: f64,
        #[serde(default = "unit_gain")]
        gain: f64,
    },
    FirstOrderLowpass {
        f_3db_hz: f64,
        #[serde(default = "unit_gain")]
        gain: f64,
    },
    Brickwall {
        cutoff_hz: f64,
    },
    SinusoidalRipple {
        amplitude_db: f64,
        period_hz: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    GainProfile {
        frequencies_hz: Vec<f64>,
        gains: Vec<f64>,
    },
}

fn unit_gain() -> f64 {
    1.0
}

impl From<StageConfig> for ResponseStage {
    fn from(stage: StageConfig) -> Self {
        match stage {
            StageConfig::SecondOrderLowpass {
                f_resonance_hz,
                damping,
                gain,
            } => ResponseStage::SecondOrderLowpass {
                f_resonance_hz,
                damping,
                gain,
            },
            StageConfig::FirstOrderLowpass { f_3db_hz, gain } => {
                ResponseStage::FirstOrderLowpass { f_3db_hz, gain }
            }
            StageConfig::Brickwall { cutoff_hz } => ResponseStage::Brickwall { cutoff_hz },
            StageConfig::SinusoidalRipple {
                amplitude_db,
                period_hz,
                phase_rad,
            } => ResponseStage::SinusoidalRippleDb {
                amplitude_db,
                period_hz,
                phase_rad,
            },
            StageConfig::GainProfile {
                frequencies_hz,
                gains,
            } => ResponseStage::GainProfile {
                frequencies_hz,
                gains,
            },
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct VcselSection {
    i_threshold_ma: Option<f64>,
    slope_w_per_a: Option<f64>,
    i_rollover_ma: Option<f64>,
    p_max_mw: Option<f64>,
    linear_range_ma: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct LoadingSection {
    target_ber: Option<Vec<f64>>,
    power_budget: Option<f64>,
    b_max: Option<u32>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct AnalysisSection {
    window: Option<usize>,
    f_cutoff_hz: Option<f64>,
}

/// How the preset's noise and per-frequency gains are set before a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Use the preset's noise_std and stages as configured.
    None,
    /// Calibrate against the anchored link trend matching the preset name.
    PaperTrend,
    /// Calibrate against a flat 20 dB target.
    Flat20Db,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub ofdm: OfdmConfig,
    pub preset: LinkPreset,
    pub vcsel: VcselModel,
    pub calibration: CalibrationMode,
    pub target_ber: Vec<f64>,
    pub power_budget: f64,
    pub b_max: u32,
    pub window: usize,
    pub f_cutoff_hz: f64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

/// Parses and validates a TOML config document; omitted keys fall back to
/// the measured-link defaults, unknown keys are rejected by name.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let ofdm = OfdmConfig::new(
        raw.ofdm.n_fft.unwrap_or(1024),
        raw.ofdm.n_cp.unwrap_or(15),
        raw.ofdm.rolloff.unwrap_or(0.1),
        raw.ofdm.sample_rate_hz.unwrap_or(32e9),
        raw.ofdm.n_sps.unwrap_or(1),
    )
    .map_err(|e| invalid("ofdm", e.to_string()))?;

    let mut vcsel = VcselModel::default();
    if let Some(v) = raw.vcsel.i_threshold_ma {
        vcsel.i_threshold_ma = v;
    }
    if let Some(v) = raw.vcsel.slope_w_per_a {
        vcsel.slope_w_per_a = v;
    }
    if let Some(v) = raw.vcsel.i_rollover_ma {
        vcsel.i_rollover_ma = v;
    }
    if let Some(v) = raw.vcsel.p_max_mw {
        vcsel.p_max_mw = v;
    }
    if let Some([lo, hi]) = raw.vcsel.linear_range_ma {
        vcsel.linear_range_ma = (lo, hi);
    }
    vcsel
        .validate()
        .map_err(|e| invalid("vcsel", e.to_string()))?;

    let name = raw.preset.name.unwrap_or_else(|| "Config-I".to_string());
    let mut preset = match name.as_str() {
        "Config-I" => LinkPreset::config_i(),
        "Config-II" => LinkPreset::config_ii(),
        "noiseless" => LinkPreset::noiseless(),
        "custom" => LinkPreset {
            name: "custom".into(),
            ..LinkPreset::config_i()
        },
        other => {
            return Err(invalid(
                "preset.name",
                format!("unknown preset {other:?} (expected Config-I, Config-II, noiseless or custom)"),
            ))
        }
    };
    if let Some(v) = raw.preset.v_dc {
        preset.v_dc = v;
    }
    if let Some(v) = raw.preset.i_dc_ma {
        preset.i_dc_ma = v;
    }
    if let Some(v) = raw.preset.p_t_mw {
        preset.p_t_mw = v;
    }
    if let Some(v) = raw.preset.p_r_uw {
        preset.p_r_uw = v;
    }
    if let Some(v) = raw.preset.drive_scale_ma {
        preset.drive_scale_ma = v;
    }
    if let Some(v) = raw.preset.noise_std {
        preset.noise_std = v;
    }
    if let Some(v) = raw.preset.responsivity_a_per_w {
        preset.responsivity_a_per_w = v;
    }
    if let Some(stages) = raw.preset.stages {
        preset.response_stages = stages.into_iter().map(ResponseStage::from).collect();
    }
    preset
        .validate(&vcsel)
        .map_err(|e| invalid("preset", e.to_string()))?;

    let calibration = match raw.preset.calibration.as_deref() {
        None | Some("none") => CalibrationMode::None,
        Some("paper-trend") => CalibrationMode::PaperTrend,
        Some("flat-20db") => CalibrationMode::Flat20Db,
        Some(other) => {
            return Err(invalid(
                "preset.calibration",
                format!("unknown mode {other:?} (expected none, paper-trend or flat-20db)"),
            ))
        }
    };
    if calibration == CalibrationMode::PaperTrend && !name.starts_with("Config-") {
        return Err(invalid(
            "preset.calibration",
            "paper-trend calibration needs preset Config-I or Config-II",
        ));
    }

    let target_ber = raw
        .loading
        .target_ber
        .unwrap_or_else(|| vec![3.8e-3, 1e-2, 3.1e-2, 3.3e-2, 5.6e-2]);
    if target_ber.is_empty() {
        return Err(invalid("loading.target_ber", "must not be empty"));
    }
    for &t in &target_ber {
        if !(t > 0.0 && t < 0.2) {
            return Err(invalid(
                "loading.target_ber",
                format!("{t} outside (0, 0.2)"),
            ));
        }
    }
    let power_budget = raw
        .loading
        .power_budget
        .unwrap_or(ofdm.n_sc() as f64);
    if !(power_budget > 0.0) {
        return Err(invalid("loading.power_budget", "must be positive"));
    }
    let b_max = raw.loading.b_max.unwrap_or(10);
    if !(1..=10).contains(&b_max) {
        return Err(invalid("loading.b_max", "must lie in 1..=10"));
    }

    let window = raw.analysis.window.unwrap_or(10);
    if window < 1 {
        return Err(invalid("analysis.window", "must be >= 1"));
    }
    let f_cutoff_hz = raw.analysis.f_cutoff_hz.unwrap_or(11e9);
    if !(f_cutoff_hz > 0.0) {
        return Err(invalid("analysis.f_cutoff_hz", "must be positive"));
    }

    let seeds = raw.seeds.unwrap_or_else(|| vec![1]);
    if seeds.is_empty() {
        return Err(invalid("seeds", "must not be empty"));
    }

    Ok(ExperimentConfig {
        ofdm,
        preset,
        vcsel,
        calibration,
        target_ber,
        power_budget,
        b_max,
        window,
        f_cutoff_hz,
        seeds,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
    })
}
