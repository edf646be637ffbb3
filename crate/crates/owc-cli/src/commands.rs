//! Subcommand implementations. Each returns the files it wrote or a
//! [`CommandError`] that main maps onto the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use owc_core::analysis::{self, TrendAnchors};
use owc_core::channel::{self, LinkPreset};
use owc_core::fiber::{self, FiberParams, SpectrumRecord};
use owc_core::loading::{self, SnrFunction, SnrProfile};
use owc_core::modem;

use crate::config::{CalibrationMode, ExperimentConfig};
use crate::tables;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Runtime(_) => 3,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CommandError {
    CommandError::Runtime(e.to_string())
}

fn read_file(path: &Path) -> Result<String, CommandError> {
    fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CommandError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Applies the configured calibration mode to the preset.
fn calibrated_preset(cfg: &ExperimentConfig) -> Result<LinkPreset, CommandError> {
    let target = match cfg.calibration {
        CalibrationMode::None => return Ok(cfg.preset.clone()),
        CalibrationMode::PaperTrend => {
            let anchors = if cfg.preset.name == "Config-II" {
                TrendAnchors::config_ii()
            } else {
                TrendAnchors::config_i()
            };
            analysis::synthetic_snr_trend(&cfg.ofdm, &anchors)
        }
        CalibrationMode::Flat20Db => SnrProfile::new(
            cfg.ofdm.subcarrier_frequencies(),
            vec![100.0; cfg.ofdm.n_sc()],
        )
        .map_err(runtime)?,
    };
    let (preset, report) =
        channel::calibrate_noise(&cfg.preset, &target, &cfg.vcsel, &cfg.ofdm).map_err(runtime)?;
    eprintln!(
        "calibrated {} against {:?}: mean |error| {:.2} dB, {} unreachable subcarriers",
        cfg.preset.name,
        cfg.calibration,
        report.mean_abs_error_db,
        report.unreachable.len()
    );
    Ok(preset)
}

/// simulate: estimate the channel, load every target, run the measurement
/// streams and emit snr_profile.csv, loading_plan.csv and ber_rate.csv.
pub fn cmd_simulate(cfg: &ExperimentConfig, noiseless: bool) -> Result<Vec<PathBuf>, CommandError> {
    let preset = if noiseless {
        LinkPreset::noiseless()
    } else {
        calibrated_preset(cfg)?
    };

    let probe_seed = cfg.seeds[0];
    let estimate =
        modem::pilot_probe(&preset, &cfg.vcsel, &cfg.ofdm, probe_seed).map_err(runtime)?;
    let profile = estimate.snr();

    let mut targets = cfg.target_ber.clone();
    targets.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(targets.len());
    let mut first_plan = None;
    for &target in &targets {
        let gap = loading::snr_gap(target).map_err(runtime)?;
        let plan = loading::hughes_hartogs(profile, &gap, cfg.power_budget, cfg.b_max, &cfg.ofdm)
            .map_err(runtime)?;
        let bits_per_stream = modem::DATA_FRAMES * plan.total_bits() as usize;
        let mut errors = 0usize;
        let mut compared = 0usize;
        if bits_per_stream > 0 {
            for &seed in &cfg.seeds {
                let bits = analysis::random_bits(bits_per_stream, seed.wrapping_add(0x0b17));
                let report =
                    modem::run_stream(&bits, &plan, &preset, &cfg.vcsel, &cfg.ofdm, seed)
                        .map_err(|e| {
                            CommandError::Runtime(format!("target {target}, seed {seed}: {e}"))
                        })?;
                if report.clipping_warning {
                    eprintln!(
                        "warning: target {target}, seed {seed}: {:.1}% of drive samples clipped",
                        100.0 * report.clipped_fraction
                    );
                }
                errors += report.bit_errors;
                compared += report.bits_compared;
            }
        }
        rows.push(analysis::SweepRow {
            target_ber: target,
            gamma: gap.gamma,
            total_bits: plan.total_bits(),
            rate_bps: plan.rate_bps(),
            measured_ber: if compared > 0 {
                errors as f64 / compared as f64
            } else {
                0.0
            },
            seed_count: cfg.seeds.len(),
        });
        if first_plan.is_none() {
            first_plan = Some(plan);
        }
    }

    let dir = &cfg.output_dir;
    let mut written = Vec::new();
    written.push(write_file(
        dir,
        "snr_profile.csv",
        &tables::emit_snr_profile(profile),
    )?);
    // The plan file documents the lowest configured target BER.
    let plan = first_plan.expect("at least one target");
    written.push(write_file(
        dir,
        "loading_plan.csv",
        &tables::emit_loading_plan(&plan, profile),
    )?);
    written.push(write_file(dir, "ber_rate.csv", &tables::emit_ber_rate(&rows))?);
    Ok(written)
}

/// extrapolate: fit the two-segment trend to a stored SNR profile, extend it
/// past the cutoff and emit pwl_model.csv and rate_bounds.csv.
pub fn cmd_extrapolate(
    cfg: &ExperimentConfig,
    profile_path: &Path,
) -> Result<Vec<PathBuf>, CommandError> {
    let profile = tables::parse_snr_profile(&read_file(profile_path)?).map_err(runtime)?;
    let fitted =
        analysis::pwl_fit(&profile, cfg.f_cutoff_hz, cfg.window).map_err(runtime)?;

    let extrapolated = match analysis::extrapolate(&fitted) {
        Ok(model) => Some(model),
        Err(e) => {
            eprintln!("fit is not extrapolatable: {e}; writing cutoff bounds only");
            None
        }
    };
    let model = extrapolated.as_ref().unwrap_or(&fitted);

    let mut targets = cfg.target_ber.clone();
    targets.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(targets.len());
    for &target in &targets {
        let gap = loading::snr_gap(target).map_err(runtime)?;
        let bound_cutoff_bps =
            loading::rate_bound_integral(&fitted, cfg.f_cutoff_hz, &gap).map_err(runtime)?;
        let bound_ext_bps = match &extrapolated {
            Some(ext) => Some(
                loading::rate_bound_integral(ext, ext.max_frequency(), &gap).map_err(runtime)?,
            ),
            None => None,
        };
        rows.push(tables::RateBoundRow {
            target_ber: target,
            gamma: gap.gamma,
            bound_cutoff_bps,
            bound_ext_bps,
        });
    }

    let dir = &cfg.output_dir;
    let written = vec![
        write_file(dir, "pwl_model.csv", &tables::emit_pwl_model(model))?,
        write_file(dir, "rate_bounds.csv", &tables::emit_rate_bounds(&rows))?,
    ];
    if let Some(ext) = &extrapolated {
        eprintln!(
            "fit: f1 = {:.4} GHz, f2 = {:.4} GHz, f_ext = {:.4} GHz",
            ext.f1_hz / 1e9,
            ext.f2_hz / 1e9,
            ext.f_ext_hz.unwrap_or(f64::NAN) / 1e9
        );
    }
    Ok(written)
}

/// loadplan: run the bit/power loader over a stored profile at one target.
pub fn cmd_loadplan(
    cfg: &ExperimentConfig,
    profile_path: &Path,
    target_ber: f64,
) -> Result<Vec<PathBuf>, CommandError> {
    let profile = tables::parse_snr_profile(&read_file(profile_path)?).map_err(runtime)?;
    let gap = loading::snr_gap(target_ber).map_err(runtime)?;
    let plan = loading::hughes_hartogs(&profile, &gap, cfg.power_budget, cfg.b_max, &cfg.ofdm)
        .map_err(runtime)?;
    eprintln!(
        "loaded {} bits/frame -> {:.3} Gb/s at target BER {target_ber}",
        plan.total_bits(),
        plan.rate_bps() / 1e9
    );
    Ok(vec![write_file(
        &cfg.output_dir,
        "loading_plan.csv",
        &tables::emit_loading_plan(&plan, &profile),
    )?])
}

/// estimate: one-tap channel estimation from stored tx/rx waveforms.
pub fn cmd_estimate(
    cfg: &ExperimentConfig,
    tx_path: &Path,
    rx_path: &Path,
) -> Result<Vec<PathBuf>, CommandError> {
    let tx = tables::parse_samples(&read_file(tx_path)?, "tx").map_err(runtime)?;
    let rx = tables::parse_samples(&read_file(rx_path)?, "rx").map_err(runtime)?;
    let flen = cfg.ofdm.frame_len();
    let frames = (tx.len() / flen).min(modem::PILOT_FRAMES);
    if frames < 2 {
        return Err(CommandError::Runtime(format!(
            "need at least 2 whole frames ({} samples), got {} samples",
            2 * flen,
            tx.len()
        )));
    }

    let offset = modem::synchronize(&rx, &tx[..frames * flen]).map_err(runtime)?;
    if rx.len() < offset + frames * flen {
        return Err(CommandError::Runtime(format!(
            "rx too short: {} samples after offset {offset}, need {}",
            rx.len() - offset,
            frames * flen
        )));
    }

    let ones = vec![owc_core::Complex64::new(1.0, 0.0); cfg.ofdm.n_sc()];
    let mut tx_frames = Vec::with_capacity(frames);
    let mut rx_frames = Vec::with_capacity(frames);
    for i in 0..frames {
        let tx_block = &tx[i * flen..(i + 1) * flen];
        let rx_block = &rx[offset + i * flen..offset + (i + 1) * flen];
        tx_frames.push(modem::demodulate_frame(tx_block, &ones, &cfg.ofdm).map_err(runtime)?);
        rx_frames.push(modem::demodulate_frame(rx_block, &ones, &cfg.ofdm).map_err(runtime)?);
    }
    let estimate = analysis::estimate_channel(
        &tx_frames,
        &rx_frames,
        &cfg.ofdm.subcarrier_frequencies(),
    )
    .map_err(runtime)?;
    eprintln!("estimated {frames} frames at offset {offset}");
    Ok(vec![write_file(
        &cfg.output_dir,
        "snr_profile.csv",
        &tables::emit_snr_profile(estimate.snr()),
    )?])
}

/// Inputs for the fiber dispersion report.
pub struct FiberArgs {
    pub d_ps_per_nm_km: f64,
    pub sigma_lambda_nm: Option<f64>,
    pub spectrum: Option<PathBuf>,
    pub emb_mhz_km: f64,
    pub alpha_db_per_km: f64,
    pub length_km: f64,
    pub bandwidth_hz: f64,
    pub csv: Option<PathBuf>,
}

/// fiber: closed-form dispersion budget, printed as aligned key-value text;
/// optionally also as CSV.
pub fn cmd_fiber(args: &FiberArgs) -> Result<String, CommandError> {
    let (sigma_lambda_nm, spectrum_line) = match (&args.spectrum, args.sigma_lambda_nm) {
        (Some(path), _) => {
            let record = SpectrumRecord::from_text(&read_file(path)?).map_err(runtime)?;
            let (mean, rms) = fiber::rms_spectral_width(&record);
            (rms, Some((mean, rms)))
        }
        (None, Some(sigma)) => (sigma, None),
        (None, None) => {
            return Err(CommandError::Config(
                "either --sigma-lambda or --spectrum is required".into(),
            ))
        }
    };

    let params = FiberParams {
        d_ps_per_nm_km: args.d_ps_per_nm_km,
        sigma_lambda_nm,
        emb_mhz_km: args.emb_mhz_km,
        alpha_db_per_km: args.alpha_db_per_km,
        length_km: args.length_km,
    };
    let report = fiber::dispersion_report(&params, args.bandwidth_hz).map_err(runtime)?;

    let mut out = String::new();
    if let Some((mean, rms)) = spectrum_line {
        out.push_str(&format!("mean_wavelength      {mean:.4} nm\n"));
        out.push_str(&format!("rms_spectral_width   {rms:.4} nm\n"));
    }
    out.push_str(&format!("sigma_cd             {:.6} ps\n", report.sigma_cd_ps));
    out.push_str(&format!("sigma_md             {:.6} ps\n", report.sigma_md_ps));
    out.push_str(&format!("sigma_total          {:.6} ps\n", report.sigma_total_ps));
    out.push_str(&format!(
        "f3db_cd              {} THz\n",
        format_thz(report.f3db_cd_hz)
    ));
    out.push_str(&format!(
        "f3db_md              {} THz\n",
        format_thz(report.f3db_md_hz)
    ));
    out.push_str(&format!(
        "f3db                 {} THz\n",
        format_thz(report.f3db_hz)
    ));
    out.push_str(&format!(
        "attenuation          {:.6e} dB\n",
        report.attenuation_db
    ));
    out.push_str(&format!(
        "l_max                {:.4} m (at B = {} GHz)\n",
        report.l_max_km * 1e3,
        args.bandwidth_hz / 1e9
    ));

    if let Some(csv_path) = &args.csv {
        let csv = format!(
            "sigma_cd_ps,sigma_md_ps,sigma_total_ps,f3db_cd_hz,f3db_md_hz,f3db_hz,attenuation_db,l_max_km\n{},{},{},{},{},{},{},{}\n",
            report.sigma_cd_ps,
            report.sigma_md_ps,
            report.sigma_total_ps,
            report.f3db_cd_hz,
            report.f3db_md_hz,
            report.f3db_hz,
            report.attenuation_db,
            report.l_max_km
        );
        if let Some(parent) = csv_path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(runtime)?;
            }
        }
        fs::write(csv_path, csv).map_err(runtime)?;
    }
    Ok(out)
}

fn format_thz(f_hz: f64) -> String {
    if f_hz.is_infinite() {
        "inf".to_string()
    } else {
        format!("{:.4}", f_hz / 1e12)
    }
}
