//! CSV schemas for every emitted table.
//!
//! Numbers are written in Rust's shortest round-trip decimal form, so
//! parse(emit(x)) == x bit-for-bit and repeated runs produce byte-identical
//! files.

use thiserror::Error;

use owc_core::analysis::{LineDb, PwlModel, SweepRow};
use owc_core::loading::{LoadingPlan, SnrProfile};
use owc_core::modem::OfdmConfig;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{file} line {line}: {reason}")]
    Malformed {
        file: &'static str,
        line: usize,
        reason: String,
    },
    #[error("{file}: unexpected header {got:?}")]
    Header { file: &'static str, got: String },
    #[error("invalid profile: {0}")]
    Profile(#[from] owc_core::loading::LoadingError),
}

fn split_line(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_field<T: std::str::FromStr>(
    file: &'static str,
    line: usize,
    field: &str,
) -> Result<T, TableError> {
    field.parse().map_err(|_| TableError::Malformed {
        file,
        line,
        reason: format!("invalid value {field:?}"),
    })
}

// --- snr_profile.csv -------------------------------------------------------

pub const SNR_PROFILE_HEADER: &str = "subcarrier_index,frequency_hz,snr_linear,snr_db";

pub fn emit_snr_profile(profile: &SnrProfile) -> String {
    let mut out = String::from(SNR_PROFILE_HEADER);
    out.push('\n');
    for (k, (&f, &s)) in profile
        .frequencies()
        .iter()
        .zip(profile.snr_linear())
        .enumerate()
    {
        let db = 10.0 * s.max(1e-30).log10();
        out.push_str(&format!("{},{},{},{}\n", k + 1, f, s, db));
    }
    out
}

pub fn parse_snr_profile(text: &str) -> Result<SnrProfile, TableError> {
    const FILE: &str = "snr_profile.csv";
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != SNR_PROFILE_HEADER {
        return Err(TableError::Header {
            file: FILE,
            got: header.to_string(),
        });
    }
    let mut frequencies = Vec::new();
    let mut snr = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 4 {
            return Err(TableError::Malformed {
                file: FILE,
                line: idx + 2,
                reason: format!("expected 4 columns, got {}", fields.len()),
            });
        }
        frequencies.push(parse_field(FILE, idx + 2, fields[1])?);
        snr.push(parse_field(FILE, idx + 2, fields[2])?);
    }
    Ok(SnrProfile::new(frequencies, snr)?)
}

// --- loading_plan.csv ------------------------------------------------------

pub const LOADING_PLAN_HEADER: &str = "subcarrier_index,frequency_hz,snr_db,bits,power_scale";

pub fn emit_loading_plan(plan: &LoadingPlan, profile: &SnrProfile) -> String {
    let mut out = String::from(LOADING_PLAN_HEADER);
    out.push('\n');
    for k in 0..plan.n_subcarriers() {
        let db = 10.0 * profile.snr_linear()[k].max(1e-30).log10();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            k + 1,
            profile.frequencies()[k],
            db,
            plan.bits()[k],
            plan.power_scales()[k]
        ));
    }
    out
}

/// Returns the plan plus the frequency and snr_db columns it was written
/// with.
pub fn parse_loading_plan(
    text: &str,
    cfg: &OfdmConfig,
) -> Result<(LoadingPlan, Vec<f64>, Vec<f64>), TableError> {
    const FILE: &str = "loading_plan.csv";
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != LOADING_PLAN_HEADER {
        return Err(TableError::Header {
            file: FILE,
            got: header.to_string(),
        });
    }
    let mut frequencies = Vec::new();
    let mut snr_db = Vec::new();
    let mut bits = Vec::new();
    let mut power = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 5 {
            return Err(TableError::Malformed {
                file: FILE,
                line: idx + 2,
                reason: format!("expected 5 columns, got {}", fields.len()),
            });
        }
        frequencies.push(parse_field(FILE, idx + 2, fields[1])?);
        snr_db.push(parse_field(FILE, idx + 2, fields[2])?);
        bits.push(parse_field::<u8>(FILE, idx + 2, fields[3])?);
        power.push(parse_field(FILE, idx + 2, fields[4])?);
    }
    Ok((LoadingPlan::from_parts(bits, power, cfg), frequencies, snr_db))
}

// --- ber_rate.csv ----------------------------------------------------------

pub const BER_RATE_HEADER: &str = "target_ber,gamma,total_bits,rate_bps,measured_ber,seed_count";

pub fn emit_ber_rate(rows: &[SweepRow]) -> String {
    let mut out = String::from(BER_RATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.target_ber, r.gamma, r.total_bits, r.rate_bps, r.measured_ber, r.seed_count
        ));
    }
    out
}

pub fn parse_ber_rate(text: &str) -> Result<Vec<SweepRow>, TableError> {
    const FILE: &str = "ber_rate.csv";
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != BER_RATE_HEADER {
        return Err(TableError::Header {
            file: FILE,
            got: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 6 {
            return Err(TableError::Malformed {
                file: FILE,
                line: idx + 2,
                reason: format!("expected 6 columns, got {}", fields.len()),
            });
        }
        rows.push(SweepRow {
            target_ber: parse_field(FILE, idx + 2, fields[0])?,
            gamma: parse_field(FILE, idx + 2, fields[1])?,
            total_bits: parse_field(FILE, idx + 2, fields[2])?,
            rate_bps: parse_field(FILE, idx + 2, fields[3])?,
            measured_ber: parse_field(FILE, idx + 2, fields[4])?,
            seed_count: parse_field(FILE, idx + 2, fields[5])?,
        });
    }
    Ok(rows)
}

// --- pwl_model.csv ---------------------------------------------------------

pub const PWL_MODEL_HEADER: &str = "f1_hz,f2_hz,f_cutoff_hz,seg1_intercept_db,seg1_slope_db_per_hz,seg2_intercept_db,seg2_slope_db_per_hz,f_ext_hz,f2_clamped";

pub fn emit_pwl_model(model: &PwlModel) -> String {
    let f_ext = model
        .f_ext_hz
        .map(|v| format!("{v}"))
        .unwrap_or_default();
    format!(
        "{PWL_MODEL_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
        model.f1_hz,
        model.f2_hz,
        model.f_cutoff_hz,
        model.seg1.intercept_db,
        model.seg1.slope_db_per_hz,
        model.seg2.intercept_db,
        model.seg2.slope_db_per_hz,
        f_ext,
        model.f2_clamped_to_cutoff
    )
}

pub fn parse_pwl_model(text: &str) -> Result<PwlModel, TableError> {
    const FILE: &str = "pwl_model.csv";
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != PWL_MODEL_HEADER {
        return Err(TableError::Header {
            file: FILE,
            got: header.to_string(),
        });
    }
    let line = lines
        .find(|l| !l.trim().is_empty())
        .ok_or(TableError::Malformed {
            file: FILE,
            line: 2,
            reason: "missing data row".into(),
        })?;
    let fields = split_line(line);
    if fields.len() != 9 {
        return Err(TableError::Malformed {
            file: FILE,
            line: 2,
            reason: format!("expected 9 columns, got {}", fields.len()),
        });
    }
    let f_ext_hz = if fields[7].is_empty() {
        None
    } else {
        Some(parse_field(FILE, 2, fields[7])?)
    };
    Ok(PwlModel {
        f1_hz: parse_field(FILE, 2, fields[0])?,
        f2_hz: parse_field(FILE, 2, fields[1])?,
        f_cutoff_hz: parse_field(FILE, 2, fields[2])?,
        seg1: LineDb {
            intercept_db: parse_field(FILE, 2, fields[3])?,
            slope_db_per_hz: parse_field(FILE, 2, fields[4])?,
        },
        seg2: LineDb {
            intercept_db: parse_field(FILE, 2, fields[5])?,
            slope_db_per_hz: parse_field(FILE, 2, fields[6])?,
        },
        f_ext_hz,
        f2_clamped_to_cutoff: parse_field(FILE, 2, fields[8])?,
    })
}

// --- rate_bounds.csv -------------------------------------------------------

pub const RATE_BOUNDS_HEADER: &str = "target_ber,gamma,bound_cutoff_bps,bound_ext_bps";

#[derive(Debug, Clone, PartialEq)]
pub struct RateBoundRow {
    pub target_ber: f64,
    pub gamma: f64,
    pub bound_cutoff_bps: f64,
    /// Absent when the fit was not extrapolatable.
    pub bound_ext_bps: Option<f64>,
}

pub fn emit_rate_bounds(rows: &[RateBoundRow]) -> String {
    let mut out = String::from(RATE_BOUNDS_HEADER);
    out.push('\n');
    for r in rows {
        let ext = r.bound_ext_bps.map(|v| format!("{v}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.target_ber, r.gamma, r.bound_cutoff_bps, ext
        ));
    }
    out
}

pub fn parse_rate_bounds(text: &str) -> Result<Vec<RateBoundRow>, TableError> {
    const FILE: &str = "rate_bounds.csv";
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != RATE_BOUNDS_HEADER {
        return Err(TableError::Header {
            file: FILE,
            got: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 4 {
            return Err(TableError::Malformed {
                file: FILE,
                line: idx + 2,
                reason: format!("expected 4 columns, got {}", fields.len()),
            });
        }
        let bound_ext_bps = if fields[3].is_empty() {
            None
        } else {
            Some(parse_field(FILE, idx + 2, fields[3])?)
        };
        rows.push(RateBoundRow {
            target_ber: parse_field(FILE, idx + 2, fields[0])?,
            gamma: parse_field(FILE, idx + 2, fields[1])?,
            bound_cutoff_bps: parse_field(FILE, idx + 2, fields[2])?,
            bound_ext_bps,
        });
    }
    Ok(rows)
}

// --- waveform sample files -------------------------------------------------

/// One sample per line, `#` starting a comment.
pub fn parse_samples(text: &str, file: &'static str) -> Result<Vec<f64>, TableError> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        samples.push(parse_field(file, idx + 1, line)?);
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use owc_core::loading::{self, GapParams};

    fn sample_profile(n: usize) -> SnrProfile {
        let freqs: Vec<f64> = (1..=n).map(|k| k as f64 * 31.25e6).collect();
        let snr: Vec<f64> = (0..n).map(|k| 300.0 / (1.0 + k as f64 * 0.37)).collect();
        SnrProfile::new(freqs, snr).unwrap()
    }

    #[test]
    fn snr_profile_round_trips() {
        let profile = sample_profile(64);
        let parsed = parse_snr_profile(&emit_snr_profile(&profile)).unwrap();
        assert_eq!(parsed, profile);
    }

    #[test]
    fn loading_plan_round_trips() {
        let cfg = OfdmConfig::new(128, 4, 0.1, 1e9, 1).unwrap();
        let profile = sample_profile(cfg.n_sc());
        let gap = GapParams {
            target_ber: 1e-2,
            gamma: 2.0,
        };
        let plan =
            loading::hughes_hartogs(&profile, &gap, cfg.n_sc() as f64, 10, &cfg).unwrap();
        let text = emit_loading_plan(&plan, &profile);
        let (parsed, freqs, _) = parse_loading_plan(&text, &cfg).unwrap();
        assert_eq!(parsed, plan);
        assert_eq!(freqs, profile.frequencies());
    }

    #[test]
    fn ber_rate_round_trips() {
        let rows = vec![
            SweepRow {
                target_ber: 3.8e-3,
                gamma: 2.642210864656427,
                total_bits: 2076,
                rate_bps: 63.9e9,
                measured_ber: 0.0041832,
                seed_count: 3,
            },
            SweepRow {
                target_ber: 5.6e-2,
                gamma: 0.8486437843068439,
                total_bits: 2635,
                rate_bps: 81.1e9,
                measured_ber: 0.0371,
                seed_count: 3,
            },
        ];
        let parsed = parse_ber_rate(&emit_ber_rate(&rows)).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn pwl_model_round_trips_with_and_without_f_ext() {
        let mut model = PwlModel {
            f1_hz: 2.375e9,
            f2_hz: 10.8125e9,
            f_cutoff_hz: 11e9,
            seg1: LineDb {
                intercept_db: 26.119,
                slope_db_per_hz: -0.84e-9,
            },
            seg2: LineDb {
                intercept_db: 26.87,
                slope_db_per_hz: -1.1552e-9,
            },
            f_ext_hz: None,
            f2_clamped_to_cutoff: false,
        };
        assert_eq!(parse_pwl_model(&emit_pwl_model(&model)).unwrap(), model);
        model.f_ext_hz = Some(23.26e9);
        assert_eq!(parse_pwl_model(&emit_pwl_model(&model)).unwrap(), model);
    }

    #[test]
    fn rate_bounds_round_trips() {
        let rows = vec![
            RateBoundRow {
                target_ber: 3.3e-2,
                gamma: 1.2012065367210376,
                bound_cutoff_bps: 72.0e9,
                bound_ext_bps: Some(102.6e9),
            },
            RateBoundRow {
                target_ber: 1e-2,
                gamma: 1.99,
                bound_cutoff_bps: 65.0e9,
                bound_ext_bps: None,
            },
        ];
        assert_eq!(parse_rate_bounds(&emit_rate_bounds(&rows)).unwrap(), rows);
    }

    #[test]
    fn malformed_input_is_rejected_with_location() {
        let err = parse_snr_profile("bogus header\n1,2,3,4\n").unwrap_err();
        assert!(matches!(err, TableError::Header { .. }));
        let text = format!("{SNR_PROFILE_HEADER}\n1,notanumber,3,4\n");
        let err = parse_snr_profile(&text).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn sample_files_support_comments() {
        let samples = parse_samples("# header\n1.5\n-2.25 # trailing\n\n0.125\n", "tx.txt").unwrap();
        assert_eq!(samples, vec![1.5, -2.25, 0.125]);
        assert!(parse_samples("abc\n", "tx.txt").is_err());
    }
}
