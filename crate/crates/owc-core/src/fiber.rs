//! Closed-form MMF dispersion budget: RMS spectral width of a laser spectrum
//! and bandwidth/reach limits under chromatic plus modal dispersion.
//!
//! Both pulse-broadening mechanisms are modelled as Gaussian, so their RMS
//! delay spreads add in quadrature and the combined 3 dB cutoff follows from
//! reciprocal-square addition of the individual cutoffs.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FiberError {
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("spectrum has {wavelengths} wavelengths but {powers} power samples")]
    LengthMismatch { wavelengths: usize, powers: usize },
    #[error("wavelengths must be strictly increasing")]
    NonIncreasingWavelengths,
    #[error("negative power {value} at index {index}")]
    NegativePower { index: usize, value: f64 },
    #[error("total spectral power is zero")]
    AllZeroPower,
    #[error("invalid fiber parameters: {0}")]
    InvalidParams(String),
    #[error("spectrum file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// A sampled optical spectrum with its derived moments.
#[derive(Debug, Clone)]
pub struct SpectrumRecord {
    wavelengths_nm: Vec<f64>,
    power: Vec<f64>,
    mean_wavelength_nm: f64,
    rms_width_nm: f64,
}

impl SpectrumRecord {
    /// Builds a record and evaluates the spectral moments by the trapezoid
    /// rule on the provided grid. A single sample degenerates to a spectral
    /// line (zero width).
    pub fn new(wavelengths_nm: Vec<f64>, power: Vec<f64>) -> Result<Self, FiberError> {
        if wavelengths_nm.is_empty() {
            return Err(FiberError::EmptySpectrum);
        }
        if wavelengths_nm.len() != power.len() {
            return Err(FiberError::LengthMismatch {
                wavelengths: wavelengths_nm.len(),
                powers: power.len(),
            });
        }
        for pair in wavelengths_nm.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(FiberError::NonIncreasingWavelengths);
            }
        }
        for (index, &value) in power.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(FiberError::NegativePower { index, value });
            }
        }

        let total = trapezoid(&wavelengths_nm, |i| power[i]);
        let (mean, rms) = if wavelengths_nm.len() == 1 {
            if power[0] <= 0.0 {
                return Err(FiberError::AllZeroPower);
            }
            (wavelengths_nm[0], 0.0)
        } else {
            if total <= 0.0 {
                return Err(FiberError::AllZeroPower);
            }
            let mean = trapezoid(&wavelengths_nm, |i| wavelengths_nm[i] * power[i]) / total;
            let var = trapezoid(&wavelengths_nm, |i| {
                let d = wavelengths_nm[i] - mean;
                d * d * power[i]
            }) / total;
            (mean, var.max(0.0).sqrt())
        };

        Ok(Self {
            wavelengths_nm,
            power,
            mean_wavelength_nm: mean,
            rms_width_nm: rms,
        })
    }

    /// Parses two-column text: `wavelength_nm power_linear`, one sample per
    /// line, `#` starting a comment. Blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self, FiberError> {
        let mut wavelengths = Vec::new();
        let mut power = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split([' ', '\t', ',']).filter(|s| !s.is_empty());
            let (a, b) = match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(FiberError::Parse {
                        line: idx + 1,
                        reason: "expected two columns".into(),
                    })
                }
            };
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| FiberError::Parse {
                    line: idx + 1,
                    reason: format!("invalid number {s:?}"),
                })
            };
            wavelengths.push(parse(a)?);
            power.push(parse(b)?);
        }
        Self::new(wavelengths, power)
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn mean_wavelength_nm(&self) -> f64 {
        self.mean_wavelength_nm
    }

    pub fn rms_width_nm(&self) -> f64 {
        self.rms_width_nm
    }
}

fn trapezoid(x: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    if x.len() < 2 {
        return f(0);
    }
    let mut sum = 0.0;
    for i in 1..x.len() {
        sum += 0.5 * (f(i) + f(i - 1)) * (x[i] - x[i - 1]);
    }
    sum
}

/// Mean wavelength and RMS spectral width (both nm) of a spectrum.
pub fn rms_spectral_width(spectrum: &SpectrumRecord) -> (f64, f64) {
    (spectrum.mean_wavelength_nm, spectrum.rms_width_nm)
}

/// MMF link parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberParams {
    /// Chromatic dispersion coefficient D in ps/(nm·km).
    pub d_ps_per_nm_km: f64,
    /// RMS spectral width of the source in nm.
    pub sigma_lambda_nm: f64,
    /// Effective modal bandwidth in MHz·km.
    pub emb_mhz_km: f64,
    /// Attenuation in dB/km.
    pub alpha_db_per_km: f64,
    /// Fiber length in km.
    pub length_km: f64,
}

impl FiberParams {
    fn validate(&self) -> Result<(), FiberError> {
        if !(self.emb_mhz_km > 0.0) {
            return Err(FiberError::InvalidParams(format!(
                "EMB {} MHz·km must be positive",
                self.emb_mhz_km
            )));
        }
        if !(self.length_km > 0.0) {
            return Err(FiberError::InvalidParams(format!(
                "length {} km must be positive",
                self.length_km
            )));
        }
        if !(self.alpha_db_per_km >= 0.0) {
            return Err(FiberError::InvalidParams(format!(
                "attenuation {} dB/km must be nonnegative",
                self.alpha_db_per_km
            )));
        }
        if self.sigma_lambda_nm < 0.0 {
            return Err(FiberError::InvalidParams(format!(
                "RMS spectral width {} nm must be nonnegative",
                self.sigma_lambda_nm
            )));
        }
        Ok(())
    }
}

/// Dispersion budget for one fiber length and signal bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionReport {
    pub sigma_cd_ps: f64,
    pub sigma_md_ps: f64,
    pub sigma_total_ps: f64,
    /// CD-only cutoff; infinite when σ_CD = 0.
    pub f3db_cd_hz: f64,
    pub f3db_md_hz: f64,
    pub f3db_hz: f64,
    pub attenuation_db: f64,
    /// Maximum length keeping f_3dB at or above the given signal bandwidth.
    pub l_max_km: f64,
}

const LN2: f64 = std::f64::consts::LN_2;

/// Per-kilometre combined broadening term sqrt((2π|D|σ_λ)²/ln2 + 1/EMB²),
/// in s/km.
fn broadening_s_per_km(d_ps_per_nm_km: f64, sigma_lambda_nm: f64, emb_mhz_km: f64) -> f64 {
    let cd_s_per_km = d_ps_per_nm_km.abs() * sigma_lambda_nm * 1e-12;
    let emb_hz_km = emb_mhz_km * 1e6;
    let cd_term = (std::f64::consts::TAU * cd_s_per_km).powi(2) / LN2;
    let md_term = 1.0 / (emb_hz_km * emb_hz_km);
    (cd_term + md_term).sqrt()
}

/// Full dispersion budget: delay spreads, cutoff frequencies, attenuation and
/// the maximum reach at `signal_bandwidth_hz`.
pub fn dispersion_report(
    params: &FiberParams,
    signal_bandwidth_hz: f64,
) -> Result<DispersionReport, FiberError> {
    params.validate()?;
    if !(signal_bandwidth_hz > 0.0) {
        return Err(FiberError::InvalidParams(format!(
            "signal bandwidth {signal_bandwidth_hz} Hz must be positive"
        )));
    }
    let l = params.length_km;
    let sigma_cd_ps = params.d_ps_per_nm_km.abs() * params.sigma_lambda_nm * l;
    let f3db_cd_hz = if sigma_cd_ps > 0.0 {
        LN2.sqrt() / (std::f64::consts::TAU * sigma_cd_ps * 1e-12)
    } else {
        f64::INFINITY
    };
    let f3db_md_hz = params.emb_mhz_km * 1e6 / l;
    let sigma_md_ps = LN2.sqrt() / (std::f64::consts::TAU * f3db_md_hz) * 1e12;
    let sigma_total_ps = (sigma_cd_ps * sigma_cd_ps + sigma_md_ps * sigma_md_ps).sqrt();
    let f3db_hz = 1.0
        / (l * broadening_s_per_km(
            params.d_ps_per_nm_km,
            params.sigma_lambda_nm,
            params.emb_mhz_km,
        ));
    Ok(DispersionReport {
        sigma_cd_ps,
        sigma_md_ps,
        sigma_total_ps,
        f3db_cd_hz,
        f3db_md_hz,
        f3db_hz,
        attenuation_db: params.alpha_db_per_km * l,
        l_max_km: max_reach(
            params.d_ps_per_nm_km,
            params.sigma_lambda_nm,
            params.emb_mhz_km,
            signal_bandwidth_hz,
        ),
    })
}

/// Maximum fiber length (km) keeping the combined 3 dB cutoff at or above
/// the signal bandwidth.
pub fn max_reach(
    d_ps_per_nm_km: f64,
    sigma_lambda_nm: f64,
    emb_mhz_km: f64,
    signal_bandwidth_hz: f64,
) -> f64 {
    1.0 / (signal_bandwidth_hz * broadening_s_per_km(d_ps_per_nm_km, sigma_lambda_nm, emb_mhz_km))
}

/// Reference RMS spectral widths of the transmitter at its characterized DC
/// bias points (nm), for display alongside computed values. The raw spectra
/// are not distributed, so these are constants rather than fixtures: the peak
/// shifts from 939.2 nm to 941.2 nm over the same bias range.
pub const REFERENCE_SPECTRAL_WIDTHS_NM: [(f64, f64); 3] =
    [(5.0, 0.22), (10.0, 0.351), (15.0, 0.591)];

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_params() -> FiberParams {
        FiberParams {
            d_ps_per_nm_km: 65.0,
            sigma_lambda_nm: 0.351,
            emb_mhz_km: 4700.0,
            alpha_db_per_km: 2.3,
            length_km: 0.001,
        }
    }

    #[test]
    fn single_line_spectrum() {
        let s = SpectrumRecord::new(vec![940.0], vec![1.0]).unwrap();
        assert_eq!(s.mean_wavelength_nm(), 940.0);
        assert_eq!(s.rms_width_nm(), 0.0);
    }

    #[test]
    fn two_equal_lines_give_unit_width() {
        let s = SpectrumRecord::new(vec![939.0, 941.0], vec![1.0, 1.0]).unwrap();
        assert!((s.mean_wavelength_nm() - 940.0).abs() < 1e-12);
        assert!((s.rms_width_nm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_gaussian_recovers_std() {
        let std = 0.3;
        let mean = 940.0;
        let n = 4001;
        let wavelengths: Vec<f64> = (0..n)
            .map(|i| mean - 3.0 + 6.0 * i as f64 / (n - 1) as f64)
            .collect();
        let power: Vec<f64> = wavelengths
            .iter()
            .map(|&l| (-((l - mean) / std).powi(2) / 2.0).exp())
            .collect();
        let s = SpectrumRecord::new(wavelengths, power).unwrap();
        assert!((s.mean_wavelength_nm() - mean).abs() < 1e-6);
        assert!((s.rms_width_nm() - std).abs() < 1e-3);
    }

    #[test]
    fn width_invariant_under_power_scaling() {
        let wavelengths: Vec<f64> = (0..200).map(|i| 938.0 + 0.02 * i as f64).collect();
        let power: Vec<f64> = (0..200).map(|i| ((i % 17) as f64 + 1.0) * 0.3).collect();
        let a = SpectrumRecord::new(wavelengths.clone(), power.clone()).unwrap();
        let scaled: Vec<f64> = power.iter().map(|p| p * 123.456).collect();
        let b = SpectrumRecord::new(wavelengths, scaled).unwrap();
        assert!((a.rms_width_nm() - b.rms_width_nm()).abs() < 1e-12);
        assert!((a.mean_wavelength_nm() - b.mean_wavelength_nm()).abs() < 1e-9);
    }

    #[test]
    fn spectrum_rejects_bad_input() {
        assert!(matches!(
            SpectrumRecord::new(vec![], vec![]),
            Err(FiberError::EmptySpectrum)
        ));
        assert!(SpectrumRecord::new(vec![940.0, 939.0], vec![1.0, 1.0]).is_err());
        assert!(SpectrumRecord::new(vec![939.0, 940.0], vec![1.0, -1.0]).is_err());
        assert!(matches!(
            SpectrumRecord::new(vec![939.0, 940.0], vec![0.0, 0.0]),
            Err(FiberError::AllZeroPower)
        ));
    }

    #[test]
    fn parses_two_column_text() {
        let text = "# wavelength_nm power\n939.0 0.5\n940.0\t1.0 # peak\n\n941.0, 0.5\n";
        let s = SpectrumRecord::from_text(text).unwrap();
        assert_eq!(s.wavelengths_nm().len(), 3);
        assert!((s.mean_wavelength_nm() - 940.0).abs() < 1e-12);
        assert!(SpectrumRecord::from_text("940.0\n").is_err());
        assert!(SpectrumRecord::from_text("940.0 abc\n").is_err());
    }

    #[test]
    fn paper_golden_values() {
        let report = dispersion_report(&paper_params(), 16e9).unwrap();
        assert!(
            (report.f3db_hz - 3.654e12).abs() < 0.005 * 3.654e12,
            "f3db {} THz",
            report.f3db_hz / 1e12
        );
        assert!(
            (report.l_max_km - 0.2283).abs() < 0.005 * 0.2283,
            "l_max {} m",
            report.l_max_km * 1e3
        );
        assert!((report.attenuation_db - 2.3e-3).abs() < 1e-12);
    }

    #[test]
    fn zero_spectral_width_gives_pure_modal_limit() {
        let mut params = paper_params();
        params.sigma_lambda_nm = 0.0;
        let report = dispersion_report(&params, 16e9).unwrap();
        assert!(report.f3db_cd_hz.is_infinite());
        let modal = params.emb_mhz_km * 1e6 / params.length_km;
        assert!((report.f3db_hz - modal).abs() <= 1e-12 * modal);
    }

    #[test]
    fn reciprocal_square_combination_matches_direct_form() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let params = FiberParams {
                d_ps_per_nm_km: 1.0 + 120.0 * next(),
                sigma_lambda_nm: 0.01 + next(),
                emb_mhz_km: 100.0 + 10_000.0 * next(),
                alpha_db_per_km: 3.0 * next(),
                length_km: 1e-3 + next(),
            };
            let report = dispersion_report(&params, 1e9).unwrap();
            let combined = 1.0
                / (1.0 / (report.f3db_cd_hz * report.f3db_cd_hz)
                    + 1.0 / (report.f3db_md_hz * report.f3db_md_hz))
                .sqrt();
            assert!(
                (combined - report.f3db_hz).abs() <= 1e-12 * report.f3db_hz,
                "combined {combined} vs direct {}",
                report.f3db_hz
            );
            assert!(report.f3db_hz <= report.f3db_cd_hz.min(report.f3db_md_hz) * (1.0 + 1e-12));
            let t2 = report.sigma_cd_ps.powi(2) + report.sigma_md_ps.powi(2);
            assert!((report.sigma_total_ps.powi(2) - t2).abs() <= 1e-12 * t2);
        }
    }

    #[test]
    fn cutoff_monotone_in_parameters() {
        let base = paper_params();
        let f = |p: &FiberParams| dispersion_report(p, 16e9).unwrap().f3db_hz;
        let reference = f(&base);
        let mut longer = base;
        longer.length_km *= 2.0;
        assert!(f(&longer) < reference);
        let mut wider = base;
        wider.sigma_lambda_nm *= 2.0;
        assert!(f(&wider) < reference);
        let mut more_dispersive = base;
        more_dispersive.d_ps_per_nm_km *= 2.0;
        assert!(f(&more_dispersive) < reference);
        let mut better_fiber = base;
        better_fiber.emb_mhz_km *= 2.0;
        assert!(f(&better_fiber) > reference);
    }

    #[test]
    fn halving_bandwidth_doubles_reach() {
        let p = paper_params();
        let l1 = max_reach(p.d_ps_per_nm_km, p.sigma_lambda_nm, p.emb_mhz_km, 16e9);
        let l2 = max_reach(p.d_ps_per_nm_km, p.sigma_lambda_nm, p.emb_mhz_km, 8e9);
        assert!((l2 - 2.0 * l1).abs() <= 1e-12 * l2);
    }

    #[test]
    fn report_at_max_reach_hits_signal_bandwidth() {
        let p = paper_params();
        let b = 16e9;
        let l_max = max_reach(p.d_ps_per_nm_km, p.sigma_lambda_nm, p.emb_mhz_km, b);
        let mut at_reach = p;
        at_reach.length_km = l_max;
        let report = dispersion_report(&at_reach, b).unwrap();
        assert!((report.f3db_hz - b).abs() <= 1e-6 * b);
    }
}
