//! Root-raised-cosine pulse-shaping taps.

use std::f64::consts::PI;

use super::DspError;

/// Designs unit-energy RRC taps of length `span * sps + 1`.
///
/// `rolloff` is the excess-bandwidth factor in [0, 1], `sps` the oversampling
/// factor and `span` the filter length in symbols (even, >= 2). The singular
/// time points t = 0 and |t| = 1/(4 rolloff) are evaluated by their analytic
/// limits.
pub fn rrc_taps(rolloff: f64, sps: usize, span: usize) -> Result<Vec<f64>, DspError> {
    if !(0.0..=1.0).contains(&rolloff) || !rolloff.is_finite() {
        return Err(DspError::InvalidRolloff(rolloff));
    }
    if sps < 1 {
        return Err(DspError::InvalidSps);
    }
    if span < 2 || span % 2 != 0 {
        return Err(DspError::InvalidSpan(span));
    }

    let n_taps = span * sps + 1;
    let mid = (n_taps - 1) as f64 / 2.0;
    let a = rolloff;

    let mut taps: Vec<f64> = (0..n_taps)
        .map(|i| {
            // Time in symbol periods, symmetric about zero.
            let t = (i as f64 - mid) / sps as f64;
            rrc_value(t, a)
        })
        .collect();

    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let norm = 1.0 / energy.sqrt();
    for h in &mut taps {
        *h *= norm;
    }
    Ok(taps)
}

fn rrc_value(t: f64, a: f64) -> f64 {
    if t == 0.0 {
        return 1.0 - a + 4.0 * a / PI;
    }
    if a == 0.0 {
        // Pure sinc.
        return (PI * t).sin() / (PI * t);
    }
    let singular = 1.0 / (4.0 * a);
    if (t.abs() - singular).abs() < 1e-9 {
        let s = PI / (4.0 * a);
        return (a / 2.0f64.sqrt())
            * ((1.0 + 2.0 / PI) * s.sin() + (1.0 - 2.0 / PI) * s.cos());
    }
    let num = (PI * t * (1.0 - a)).sin() + 4.0 * a * t * (PI * t * (1.0 + a)).cos();
    let den = PI * t * (1.0 - (4.0 * a * t).powi(2));
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn energy(taps: &[f64]) -> f64 {
        taps.iter().map(|h| h * h).sum()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(rrc_taps(-0.1, 4, 32).is_err());
        assert!(rrc_taps(1.1, 4, 32).is_err());
        assert!(rrc_taps(0.1, 0, 32).is_err());
        assert!(rrc_taps(0.1, 4, 3).is_err());
        assert!(rrc_taps(0.1, 4, 0).is_err());
    }

    #[test]
    fn zero_rolloff_is_unit_energy_sinc() {
        let taps = rrc_taps(0.0, 4, 16).unwrap();
        assert_eq!(taps.len(), 16 * 4 + 1);
        assert!((energy(&taps) - 1.0).abs() < 1e-9);
        let center = taps.len() / 2;
        let peak = taps[center];
        assert!(taps.iter().all(|&h| h.abs() <= peak));
        // Sinc nulls at nonzero integer symbol times.
        for k in 1..=8 {
            assert!(taps[center + k * 4].abs() < 1e-12);
        }
    }

    #[test]
    fn taps_symmetric_about_center() {
        for (rolloff, sps, span) in [(0.1, 4, 32), (0.25, 2, 16), (1.0, 3, 8), (0.5, 1, 10)] {
            let taps = rrc_taps(rolloff, sps, span).unwrap();
            let n = taps.len();
            for i in 0..n / 2 {
                assert!(
                    (taps[i] - taps[n - 1 - i]).abs() < 1e-12,
                    "asymmetry at {i} for rolloff {rolloff}"
                );
            }
        }
    }

    #[test]
    fn singular_point_on_grid_is_finite() {
        // rolloff 0.25 puts 1/(4a) = 1.0 exactly on the symbol grid.
        let taps = rrc_taps(0.25, 4, 8).unwrap();
        assert!(taps.iter().all(|h| h.is_finite()));
        assert!((energy(&taps) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cascaded_rrc_isi_below_minus_40db() {
        let sps = 4;
        let taps = rrc_taps(0.1, sps, 32).unwrap();
        // Matched-filter cascade: raised cosine at symbol instants.
        let n = taps.len();
        let mut rc = vec![0.0; 2 * n - 1];
        for i in 0..n {
            for j in 0..n {
                rc[i + j] += taps[i] * taps[j];
            }
        }
        let center = n - 1;
        let main = rc[center].abs();
        let mut worst: f64 = 0.0;
        let mut k = 1;
        while center + k * sps < rc.len() {
            worst = worst.max(rc[center + k * sps].abs());
            worst = worst.max(rc[center - k * sps].abs());
            k += 1;
        }
        assert!(
            worst / main <= 0.01,
            "ISI {:.2} dB",
            20.0 * (worst / main).log10()
        );
    }

    #[test]
    fn sps_one_concentrates_energy_in_center_tap() {
        let taps = rrc_taps(0.1, 1, 32).unwrap();
        let center = taps.len() / 2;
        let ratio = taps[center] * taps[center] / energy(&taps);
        assert!(ratio > 0.99, "center tap energy fraction {ratio}");
    }
}
