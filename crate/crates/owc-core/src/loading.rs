//! SNR-gap analysis and adaptive resource allocation.
//!
//! Implements the gap approximation Γ = −ln(5·BER)/1.5, per-subcarrier
//! constellation sizing M ≤ 1 + SNR/Γ, Hughes-Hartogs greedy bit/power
//! loading, the discrete rate bound, and the integral rate bound evaluated by
//! adaptive composite-trapezoid quadrature.

use thiserror::Error;

use crate::modem::OfdmConfig;

#[derive(Debug, Error, PartialEq)]
pub enum LoadingError {
    #[error("target BER {0} must lie in (0, 0.2) for a positive SNR gap")]
    InvalidTargetBer(f64),
    #[error("SNR profile is empty")]
    EmptyProfile,
    #[error("profile has {frequencies} frequencies but {values} SNR values")]
    LengthMismatch { frequencies: usize, values: usize },
    #[error("profile frequencies must be strictly increasing and uniformly spaced")]
    NonUniformGrid,
    #[error("negative or non-finite SNR {value} at index {index}")]
    InvalidSnr { index: usize, value: f64 },
    #[error("power budget {0} must be positive")]
    InvalidBudget(f64),
    #[error("profile has {got} entries, expected {expected} subcarriers")]
    ProfileSize { got: usize, expected: usize },
    #[error("frequency {f} Hz outside the function domain (max {max} Hz)")]
    OutOfDomain { f: f64, max: f64 },
    #[error("SNR function returned negative value {value} at {f} Hz")]
    NegativeSnrValue { f: f64, value: f64 },
}

/// SNR gap parameters for a target bit error rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapParams {
    pub target_ber: f64,
    /// Linear SNR gap Γ; always positive.
    pub gamma: f64,
}

/// Computes the SNR gap Γ = −ln(5·BER)/1.5.
pub fn snr_gap(target_ber: f64) -> Result<GapParams, LoadingError> {
    if !target_ber.is_finite() || target_ber <= 0.0 || target_ber >= 0.2 {
        return Err(LoadingError::InvalidTargetBer(target_ber));
    }
    Ok(GapParams {
        target_ber,
        gamma: -(5.0 * target_ber).ln() / 1.5,
    })
}

/// Linear SNR values on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrProfile {
    frequencies: Vec<f64>,
    snr_linear: Vec<f64>,
}

impl SnrProfile {
    pub fn new(frequencies: Vec<f64>, snr_linear: Vec<f64>) -> Result<Self, LoadingError> {
        if frequencies.is_empty() {
            return Err(LoadingError::EmptyProfile);
        }
        if frequencies.len() != snr_linear.len() {
            return Err(LoadingError::LengthMismatch {
                frequencies: frequencies.len(),
                values: snr_linear.len(),
            });
        }
        if frequencies.len() > 1 {
            let step = frequencies[1] - frequencies[0];
            if !(step > 0.0) {
                return Err(LoadingError::NonUniformGrid);
            }
            for pair in frequencies.windows(2) {
                let d = pair[1] - pair[0];
                if !(d > 0.0) || (d - step).abs() > 1e-6 * step {
                    return Err(LoadingError::NonUniformGrid);
                }
            }
        }
        for (index, &value) in snr_linear.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(LoadingError::InvalidSnr { index, value });
            }
        }
        Ok(Self {
            frequencies,
            snr_linear,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn snr_linear(&self) -> &[f64] {
        &self.snr_linear
    }

    /// Per-point SNR in dB; zero linear SNR maps to -inf.
    pub fn snr_db(&self) -> Vec<f64> {
        self.snr_linear.iter().map(|&s| 10.0 * s.log10()).collect()
    }

    pub fn grid_step(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            0.0
        }
    }
}

/// A frequency-dependent SNR evaluated on [0, `max_frequency`].
pub trait SnrFunction {
    /// Linear SNR at `f_hz`; zero beyond the function's support.
    fn snr_linear_at(&self, f_hz: f64) -> f64;
    /// Upper end of the domain this function is defined (or extrapolated) on.
    fn max_frequency(&self) -> f64;
}

impl SnrFunction for SnrProfile {
    /// Linear interpolation between grid points; constant below the first
    /// grid frequency, zero above the last.
    fn snr_linear_at(&self, f_hz: f64) -> f64 {
        let f = &self.frequencies;
        let n = f.len();
        if f_hz <= f[0] {
            return self.snr_linear[0];
        }
        if f_hz >= f[n - 1] {
            return if f_hz > f[n - 1] {
                0.0
            } else {
                self.snr_linear[n - 1]
            };
        }
        let step = self.grid_step();
        let idx = (((f_hz - f[0]) / step).floor() as usize).min(n - 2);
        let t = (f_hz - f[idx]) / (f[idx + 1] - f[idx]);
        self.snr_linear[idx] * (1.0 - t) + self.snr_linear[idx + 1] * t
    }

    fn max_frequency(&self) -> f64 {
        *self.frequencies.last().expect("profile is non-empty")
    }
}

/// Largest per-subcarrier bit count satisfying M ≤ 1 + SNR/Γ with M = 2^b.
pub fn max_bits(snr: f64, gap: &GapParams, b_max: u32) -> u32 {
    if snr <= 0.0 {
        return 0;
    }
    // Small slack keeps exact-equality cases (snr = (2^b - 1)·Γ) on the
    // intended side of the floor.
    let b = ((1.0 + snr / gap.gamma).log2() + 1e-9).floor();
    if b <= 0.0 {
        0
    } else {
        (b as u32).min(b_max)
    }
}

/// Per-subcarrier bit counts and linear power multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingPlan {
    bits: Vec<u8>,
    power_scales: Vec<f64>,
    total_bits: u64,
    rate_bps: f64,
}

impl LoadingPlan {
    /// Uniform allocation: `bits_per_subcarrier` on every subcarrier at unit
    /// power.
    pub fn uniform(bits_per_subcarrier: u8, cfg: &OfdmConfig) -> Self {
        let n = cfg.n_sc();
        let bits = vec![bits_per_subcarrier; n];
        let power = if bits_per_subcarrier == 0 { 0.0 } else { 1.0 };
        let total_bits = (bits_per_subcarrier as u64) * n as u64;
        Self {
            bits,
            power_scales: vec![power; n],
            total_bits,
            rate_bps: data_rate(total_bits, cfg),
        }
    }

    pub fn from_parts(bits: Vec<u8>, power_scales: Vec<f64>, cfg: &OfdmConfig) -> Self {
        let total_bits = bits.iter().map(|&b| b as u64).sum();
        Self {
            bits,
            power_scales,
            total_bits,
            rate_bps: data_rate(total_bits, cfg),
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn power_scales(&self) -> &[f64] {
        &self.power_scales
    }

    /// Constellation size on subcarrier `k`; 1 means unloaded.
    pub fn order(&self, k: usize) -> usize {
        1usize << self.bits[k]
    }

    /// Bits per OFDM frame.
    pub fn total_bits(&self) -> u64 {
        self.total_bits
    }

    pub fn rate_bps(&self) -> f64 {
        self.rate_bps
    }

    pub fn n_subcarriers(&self) -> usize {
        self.bits.len()
    }
}

/// Greedy Hughes-Hartogs bit and power loading.
///
/// Repeatedly adds one bit to the subcarrier with the smallest incremental
/// power ΔP = 2^b·Γ/g until the budget is exhausted or every subcarrier has
/// `b_max` bits. The accumulated per-subcarrier power makes each loaded
/// subcarrier meet M = 1 + SNR/Γ with equality. Ties break to the lowest
/// subcarrier index.
pub fn hughes_hartogs(
    profile: &SnrProfile,
    gap: &GapParams,
    power_budget: f64,
    b_max: u32,
    cfg: &OfdmConfig,
) -> Result<LoadingPlan, LoadingError> {
    if profile.is_empty() {
        return Err(LoadingError::EmptyProfile);
    }
    if profile.len() != cfg.n_sc() {
        return Err(LoadingError::ProfileSize {
            got: profile.len(),
            expected: cfg.n_sc(),
        });
    }
    if !(power_budget > 0.0) {
        return Err(LoadingError::InvalidBudget(power_budget));
    }

    let g = profile.snr_linear();
    let n = g.len();
    let mut bits = vec![0u8; n];
    let mut power = vec![0.0f64; n];
    // Cost of the next bit on each subcarrier; infinity once capped or dead.
    let mut next_cost: Vec<f64> = g
        .iter()
        .map(|&gk| if gk > 0.0 { gap.gamma / gk } else { f64::INFINITY })
        .collect();

    let mut used = 0.0;
    let slack = power_budget.max(1.0) * 1e-9;
    loop {
        let mut best = usize::MAX;
        let mut best_cost = f64::INFINITY;
        for (k, &cost) in next_cost.iter().enumerate() {
            if cost < best_cost {
                best_cost = cost;
                best = k;
            }
        }
        if best == usize::MAX || used + best_cost > power_budget + slack {
            break;
        }
        used += best_cost;
        power[best] += best_cost;
        bits[best] += 1;
        next_cost[best] = if u32::from(bits[best]) >= b_max {
            f64::INFINITY
        } else {
            // ΔP(b -> b+1) = 2^b·Γ/g, i.e. the previous increment doubled.
            best_cost * 2.0
        };
    }

    Ok(LoadingPlan::from_parts(bits, power, cfg))
}

/// Data rate R = 2B/(N_FFT + N_CP) · Σ b_k in bit/s.
pub fn data_rate(total_bits: u64, cfg: &OfdmConfig) -> f64 {
    2.0 * cfg.bandwidth_hz() / (cfg.n_fft() + cfg.n_cp()) as f64 * total_bits as f64
}

/// Discrete rate upper bound: 2B/(N_FFT + N_CP) · Σ log2(1 + SNR_k/Γ).
pub fn rate_bound_discrete(
    profile: &SnrProfile,
    gap: &GapParams,
    cfg: &OfdmConfig,
) -> Result<f64, LoadingError> {
    if profile.len() != cfg.n_sc() {
        return Err(LoadingError::ProfileSize {
            got: profile.len(),
            expected: cfg.n_sc(),
        });
    }
    let sum: f64 = profile
        .snr_linear()
        .iter()
        .map(|&s| (1.0 + s / gap.gamma).log2())
        .sum();
    Ok(2.0 * cfg.bandwidth_hz() / (cfg.n_fft() + cfg.n_cp()) as f64 * sum)
}

/// Integral rate upper bound ∫₀^{f_max} log2(1 + SNR(f)/Γ) df.
///
/// Composite trapezoid with an initial step of at most 1 MHz, refined by
/// halving until two successive evaluations agree to 1e-4 relative.
pub fn rate_bound_integral<F: SnrFunction>(
    snr_fn: &F,
    f_max: f64,
    gap: &GapParams,
) -> Result<f64, LoadingError> {
    if !(f_max >= 0.0) {
        return Err(LoadingError::OutOfDomain {
            f: f_max,
            max: snr_fn.max_frequency(),
        });
    }
    if f_max == 0.0 {
        return Ok(0.0);
    }
    let domain_max = snr_fn.max_frequency();
    if f_max > domain_max * (1.0 + 1e-9) {
        return Err(LoadingError::OutOfDomain {
            f: f_max,
            max: domain_max,
        });
    }

    let integrand = |f: f64| -> Result<f64, LoadingError> {
        let s = snr_fn.snr_linear_at(f);
        if s < 0.0 || !s.is_finite() {
            return Err(LoadingError::NegativeSnrValue { f, value: s });
        }
        Ok((1.0 + s / gap.gamma).log2())
    };

    let mut n = ((f_max / 1e6).ceil() as usize).max(4);
    let mut prev = trapezoid(&integrand, f_max, n)?;
    for _ in 0..12 {
        n *= 2;
        let cur = trapezoid(&integrand, f_max, n)?;
        if (cur - prev).abs() <= 1e-4 * cur.abs().max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

fn trapezoid<E>(f: &dyn Fn(f64) -> Result<f64, E>, upper: f64, n: usize) -> Result<f64, E> {
    let h = upper / n as f64;
    let mut sum = 0.5 * (f(0.0)? + f(upper)?);
    for i in 1..n {
        sum += f(i as f64 * h)?;
    }
    Ok(sum * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> OfdmConfig {
        OfdmConfig::default()
    }

    fn flat_profile(snr: f64, n: usize) -> SnrProfile {
        let step = 31.25e6;
        let freqs: Vec<f64> = (1..=n).map(|k| k as f64 * step).collect();
        SnrProfile::new(freqs, vec![snr; n]).unwrap()
    }

    #[test]
    fn gap_at_exp_minus_one_over_five() {
        // ln(5·BER) = -1 exactly when BER = e^-1/5.
        let gap = snr_gap((-1.0f64).exp() / 5.0).unwrap();
        assert!((gap.gamma - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gap_known_values() {
        assert!((snr_gap(3.8e-3).unwrap().gamma - 2.6422).abs() < 1e-3);
        assert!((snr_gap(5.6e-2).unwrap().gamma - 0.8487).abs() < 1e-3);
    }

    #[test]
    fn gap_rejects_out_of_range() {
        for ber in [0.0, -0.1, 0.2, 0.5, f64::NAN] {
            assert!(snr_gap(ber).is_err(), "ber {ber}");
        }
    }

    #[test]
    fn max_bits_boundaries() {
        let gap = snr_gap(1e-2).unwrap();
        assert_eq!(max_bits(0.0, &gap, 10), 0);
        assert_eq!(max_bits(255.0 * gap.gamma, &gap, 10), 8);
        assert_eq!(max_bits(255.0 * gap.gamma, &gap, 6), 6);
        // Just below the M = 4 threshold only one bit fits.
        assert_eq!(max_bits(2.999 * gap.gamma, &gap, 10), 1);
    }

    #[test]
    fn max_bits_20db_example() {
        let gap = snr_gap(3.3e-2).unwrap();
        assert!((gap.gamma - 1.2012).abs() < 1e-3);
        assert_eq!(max_bits(100.0, &gap, 10), 6);
    }

    #[test]
    fn max_bits_gap_scale_covariance() {
        // M ≤ 1 + SNR/Γ depends only on the ratio SNR/Γ.
        let gap1 = snr_gap(1e-2).unwrap();
        let gap2 = GapParams {
            target_ber: gap1.target_ber,
            gamma: 2.0 * gap1.gamma,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let snr: f64 = rng.gen_range(0.0..1e4);
            assert_eq!(
                max_bits(snr, &gap1, 10),
                max_bits(2.0 * snr, &gap2, 10),
                "snr {snr}"
            );
        }
    }

    #[test]
    fn data_rate_known_values() {
        let cfg = cfg();
        assert_eq!(data_rate(0, &cfg), 0.0);
        assert!((data_rate(2338, &cfg) - 72.01e9).abs() < 0.01e9);
        assert!((data_rate(4088, &cfg) - 125.91e9).abs() < 0.01e9);
    }

    #[test]
    fn flat_budget_loads_exactly_eight_bits_everywhere() {
        let cfg = cfg();
        let n = cfg.n_sc();
        let gap = snr_gap(1e-2).unwrap();
        let g = 50.0;
        let budget = n as f64 * (256.0 - 1.0) * gap.gamma / g;
        let plan = hughes_hartogs(&flat_profile(g, n), &gap, budget, 10, &cfg).unwrap();
        assert!(plan.bits().iter().all(|&b| b == 8));
        assert_eq!(plan.total_bits(), 8 * n as u64);
        let used: f64 = plan.power_scales().iter().sum();
        assert!(used <= budget * (1.0 + 1e-9));
        assert!((used - budget).abs() < 1e-6 * budget);
    }

    #[test]
    fn loaded_subcarriers_meet_constellation_bound_with_equality() {
        let cfg = cfg();
        let n = cfg.n_sc();
        let gap = snr_gap(3.3e-2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let snr: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..500.0)).collect();
        let profile = SnrProfile::new(
            (1..=n).map(|k| k as f64 * 31.25e6).collect(),
            snr.clone(),
        )
        .unwrap();
        let plan = hughes_hartogs(&profile, &gap, n as f64, 10, &cfg).unwrap();
        for k in 0..n {
            let b = plan.bits()[k];
            if b > 0 {
                // power · g = Γ·(2^b - 1)
                let achieved = plan.power_scales()[k] * snr[k];
                let required = gap.gamma * ((1u64 << b) as f64 - 1.0);
                assert!(
                    (achieved - required).abs() <= 1e-9 * required,
                    "subcarrier {k}: {achieved} vs {required}"
                );
            } else {
                assert_eq!(plan.power_scales()[k], 0.0);
            }
        }
    }

    /// Exhaustive-search oracle: maximum total bits over all feasible
    /// allocations with per-subcarrier cost Γ·(2^b - 1)/g.
    fn brute_force_best(g: &[f64], gamma: f64, budget: f64, b_max: u32) -> u64 {
        fn recurse(
            g: &[f64],
            gamma: f64,
            b_max: u32,
            k: usize,
            remaining: f64,
            acc: u64,
            best: &mut u64,
        ) {
            if k == g.len() {
                *best = (*best).max(acc);
                return;
            }
            for b in (0..=b_max).rev() {
                let cost = if b == 0 {
                    0.0
                } else {
                    gamma * ((1u64 << b) as f64 - 1.0) / g[k]
                };
                if cost <= remaining * (1.0 + 1e-12) + 1e-12 {
                    recurse(g, gamma, b_max, k + 1, remaining - cost, acc + b as u64, best);
                }
            }
        }
        let mut best = 0;
        recurse(g, gamma, b_max, 0, budget, 0, &mut best);
        best
    }

    #[test]
    fn greedy_matches_exhaustive_search_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..60 {
            let n: usize = rng.gen_range(2..=6);
            let n_fft = 2 * (n + 1);
            let cfg =
                OfdmConfig::new(n_fft.next_power_of_two().max(8), 2, 0.1, 1e9, 1).unwrap();
            let n = cfg.n_sc();
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..20.0)).collect();
            let gamma = rng.gen_range(0.5..3.0);
            let gap = GapParams {
                target_ber: 1e-2,
                gamma,
            };
            let budget = rng.gen_range(0.5..30.0);
            let freqs: Vec<f64> = (1..=n).map(|k| k as f64 * 1e6).collect();
            let profile = SnrProfile::new(freqs, g.clone()).unwrap();
            let plan = hughes_hartogs(&profile, &gap, budget, 4, &cfg).unwrap();
            let oracle = brute_force_best(&g, gamma, budget, 4);
            assert_eq!(
                plan.total_bits(),
                oracle,
                "trial {trial}: greedy {} vs oracle {oracle} (g={g:?}, gamma={gamma}, budget={budget})",
                plan.total_bits()
            );
        }
    }

    #[test]
    fn four_subcarrier_example_matches_oracle() {
        let cfg = OfdmConfig::new(16, 2, 0.1, 1e9, 1).unwrap();
        assert_eq!(cfg.n_sc(), 7);
        // Embed the 4 active gains in a 7-subcarrier config; the rest are dead.
        let g = [4.0, 2.0, 1.0, 0.5, 0.0, 0.0, 0.0];
        let gap = GapParams {
            target_ber: 1e-2,
            gamma: 1.0,
        };
        let freqs: Vec<f64> = (1..=7).map(|k| k as f64 * 1e6).collect();
        let profile = SnrProfile::new(freqs, g.to_vec()).unwrap();
        let plan = hughes_hartogs(&profile, &gap, 3.0, 4, &cfg).unwrap();
        let oracle = brute_force_best(&g, 1.0, 3.0, 4);
        assert_eq!(plan.total_bits(), oracle);
    }

    #[test]
    fn monotone_in_pointwise_snr() {
        let cfg = cfg();
        let n = cfg.n_sc();
        let gap = snr_gap(1e-2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..200.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|&s| s * rng.gen_range(1.0..3.0)).collect();
            let freqs: Vec<f64> = (1..=n).map(|k| k as f64 * 31.25e6).collect();
            let p_lo = SnrProfile::new(freqs.clone(), lo).unwrap();
            let p_hi = SnrProfile::new(freqs, hi).unwrap();
            let plan_lo = hughes_hartogs(&p_lo, &gap, n as f64, 10, &cfg).unwrap();
            let plan_hi = hughes_hartogs(&p_hi, &gap, n as f64, 10, &cfg).unwrap();
            assert!(plan_hi.total_bits() >= plan_lo.total_bits());
        }
    }

    #[test]
    fn discrete_bound_closed_form_and_dominance() {
        let cfg = cfg();
        let n = cfg.n_sc();
        let gap = snr_gap(1e-2).unwrap();

        let zero = flat_profile(0.0, n);
        assert_eq!(rate_bound_discrete(&zero, &gap, &cfg).unwrap(), 0.0);

        let flat = flat_profile(255.0 * gap.gamma, n);
        let bound = rate_bound_discrete(&flat, &gap, &cfg).unwrap();
        let expected = 8.0 * n as f64 * 2.0 * cfg.bandwidth_hz() / 1039.0;
        assert!((bound - expected).abs() < 1e-6 * expected);
        assert!((bound - 125.91e9).abs() < 0.01e9);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let snr: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..400.0)).collect();
            let freqs: Vec<f64> = (1..=n).map(|k| k as f64 * 31.25e6).collect();
            let profile = SnrProfile::new(freqs, snr).unwrap();
            let plan = hughes_hartogs(&profile, &gap, n as f64, 10, &cfg).unwrap();
            let bound = rate_bound_discrete(&profile, &gap, &cfg).unwrap();
            assert!(
                plan.rate_bps() <= bound * (1.0 + 1e-12),
                "plan rate {} exceeds bound {bound}",
                plan.rate_bps()
            );
        }
    }

    #[test]
    fn integral_bound_constant_snr_closed_form() {
        let gap = snr_gap(1e-2).unwrap();
        let b = 16e9;
        let s = 100.0;
        let profile = SnrProfile::new(vec![0.0, b], vec![s, s]).unwrap();
        let bound = rate_bound_integral(&profile, b, &gap).unwrap();
        let exact = b * (1.0 + s / gap.gamma).log2();
        assert!((bound - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn integral_bound_zero_profile_is_zero() {
        let gap = snr_gap(1e-2).unwrap();
        let profile = SnrProfile::new(vec![0.0, 16e9], vec![0.0, 0.0]).unwrap();
        assert_eq!(rate_bound_integral(&profile, 16e9, &gap).unwrap(), 0.0);
    }

    #[test]
    fn integral_bound_rejects_out_of_domain() {
        let gap = snr_gap(1e-2).unwrap();
        let profile = SnrProfile::new(vec![0.0, 1e9], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            rate_bound_integral(&profile, 2e9, &gap),
            Err(LoadingError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn integral_bound_matches_fine_riemann_sum() {
        // Two-segment dB profile on a dense grid vs a 10 kHz Riemann oracle.
        let gap = snr_gap(3.3e-2).unwrap();
        let n = 2000usize;
        let f_max = 11e9;
        let step = f_max / (n - 1) as f64;
        let db_at = |f: f64| -> f64 {
            if f < 2.38e9 {
                25.0 - 0.8e-9 * f
            } else {
                23.1 - 1.1e-9 * (f - 2.38e9)
            }
        };
        let freqs: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        let snr: Vec<f64> = freqs.iter().map(|&f| 10f64.powf(db_at(f) / 10.0)).collect();
        let profile = SnrProfile::new(freqs, snr).unwrap();
        let bound = rate_bound_integral(&profile, f_max, &gap).unwrap();

        let m = (f_max / 10e3) as usize;
        let h = f_max / m as f64;
        let oracle: f64 = (0..m)
            .map(|i| {
                let f = (i as f64 + 0.5) * h;
                (1.0 + profile.snr_linear_at(f) / gap.gamma).log2() * h
            })
            .sum();
        assert!(
            (bound - oracle).abs() <= 1e-3 * oracle,
            "bound {bound} vs oracle {oracle}"
        );
    }

    #[test]
    fn profile_constructor_rejects_bad_input() {
        assert_eq!(
            SnrProfile::new(vec![], vec![]),
            Err(LoadingError::EmptyProfile)
        );
        assert!(matches!(
            SnrProfile::new(vec![0.0, 1.0], vec![1.0]),
            Err(LoadingError::LengthMismatch { .. })
        ));
        assert_eq!(
            SnrProfile::new(vec![0.0, 2.0, 3.0], vec![1.0; 3]),
            Err(LoadingError::NonUniformGrid)
        );
        assert!(matches!(
            SnrProfile::new(vec![0.0, 1.0], vec![1.0, -0.5]),
            Err(LoadingError::InvalidSnr { .. })
        ));
    }

    #[test]
    fn hughes_hartogs_rejects_bad_input() {
        let cfg = cfg();
        let gap = snr_gap(1e-2).unwrap();
        let short = flat_profile(10.0, 4);
        assert!(matches!(
            hughes_hartogs(&short, &gap, 1.0, 10, &cfg),
            Err(LoadingError::ProfileSize { .. })
        ));
        let full = flat_profile(10.0, cfg.n_sc());
        assert!(matches!(
            hughes_hartogs(&full, &gap, 0.0, 10, &cfg),
            Err(LoadingError::InvalidBudget(_))
        ));
    }
}
