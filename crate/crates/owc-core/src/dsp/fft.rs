//! Thin power-of-two FFT wrapper with a fixed scaling convention:
//! the forward transform is unscaled and the inverse applies 1/N, so
//! `ifft(fft(x)) == x`. All downstream power accounting assumes this.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::DspError;

struct Plans {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn plans() -> &'static Mutex<Plans> {
    static PLANS: OnceLock<Mutex<Plans>> = OnceLock::new();
    PLANS.get_or_init(|| {
        Mutex::new(Plans {
            planner: FftPlanner::new(),
            forward: HashMap::new(),
            inverse: HashMap::new(),
        })
    })
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = plans().lock().expect("FFT planner poisoned");
    let Plans {
        planner,
        forward: fwd,
        inverse: inv,
    } = &mut *guard;
    let map = if forward { fwd } else { inv };
    map.entry(len)
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

fn check_len(len: usize) -> Result<(), DspError> {
    if len == 0 || !len.is_power_of_two() {
        return Err(DspError::NonPowerOfTwoLength(len));
    }
    Ok(())
}

/// Forward DFT, unscaled. Length must be a power of two.
pub fn fft(input: &[Complex64]) -> Result<Vec<Complex64>, DspError> {
    check_len(input.len())?;
    let mut buf = input.to_vec();
    plan(buf.len(), true).process(&mut buf);
    Ok(buf)
}

/// Inverse DFT with 1/N scaling so that `ifft(fft(x)) == x`.
pub fn ifft(input: &[Complex64]) -> Result<Vec<Complex64>, DspError> {
    check_len(input.len())?;
    let mut buf = input.to_vec();
    plan(buf.len(), false).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}
