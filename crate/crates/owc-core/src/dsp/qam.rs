//! Gray-coded QAM constellations with unit average symbol energy.
//!
//! Even bit counts give square grids; odd bit counts (M = 2, 8, 32, 128, 512)
//! fall back to rectangular grids with one extra bit on the in-phase axis.
//! Both axes are Gray-labelled independently, so in-phase/quadrature
//! neighbours always differ in exactly one bit.

use num_complex::Complex64;

use super::DspError;

/// Binary-reflected Gray code of `n`.
pub fn gray_encode(n: usize) -> usize {
    n ^ (n >> 1)
}

/// Inverse of [`gray_encode`].
pub fn gray_decode(g: usize) -> usize {
    let mut n = g;
    let mut shift = 1;
    while (g >> shift) != 0 {
        n ^= g >> shift;
        shift += 1;
    }
    n
}

/// An M-ary QAM constellation, M a power of two in [2, 1024].
#[derive(Debug, Clone)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    /// Grid sides: `n_i * n_q == order`, `n_i >= n_q`.
    n_i: usize,
    n_q: usize,
    /// Amplitude scale applied to odd integer grid levels.
    scale: f64,
    /// Points indexed by the natural integer value of their bit label.
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self, DspError> {
        if !(2..=1024).contains(&order) || !order.is_power_of_two() {
            return Err(DspError::InvalidOrder(order));
        }
        let bits = order.trailing_zeros() as usize;
        let bits_i = bits.div_ceil(2);
        let bits_q = bits / 2;
        let n_i = 1usize << bits_i;
        let n_q = 1usize << bits_q;

        // Mean energy of independent odd-level grids: ((n^2 - 1)/3 per axis.
        let mean_energy = ((n_i * n_i - 1) as f64 + (n_q * n_q - 1) as f64) / 3.0;
        let scale = 1.0 / mean_energy.sqrt();

        let mut points = vec![Complex64::new(0.0, 0.0); order];
        for (label, point) in points.iter_mut().enumerate() {
            let g_i = label >> bits_q;
            let g_q = label & (n_q - 1);
            let col = gray_decode(g_i);
            let row = gray_decode(g_q);
            let re = Self::level(col, n_i) * scale;
            let im = Self::level(row, n_q) * scale;
            *point = Complex64::new(re, im);
        }

        Ok(Self {
            order,
            bits_per_symbol: bits,
            n_i,
            n_q,
            scale,
            points,
        })
    }

    fn level(index: usize, side: usize) -> f64 {
        2.0 * index as f64 - (side as f64 - 1.0)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Average of |point|^2; 1.0 by construction.
    pub fn mean_symbol_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order as f64
    }

    /// Maps a bit sequence (MSB-first per symbol) to constellation points.
    ///
    /// The length must be a multiple of `bits_per_symbol`.
    pub fn modulate(&self, bits: &[bool]) -> Result<Vec<Complex64>, DspError> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(DspError::BitLengthMismatch {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                self.points[label]
            })
            .collect())
    }

    /// Nearest-point label for a received symbol.
    ///
    /// Axis-wise rounding on the rectangular grid is exactly the
    /// minimum-Euclidean-distance decision.
    pub fn decide(&self, symbol: Complex64) -> usize {
        let col = Self::nearest_index(symbol.re / self.scale, self.n_i);
        let row = Self::nearest_index(symbol.im / self.scale, self.n_q);
        let bits_q = self.n_q.trailing_zeros() as usize;
        (gray_encode(col) << bits_q) | gray_encode(row)
    }

    fn nearest_index(level: f64, side: usize) -> usize {
        let raw = (level + (side as f64 - 1.0)) / 2.0;
        let idx = raw.round();
        if idx < 0.0 {
            0
        } else if idx as usize >= side {
            side - 1
        } else {
            idx as usize
        }
    }

    /// Hard-decision demapping: every complex value decodes to the bits of
    /// its nearest constellation point.
    pub fn demodulate(&self, symbols: &[Complex64]) -> Vec<bool> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &s in symbols {
            let label = self.decide(s);
            for k in (0..self.bits_per_symbol).rev() {
                bits.push((label >> k) & 1 == 1);
            }
        }
        bits
    }

    /// Minimum distance between distinct points (2 * scale on a grid).
    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }
}
