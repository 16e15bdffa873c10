use core::f64::consts::PI;

use crate::error::QuantumError;

/// A periodic grid of `n` points `z_min + i·dz`, `dz = (z_max - z_min)/n`,
/// with its conjugate momentum grid `p_j = kbar·(2π/L)·j`, `j ∈ [-n/2, n/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub fn new(z_min: f64, z_max: f64, n: usize) -> Result<Self, QuantumError> {
        if !(z_min < z_max) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(QuantumError::InvalidGrid("z_min must be below z_max"));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(QuantumError::InvalidGrid("n_points must be a power of two and at least 2"));
        }
        Ok(SpatialGrid { z_min, z_max, n })
    }

    pub fn length(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn dz(&self) -> f64 {
        self.length() / self.n as f64
    }

    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz()
    }

    /// Momentum-grid spacing `2π kbar / L`.
    pub fn dp(&self, kbar: f64) -> f64 {
        2.0 * PI * kbar / self.length()
    }

    /// Signed frequency index of FFT bin `k`.
    #[inline]
    pub fn frequency(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Momentum of FFT bin `k`.
    #[inline]
    pub fn momentum(&self, k: usize, kbar: f64) -> f64 {
        self.frequency(k) as f64 * self.dp(kbar)
    }

    /// Largest representable momentum magnitude, `kbar π / dz`.
    pub fn p_max(&self, kbar: f64) -> f64 {
        kbar * PI / self.dz()
    }

    /// FFT bin holding the `m`-th smallest momentum, for `m` in `0..n`.
    #[inline]
    pub fn bin_of_sorted(&self, m: usize) -> usize {
        (m + self.n / 2) % self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::new(1.0, 0.0, 16).is_err());
        assert!(SpatialGrid::new(0.0, 1.0, 12).is_err());
        assert!(SpatialGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn momentum_layout() {
        let g = SpatialGrid::new(-1.0, 3.0, 8).unwrap();
        assert_eq!(g.dz(), 0.5);
        let sorted: std::vec::Vec<i64> = (0..8).map(|m| g.frequency(g.bin_of_sorted(m))).collect();
        assert_eq!(sorted, [-4, -3, -2, -1, 0, 1, 2, 3]);
        assert!((g.p_max(1.0) - 4.0 * g.dp(1.0)).abs() < 1e-12);
    }
}
