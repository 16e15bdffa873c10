use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::diagnostics::DistributionProfile;
use crate::error::QuantumError;
use crate::math;
use crate::scaling::ScaledParams;

use super::fft::SpectralTransform;
use super::grid::SpatialGrid;

/// A wavefunction sampled on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketState {
    pub grid: SpatialGrid,
    pub psi: Vec<Complex64>,
    pub t: f64,
    pub params: ScaledParams,
    /// Probability removed by the absorbing boundary so far.
    pub absorbed_norm: f64,
}

/// First and second moments of a wavepacket, normalised by its current norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub norm: f64,
    pub mean_z: f64,
    pub var_z: f64,
    pub mean_p: f64,
    pub var_p: f64,
}

impl Moments {
    pub fn delta_z(&self) -> f64 {
        math::sqrt(self.var_z)
    }

    pub fn delta_p(&self) -> f64 {
        math::sqrt(self.var_p)
    }
}

impl WavepacketState {
    /// `Σ|ψ|² dz`.
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dz()
    }

    /// `sqrt(Σ|ψ - φ|² dz)`.
    pub fn distance(&self, other: &WavepacketState) -> f64 {
        let s: f64 = self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).norm_sqr()).sum();
        math::sqrt(s * self.grid.dz())
    }

    /// Momentum amplitudes `ψ̃(p_k)` in FFT order, normalised so that
    /// `Σ|ψ̃|² dp = Σ|ψ|² dz`.
    pub fn momentum_amplitudes<T: SpectralTransform>(&self, fft: &mut T) -> Vec<Complex64> {
        let mut buf = self.psi.clone();
        self.to_momentum_in_place(&mut buf, fft);
        buf
    }

    pub(crate) fn to_momentum_in_place<T: SpectralTransform>(&self, buf: &mut [Complex64], fft: &mut T) {
        fft.forward(buf);
        let dz = self.grid.dz();
        let scale = dz / math::sqrt(2.0 * PI * self.params.kbar);
        // Bin k of the DFT measures exp(-i p_k (z - z_min)/kbar); restore the z_min phase.
        let shift = self.grid.z_min / self.params.kbar;
        for (k, c) in buf.iter_mut().enumerate() {
            let phase = -self.grid.momentum(k, self.params.kbar) * shift;
            *c *= Complex64::new(math::cos(phase), math::sin(phase)) * scale;
        }
    }

    pub fn position_moments(&self) -> (f64, f64, f64) {
        let dz = self.grid.dz();
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (i, c) in self.psi.iter().enumerate() {
            let w = c.norm_sqr();
            let z = self.grid.z(i);
            s0 += w;
            s1 += w * z;
            s2 += w * z * z;
        }
        let norm = s0 * dz;
        let mean = s1 / s0;
        (norm, mean, (s2 / s0 - mean * mean).max(0.0))
    }

    /// Momentum mean and variance from amplitudes in FFT order.
    pub fn momentum_moments_from(&self, amplitudes: &[Complex64]) -> (f64, f64) {
        let kbar = self.params.kbar;
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (k, c) in amplitudes.iter().enumerate() {
            let w = c.norm_sqr();
            let p = self.grid.momentum(k, kbar);
            s0 += w;
            s1 += w * p;
            s2 += w * p * p;
        }
        let mean = s1 / s0;
        (mean, (s2 / s0 - mean * mean).max(0.0))
    }

    pub fn moments<T: SpectralTransform>(&self, fft: &mut T) -> Moments {
        let amps = self.momentum_amplitudes(fft);
        self.moments_with(&amps)
    }

    pub fn moments_with(&self, amplitudes: &[Complex64]) -> Moments {
        let (norm, mean_z, var_z) = self.position_moments();
        let (mean_p, var_p) = self.momentum_moments_from(amplitudes);
        Moments { norm, mean_z, var_z, mean_p, var_p }
    }
}

/// Minimum-uncertainty Gaussian with `Δz = kbar / (2Δp)`, normalised on the grid.
pub fn init_gaussian(
    center_z: f64,
    center_p: f64,
    delta_p: f64,
    grid: SpatialGrid,
    params: ScaledParams,
) -> Result<WavepacketState, QuantumError> {
    params.validate()?;
    if !(delta_p > 0.0) {
        return Err(crate::error::ParamError::Invalid { name: "delta_p", requirement: "> 0", value: delta_p }.into());
    }
    let kbar = params.kbar;
    let delta_z = kbar / (2.0 * delta_p);
    let (lo, hi) = (center_z - 6.0 * delta_z, center_z + 6.0 * delta_z);
    if lo < grid.z_min || hi > grid.z_max {
        return Err(QuantumError::GridTooSmall(format!(
            "position support [{lo}, {hi}] exceeds [{}, {}]",
            grid.z_min, grid.z_max
        )));
    }
    let p_edge = center_p.abs() + 6.0 * delta_p;
    if p_edge > grid.p_max(kbar) {
        return Err(QuantumError::GridTooSmall(format!(
            "momentum support {p_edge} exceeds the grid limit {}",
            grid.p_max(kbar)
        )));
    }
    let mut psi: Vec<Complex64> = (0..grid.n)
        .map(|i| {
            let x = grid.z(i) - center_z;
            let amp = math::exp(-x * x / (4.0 * delta_z * delta_z));
            let phase = center_p * x / kbar;
            Complex64::new(amp * math::cos(phase), amp * math::sin(phase))
        })
        .collect();
    let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.dz();
    let scale = 1.0 / math::sqrt(norm);
    psi.iter_mut().for_each(|c| *c *= scale);
    Ok(WavepacketState { grid, psi, t: 0.0, params, absorbed_norm: 0.0 })
}

/// `|ψ̃(p)|²` on the ascending momentum grid.
pub fn momentum_marginal<T: SpectralTransform>(psi: &WavepacketState, fft: &mut T) -> DistributionProfile {
    let amps = psi.momentum_amplitudes(fft);
    momentum_marginal_from(psi, &amps)
}

/// `|ψ̃(p)|²` on the sorted momentum grid, from amplitudes already in FFT order.
pub fn momentum_marginal_from(psi: &WavepacketState, amplitudes: &[Complex64]) -> DistributionProfile {
    let g = &psi.grid;
    let kbar = psi.params.kbar;
    let (axis, density) = (0..g.n)
        .map(|m| {
            let k = g.bin_of_sorted(m);
            (g.momentum(k, kbar), amplitudes[k].norm_sqr())
        })
        .unzip();
    DistributionProfile::from_parts(axis, density)
}

/// `|ψ(z)|²` on the position grid.
pub fn position_marginal(psi: &WavepacketState) -> DistributionProfile {
    let axis = (0..psi.grid.n).map(|i| psi.grid.z(i)).collect();
    let density = psi.psi.iter().map(|c| c.norm_sqr()).collect();
    DistributionProfile::from_parts(axis, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Radix2Fft;

    fn setup() -> (SpatialGrid, ScaledParams) {
        (SpatialGrid::new(-10.0, 30.0, 2048).unwrap(), ScaledParams::new(1.0, 1.0, 1.7, 1.0).unwrap())
    }

    #[test]
    fn gaussian_moments() {
        let (grid, params) = setup();
        let mut fft = Radix2Fft::new(grid.n);
        let p0 = 2.0 * PI * PI;
        let psi = init_gaussian(5.0, p0, 0.5, grid, params).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let m = psi.moments(&mut fft);
        assert!((m.mean_z - 5.0).abs() < 1e-8);
        assert!((m.mean_p - p0).abs() < 1e-8, "{}", m.mean_p);
        assert!((m.delta_z() - 1.0).abs() < 1e-6);
        assert!((m.delta_p() - 0.5).abs() < 1e-6);
        assert!((m.delta_z() * m.delta_p() - 0.5).abs() < 0.5e-6);
    }

    #[test]
    fn parseval() {
        let (grid, params) = setup();
        let mut fft = Radix2Fft::new(grid.n);
        let psi = init_gaussian(3.0, -4.0, 0.8, grid, params).unwrap();
        let amps = psi.momentum_amplitudes(&mut fft);
        let p_side = amps.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.dp(params.kbar);
        assert!((p_side - psi.norm()).abs() < 1e-12);
        let profile = momentum_marginal(&psi, &mut fft);
        assert!((profile.trapezoid() - psi.norm()).abs() < 1e-10);
        assert!(profile.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn support_errors() {
        let (grid, params) = setup();
        let err = init_gaussian(-8.0, 0.0, 0.5, grid, params).unwrap_err();
        assert!(matches!(err, QuantumError::GridTooSmall(ref m) if m.contains("position")));
        let err = init_gaussian(5.0, 158.0, 0.5, grid, params).unwrap_err();
        assert!(matches!(err, QuantumError::GridTooSmall(ref m) if m.contains("momentum")));
    }
}
