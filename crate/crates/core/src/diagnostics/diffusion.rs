use crate::error::DiagnosticsError;
use crate::math;

use super::lsq::linear_fit;

/// Power law `y ≈ prefactor · t^alpha` fitted on log–log axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionFit {
    pub alpha: f64,
    pub prefactor: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
}

impl DiffusionFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.prefactor * math::powf(t, self.alpha)
    }
}

/// Least-squares power law over the points with `t` in `window` (inclusive).
pub fn diffusion_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DiffusionFit, DiagnosticsError> {
    if times.len() != values.len() {
        return Err(DiagnosticsError::LengthMismatch(times.len(), values.len()));
    }
    let mut xs = alloc::vec::Vec::new();
    let mut ys = alloc::vec::Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(t > 0.0) || !(v > 0.0) {
            return Err(DiagnosticsError::FitDomain("times and values in the window must be positive"));
        }
        xs.push(math::ln(t));
        ys.push(math::ln(v));
    }
    if xs.len() < 10 {
        return Err(DiagnosticsError::TooFewPoints { needed: 10, got: xs.len() });
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(DiffusionFit { alpha: slope, prefactor: math::exp(intercept), fit_window: window, r_squared: r2 })
}

/// [`diffusion_exponent`] over every point with positive time.
pub fn power_law_fit(times: &[f64], values: &[f64]) -> Result<DiffusionFit, DiagnosticsError> {
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = times.iter().copied().filter(|&t| t > 0.0).fold(f64::INFINITY, f64::min);
    diffusion_exponent(times, values, (lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn grid() -> Vec<f64> {
        (1..=200).map(|i| i as f64 * 2.5).collect()
    }

    #[test]
    fn exact_linear_growth() {
        let t = grid();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * t).collect();
        let fit = diffusion_exponent(&t, &y, (1.0, 500.0)).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-6);
        assert!((fit.prefactor - 3.0).abs() < 1e-6);
    }

    #[test]
    fn noisy_subdiffusion() {
        let t = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let y: Vec<f64> = t.iter().map(|&t| libm::pow(t, 0.7) * (1.0 + noise.sample(&mut rng))).collect();
        let fit = diffusion_exponent(&t, &y, (1.0, 500.0)).unwrap();
        assert!((fit.alpha - 0.7).abs() < 0.05, "{}", fit.alpha);
        assert!(fit.r_squared > 0.9);
    }

    #[test]
    fn constant_series() {
        let t = grid();
        let y = alloc::vec![2.0; t.len()];
        let fit = diffusion_exponent(&t, &y, (1.0, 500.0)).unwrap();
        assert!(fit.alpha.abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let t = grid();
        let mut y: Vec<f64> = t.to_vec();
        y[5] = 0.0;
        assert!(matches!(diffusion_exponent(&t, &y, (1.0, 500.0)), Err(DiagnosticsError::FitDomain(_))));
        assert!(matches!(diffusion_exponent(&t, &t, (1.0, 10.0)), Err(DiagnosticsError::TooFewPoints { .. })));
    }

    proptest! {
        #[test]
        fn scale_invariance(c in 1e-3f64..1e3, alpha in 0.1f64..2.0) {
            let t = grid();
            let y: Vec<f64> = t.iter().map(|&t| libm::pow(t, alpha) * (1.0 + 0.1 * libm::sin(t))).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let a = diffusion_exponent(&t, &y, (1.0, 500.0)).unwrap();
            let b = diffusion_exponent(&t, &ys, (1.0, 500.0)).unwrap();
            prop_assert!((a.alpha - b.alpha).abs() < 1e-12);
        }
    }
}
