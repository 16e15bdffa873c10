use alloc::vec::Vec;

use crate::error::DiagnosticsError;
use crate::math;

/// A sampled one-dimensional density.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionProfile {
    /// Strictly increasing sample positions.
    pub axis: Vec<f64>,
    /// Non-negative density values.
    pub density: Vec<f64>,
    /// Trapezoid integral of `density` over `axis`.
    pub total: f64,
}

impl DistributionProfile {
    pub fn new(axis: Vec<f64>, density: Vec<f64>) -> Result<Self, DiagnosticsError> {
        if axis.len() != density.len() {
            return Err(DiagnosticsError::LengthMismatch(axis.len(), density.len()));
        }
        if axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DiagnosticsError::InvalidAxis("axis must be strictly increasing"));
        }
        if density.iter().any(|d| !(*d >= 0.0)) {
            return Err(DiagnosticsError::InvalidAxis("density must be non-negative"));
        }
        Ok(Self::from_parts(axis, density))
    }

    /// Build without validation; callers guarantee the invariants.
    pub(crate) fn from_parts(axis: Vec<f64>, density: Vec<f64>) -> Self {
        let total = trapezoid(&axis, &density);
        DistributionProfile { axis, density, total }
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn trapezoid(&self) -> f64 {
        trapezoid(&self.axis, &self.density)
    }

    /// Mean and standard deviation of the density, by trapezoid quadrature.
    pub fn mean_std(&self) -> (f64, f64) {
        let first: Vec<f64> = self.axis.iter().zip(&self.density).map(|(x, d)| x * d).collect();
        let mean = trapezoid(&self.axis, &first) / self.total;
        let second: Vec<f64> = self.axis.iter().zip(&self.density).map(|(x, d)| (x - mean) * (x - mean) * d).collect();
        (mean, math::sqrt(trapezoid(&self.axis, &second) / self.total))
    }

    /// Same profile with the axis multiplied by `c > 0` and the density
    /// divided by `c`, so the integral is preserved.
    pub fn scaled_axis(&self, c: f64) -> Self {
        Self::from_parts(self.axis.iter().map(|x| x * c).collect(), self.density.iter().map(|d| d / c).collect())
    }

    /// Restrict to the smallest index range holding every value above
    /// `fraction` of the peak density.
    pub fn cropped(&self, fraction: f64) -> Self {
        let peak = self.density.iter().copied().fold(0.0, f64::max);
        let cut = peak * fraction;
        let first = self.density.iter().position(|&d| d > cut).unwrap_or(0);
        let last = self.density.iter().rposition(|&d| d > cut).unwrap_or(self.len().saturating_sub(1));
        Self::from_parts(self.axis[first..=last].to_vec(), self.density[first..=last].to_vec())
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// `bins` equal bins spanning `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, bins: usize) -> Self {
        AxisSpec { min, max, bins }
    }

    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }
}

/// Histogram estimate of a marginal, normalised to unit trapezoid integral.
///
/// The axis holds the bin centres bracketed by `min` and `max`, which repeat
/// the edge bins' values; the trapezoid integral then equals the histogram area.
pub fn histogram_marginal(samples: &[f64], axis: &AxisSpec) -> Result<DistributionProfile, DiagnosticsError> {
    if samples.is_empty() {
        return Err(DiagnosticsError::TooFewPoints { needed: 1, got: 0 });
    }
    if axis.bins < 2 || !(axis.max > axis.min) {
        return Err(DiagnosticsError::InvalidAxis("need at least two bins of positive width"));
    }
    let width = axis.width();
    let mut counts = alloc::vec![0.0f64; axis.bins];
    let mut inside = 0usize;
    for &x in samples {
        if !(x >= axis.min && x <= axis.max) {
            continue;
        }
        let bin = (((x - axis.min) / width) as usize).min(axis.bins - 1);
        counts[bin] += 1.0;
        inside += 1;
    }
    if inside == 0 {
        return Err(DiagnosticsError::EmptyHistogram);
    }
    let mut xs = Vec::with_capacity(axis.bins + 2);
    xs.push(axis.min);
    xs.extend((0..axis.bins).map(|i| axis.min + (i as f64 + 0.5) * width));
    xs.push(axis.max);
    let scale = 1.0 / (inside as f64 * width);
    let mut density = Vec::with_capacity(axis.bins + 2);
    density.push(counts[0] * scale);
    density.extend(counts.iter().map(|c| c * scale));
    density.push(counts[axis.bins - 1] * scale);
    Ok(DistributionProfile::from_parts(xs, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    #[test]
    fn standard_normal_width() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let h = histogram_marginal(&xs, &AxisSpec::new(-6.0, 6.0, 241)).unwrap();
        let (mean, sd) = h.mean_std();
        assert!(mean.abs() < 0.01);
        assert!((sd - 1.0).abs() < 0.01, "{sd}");
        assert!((h.trapezoid() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_sample() {
        let h = histogram_marginal(&[0.3], &AxisSpec::new(0.0, 1.0, 10)).unwrap();
        assert_eq!(h.density.iter().filter(|&&d| d > 0.0).count(), 1);
        assert!((h.trapezoid() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_is_flat() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..400_000).map(|_| u.sample(&mut rng)).collect();
        let h = histogram_marginal(&xs, &AxisSpec::new(0.0, 1.0, 20)).unwrap();
        // Interior bins: binning noise is about 1/sqrt(20_000).
        for &d in &h.density[2..20] {
            assert!((d - 1.0).abs() < 0.05, "{d}");
        }
    }

    #[test]
    fn out_of_range_is_error() {
        let err = histogram_marginal(&[5.0, 6.0], &AxisSpec::new(0.0, 1.0, 10)).unwrap_err();
        assert_eq!(err, DiagnosticsError::EmptyHistogram);
        assert!(histogram_marginal(&[], &AxisSpec::new(0.0, 1.0, 10)).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(DistributionProfile::new(alloc::vec![0.0, 0.0], alloc::vec![1.0, 1.0]).is_err());
        assert!(DistributionProfile::new(alloc::vec![0.0, 1.0], alloc::vec![1.0, -1.0]).is_err());
        assert!(DistributionProfile::new(alloc::vec![0.0, 1.0], alloc::vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn histogram_integrates_to_one(xs in proptest::collection::vec(-3.0f64..3.0, 1..300), bins in 2usize..80) {
            let h = histogram_marginal(&xs, &AxisSpec::new(-3.0, 3.0, bins)).unwrap();
            prop_assert!((h.trapezoid() - 1.0).abs() < 1e-12);
        }
    }
}
