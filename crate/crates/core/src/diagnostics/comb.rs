//! Gaussian-comb fit of a marginal distribution:
//!
//! ```text
//! P(p) = N exp(-(p - c)²/4Δ²) [B + Σₙ exp(-(p - nS - o)²/4σ²)]
//! ```
//!
//! with spacing `S`, tooth width `σ`, envelope width `Δ` centred at `c`, tooth
//! offset `o` and a flat background `B` under the envelope.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::DiagnosticsError;
use crate::math;

use super::lsq::levenberg_marquardt;
use super::profile::DistributionProfile;

const MIN_POINTS: usize = 64;
/// Autocorrelation peaks below this fraction of the zero-lag value are noise.
const PEAK_FLOOR: f64 = 0.05;
/// Profile values below this fraction of the peak are cropped before fitting.
const CROP: f64 = 1e-4;

/// Fitted comb parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombShape {
    pub spacing: f64,
    /// Tooth width `σ_comb`.
    pub comb_width: f64,
    pub envelope_width: f64,
    pub envelope_center: f64,
    pub offset: f64,
    pub normalization: f64,
    pub background: f64,
    /// Root-mean-square residual of the least-squares fit.
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombFit {
    /// Share of the profile's power carried by the periodic component, in `[0, 1]`.
    pub contrast: f64,
    /// `None` when the autocorrelation shows no periodic peak above the noise floor.
    pub shape: Option<CombShape>,
    /// Spacing read off the autocorrelation before refinement.
    pub raw_spacing: Option<f64>,
}

impl CombFit {
    pub fn spacing(&self) -> Option<f64> {
        self.shape.map(|s| s.spacing)
    }

    fn none() -> Self {
        CombFit { contrast: 0.0, shape: None, raw_spacing: None }
    }
}

/// Sum of unit Gaussian teeth `Σₙ exp(-(p - nS - o)²/4σ²)`.
fn teeth(p: f64, spacing: f64, offset: f64, width: f64) -> f64 {
    let reach = 8.0 * width;
    let lo = math::floor((p - offset - reach) / spacing) as i64 + 1;
    let hi = math::floor((p - offset + reach) / spacing) as i64;
    let mut s = 0.0;
    for n in lo..=hi {
        let d = p - n as f64 * spacing - offset;
        s += math::exp(-d * d / (4.0 * width * width));
    }
    s
}

fn envelope(p: f64, shape: &CombShape) -> f64 {
    let d = p - shape.envelope_center;
    math::exp(-d * d / (4.0 * shape.envelope_width * shape.envelope_width))
}

/// Evaluate the comb model.
pub fn comb_model(p: f64, shape: &CombShape) -> f64 {
    shape.normalization
        * envelope(p, shape)
        * (shape.background + teeth(p, shape.spacing, shape.offset, shape.comb_width))
}

/// Periodic part of the model: the teeth minus their mean over a period.
fn periodic_part(p: f64, shape: &CombShape) -> f64 {
    let mean = 2.0 * shape.comb_width * math::sqrt(PI) / shape.spacing;
    shape.normalization * envelope(p, shape) * (teeth(p, shape.spacing, shape.offset, shape.comb_width) - mean)
}

fn pack(s: &CombShape) -> [f64; 7] {
    [s.normalization, s.envelope_center, s.envelope_width, s.background, s.spacing, s.offset, s.comb_width]
}

fn unpack(t: &[f64]) -> CombShape {
    CombShape {
        normalization: t[0],
        envelope_center: t[1],
        envelope_width: t[2],
        background: t[3],
        spacing: t[4],
        offset: t[5],
        comb_width: t[6],
        residual_rms: 0.0,
    }
}

/// Gaussian smoothing with standard deviation `sigma_bins` (in samples).
fn smooth(values: &[f64], sigma_bins: f64) -> Vec<f64> {
    let reach = libm::ceil(4.0 * sigma_bins) as isize;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|k| {
            let u = k as f64 / sigma_bins;
            math::exp(-0.5 * u * u)
        })
        .collect();
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let (mut s, mut w) = (0.0, 0.0);
            for (j, &kv) in (-reach..=reach).zip(&kernel) {
                let idx = i + j;
                if idx >= 0 && idx < n {
                    s += kv * values[idx as usize];
                    w += kv;
                }
            }
            s / w
        })
        .collect()
}

/// Lag (in samples, sub-sample refined) of the dominant non-zero
/// autocorrelation peak, if one clears the noise floor.
fn autocorrelation_peak(residual: &[f64]) -> Option<f64> {
    let n = residual.len();
    let max_lag = n / 2;
    let acf: Vec<f64> =
        (0..=max_lag).map(|lag| residual[..n - lag].iter().zip(&residual[lag..]).map(|(a, b)| a * b).sum()).collect();
    if !(acf[0] > 0.0) {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for lag in 2..max_lag {
        let v = acf[lag];
        if v > acf[lag - 1] && v >= acf[lag + 1] && v > PEAK_FLOOR * acf[0] && best.is_none_or(|(_, b)| v > b) {
            best = Some((lag, v));
        }
    }
    let (lag, _) = best?;
    let (a, b, c) = (acf[lag - 1], acf[lag], acf[lag + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some(lag as f64 + shift.clamp(-0.5, 0.5))
}

/// Fit the Gaussian-comb model to a profile on a uniform axis.
pub fn comb_fit(profile: &DistributionProfile) -> Result<CombFit, DiagnosticsError> {
    if profile.len() < MIN_POINTS {
        return Err(DiagnosticsError::TooFewPoints { needed: MIN_POINTS, got: profile.len() });
    }
    let data = profile.cropped(CROP);
    if data.len() < MIN_POINTS {
        return Ok(CombFit::none());
    }
    let dx = data.axis[1] - data.axis[0];
    if data.axis.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-6 * dx) {
        return Err(DiagnosticsError::InvalidAxis("comb fit needs a uniform axis"));
    }
    let total = data.trapezoid();
    if !(total > 0.0) {
        return Ok(CombFit::none());
    }
    let (mean, std) = data.mean_std();

    // Remove the envelope with a smoothing wide enough to flatten any comb
    // finer than the distribution itself, then look for periodicity.
    let trend = smooth(&data.density, (0.5 * std / dx).max(2.0));
    let residual: Vec<f64> = data.density.iter().zip(&trend).map(|(d, t)| d - t).collect();
    let Some(lag) = autocorrelation_peak(&residual) else {
        return Ok(CombFit::none());
    };
    let spacing0 = lag * dx;

    let (mut s, mut c) = (0.0, 0.0);
    for (&p, &r) in data.axis.iter().zip(&residual) {
        let ph = 2.0 * PI * p / spacing0;
        s += r * math::sin(ph);
        c += r * math::cos(ph);
    }
    let offset0 = spacing0 * libm::atan2(s, c) / (2.0 * PI);
    let peak = data.density.iter().copied().fold(0.0, f64::max);
    let start = CombShape {
        normalization: peak,
        envelope_center: mean,
        envelope_width: std / math::sqrt(2.0),
        background: 0.1,
        spacing: spacing0,
        offset: offset0,
        comb_width: spacing0 / 8.0,
        residual_rms: 0.0,
    };
    let span = data.axis[data.len() - 1] - data.axis[0];
    let clamp = |t: &mut [f64]| {
        t[0] = t[0].max(0.0);
        t[2] = t[2].clamp(dx, 10.0 * span);
        t[3] = t[3].max(0.0);
        t[4] = t[4].clamp(0.5 * spacing0, 1.5 * spacing0);
        t[6] = t[6].clamp(0.25 * dx, t[4]);
    };
    let fitted =
        levenberg_marquardt(&data.axis, &data.density, &pack(&start), |t, p| comb_model(p, &unpack(t)), clamp, 200);
    let mut shape = unpack(&fitted.params);
    shape.offset -= shape.spacing * math::floor(shape.offset / shape.spacing);
    shape.residual_rms = math::sqrt(fitted.cost / data.len() as f64);

    let (mut periodic_power, mut rest_power) = (0.0, 0.0);
    for (&p, &d) in data.axis.iter().zip(&data.density) {
        let per = periodic_part(p, &shape);
        periodic_power += per * per;
        rest_power += (d - per) * (d - per);
    }
    let contrast = if periodic_power + rest_power > 0.0 {
        (periodic_power / (periodic_power + rest_power)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(CombFit { contrast, shape: Some(shape), raw_spacing: Some(spacing0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The comb formula written out directly, independent of `comb_model`.
    fn synthetic(spacing: f64, width: f64, env: f64, offset: f64, lo: f64, hi: f64, n: usize) -> DistributionProfile {
        let axis: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let density = axis
            .iter()
            .map(|&p| {
                let env = libm::exp(-p * p / (4.0 * env * env));
                (-60..=60)
                    .map(|k| {
                        let d = p - k as f64 * spacing - offset;
                        libm::exp(-d * d / (4.0 * width * width))
                    })
                    .sum::<f64>()
                    * env
            })
            .collect();
        DistributionProfile::new(axis, density).unwrap()
    }

    #[test]
    fn recovers_synthetic_comb() {
        let prof = synthetic(PI, 0.05, 3.0, 0.0, -20.0, 20.0, 4001);
        let fit = comb_fit(&prof).unwrap();
        let shape = fit.shape.expect("comb detected");
        assert!((shape.spacing - PI).abs() < 0.01 * PI, "{}", shape.spacing);
        assert!((shape.comb_width - 0.05).abs() < 0.05 * 0.05, "{}", shape.comb_width);
        assert!((shape.envelope_width - 3.0).abs() < 0.05 * 3.0, "{}", shape.envelope_width);
        assert!(shape.comb_width < shape.envelope_width);
        assert!(fit.contrast > 0.5, "{}", fit.contrast);
    }

    #[test]
    fn pure_gaussian_has_no_comb() {
        let axis: Vec<f64> = (0..2001).map(|i| -20.0 + 0.02 * i as f64).collect();
        let density = axis.iter().map(|&p| libm::exp(-p * p / 8.0)).collect();
        let fit = comb_fit(&DistributionProfile::new(axis, density).unwrap()).unwrap();
        assert!(fit.contrast < 0.05, "{}", fit.contrast);
    }

    #[test]
    fn too_short_profile() {
        let prof = DistributionProfile::new((0..10).map(|i| i as f64).collect(), alloc::vec![1.0; 10]).unwrap();
        assert!(matches!(comb_fit(&prof), Err(DiagnosticsError::TooFewPoints { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn scale_equivariance(c in 0.3f64..3.0) {
            let prof = synthetic(PI, 0.1, 3.0, 0.4, -20.0, 20.0, 3001);
            let base = comb_fit(&prof).unwrap().shape.unwrap();
            let scaled = comb_fit(&prof.scaled_axis(c)).unwrap().shape.unwrap();
            prop_assert!(((scaled.spacing / base.spacing) - c).abs() < 1e-4 * c);
            prop_assert!(((scaled.comb_width / base.comb_width) - c).abs() < 1e-3 * c);
            prop_assert!(((scaled.envelope_width / base.envelope_width) - c).abs() < 1e-3 * c);
        }
    }
}
