use alloc::vec::Vec;

use crate::error::DiagnosticsError;
use crate::math;

use super::diffusion::diffusion_exponent;
use super::lsq::linear_fit;

const MIN_POINTS: usize = 32;

/// Out-of-phase oscillation of two variance series.
#[derive(Debug, Clone, PartialEq)]
pub struct BreathingScore {
    /// Pearson correlation of the detrended series; `None` if either residual is flat.
    pub correlation: Option<f64>,
    /// Times of the momentum residual's zero crossings.
    pub crossings: Vec<f64>,
    /// Slope of crossing spacing against time; positive means the oscillation slows down.
    pub period_trend: Option<f64>,
}

/// Log residual of a series after removing its fitted power law.
fn detrend(times: &[f64], values: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
    let window = (times[0], times[times.len() - 1]);
    let fit = diffusion_exponent(times, values, window)?;
    Ok(times.iter().zip(values).map(|(&t, &v)| math::ln(v) - math::ln(fit.eval(t))).collect())
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-24 * n * scale * scale;
    if saa <= tiny || sbb <= tiny {
        return None;
    }
    Some((sab / math::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

fn zero_crossings(times: &[f64], r: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..r.len() {
        let (a, b) = (r[i - 1], r[i]);
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            let f = a / (a - b);
            out.push(times[i - 1] + f * (times[i] - times[i - 1]));
        }
    }
    out
}

/// Correlate the detrended momentum and position variances on a shared,
/// strictly positive time grid.
pub fn breathing_score(times: &[f64], var_p: &[f64], var_z: &[f64]) -> Result<BreathingScore, DiagnosticsError> {
    if times.len() != var_p.len() {
        return Err(DiagnosticsError::LengthMismatch(times.len(), var_p.len()));
    }
    if times.len() != var_z.len() {
        return Err(DiagnosticsError::LengthMismatch(times.len(), var_z.len()));
    }
    if times.len() < MIN_POINTS {
        return Err(DiagnosticsError::TooFewPoints { needed: MIN_POINTS, got: times.len() });
    }
    let rp = detrend(times, var_p)?;
    let rz = detrend(times, var_z)?;
    let correlation = pearson(&rp, &rz);
    let crossings = zero_crossings(times, &rp);
    let period_trend = if crossings.len() >= 4 {
        let mid: Vec<f64> = crossings.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let gap: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
        Some(linear_fit(&mid, &gap).0)
    } else {
        None
    };
    Ok(BreathingScore { correlation, crossings, period_trend })
}
