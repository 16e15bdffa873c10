//! Diagnostics shared by runs and by `analyze`, emitted as key-value blocks
//! with columnar residuals.

use fermi_core::diagnostics::{breathing_score, comb_fit, comb_model, diffusion_exponent, DistributionProfile};

use crate::formats::{fmt_f64, Columnar, KeyValue};

/// Drop the two bracketing end points of a histogram so the axis is uniform.
pub fn histogram_interior(profile: &DistributionProfile) -> DistributionProfile {
    let n = profile.len();
    DistributionProfile::new(profile.axis[1..n - 1].to_vec(), profile.density[1..n - 1].to_vec())
        .expect("histogram interior keeps the profile invariants")
}

pub fn profile_table(kind: &str, axis_name: &str, t: f64, profile: &DistributionProfile) -> Columnar {
    Columnar::new(kind)
        .meta("t", fmt_f64(t))
        .column(axis_name, profile.axis.clone())
        .column("density", profile.density.clone())
}

pub fn profile_from_table(table: &Columnar, axis_name: &str) -> Option<DistributionProfile> {
    DistributionProfile::new(table.get(axis_name)?.to_vec(), table.get("density")?.to_vec()).ok()
}

/// Comb fit under `prefix`; returns the residual table when a comb was fitted.
pub fn comb_report(kv: &mut KeyValue, prefix: &str, profile: &DistributionProfile) -> Option<Columnar> {
    let fit = match comb_fit(profile) {
        Ok(f) => f,
        Err(e) => {
            kv.push(format!("{prefix}.error"), e);
            kv.push_opt(format!("{prefix}.contrast"), None);
            return None;
        }
    };
    kv.push(format!("{prefix}.contrast"), fmt_f64(fit.contrast));
    kv.push_opt(format!("{prefix}.raw_spacing"), fit.raw_spacing);
    let shape = fit.shape;
    kv.push_opt(format!("{prefix}.spacing"), shape.map(|s| s.spacing));
    kv.push_opt(format!("{prefix}.comb_width"), shape.map(|s| s.comb_width));
    kv.push_opt(format!("{prefix}.envelope_width"), shape.map(|s| s.envelope_width));
    kv.push_opt(format!("{prefix}.envelope_center"), shape.map(|s| s.envelope_center));
    kv.push_opt(format!("{prefix}.offset"), shape.map(|s| s.offset));
    kv.push_opt(format!("{prefix}.normalization"), shape.map(|s| s.normalization));
    kv.push_opt(format!("{prefix}.background"), shape.map(|s| s.background));
    kv.push_opt(format!("{prefix}.residual_rms"), shape.map(|s| s.residual_rms));
    let shape = shape?;
    let model: Vec<f64> = profile.axis.iter().map(|&p| comb_model(p, &shape)).collect();
    let residual = profile.density.iter().zip(&model).map(|(d, m)| d - m).collect();
    Some(
        Columnar::new("comb_residual")
            .column("x", profile.axis.clone())
            .column("density", profile.density.clone())
            .column("model", model)
            .column("residual", residual),
    )
}

fn window_slice<'a>(times: &'a [f64], window: (f64, f64), series: &[&'a [f64]]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let keep: Vec<usize> =
        (0..times.len()).filter(|&i| times[i] >= window.0 && times[i] <= window.1 && times[i] > 0.0).collect();
    let t = keep.iter().map(|&i| times[i]).collect();
    let cols = series.iter().map(|s| keep.iter().map(|&i| s[i]).collect()).collect();
    (t, cols)
}

pub fn diffusion_report(
    kv: &mut KeyValue,
    prefix: &str,
    times: &[f64],
    var_p: &[f64],
    window: (f64, f64),
) -> Option<Columnar> {
    kv.push(format!("{prefix}.window"), format!("{} {}", fmt_f64(window.0), fmt_f64(window.1)));
    match diffusion_exponent(times, var_p, window) {
        Ok(fit) => {
            kv.push(format!("{prefix}.alpha"), fmt_f64(fit.alpha));
            kv.push(format!("{prefix}.prefactor"), fmt_f64(fit.prefactor));
            kv.push(format!("{prefix}.r_squared"), fmt_f64(fit.r_squared));
            let (t, cols) = window_slice(times, window, &[var_p]);
            let model = t.iter().map(|&t| fit.eval(t)).collect();
            Some(
                Columnar::new("diffusion_residual")
                    .column("t", t)
                    .column("var_p", cols.into_iter().next().unwrap_or_default())
                    .column("model", model),
            )
        }
        Err(e) => {
            kv.push(format!("{prefix}.error"), e);
            kv.push_opt(format!("{prefix}.alpha"), None);
            kv.push_opt(format!("{prefix}.r_squared"), None);
            None
        }
    }
}

pub fn breathing_report(
    kv: &mut KeyValue,
    prefix: &str,
    times: &[f64],
    var_p: &[f64],
    spread_z: &[f64],
    window: (f64, f64),
) {
    let (t, cols) = window_slice(times, window, &[var_p, spread_z]);
    match breathing_score(&t, &cols[0], &cols[1]) {
        Ok(s) => {
            kv.push_opt(format!("{prefix}.correlation"), s.correlation);
            kv.push_opt(format!("{prefix}.period_trend"), s.period_trend);
            kv.push(format!("{prefix}.crossings"), s.crossings.len());
        }
        Err(e) => {
            kv.push(format!("{prefix}.error"), e);
            kv.push_opt(format!("{prefix}.correlation"), None);
        }
    }
}
