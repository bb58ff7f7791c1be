//! Composite Newton–Cotes weights on a uniform lattice.

use crate::error::{invalid, Result};

/// Weights `w` with `∫_{t_0}^{t_n} f ≈ Σ_m w[m] f(t_m)`, returned with
/// length `n_points` (entries past `t_n` are zero unless used as a stencil).
///
/// Even interval counts use composite Simpson; odd counts finish with the
/// 3/8 rule on the last three intervals. A single interval borrows `t_2`
/// for a third-order one-sided formula when it exists.
pub fn integral_weights(n_intervals: usize, n_points: usize, h: f64) -> Vec<f64> {
    assert!(n_points > n_intervals, "lattice too short for the requested interval count");
    let mut w = vec![0.0; n_points];
    match n_intervals {
        0 => {}
        1 if n_points >= 3 => {
            w[0] = 5.0 * h / 12.0;
            w[1] = 8.0 * h / 12.0;
            w[2] = -h / 12.0;
        }
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        n => {
            let simpson_end = if n % 2 == 0 { n } else { n - 3 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            if n % 2 == 1 {
                let s = simpson_end;
                w[s] += 3.0 * h / 8.0;
                w[s + 1] += 9.0 * h / 8.0;
                w[s + 2] += 9.0 * h / 8.0;
                w[s + 3] += 3.0 * h / 8.0;
            }
        }
    }
    w
}

/// Integral of uniformly sampled values over their whole span.
pub fn integrate(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    integral_weights(values.len() - 1, values.len(), h)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Common spacing of `times`, or an error if they are not uniform to
/// `1e-9` relative.
pub fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(0.0);
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(f64::MIN_POSITIVE) {
            return Err(invalid(format!(
                "time lattice is not uniform: step {} differs from {h}",
                w[1] - w[0]
            )));
        }
    }
    Ok(h)
}
