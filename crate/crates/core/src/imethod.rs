//! The smoothing operator `I`, the modified energy `‖Iu‖²_{H¹}`, and the
//! commutator decomposition of its increment.
//!
//! Along a solution of the dealiased flow,
//!
//! ```text
//! ‖Iu(δ)‖²_{H¹} - ‖Iu(0)‖²_{H¹}
//!     = ∫∫ (1-∂²)∂(Iu) [I(u²) - (Iu)²]
//!     + 2 ∫∫ ∂(Iu) [I(u²) - (Iu)²]
//!     + ∫∫ ∂(Iu) [I(u_x²) - (∂Iu)²]
//! ```
//!
//! with the spatial integrals taken against the normalized measure
//! `dx/2π`. Products are formed exactly as the stepper forms them, so the
//! identity holds for the discrete system up to time-integration error.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::h1_energy;
use crate::dynamics::{evolve, EvolutionParams, Trajectory};
use crate::error::{invalid, Result};
use crate::numfmt::Num;
use crate::quadrature::{integrate, uniform_spacing};
use crate::spectral::{apply_hermitian_symbol, derivative_symbol, inner, product, RealField};

/// Increments below this magnitude are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMultiplier {
    s: f64,
    n_cutoff: u64,
}

impl IMultiplier {
    pub fn new(s: f64, n_cutoff: u64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(invalid(format!("I-multiplier needs s in (0, 1], got {s}")));
        }
        if n_cutoff == 0 {
            return Err(invalid("I-multiplier cutoff N must be positive"));
        }
        Ok(Self { s, n_cutoff })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n_cutoff(&self) -> u64 {
        self.n_cutoff
    }

    /// True when `m ≡ 1` on `|k| ≤ k_max`.
    pub fn is_identity_up_to(&self, k_max: i64) -> bool {
        self.s == 1.0 || k_max.unsigned_abs() <= self.n_cutoff
    }
}

/// `m(k) = 1` for `|k| ≤ N`, `(N/|k|)^{1-s}` beyond.
pub fn multiplier(k: i64, im: &IMultiplier) -> f64 {
    let a = k.unsigned_abs();
    if a <= im.n_cutoff {
        1.0
    } else {
        (im.n_cutoff as f64 / a as f64).powf(1.0 - im.s)
    }
}

pub fn apply_i(u: &RealField, im: &IMultiplier) -> RealField {
    apply_hermitian_symbol(u, |k| Complex64::new(multiplier(k, im), 0.0))
}

/// `‖Iu‖²_{H¹}`.
pub fn modified_energy(u: &RealField, im: &IMultiplier) -> f64 {
    h1_energy(&apply_i(u, im))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorTerms {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl CommutatorTerms {
    pub fn sum(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }
}

/// Spatial integrands of the three commutator terms at one instant.
pub fn commutator_integrands(u: &RealField, im: &IMultiplier) -> CommutatorTerms {
    let iu = apply_i(u, im);
    let d_iu = apply_hermitian_symbol(&iu, derivative_symbol(1));
    let helm_d_iu = apply_hermitian_symbol(&iu, |k| {
        let kf = k as f64;
        Complex64::new(0.0, kf * (1.0 + kf * kf))
    });
    let ux = apply_hermitian_symbol(u, derivative_symbol(1));
    let sq = |a: &RealField| product(a, a, true).expect("same grid");

    let square_gap = apply_i(&sq(u), im).sub(&sq(&iu)).expect("same grid");
    let grad_gap = apply_i(&sq(&ux), im).sub(&sq(&d_iu)).expect("same grid");
    CommutatorTerms {
        t1: inner(&helm_d_iu, &square_gap).expect("same grid"),
        t2: 2.0 * inner(&d_iu, &square_gap).expect("same grid"),
        t3: inner(&d_iu, &grad_gap).expect("same grid"),
    }
}

/// Space-time integrals of the three terms over the trajectory's window,
/// composite Simpson in time.
pub fn commutator_terms(traj: &Trajectory, im: &IMultiplier) -> Result<CommutatorTerms> {
    let h = uniform_spacing(traj.times())?;
    let per_state: Vec<CommutatorTerms> = traj
        .states()
        .par_iter()
        .map(|u| commutator_integrands(u, im))
        .collect();
    let col = |f: fn(&CommutatorTerms) -> f64| -> Vec<f64> { per_state.iter().map(f).collect() };
    Ok(CommutatorTerms {
        t1: integrate(&col(|c| c.t1), h),
        t2: integrate(&col(|c| c.t2), h),
        t3: integrate(&col(|c| c.t3), h),
    })
}

/// `‖Iu(end)‖²_{H¹} - ‖Iu(start)‖²_{H¹}`.
pub fn energy_increment(traj: &Trajectory, im: &IMultiplier) -> f64 {
    modified_energy(traj.last(), im) - modified_energy(traj.first(), im)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_cutoff: u64,
    pub increment: f64,
    pub abs_increment: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub s: f64,
    pub delta: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log|increment|` against `log N`; `None` when
    /// the fit is degenerate.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Root-mean-square residual of the fit in log space.
    pub residual: Option<f64>,
    /// Cutoffs dropped from the fit for sitting at the noise floor.
    pub excluded: Vec<u64>,
    /// Set when `I` is the identity on the data for every cutoff, or fewer
    /// than two cutoffs survive the noise floor.
    pub degenerate: bool,
}

/// Least-squares line through `(x, y)`: `(slope, intercept, rms residual)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Some((slope, intercept, (rss / nf).sqrt()))
}

/// Runs one evolution on `[0, δ]` and measures the modified-energy increment
/// for each cutoff, fitting its decay in `N`.
pub fn scaling_study(
    u0: &RealField,
    delta: f64,
    multipliers: &[IMultiplier],
    params: &EvolutionParams,
) -> Result<ScalingReport> {
    if multipliers.len() < 4 {
        return Err(invalid("scaling study needs at least 4 cutoffs"));
    }
    let s = multipliers[0].s;
    if multipliers.iter().any(|m| m.s != s) {
        return Err(invalid("scaling study cutoffs must share one s"));
    }
    if multipliers.windows(2).any(|w| w[1].n_cutoff <= w[0].n_cutoff) {
        return Err(invalid("scaling study cutoffs must be strictly ascending"));
    }
    let grid = u0.grid();
    let smallest = grid
        .modes()
        .filter(|&k| k > 0 && u0.coeff(k).norm() > 0.0)
        .min()
        .unwrap_or(1) as u64;
    for m in multipliers {
        if m.n_cutoff as i64 > grid.dealias_cutoff() {
            return Err(invalid(format!(
                "cutoff N = {} exceeds n_points/3 = {}",
                m.n_cutoff,
                grid.dealias_cutoff()
            )));
        }
        if m.n_cutoff < smallest {
            return Err(invalid(format!(
                "cutoff N = {} is below the smallest active mode {smallest}",
                m.n_cutoff
            )));
        }
    }
    let mut p = *params;
    p.t_end = delta;
    let (n_steps, _) = crate::dynamics::step_plan(&p);
    let traj = evolve(u0, &p, n_steps.max(1))?;
    let active = u0.max_active_mode(0.0).max(traj.last().max_active_mode(0.0));

    let rows: Vec<ScalingRow> = multipliers
        .par_iter()
        .map(|m| {
            let inc = energy_increment(&traj, m);
            ScalingRow {
                n_cutoff: m.n_cutoff,
                increment: inc,
                abs_increment: inc.abs(),
                excluded: inc.abs() < NOISE_FLOOR,
            }
        })
        .collect();
    let excluded: Vec<u64> = rows.iter().filter(|r| r.excluded).map(|r| r.n_cutoff).collect();
    let identity_everywhere = multipliers.iter().all(|m| m.is_identity_up_to(active));
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !r.excluded)
        .map(|r| ((r.n_cutoff as f64).ln(), r.abs_increment.ln()))
        .unzip();
    let fit = if identity_everywhere { None } else { fit_line(&x, &y) };
    Ok(ScalingReport {
        s,
        delta,
        rows,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        residual: fit.map(|f| f.2),
        excluded,
        degenerate: fit.is_none(),
    })
}

impl ScalingReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "N,increment,abs_increment")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.n_cutoff, Num(r.increment), Num(r.abs_increment))?;
        }
        Ok(())
    }

    /// `{slope, intercept, residual, excluded}` plus the degeneracy flag.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "excluded": self.excluded,
            "degenerate": self.degenerate,
            "s": self.s,
            "delta": self.delta,
        })
    }
}
