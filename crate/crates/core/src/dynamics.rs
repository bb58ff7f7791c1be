//! The evolution law in nonlocal form,
//!
//! ```text
//! u_t + ∂^{2j+1}u + ½∂(u²) + ∂(1-∂²)^{-1}[u² + ½u_x²] = 0,
//! ```
//!
//! an integrating-factor RK4 stepper for it, and the Duhamel/Picard
//! fixed-point machinery on a finite time window.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::sobolev_norm;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integral_weights, uniform_spacing};
use crate::spectral::{
    apply_hermitian_symbol, derivative_symbol, fft_forward, fft_inverse, product, zero_pad, Grid,
    RealField,
};

/// Advisory cap on `dt · (n/2)^{2j+1}`.
pub const STIFFNESS_ADVISORY: f64 = 50.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub dt: f64,
    pub t_end: f64,
    /// Two-thirds truncation of the quadratic products.
    pub dealias: bool,
    /// When false the nonlinear term is switched off and the stepper is the
    /// exact free propagator.
    pub nonlinear: bool,
}

impl EvolutionParams {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            dealias: true,
            nonlinear: true,
        }
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        Ok(())
    }

    /// Advisory messages for this step size on `grid`; empty when none apply.
    pub fn advisories(&self, grid: &Grid) -> Vec<String> {
        let stiff = self.dt * (grid.nyquist() as f64).powi(2 * grid.j() as i32 + 1);
        if stiff > STIFFNESS_ADVISORY {
            vec![format!(
                "dt*(n/2)^(2j+1) = {stiff:.3e} exceeds advisory cap {STIFFNESS_ADVISORY}"
            )]
        } else {
            Vec::new()
        }
    }
}

/// States sampled at strictly increasing times on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<RealField>,
    warnings: Vec<String>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<RealField>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(invalid("trajectory needs matching, non-empty times and states"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("trajectory times must be strictly increasing"));
        }
        let grid = states[0].grid();
        if states.iter().any(|s| s.grid() != grid) {
            return Err(invalid("trajectory states must share one grid"));
        }
        Ok(Self {
            times,
            states,
            warnings: Vec::new(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[RealField] {
        &self.states
    }

    pub fn grid(&self) -> Grid {
        self.states[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> &RealField {
        &self.states[0]
    }

    pub fn last(&self) -> &RealField {
        self.states.last().expect("non-empty")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Writes `t_<index>.csv` snapshots and `times.csv` into `dir`, returning
    /// the file names written.
    pub fn write_dir(&self, dir: &std::path::Path) -> Result<Vec<String>> {
        use std::io::Write;
        std::fs::create_dir_all(dir)?;
        let mut names = Vec::with_capacity(self.len() + 1);
        let mut times = std::io::BufWriter::new(std::fs::File::create(dir.join("times.csv"))?);
        writeln!(times, "index,time")?;
        for (i, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            writeln!(times, "{i},{}", crate::numfmt::Num(*t))?;
            let name = format!("t_{i}.csv");
            let f = std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?);
            s.write_csv(f)?;
            names.push(name);
        }
        times.flush()?;
        names.push("times.csv".to_string());
        Ok(names)
    }
}

/// `ω(k) = (-1)^{j+1} k^{2j+1}`; free solutions evolve as `c(k,t) = e^{iωt} c(k,0)`.
pub fn dispersion_phase(k: i64, j: u32) -> f64 {
    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
    sign * (k as f64).powi(2 * j as i32 + 1)
}

/// The free group `S(t)`.
pub fn free_propagate(u: &RealField, t: f64) -> RealField {
    let j = u.grid().j();
    apply_hermitian_symbol(u, |k| Complex64::from_polar(1.0, dispersion_phase(k, j) * t))
}

/// Evaluates the nonlinear term on raw coefficient arrays with cached plans
/// and scratch buffers.
pub(crate) struct NonlinearOp {
    grid: Grid,
    ik: Vec<Complex64>,
    /// `-½ik - ik/(1+k²)`, the multiplier on `(u²)^`.
    on_square: Vec<Complex64>,
    /// `-½ik/(1+k²)`, the multiplier on `(u_x²)^`.
    on_grad_square: Vec<Complex64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl NonlinearOp {
    pub(crate) fn new(grid: Grid, dealias: bool) -> Self {
        let n = grid.n_points();
        let cut = grid.dealias_cutoff();
        let mut ik = vec![ZERO; n];
        let mut on_square = vec![ZERO; n];
        let mut on_grad_square = vec![ZERO; n];
        for idx in 0..n {
            let k = grid.mode(idx);
            // odd symbols average to zero on the Nyquist mode
            if k == grid.nyquist() {
                continue;
            }
            let kf = k as f64;
            let helm = 1.0 / (1.0 + kf * kf);
            ik[idx] = Complex64::new(0.0, kf);
            if dealias && k.abs() > cut {
                continue;
            }
            on_square[idx] = Complex64::new(0.0, -0.5 * kf - kf * helm);
            on_grad_square[idx] = Complex64::new(0.0, -0.5 * kf * helm);
        }
        Self {
            grid,
            ik,
            on_square,
            on_grad_square,
            fwd: fft_forward(n),
            inv: fft_inverse(n),
            scratch: vec![ZERO; n],
        }
    }

    pub(crate) fn eval(&mut self, c: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.n_points();
        // u and u_x are real, so pack them as u + i u_x in one transform
        for idx in 0..n {
            self.scratch[idx] = c[idx] + Complex64::i() * self.ik[idx] * c[idx];
        }
        self.inv.process(&mut self.scratch);
        for z in self.scratch.iter_mut() {
            let (u, ux) = (z.re, z.im);
            *z = Complex64::new(u * u, ux * ux);
        }
        self.fwd.process(&mut self.scratch);
        let inv_n = 1.0 / n as f64;
        for idx in 0..n {
            let z = self.scratch[idx];
            let zc = self.scratch[(n - idx) % n].conj();
            let sq = 0.5 * (z + zc) * inv_n;
            let grad_sq = Complex64::new(0.0, -0.5) * (z - zc) * inv_n;
            out[idx] = self.on_square[idx] * sq + self.on_grad_square[idx] * grad_sq;
        }
    }
}

/// `N(u) = -½∂(u²) - ∂(1-∂²)^{-1}[u² + ½u_x²]` with dealiased products.
pub fn nonlinear_term(u: &RealField) -> RealField {
    nonlinear_term_with(u, true)
}

pub fn nonlinear_term_with(u: &RealField, dealias: bool) -> RealField {
    let grid = u.grid();
    let mut op = NonlinearOp::new(grid, dealias);
    let mut out = vec![ZERO; grid.n_points()];
    op.eval(u.coeffs(), &mut out);
    RealField::from_raw(grid, out)
}

/// `-∂^{2j+1}u + N(u)`, the right-hand side of the nonlocal form.
pub fn time_derivative(u: &RealField) -> RealField {
    let j = u.grid().j();
    let lin = apply_hermitian_symbol(u, |k| Complex64::new(0.0, dispersion_phase(k, j)));
    lin.add(&nonlinear_term(u)).expect("same grid")
}

/// L² norm of the local form's left-hand side,
/// `(1-∂²)u_t + ∂^{2j+1}(1-∂²)u + 3uu_x - 2u_x u_xx - u u_xxx`,
/// with products evaluated alias-free on a doubled grid.
pub fn original_form_residual(u: &RealField, u_t: &RealField) -> Result<f64> {
    if u.grid() != u_t.grid() {
        return Err(invalid("u and u_t must share a grid"));
    }
    let fine = 2 * u.grid().n_points();
    let u = zero_pad(u, fine)?;
    let u_t = zero_pad(u_t, fine)?;
    let j = u.grid().j();
    let helmholtz = |k: i64| Complex64::new(1.0 + (k * k) as f64, 0.0);
    let d = |f: &RealField, p: u32| apply_hermitian_symbol(f, derivative_symbol(p));

    let ux = d(&u, 1);
    let uxx = d(&u, 2);
    let uxxx = d(&u, 3);
    let mut total = apply_hermitian_symbol(&u_t, helmholtz);
    let dispersive = apply_hermitian_symbol(&u, |k| {
        derivative_symbol(2 * j + 1)(k) * helmholtz(k)
    });
    total = total.add(&dispersive)?;
    total = total.add(&product(&u, &ux, false)?.scale(3.0))?;
    total = total.sub(&product(&ux, &uxx, false)?.scale(2.0))?;
    total = total.sub(&product(&u, &uxxx, false)?)?;
    Ok(total.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
}

/// Integrating-factor RK4 in the interaction variable `v = S(-t)c`.
///
/// Phases are evaluated from the absolute time `t_n = n·dt` at every stage,
/// so their rounding never compounds; a linear run leaves `v` untouched.
pub(crate) struct Stepper {
    grid: Grid,
    nonlinear: bool,
    dt: f64,
    steps_done: usize,
    v: Vec<Complex64>,
    op: NonlinearOp,
    omega: Vec<f64>,
    p0: (Vec<Complex64>, Vec<Complex64>),
    pm: (Vec<Complex64>, Vec<Complex64>),
    p1: (Vec<Complex64>, Vec<Complex64>),
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
    out: Vec<Complex64>,
}

impl Stepper {
    pub(crate) fn new(u0: &RealField, dt: f64, dealias: bool, nonlinear: bool) -> Self {
        let grid = u0.grid();
        let n = grid.n_points();
        let j = grid.j();
        let omega = (0..n).map(|i| dispersion_phase(grid.mode(i), j)).collect();
        let mut st = Self {
            grid,
            nonlinear,
            dt,
            steps_done: 0,
            v: u0.coeffs().to_vec(),
            op: NonlinearOp::new(grid, dealias),
            omega,
            p0: (vec![ZERO; n], vec![ZERO; n]),
            pm: (vec![ZERO; n], vec![ZERO; n]),
            p1: (vec![ZERO; n], vec![ZERO; n]),
            k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            tmp: vec![ZERO; n],
            out: vec![ZERO; n],
        };
        st.fill_phases_at(0.0, Which::Start);
        st
    }

    fn fill_phases_at(&mut self, t: f64, which: Which) {
        let nyq = self.grid.n_points() / 2;
        let (fwd, back) = match which {
            Which::Start => (&mut self.p0.0, &mut self.p0.1),
            Which::Mid => (&mut self.pm.0, &mut self.pm.1),
            Which::End => (&mut self.p1.0, &mut self.p1.1),
        };
        for (i, w) in self.omega.iter().enumerate() {
            if i == nyq {
                // cos(nx/2) only sees the real part of its phase on the grid;
                // the nonlinear term never feeds this mode
                fwd[i] = Complex64::new((w * t).cos(), 0.0);
                back[i] = ZERO;
            } else {
                let z = Complex64::from_polar(1.0, w * t);
                fwd[i] = z;
                back[i] = z.conj();
            }
        }
    }

    pub(crate) fn time(&self) -> f64 {
        self.steps_done as f64 * self.dt
    }

    /// Coefficients at the current time.
    pub(crate) fn state(&self) -> Vec<Complex64> {
        self.v.iter().zip(&self.p0.0).map(|(v, p)| v * p).collect()
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn stage(&mut self, which: Which, base_scale: f64, from: Option<usize>, slot: usize) {
        let (fwd, back) = match which {
            Which::Start => (&self.p0.0, &self.p0.1),
            Which::Mid => (&self.pm.0, &self.pm.1),
            Which::End => (&self.p1.0, &self.p1.1),
        };
        for i in 0..self.v.len() {
            let w = match from {
                Some(f) => self.v[i] + base_scale * self.k[f][i],
                None => self.v[i],
            };
            self.tmp[i] = fwd[i] * w;
        }
        self.op.eval(&self.tmp, &mut self.out);
        for i in 0..self.v.len() {
            self.k[slot][i] = back[i] * self.out[i];
        }
    }

    pub(crate) fn advance(&mut self) {
        let h = self.dt;
        let t = self.time();
        let next = (self.steps_done + 1) as f64 * h;
        if self.nonlinear {
            self.fill_phases_at(t + 0.5 * h, Which::Mid);
            self.fill_phases_at(next, Which::End);
            self.stage(Which::Start, 0.0, None, 0);
            self.stage(Which::Mid, 0.5 * h, Some(0), 1);
            self.stage(Which::Mid, 0.5 * h, Some(1), 2);
            self.stage(Which::End, h, Some(2), 3);
            for i in 0..self.v.len() {
                self.v[i] += h / 6.0
                    * (self.k[0][i] + 2.0 * (self.k[1][i] + self.k[2][i]) + self.k[3][i]);
            }
            std::mem::swap(&mut self.p0, &mut self.p1);
        } else {
            self.fill_phases_at(next, Which::Start);
        }
        self.steps_done += 1;
    }
}

#[derive(Clone, Copy)]
enum Which {
    Start,
    Mid,
    End,
}

fn require_zero_mean(u: &RealField) -> Result<RealField> {
    let scale = u.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if u.coeff(0).norm() > 1e-14 * scale {
        return Err(invalid(format!(
            "initial data must have zero mean, got mean {}",
            u.mean()
        )));
    }
    Ok(crate::spectral::project_zero_mean(u))
}

/// One integrating-factor RK4 step of size `params.dt`.
pub fn step(u: &RealField, params: &EvolutionParams) -> Result<RealField> {
    params.validate()?;
    let mut st = Stepper::new(u, params.dt, params.dealias, params.nonlinear);
    st.advance();
    let out = RealField::from_raw(u.grid(), st.state());
    if !out.is_finite() {
        return Err(Error::BlowUp {
            step: 1,
            time: params.dt,
        });
    }
    Ok(out)
}

/// Number of steps and the uniform step that lands exactly on `t_end`.
pub(crate) fn step_plan(params: &EvolutionParams) -> (usize, f64) {
    if params.t_end == 0.0 {
        return (0, params.dt);
    }
    let n = (params.t_end / params.dt - 1e-9).ceil().max(1.0) as usize;
    (n, params.t_end / n as f64)
}

/// Repeated [`step`] from `u0`, keeping every `record_every`-th state and the
/// final one.
pub fn evolve(u0: &RealField, params: &EvolutionParams, record_every: usize) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    evolve_streaming(u0, params, record_every, |t, u| {
        times.push(t);
        states.push(u.clone());
    })?;
    let mut traj = Trajectory::new(times, states)?;
    traj.warnings = params.advisories(&traj.grid());
    Ok(traj)
}

/// [`evolve`] without storage: `observe(t, u)` sees the initial state, every
/// `record_every`-th state and the final one, in order.
pub fn evolve_streaming<F>(
    u0: &RealField,
    params: &EvolutionParams,
    record_every: usize,
    mut observe: F,
) -> Result<RealField>
where
    F: FnMut(f64, &RealField),
{
    params.validate()?;
    if record_every == 0 {
        return Err(invalid("record_every must be positive"));
    }
    let u0 = require_zero_mean(u0)?;
    let grid = u0.grid();
    let (n_steps, dt) = step_plan(params);
    let mut stepper = Stepper::new(&u0, dt, params.dealias, params.nonlinear);
    observe(0.0, &u0);
    let mut last = u0;
    for i in 1..=n_steps {
        stepper.advance();
        if !stepper.is_finite() {
            return Err(Error::BlowUp {
                step: i,
                time: i as f64 * dt,
            });
        }
        if i % record_every == 0 || i == n_steps {
            last = RealField::from_raw(grid, stepper.state());
            observe(if i == n_steps { params.t_end } else { i as f64 * dt }, &last);
        }
    }
    Ok(last)
}

/// `S(-t_i) N(u(t_i))` for every stored state.
fn interaction_forcing(traj: &Trajectory, params: &EvolutionParams) -> Vec<Vec<Complex64>> {
    let grid = traj.grid();
    let j = grid.j();
    let n = grid.n_points();
    if !params.nonlinear {
        return vec![vec![ZERO; n]; traj.len()];
    }
    let mut op = NonlinearOp::new(grid, params.dealias);
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, u)| {
            let mut nl = vec![ZERO; n];
            op.eval(u.coeffs(), &mut nl);
            for (idx, z) in nl.iter_mut().enumerate() {
                let k = grid.mode(idx);
                *z *= Complex64::from_polar(1.0, -dispersion_phase(k, j) * t);
            }
            nl
        })
        .collect()
}

fn duhamel_from_integral(u0: &RealField, integral: &[Complex64], t: f64) -> RealField {
    let grid = u0.grid();
    let c: Vec<Complex64> = u0.coeffs().iter().zip(integral).map(|(a, b)| a + b).collect();
    free_propagate(&RealField::from_raw(grid, c), t)
}

/// `S(t)u0 + ∫₀ᵗ S(t-t')N(u(t'))dt'` with the time integral taken by
/// composite Simpson over the trajectory's stored states. `t` must be one of
/// the stored times.
pub fn duhamel_apply(
    u0: &RealField,
    traj: &Trajectory,
    t: f64,
    params: &EvolutionParams,
) -> Result<RealField> {
    let h = uniform_spacing(&traj.times)?;
    if t == 0.0 {
        return Ok(u0.clone());
    }
    if u0.grid() != traj.grid() {
        return Err(invalid("u0 and trajectory live on different grids"));
    }
    let idx = ((t - traj.times[0]) / h).round() as usize;
    if idx >= traj.len() || (traj.times[idx] - t).abs() > 1e-9 * h {
        return Err(invalid(format!("t = {t} is not a stored trajectory time")));
    }
    let forcing = interaction_forcing(traj, params);
    let w = integral_weights(idx, traj.len(), h);
    let n = u0.grid().n_points();
    let mut integral = vec![ZERO; n];
    for (wi, g) in w.iter().zip(&forcing) {
        if *wi != 0.0 {
            for (acc, z) in integral.iter_mut().zip(g) {
                *acc += *wi * z;
            }
        }
    }
    Ok(duhamel_from_integral(u0, &integral, t))
}

/// Integrals `∫₀^{t_i} g` for every lattice point, built incrementally with
/// the same rules as [`integral_weights`].
fn cumulative_integrals(values: &[Vec<Complex64>], h: f64) -> Vec<Vec<Complex64>> {
    let m = values.len();
    let n = values.first().map_or(0, Vec::len);
    let mut out = vec![vec![ZERO; n]; m];
    let combine = |out: &mut Vec<Complex64>, base: Option<&Vec<Complex64>>, terms: &[(usize, f64)]| {
        if let Some(b) = base {
            out.copy_from_slice(b);
        }
        for &(i, w) in terms {
            for (o, v) in out.iter_mut().zip(&values[i]) {
                *o += w * v;
            }
        }
    };
    for i in 1..m {
        let mut acc = vec![ZERO; n];
        if i == 1 {
            let terms: Vec<(usize, f64)> = integral_weights(1, m.min(3), h)
                .into_iter()
                .enumerate()
                .collect();
            combine(&mut acc, None, &terms);
        } else if i % 2 == 0 {
            let prev = out[i - 2].clone();
            combine(
                &mut acc,
                Some(&prev),
                &[(i - 2, h / 3.0), (i - 1, 4.0 * h / 3.0), (i, h / 3.0)],
            );
        } else {
            let s = i - 3;
            let prev = out[s].clone();
            combine(
                &mut acc,
                Some(&prev),
                &[
                    (s, 3.0 * h / 8.0),
                    (s + 1, 9.0 * h / 8.0),
                    (s + 2, 9.0 * h / 8.0),
                    (s + 3, 3.0 * h / 8.0),
                ],
            );
        }
        out[i] = acc;
    }
    out
}

/// One Picard iterate with its sup-in-time `H^s` distance to the previous one.
#[derive(Debug, Clone)]
pub struct PicardStep {
    pub trajectory: Trajectory,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct PicardReport {
    pub delta: f64,
    pub s: f64,
    /// Iterate 0, the free evolution on the time lattice.
    pub free: Trajectory,
    /// Iterates `1..=n_iter`.
    pub steps: Vec<PicardStep>,
    /// Set when the distances grew for three consecutive iterations.
    pub non_contraction: bool,
}

impl PicardReport {
    pub fn distances(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.distance).collect()
    }

    /// `d_{m+1}/d_m`, stopping once `d_{m+1}` reaches `floor`, below which the
    /// quotient is round-off.
    pub fn ratios(&self, floor: f64) -> Vec<f64> {
        let d = self.distances();
        d.windows(2)
            .take_while(|w| w[1] > floor)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    pub fn fixed_point(&self) -> &Trajectory {
        self.steps.last().map_or(&self.free, |s| &s.trajectory)
    }
}

/// Default local window `min(0.05, 0.1/‖u0‖_{H¹})`.
pub fn default_picard_delta(u0: &RealField) -> f64 {
    let h1 = sobolev_norm(u0, 1.0);
    if h1 == 0.0 {
        0.05
    } else {
        (0.1 / h1).min(0.05)
    }
}

/// Picard iteration of the Duhamel map on `[0, δ]`. The time lattice uses
/// an even number of slices no coarser than `params.dt`.
pub fn picard_iterate(
    u0: &RealField,
    delta: f64,
    n_iter: usize,
    params: &EvolutionParams,
    s: f64,
) -> Result<PicardReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    if n_iter == 0 {
        return Err(invalid("n_iter must be positive"));
    }
    params.validate()?;
    let u0 = require_zero_mean(u0)?;
    let mut slices = (delta / params.dt - 1e-9).ceil().max(2.0) as usize;
    if slices % 2 == 1 {
        slices += 1;
    }
    let h = delta / slices as f64;
    let times: Vec<f64> = (0..=slices).map(|i| i as f64 * h).collect();
    let free_states: Vec<RealField> = times.iter().map(|&t| free_propagate(&u0, t)).collect();
    let free = Trajectory::new(times.clone(), free_states)?;

    let mut steps: Vec<PicardStep> = Vec::with_capacity(n_iter);
    let mut increases = 0usize;
    let mut non_contraction = false;
    for _ in 0..n_iter {
        let prev = steps.last().map_or(&free, |s| &s.trajectory);
        let forcing = interaction_forcing(prev, params);
        let integrals = cumulative_integrals(&forcing, h);
        let states: Vec<RealField> = times
            .iter()
            .zip(&integrals)
            .map(|(&t, int)| duhamel_from_integral(&u0, int, t))
            .collect();
        let distance = states
            .iter()
            .zip(prev.states())
            .map(|(a, b)| sobolev_norm(&a.sub(b).expect("same grid"), s))
            .fold(0.0, f64::max);
        if let Some(last) = steps.last() {
            if distance > last.distance {
                increases += 1;
                if increases >= 3 {
                    non_contraction = true;
                }
            } else {
                increases = 0;
            }
        }
        steps.push(PicardStep {
            trajectory: Trajectory::new(times.clone(), states)?,
            distance,
        });
    }
    Ok(PicardReport {
        delta,
        s,
        free,
        steps,
        non_contraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::forward_transform;

    fn cos_field(n: usize, j: u32, a: f64) -> RealField {
        let g = Grid::new(n, j).unwrap();
        RealField::from_positive_modes(g, [(1, Complex64::new(0.5 * a, 0.0))]).unwrap()
    }

    #[test]
    fn dispersion_phase_examples() {
        assert_eq!(dispersion_phase(2, 1), 8.0);
        assert_eq!(dispersion_phase(0, 3), 0.0);
        assert_eq!(dispersion_phase(1, 2), -1.0);
        assert_eq!(dispersion_phase(-2, 1), -8.0);
    }

    #[test]
    fn phase_sign_matches_linear_equation() {
        // c' = -(ik)^{2j+1} c
        for j in 1..=3 {
            for k in -5i64..=5 {
                let lhs = -Complex64::new(0.0, k as f64).powu(2 * j + 1);
                let rhs = Complex64::new(0.0, dispersion_phase(k, j));
                assert!((lhs - rhs).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn nonlinear_term_of_cosine() {
        // u² = ½ + ½cos2x, u_x² = ½ - ½cos2x: N = -½∂(u²) - ∂(1-∂²)^{-1}[u²+½u_x²]
        //   = ½ sin2x + (2/5)(⅛·2) sin2x = (3/5) sin2x
        let u = cos_field(32, 1, 1.0);
        let n = nonlinear_term(&u);
        for (x, v) in u.grid().points().into_iter().zip(n.samples()) {
            assert!((v - 0.6 * (2.0 * x).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn nonlinear_term_of_zero_and_mean() {
        let g = Grid::new(32, 1).unwrap();
        assert!(nonlinear_term(&RealField::zeros(g)).coeffs().iter().all(|c| c.norm() == 0.0));
        let samples: Vec<f64> = g.points().iter().map(|x| (x.sin() * 3.0).exp() - 1.0).collect();
        let u = forward_transform(&samples, g).unwrap();
        assert_eq!(nonlinear_term(&u).coeff(0), ZERO);
    }

    #[test]
    fn residual_of_cosine_with_zero_time_derivative() {
        // 3uu_x - 2u_x u_xx - u u_xxx = -3 sin2x and ∂³(1-∂²)cos x = 2 sin x,
        // so the residual is ‖2 sin x - 3 sin 2x‖ = sqrt(13/2).
        let u = cos_field(32, 1, 1.0);
        let r = original_form_residual(&u, &RealField::zeros(u.grid())).unwrap();
        assert!((r - 6.5f64.sqrt()).abs() < 1e-12, "{r}");
        let z = RealField::zeros(u.grid());
        assert_eq!(original_form_residual(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn linear_step_is_the_free_propagator() {
        let u = cos_field(32, 1, 0.7);
        let p = EvolutionParams::new(0.01, 0.01).linear();
        let stepped = step(&u, &p).unwrap();
        let exact = free_propagate(&u, 0.01);
        for (a, b) in stepped.coeffs().iter().zip(exact.coeffs()) {
            assert!((a - b).norm() < 1e-16);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::new(32, 2).unwrap();
        let z = RealField::zeros(g);
        let out = step(&z, &EvolutionParams::new(1e-3, 1e-3)).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = Grid::new(16, 1).unwrap();
        let u = RealField::from_positive_modes(g, [(1, Complex64::new(1e200, 0.0))]).unwrap();
        let err = evolve(&u, &EvolutionParams::new(0.1, 1.0), 1).unwrap_err();
        assert!(matches!(err, Error::BlowUp { step: 1, .. }), "{err:?}");
    }

    #[test]
    fn evolve_zero_horizon_and_free_phase() {
        let u = cos_field(16, 1, 1.0);
        let t0 = evolve(&u, &EvolutionParams::new(0.1, 0.0), 1).unwrap();
        assert_eq!(t0.len(), 1);

        let p = EvolutionParams::new(std::f64::consts::PI / 100.0, std::f64::consts::PI).linear();
        let traj = evolve(&u, &p, 10).unwrap();
        assert_eq!(traj.len(), 11);
        assert!((traj.last().coeff(1) - Complex64::new(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let g = Grid::new(16, 1).unwrap();
        let u = forward_transform(&[1.0; 16], g).unwrap();
        assert!(evolve(&u, &EvolutionParams::new(0.1, 1.0), 1).is_err());
    }

    #[test]
    fn duhamel_of_free_flow_and_at_zero() {
        let u = cos_field(16, 1, 0.3);
        let p = EvolutionParams::new(0.01, 0.2).linear();
        let traj = evolve(&u, &p, 1).unwrap();
        let at_zero = duhamel_apply(&u, &traj, 0.0, &p).unwrap();
        assert_eq!(at_zero, u);
        let t = traj.times()[7];
        let d = duhamel_apply(&u, &traj, t, &p).unwrap();
        let exact = free_propagate(&u, t);
        for (a, b) in d.coeffs().iter().zip(exact.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn duhamel_rejects_non_uniform_lattice() {
        let u = cos_field(16, 1, 0.3);
        let states = vec![u.clone(), u.clone(), u.clone()];
        let traj = Trajectory::new(vec![0.0, 0.1, 0.3], states).unwrap();
        assert!(duhamel_apply(&u, &traj, 0.1, &EvolutionParams::new(0.1, 0.3)).is_err());
    }

    #[test]
    fn picard_on_zero_data() {
        let g = Grid::new(16, 1).unwrap();
        let rep = picard_iterate(&RealField::zeros(g), 0.05, 3, &EvolutionParams::new(1e-3, 0.05), 1.0)
            .unwrap();
        assert!(rep.distances().iter().all(|&d| d == 0.0));
        assert!(!rep.non_contraction);
    }

    #[test]
    fn advisory_flags_stiff_steps() {
        let g = Grid::new(256, 1).unwrap();
        assert!(!EvolutionParams::new(1e-4, 1.0).advisories(&g).is_empty());
        assert!(EvolutionParams::new(1e-5, 1.0).advisories(&g).is_empty());
    }
}
