//! Periodic grids, real fields in Fourier coefficient form, and the diagonal
//! multiplier machinery every other module builds on.
//!
//! Coefficients follow the normalization
//! `c(k) = (1/2π) ∫₀^{2π} e^{-ikx} f(x) dx`, so `f(x) = Σ_k c(k) e^{ikx}` and
//! Parseval reads `Σ_k |c(k)|² = (1/2π) ∫ |f|² dx`. Storage is FFT order:
//! slot `i` holds mode `i` for `i ≤ n/2` and mode `i - n` above that.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::numfmt::Num;
use crate::error::{invalid, Error, Result};

/// Relative tolerance for Hermitian symmetry of coefficient arrays.
pub const HERMITIAN_TOL: f64 = 1e-14;
/// Relative tolerance on the imaginary residue left by an inverse transform.
pub const IMAG_RESIDUE_TOL: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn fft_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Uniform lattice on `[0, 2π)` together with the equation order `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    n_points: usize,
    j: u32,
}

impl Grid {
    pub fn new(n_points: usize, j: u32) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(invalid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if j == 0 {
            return Err(invalid("equation order j must be >= 1"));
        }
        Ok(Self { n_points, j })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn length(&self) -> f64 {
        TAU
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n_points as f64
    }

    /// Largest mode magnitude, `n/2`.
    pub fn nyquist(&self) -> i64 {
        (self.n_points / 2) as i64
    }

    /// Largest mode kept by the two-thirds rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n_points / 3) as i64
    }

    /// Modes `-n/2 < k <= n/2` in ascending order.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let h = self.nyquist();
        (-h + 1)..=h
    }

    pub fn index(&self, k: i64) -> usize {
        k.rem_euclid(self.n_points as i64) as usize
    }

    pub fn mode(&self, idx: usize) -> i64 {
        if idx <= self.n_points / 2 {
            idx as i64
        } else {
            idx as i64 - self.n_points as i64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points).map(|i| i as f64 * h).collect()
    }

    /// Same lattice with a different equation order.
    pub fn with_order(&self, j: u32) -> Result<Self> {
        Self::new(self.n_points, j)
    }
}

/// Real 2π-periodic function stored by its Fourier coefficients.
///
/// The coefficient array is always exactly Hermitian; constructors either
/// verify that or build it that way.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl RealField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points],
        }
    }

    /// Builds a field from FFT-ordered coefficients, rejecting arrays that
    /// are not Hermitian to [`HERMITIAN_TOL`] relative.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                grid.n_points,
                coeffs.len()
            )));
        }
        check_hermitian(&grid, &coeffs, HERMITIAN_TOL)?;
        Ok(Self::symmetrized(grid, coeffs))
    }

    /// Builds a field from `(k, c)` pairs with `k >= 0`; negative modes are
    /// filled in by conjugation. Mode `n/2` keeps only its real part.
    pub fn from_positive_modes(
        grid: Grid,
        modes: impl IntoIterator<Item = (i64, Complex64)>,
    ) -> Result<Self> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n_points];
        for (k, c) in modes {
            if k < 0 || k > grid.nyquist() {
                return Err(invalid(format!(
                    "mode {k} outside 0..={}",
                    grid.nyquist()
                )));
            }
            if k == 0 || k == grid.nyquist() {
                coeffs[grid.index(k)] = Complex64::new(c.re, 0.0);
            } else {
                coeffs[grid.index(k)] = c;
                coeffs[grid.index(-k)] = c.conj();
            }
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.n_points);
        Self::symmetrized(grid, coeffs)
    }

    fn symmetrized(grid: Grid, mut coeffs: Vec<Complex64>) -> Self {
        let n = grid.n_points;
        coeffs[0].im = 0.0;
        coeffs[n / 2].im = 0.0;
        for i in 1..n / 2 {
            let avg = 0.5 * (coeffs[i] + coeffs[n - i].conj());
            coeffs[i] = avg;
            coeffs[n - i] = avg.conj();
        }
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.abs() > self.grid.nyquist() {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[self.grid.index(k)]
    }

    /// FFT-ordered coefficient slice.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Mean value, i.e. the real part of `c(0)`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Largest `|k|` with a coefficient above `tol` in magnitude, 0 if none.
    pub fn max_active_mode(&self, tol: f64) -> i64 {
        self.grid
            .modes()
            .filter(|&k| self.coeff(k).norm() > tol)
            .map(i64::abs)
            .max()
            .unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_grid(self, other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_grid(self, other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Grid samples `f(x_i)`.
    pub fn samples(&self) -> Vec<f64> {
        inverse_transform(self).expect("Hermitian by construction")
    }

    /// Writes the `k,re,im` snapshot CSV, one row per mode in ascending order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,re,im")?;
        for k in self.grid.modes() {
            let c = self.coeff(k);
            writeln!(w, "{},{},{}", k, Num(c.re), Num(c.im))?;
        }
        Ok(())
    }

    /// Reads a snapshot CSV written by [`RealField::write_csv`]. The row count
    /// fixes `n_points`.
    pub fn read_csv<R: BufRead>(r: R, j: u32) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 {
                if line != "k,re,im" {
                    return Err(invalid(format!("snapshot header must be `k,re,im`, got `{line}`")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(invalid(format!("snapshot line {}: expected 3 fields", lineno + 1)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("snapshot line {}: {e}", lineno + 1)))
            };
            let k: i64 = parts[0]
                .trim()
                .parse()
                .map_err(|e| invalid(format!("snapshot line {}: {e}", lineno + 1)))?;
            rows.push((k, Complex64::new(parse(parts[1])?, parse(parts[2])?)));
        }
        let grid = Grid::new(rows.len(), j)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n_points];
        for (expected, (k, c)) in grid.modes().zip(&rows) {
            if *k != expected {
                return Err(invalid(format!(
                    "snapshot modes must ascend from {}; found {k} where {expected} expected",
                    -grid.nyquist() + 1
                )));
            }
            coeffs[grid.index(*k)] = *c;
        }
        RealField::from_coeffs(grid, coeffs)
    }
}

fn same_grid(a: &RealField, b: &RealField) -> Result<()> {
    if a.grid != b.grid {
        return Err(invalid("fields live on different grids"));
    }
    Ok(())
}

fn check_hermitian(grid: &Grid, coeffs: &[Complex64], rel_tol: f64) -> Result<()> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(());
    }
    let n = grid.n_points;
    let tol = rel_tol * scale;
    for i in 0..n {
        let partner = (n - i) % n;
        let gap = (coeffs[i] - coeffs[partner].conj()).norm();
        if gap > tol {
            return Err(Error::SymmetryViolation(format!(
                "mode {}: |c(k) - conj c(-k)| = {gap:e} exceeds {tol:e}",
                grid.mode(i)
            )));
        }
    }
    Ok(())
}

/// Coefficients of grid samples under the 1/2π normalization.
pub fn forward_transform(samples: &[f64], grid: Grid) -> Result<RealField> {
    if samples.len() != grid.n_points {
        return Err(invalid(format!(
            "expected {} samples, got {}",
            grid.n_points,
            samples.len()
        )));
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(grid.n_points).process(&mut buf);
    let inv_n = 1.0 / grid.n_points as f64;
    buf.iter_mut().for_each(|c| *c *= inv_n);
    Ok(RealField::from_raw(grid, buf))
}

/// Grid samples of a field. Fails if the synthesized values carry an
/// imaginary part above [`IMAG_RESIDUE_TOL`] relative.
pub fn inverse_transform(field: &RealField) -> Result<Vec<f64>> {
    let mut buf = field.coeffs.clone();
    fft_inverse(field.grid.n_points).process(&mut buf);
    let scale = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let worst_imag = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if scale > 0.0 && worst_imag > IMAG_RESIDUE_TOL * scale {
        return Err(Error::SymmetryViolation(format!(
            "imaginary residue {worst_imag:e} relative to {scale:e}"
        )));
    }
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// Multiplies every coefficient by `symbol(k)` and demands a real result.
///
/// Mode `n/2` represents `cos(n x / 2)` on the grid, so it is scaled by the
/// average of `symbol(n/2)` and `symbol(-n/2)`.
pub fn apply_symbol<S>(field: &RealField, symbol: S) -> Result<RealField>
where
    S: Fn(i64) -> Complex64,
{
    let out = apply_symbol_raw(field, &symbol);
    check_hermitian(&field.grid, &out, HERMITIAN_TOL)?;
    Ok(RealField::symmetrized(field.grid, out))
}

/// [`apply_symbol`] for symbols known to satisfy `s(-k) = conj s(k)`.
pub(crate) fn apply_hermitian_symbol<S>(field: &RealField, symbol: S) -> RealField
where
    S: Fn(i64) -> Complex64,
{
    let out = apply_symbol_raw(field, &symbol);
    RealField::symmetrized(field.grid, out)
}

fn apply_symbol_raw<S>(field: &RealField, symbol: &S) -> Vec<Complex64>
where
    S: Fn(i64) -> Complex64,
{
    let grid = field.grid;
    let h = grid.nyquist();
    field
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = grid.mode(i);
            if k == h {
                c * (0.5 * (symbol(h) + symbol(-h)))
            } else {
                c * symbol(k)
            }
        })
        .collect()
}

/// Zeroes every mode with `|k| > n/3`.
pub fn dealias(field: &RealField) -> RealField {
    let grid = field.grid;
    let cut = grid.dealias_cutoff();
    let mut coeffs = field.coeffs.clone();
    dealias_in_place(&grid, &mut coeffs, cut);
    RealField { grid, coeffs }
}

pub(crate) fn dealias_in_place(grid: &Grid, coeffs: &mut [Complex64], cut: i64) {
    for (i, c) in coeffs.iter_mut().enumerate() {
        if grid.mode(i).abs() > cut {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Sets `c(0) = 0`, leaving every other mode alone.
pub fn project_zero_mean(field: &RealField) -> RealField {
    let mut out = field.clone();
    out.coeffs[0] = Complex64::new(0.0, 0.0);
    out
}

/// `∂_x^p` as a Hermitian symbol.
pub fn derivative_symbol(p: u32) -> impl Fn(i64) -> Complex64 {
    move |k| Complex64::new(0.0, k as f64).powu(p)
}

/// Pseudo-spectral product of two fields, optionally followed by the
/// two-thirds truncation.
pub fn product(a: &RealField, b: &RealField, dealiased: bool) -> Result<RealField> {
    same_grid(a, b)?;
    let grid = a.grid;
    let mut out = product_coeffs(&grid, &a.coeffs, &b.coeffs);
    if dealiased {
        dealias_in_place(&grid, &mut out, grid.dealias_cutoff());
    }
    Ok(RealField::from_raw(grid, out))
}

pub(crate) fn product_coeffs(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n_points;
    let inv = fft_inverse(n);
    let mut pa = a.to_vec();
    let mut pb = b.to_vec();
    inv.process(&mut pa);
    inv.process(&mut pb);
    let mut prod: Vec<Complex64> = pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| Complex64::new(x.re * y.re, 0.0))
        .collect();
    fft_forward(n).process(&mut prod);
    let inv_n = 1.0 / n as f64;
    prod.iter_mut().for_each(|c| *c *= inv_n);
    prod
}

/// `(1/2π) ∫ f g dx` for real fields, evaluated by Parseval.
pub fn inner(a: &RealField, b: &RealField) -> Result<f64> {
    same_grid(a, b)?;
    Ok(a.coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| (x * y.conj()).re)
        .sum())
}

/// Coefficients of `field` on a finer grid with the same modes.
pub fn zero_pad(field: &RealField, n_points: usize) -> Result<RealField> {
    let grid = field.grid;
    if n_points < grid.n_points {
        return Err(invalid("zero_pad target must not be coarser"));
    }
    let fine = Grid::new(n_points, grid.j)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_points];
    let h = grid.nyquist();
    for k in grid.modes() {
        let c = field.coeff(k);
        if k == h && n_points > grid.n_points {
            // split cos(hx) evenly over ±h on the finer grid
            coeffs[fine.index(h)] += 0.5 * c;
            coeffs[fine.index(-h)] += 0.5 * c;
        } else {
            coeffs[fine.index(k)] = c;
        }
    }
    Ok(RealField::from_raw(fine, coeffs))
}
