//! Discrete Bourgain-space norms on space-time lattices and Monte-Carlo
//! probes of the `L⁴` Strichartz estimate and the two bilinear estimates.
//!
//! A [`SpaceTimeField`] stores `𝓕f(k, τ)` on the lattice
//! `τ = ω(k) + σ_l`, `σ_l = l·Δτ`, `-n_time/2 < l ≤ n_time/2`,
//! `Δτ = 2π / t_window`. Rows are modulated by the dispersion relation, so
//! free solutions sit on the `l = 0` column at every `k` no matter how large
//! `ω(k)` is.
//!
//! The function represented is
//!
//! ```text
//! v(x, t) = (Δτ / 2π) Σ_{k,l} F(k, l) e^{i(kx + τ t)},   (x, t) ∈ 𝕋 × [0, t_window)
//! ```
//!
//! so that `‖v‖_{L²(dx dt)} = xsb_norm(F, 0, 0)`.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::numfmt::Num;
use crate::spectral::{fft_inverse, Grid};

/// Tolerance of the reality check `F(-k,-l) = conj F(k,l)`.
pub const REALITY_TOL: f64 = 1e-13;

/// Integer dispersion relation `(-1)^{j+1} k^{2j+1}`.
pub fn omega(k: i64, j: u32) -> i64 {
    let p = k.checked_pow(2 * j + 1).expect("ω(k) overflows i64");
    if j % 2 == 1 {
        p
    } else {
        -p
    }
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    n_time: usize,
    t_window: f64,
    /// Row `grid.index(k)`, column `l.rem_euclid(n_time)`.
    coeffs: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid, n_time: usize, t_window: f64) -> Result<Self> {
        if n_time < 2 || !n_time.is_power_of_two() {
            return Err(invalid(format!(
                "n_time must be a power of two >= 2, got {n_time}"
            )));
        }
        if !(t_window > 0.0 && t_window.is_finite()) {
            return Err(invalid(format!("t_window must be positive, got {t_window}")));
        }
        Ok(Self {
            grid,
            n_time,
            t_window,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points() * n_time],
        })
    }

    /// A single lattice point `F(k, l) = value`.
    pub fn atom(grid: Grid, n_time: usize, t_window: f64, k: i64, l: i64, value: Complex64) -> Result<Self> {
        let mut f = Self::zeros(grid, n_time, t_window)?;
        f.set(k, l, value)?;
        Ok(f)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    pub fn t_window(&self) -> f64 {
        self.t_window
    }

    pub fn tau_spacing(&self) -> f64 {
        TAU / self.t_window
    }

    /// `σ` indices in ascending order.
    pub fn sigma_indices(&self) -> impl Iterator<Item = i64> {
        let h = (self.n_time / 2) as i64;
        (-h + 1)..=h
    }

    pub fn sigma(&self, l: i64) -> f64 {
        l as f64 * self.tau_spacing()
    }

    pub fn tau(&self, k: i64, l: i64) -> f64 {
        omega(k, self.grid.j()) as f64 + self.sigma(l)
    }

    fn offset(&self, k: i64, l: i64) -> usize {
        self.grid.index(k) * self.n_time + l.rem_euclid(self.n_time as i64) as usize
    }

    fn check_index(&self, k: i64, l: i64) -> Result<()> {
        let h = (self.n_time / 2) as i64;
        if k <= -self.grid.nyquist() || k > self.grid.nyquist() {
            return Err(invalid(format!("mode {k} outside the grid")));
        }
        if l <= -h || l > h {
            return Err(invalid(format!("σ index {l} outside -{h} < l <= {h}")));
        }
        Ok(())
    }

    pub fn get(&self, k: i64, l: i64) -> Complex64 {
        self.coeffs[self.offset(k, l)]
    }

    /// Sets one coefficient; the `k = 0` row must stay empty.
    pub fn set(&mut self, k: i64, l: i64, value: Complex64) -> Result<()> {
        self.check_index(k, l)?;
        if k == 0 && value != Complex64::new(0.0, 0.0) {
            return Err(invalid("space-time fields have zero spatial mean"));
        }
        let o = self.offset(k, l);
        self.coeffs[o] = value;
        Ok(())
    }

    /// Sets `F(k,l)` and its mirror `F(-k,-l) = conj`.
    pub fn set_real_pair(&mut self, k: i64, l: i64, value: Complex64) -> Result<()> {
        if k.abs() == self.grid.nyquist() || l.abs() == (self.n_time / 2) as i64 {
            return Err(invalid("Nyquist rows and columns have no mirror"));
        }
        self.set(k, l, value)?;
        self.set(-k, -l, value.conj())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// True when `F(-k,-l) = conj F(k,l)` within [`REALITY_TOL`] (relative
    /// to the largest coefficient), so that `v` is real.
    pub fn is_real(&self) -> bool {
        let big = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let h = self.grid.nyquist();
        let ht = (self.n_time / 2) as i64;
        self.rows().all(|k| {
            self.sigma_indices().all(|l| {
                let c = self.get(k, l);
                if k == h || l == ht {
                    return c.norm() <= REALITY_TOL * big;
                }
                (c - self.get(-k, -l).conj()).norm() <= REALITY_TOL * big
            })
        })
    }

    fn rows(&self) -> impl Iterator<Item = i64> {
        self.grid.modes()
    }

    /// `(k, l, F)` for every nonzero coefficient, `k` then `l` ascending.
    pub fn support(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        self.rows().flat_map(move |k| {
            self.sigma_indices().filter_map(move |l| {
                let c = self.get(k, l);
                (c != Complex64::new(0.0, 0.0)).then_some((k, l, c))
            })
        })
    }

    /// Integer `m = t_window / 2π`; products need it so that `τ` stays on
    /// the lattice `ℤ/m`.
    fn commensurate(&self) -> Result<i64> {
        let m = self.t_window / TAU;
        let mi = m.round();
        if mi < 1.0 || (m - mi).abs() > 1e-12 * m {
            return Err(invalid(format!(
                "t_window must be a positive multiple of 2π for products, got {}",
                self.t_window
            )));
        }
        Ok(mi as i64)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.n_time != other.n_time || self.t_window != other.t_window {
            return Err(invalid("space-time fields live on different lattices"));
        }
        Ok(())
    }
}

/// `(Σ ⟨k⟩^{2s} ⟨σ⟩^{2b} |F(k,τ)|² Δτ)^{1/2}` with `σ = τ - ω(k)`.
pub fn xsb_norm(f: &SpaceTimeField, s: f64, b: f64) -> f64 {
    let dt = f.tau_spacing();
    f.support()
        .map(|(k, l, c)| {
            (1.0 + (k * k) as f64).powf(s) * bracket(f.sigma(l)).powf(2.0 * b) * c.norm_sqr() * dt
        })
        .sum::<f64>()
        .sqrt()
}

/// `(Σ_k ⟨k⟩^{2s} (Σ_τ |F| ⟨σ⟩^{-b} Δτ)²)^{1/2}`.
fn l2_l1_part(f: &SpaceTimeField, s: f64, b: f64) -> f64 {
    let dt = f.tau_spacing();
    f.rows()
        .map(|k| {
            let row: f64 = f
                .sigma_indices()
                .map(|l| f.get(k, l).norm() * bracket(f.sigma(l)).powf(-b) * dt)
                .sum();
            (1.0 + (k * k) as f64).powf(s) * row * row
        })
        .sum::<f64>()
        .sqrt()
}

/// `X_{s,½}` plus the `L²(k)L¹(τ)` norm of `⟨k⟩^s F`.
pub fn ys_norm(f: &SpaceTimeField, s: f64) -> f64 {
    xsb_norm(f, s, 0.5) + l2_l1_part(f, s, 0.0)
}

/// `X_{s,-½}` plus the `L²(k)L¹(τ)` norm of `⟨k⟩^s ⟨σ⟩^{-½} F`.
pub fn zs_norm(f: &SpaceTimeField, s: f64) -> f64 {
    xsb_norm(f, s, -0.5) + l2_l1_part(f, s, 0.5)
}

/// `‖⟨∂_x⟩^s v‖_{L²(𝕋 × [0, t_window))}` evaluated in physical time: each
/// row is synthesized on `n_time` instants and integrated by the rectangle
/// rule, which is exact for the σ-band.
pub fn weighted_l2_norm(f: &SpaceTimeField, s: f64) -> f64 {
    let nt = f.n_time;
    let fft = fft_inverse(nt);
    let scale = f.tau_spacing() / TAU;
    let h = f.t_window / nt as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); nt];
    let mut total = 0.0;
    for k in f.rows() {
        let row = f.grid.index(k) * nt;
        buf.copy_from_slice(&f.coeffs[row..row + nt]);
        if buf.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        fft.process(&mut buf);
        // the e^{iω(k)t} carrier has unit modulus
        let time_integral: f64 = buf.iter().map(|c| (c * scale).norm_sqr()).sum::<f64>() * h;
        total += (1.0 + (k * k) as f64).powf(s) * TAU * time_integral;
    }
    total.sqrt()
}

/// Nonzero part of one row, `F(k, lo..lo+vals.len())`.
struct Row {
    k: i64,
    omega: i64,
    lo: i64,
    vals: Vec<Complex64>,
}

fn active_rows(f: &SpaceTimeField) -> Vec<Row> {
    let j = f.grid.j();
    f.rows()
        .filter_map(|k| {
            let ls: Vec<i64> = f
                .sigma_indices()
                .filter(|&l| f.get(k, l) != Complex64::new(0.0, 0.0))
                .collect();
            let (&lo, &hi) = (ls.first()?, ls.last()?);
            Some(Row {
                k,
                omega: omega(k, j),
                lo,
                vals: (lo..=hi).map(|l| f.get(k, l)).collect(),
            })
        })
        .collect()
}

/// `Σ_{k,τ} w(k, σ) |P(k,τ)|² Δτ` for the space-time Fourier transform `P`
/// of the bilinear form with symbol `mult(k, k1, k2)` applied to `v1 v2`.
///
/// The convolution is exact: no spatial or temporal truncation of the
/// output.
fn product_weighted_sq<M, W>(f1: &SpaceTimeField, f2: &SpaceTimeField, mult: M, weight: W) -> Result<f64>
where
    M: Fn(i64, i64, i64) -> Complex64,
    W: Fn(i64, f64) -> f64,
{
    f1.same_shape(f2)?;
    let m = f1.commensurate()?;
    let dtau = f1.tau_spacing();
    let norm = dtau / TAU;
    let rows1 = active_rows(f1);
    let rows2 = active_rows(f2);
    let j = f1.grid.j();
    let (Some(kmin2), Some(kmax2)) = (rows2.first().map(|r| r.k), rows2.last().map(|r| r.k)) else {
        return Ok(0.0);
    };
    let mut by_k2 = vec![None; (kmax2 - kmin2 + 1) as usize];
    for (i, r) in rows2.iter().enumerate() {
        by_k2[(r.k - kmin2) as usize] = Some(i);
    }
    let (Some(kmin1), Some(kmax1)) = (rows1.first().map(|r| r.k), rows1.last().map(|r| r.k)) else {
        return Ok(0.0);
    };

    let mut total = 0.0;
    let mut pieces: Vec<(i64, usize, usize)> = Vec::new();
    let mut buf: Vec<Complex64> = Vec::new();
    for k in (kmin1 + kmin2)..=(kmax1 + kmax2) {
        pieces.clear();
        for (i1, r1) in rows1.iter().enumerate() {
            let k2 = k - r1.k;
            if k2 < kmin2 || k2 > kmax2 {
                continue;
            }
            if let Some(i2) = by_k2[(k2 - kmin2) as usize] {
                let r2 = &rows2[i2];
                pieces.push((m * (r1.omega + r2.omega) + r1.lo + r2.lo, i1, i2));
            }
        }
        if pieces.is_empty() {
            continue;
        }
        pieces.sort_unstable();
        let wk = omega(k, j);
        let mut start = 0;
        while start < pieces.len() {
            // gather a cluster of overlapping output ranges
            let base = pieces[start].0;
            let mut end = start;
            let mut top = base;
            while end < pieces.len() && pieces[end].0 <= top + 1 {
                let (b, i1, i2) = pieces[end];
                top = top.max(b + (rows1[i1].vals.len() + rows2[i2].vals.len()) as i64 - 2);
                end += 1;
            }
            buf.clear();
            buf.resize((top - base + 1) as usize, Complex64::new(0.0, 0.0));
            for &(b, i1, i2) in &pieces[start..end] {
                let (r1, r2) = (&rows1[i1], &rows2[i2]);
                let sym = mult(k, r1.k, r2.k);
                if sym == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let off = (b - base) as usize;
                for (a, x) in r1.vals.iter().enumerate() {
                    let xs = x * sym;
                    for (c, y) in r2.vals.iter().enumerate() {
                        buf[off + a + c] += xs * y;
                    }
                }
            }
            for (i, p) in buf.iter().enumerate() {
                if p.norm_sqr() == 0.0 {
                    continue;
                }
                let sigma = (base + i as i64 - m * wk) as f64 / m as f64;
                total += weight(k, sigma) * (p * norm).norm_sqr() * dtau;
            }
            start = end;
        }
    }
    Ok(total)
}

/// `(∫_𝕋 ∫_0^{t_window} |v|⁴ dt dx)^{1/4}`, computed exactly as
/// `‖v²‖_{L²}^{1/2}` through the space-time convolution.
pub fn l4_norm(f: &SpaceTimeField) -> Result<f64> {
    let sq = product_weighted_sq(f, f, |_, _, _| Complex64::new(1.0, 0.0), |_, _| 1.0)?;
    Ok(sq.sqrt().sqrt())
}

/// The `X_{0,b}` exponent of the Strichartz estimate, `(j+1)/(2(2j+1))`.
pub fn strichartz_exponent(j: u32) -> f64 {
    (j + 1) as f64 / (2 * (2 * j + 1)) as f64
}

/// `‖v‖_{L⁴} / ‖F‖_{X_{0,b_j}}`, `None` for a vanishing denominator.
pub fn l4_ratio(f: &SpaceTimeField) -> Result<Option<f64>> {
    let den = xsb_norm(f, 0.0, strichartz_exponent(f.grid.j()));
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(l4_norm(f)? / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BilinearForm {
    /// `∂_x(1-∂²)^{-1}[∂_x u1 · ∂_x u2]`.
    Lemma31,
    /// `∂_x[u1 · u2]`.
    Lemma32,
}

impl BilinearForm {
    pub fn symbol(self, k: i64, k1: i64, k2: i64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        match self {
            BilinearForm::Lemma31 => {
                i * k as f64 / (1.0 + (k * k) as f64) * (i * k1 as f64) * (i * k2 as f64)
            }
            BilinearForm::Lemma32 => i * k as f64,
        }
    }

    /// Smallest regularity for which the estimate is claimed.
    pub fn threshold(self, j: u32) -> f64 {
        match self {
            BilinearForm::Lemma31 => (2.0 - j as f64) / 2.0,
            BilinearForm::Lemma32 => -(j as f64) / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BilinearForm::Lemma31 => "lemma31",
            BilinearForm::Lemma32 => "lemma32",
        }
    }
}

impl std::str::FromStr for BilinearForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma31" => Ok(BilinearForm::Lemma31),
            "lemma32" => Ok(BilinearForm::Lemma32),
            _ => Err(invalid(format!("unknown bilinear form `{s}`; expected lemma31 or lemma32"))),
        }
    }
}

/// `‖B(u1,u2)‖_{X_{s,-½}}`.
pub fn bilinear_norm(form: BilinearForm, s: f64, u1: &SpaceTimeField, u2: &SpaceTimeField) -> Result<f64> {
    let sq = product_weighted_sq(
        u1,
        u2,
        |k, k1, k2| form.symbol(k, k1, k2),
        |k, sigma| (1.0 + (k * k) as f64).powf(s) / bracket(sigma),
    )?;
    Ok(sq.sqrt())
}

/// `‖B(u1,u2)‖_{X_{s,-½}} / (‖u1‖_{X_{s,½}} ‖u2‖_{X_{s,½}})`.
pub fn bilinear_ratio(
    form: BilinearForm,
    s: f64,
    u1: &SpaceTimeField,
    u2: &SpaceTimeField,
) -> Result<Option<f64>> {
    let den = xsb_norm(u1, s, 0.5) * xsb_norm(u2, s, 0.5);
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(bilinear_norm(form, s, u1, u2)? / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Half the samples on `|l| ≤ 1`, half spread over the whole σ-band.
    Mixed,
    /// Only the free-solution column `l = 0`.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSetup {
    pub grid: Grid,
    pub n_time: usize,
    pub t_window: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
}

impl ProbeSetup {
    pub fn new(grid: Grid, n_time: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            grid,
            n_time,
            t_window: TAU,
            n_samples,
            seed,
            ensemble: Ensemble::Mixed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("a probe needs at least one sample"));
        }
        SpaceTimeField::zeros(self.grid, self.n_time, self.t_window)?.commensurate()?;
        Ok(())
    }

    /// Per-sample seeds, drawn in order from the master seed.
    pub fn sample_seeds(&self) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_samples).map(|_| rng.next_u64()).collect()
    }

    /// A random real field: Gaussian coefficients with a flat spectrum on
    /// `1 ≤ |k| ≤ n/3`, mirrored to be real.
    pub fn random_field<R: Rng>(&self, rng: &mut R) -> Result<SpaceTimeField> {
        let mut f = SpaceTimeField::zeros(self.grid, self.n_time, self.t_window)?;
        let h = (self.n_time / 2) as i64;
        let band = match self.ensemble {
            Ensemble::Free => 0,
            Ensemble::Mixed => {
                if rng.gen_bool(0.5) {
                    1.min(h - 1)
                } else {
                    h - 1
                }
            }
        };
        for k in 1..=self.grid.dealias_cutoff() {
            for l in -band..=band {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                f.set_real_pair(k, l, Complex64::new(re, im))?;
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n_samples: usize,
    pub ratio_max: f64,
    pub ratio_mean: f64,
    pub argmax_sample: usize,
    pub argmax_seed: u64,
    pub n_points: usize,
    pub n_time: usize,
    /// Draws discarded for a zero denominator.
    pub resampled: u64,
    #[serde(skip)]
    pub ratios: Vec<f64>,
    #[serde(skip)]
    pub seeds: Vec<u64>,
}

impl ProbeReport {
    fn from_samples(setup: &ProbeSetup, seeds: Vec<u64>, samples: Vec<(f64, u64)>) -> Self {
        let ratios: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let resampled = samples.iter().map(|s| s.1).sum();
        let mut argmax = 0;
        for (i, r) in ratios.iter().enumerate() {
            if *r > ratios[argmax] {
                argmax = i;
            }
        }
        Self {
            n_samples: ratios.len(),
            ratio_max: ratios[argmax],
            ratio_mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
            argmax_sample: argmax,
            argmax_seed: seeds[argmax],
            n_points: setup.grid.n_points(),
            n_time: setup.n_time,
            resampled,
            ratios,
            seeds,
        }
    }

    /// `sample,seed,ratio` per line.
    pub fn write_ratios_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sample,seed,ratio")?;
        for (i, (r, s)) in self.ratios.iter().zip(&self.seeds).enumerate() {
            writeln!(w, "{i},{s},{}", Num(*r))?;
        }
        Ok(())
    }
}

const MAX_REDRAWS: u64 = 64;

fn run_probe<F>(setup: &ProbeSetup, ratio: F) -> Result<ProbeReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Option<f64>> + Sync,
{
    setup.validate()?;
    let seeds = setup.sample_seeds();
    let samples: Vec<(f64, u64)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut redraws = 0;
            loop {
                if let Some(r) = ratio(&mut rng)? {
                    return Ok((r, redraws));
                }
                redraws += 1;
                if redraws > MAX_REDRAWS {
                    return Err(invalid(format!("sample seed {seed}: every draw degenerate")));
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(ProbeReport::from_samples(setup, seeds, samples))
}

/// Monte-Carlo sup of `‖v‖_{L⁴} / ‖F‖_{X_{0,(j+1)/(2(2j+1))}}`.
pub fn l4_probe(setup: &ProbeSetup) -> Result<ProbeReport> {
    run_probe(setup, |rng| l4_ratio(&setup.random_field(rng)?))
}

/// Monte-Carlo sup of the bilinear ratio over independent pairs.
pub fn bilinear_probe(form: BilinearForm, s: f64, setup: &ProbeSetup) -> Result<ProbeReport> {
    let j = setup.grid.j();
    let th = form.threshold(j);
    if !(s >= th) {
        return Err(Error::OutOfRange(format!(
            "{} needs s >= {th} for j = {j}, got {s}",
            form.name()
        )));
    }
    run_probe(setup, |rng| {
        let u1 = setup.random_field(rng)?;
        let u2 = setup.random_field(rng)?;
        bilinear_ratio(form, s, &u1, &u2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, j: u32) -> Grid {
        Grid::new(n, j).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn random(n: usize, nt: usize, seed: u64) -> SpaceTimeField {
        let setup = ProbeSetup::new(grid(n, 1), nt, 1, 0);
        setup.random_field(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn free_line_is_b_independent() {
        let g = grid(16, 2);
        let mut f = SpaceTimeField::zeros(g, 8, TAU).unwrap();
        f.set_real_pair(1, 0, Complex64::new(0.5, 0.0)).unwrap();
        f.set_real_pair(3, 0, Complex64::new(0.0, 0.2)).unwrap();
        for b in [-0.5, 0.0, 0.5, 2.0] {
            let want = (2.0 * (2.0f64.powf(1.5) * 0.25 + 10.0f64.powf(1.5) * 0.04)).sqrt();
            assert!((xsb_norm(&f, 1.5, b) - want).abs() < 1e-14 * want);
        }
        assert_eq!(xsb_norm(&SpaceTimeField::zeros(g, 8, TAU).unwrap(), 1.0, 0.5), 0.0);
    }

    #[test]
    fn single_atom_norms() {
        let g = grid(16, 1);
        let t_window = 2.0 * TAU;
        let f = SpaceTimeField::atom(g, 16, t_window, 3, -5, one()).unwrap();
        let dtau: f64 = 0.5;
        let sig = bracket(-2.5);
        let kb = 10f64.sqrt();
        let s = 0.7;
        let x = kb.powf(s) * sig.sqrt() * dtau.sqrt();
        assert!((xsb_norm(&f, s, 0.5) - x).abs() < 1e-14);
        assert!((ys_norm(&f, s) - (x + kb.powf(s) * dtau)).abs() < 1e-14);
        let z = kb.powf(s) / sig.sqrt() * dtau.sqrt() + kb.powf(s) / sig.sqrt() * dtau;
        assert!((zs_norm(&f, s) - z).abs() < 1e-14);
        assert!(ys_norm(&f, s) >= xsb_norm(&f, s, 0.5));
    }

    #[test]
    fn two_routes_agree_at_b_zero() {
        for seed in 0..4 {
            let f = random(32, 16, seed);
            for s in [-0.5, 0.0, 1.0] {
                let a = xsb_norm(&f, s, 0.0);
                let b = weighted_l2_norm(&f, s);
                assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn monotone_and_homogeneous() {
        let f = random(16, 8, 9);
        let lam = Complex64::new(-1.5, 2.0);
        let g = f.scale(lam);
        for (s, b) in [(0.0, 0.0), (0.5, 0.5), (-0.5, 1.0 / 3.0)] {
            assert!(xsb_norm(&f, s + 0.1, b) >= xsb_norm(&f, s, b));
            assert!(xsb_norm(&f, s, b + 0.1) >= xsb_norm(&f, s, b));
            let a = xsb_norm(&g, s, b);
            assert!((a - lam.norm() * xsb_norm(&f, s, b)).abs() < 1e-12 * a);
        }
        assert!((ys_norm(&g, 0.3) - lam.norm() * ys_norm(&f, 0.3)).abs() < 1e-12 * ys_norm(&g, 0.3));
        assert!((zs_norm(&g, 0.3) - lam.norm() * zs_norm(&f, 0.3)).abs() < 1e-12 * zs_norm(&g, 0.3));
    }

    #[test]
    fn random_fields_are_real() {
        let f = random(32, 16, 1);
        assert!(f.is_real());
        assert_eq!(f.get(0, 0), Complex64::new(0.0, 0.0));
        let mut g = f.clone();
        g.set(2, 1, Complex64::new(3.0, 0.0)).unwrap();
        assert!(!g.is_real());
        assert!(f.clone().set(0, 1, one()).is_err());
    }

    #[test]
    fn atom_l4_closed_form() {
        // complex atom: |v| = Δτ/2π constant on 𝕋 × [0, T)
        let g = grid(16, 1);
        for m in [1.0, 2.0] {
            let t = m * TAU;
            let f = SpaceTimeField::atom(g, 8, t, 2, 1, one()).unwrap();
            let dtau = 1.0 / m;
            let want = dtau / TAU * (TAU * t).powf(0.25);
            assert!((l4_norm(&f).unwrap() - want).abs() < 1e-14 * want);
            let b = strichartz_exponent(1);
            let ratio = want / (bracket(dtau).powf(b) * dtau.sqrt());
            assert!((l4_ratio(&f).unwrap().unwrap() - ratio).abs() < 1e-14 * ratio);
        }
        // real atom: v = 2(Δτ/2π) cos(...), mean of cos⁴ = 3/8
        let mut f = SpaceTimeField::zeros(g, 8, TAU).unwrap();
        f.set_real_pair(3, 2, one()).unwrap();
        let want = (6.0 * TAU * TAU).powf(0.25) / TAU;
        assert!((l4_norm(&f).unwrap() - want).abs() < 1e-14 * want);
    }

    #[test]
    fn l4_matches_sampled_integral() {
        // brute force on a grid fine enough to resolve |v|⁴ for j = 1, n = 8
        let f = random(8, 4, 5);
        let (nx, nt) = (32usize, 512usize);
        let mut acc = 0.0;
        for a in 0..nx {
            let x = TAU * a as f64 / nx as f64;
            for b in 0..nt {
                let t = TAU * b as f64 / nt as f64;
                let v: Complex64 = f
                    .support()
                    .map(|(k, l, c)| c * Complex64::from_polar(1.0, k as f64 * x + f.tau(k, l) * t))
                    .sum::<Complex64>()
                    / TAU;
                acc += v.norm_sqr().powi(2);
            }
        }
        let brute = (acc * (TAU / nx as f64) * (TAU / nt as f64)).powf(0.25);
        let fast = l4_norm(&f).unwrap();
        assert!((brute - fast).abs() < 1e-12 * fast, "{brute} vs {fast}");
    }

    #[test]
    fn bilinear_atom_pair() {
        let g = grid(16, 1);
        let f = SpaceTimeField::atom(g, 8, TAU, 1, 0, one()).unwrap();
        // B sits at k = 2, τ = 2ω(1) = 2, σ = 2 - 8 = -6
        for (form, sym) in [(BilinearForm::Lemma32, 2.0), (BilinearForm::Lemma31, 2.0 / 5.0)] {
            for s in [-0.5, 0.5] {
                let num = 5f64.powf(s / 2.0) * sym / TAU / bracket(6.0).sqrt();
                let den = 2f64.powf(s);
                let r = bilinear_ratio(form, s, &f, &f).unwrap().unwrap();
                assert!((r - num / den).abs() < 1e-14 * r, "{form:?} {r}");
            }
        }
        let z = SpaceTimeField::zeros(g, 8, TAU).unwrap();
        assert_eq!(bilinear_ratio(BilinearForm::Lemma32, 0.5, &f, &z).unwrap(), None);
        assert_eq!(bilinear_norm(BilinearForm::Lemma32, 0.5, &f, &z).unwrap(), 0.0);
    }

    #[test]
    fn bilinear_matches_dense_convolution() {
        let g = grid(16, 2);
        let setup = ProbeSetup::new(g, 4, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u1 = setup.random_field(&mut rng).unwrap();
        let u2 = setup.random_field(&mut rng).unwrap();
        let mut map = std::collections::BTreeMap::<(i64, i64), Complex64>::new();
        for (k1, l1, a) in u1.support() {
            for (k2, l2, b) in u2.support() {
                let k = k1 + k2;
                let tau = omega(k1, 2) + omega(k2, 2) + l1 + l2;
                *map.entry((k, tau)).or_default() +=
                    BilinearForm::Lemma31.symbol(k, k1, k2) * a * b / TAU;
            }
        }
        let s = 0.25;
        let want: f64 = map
            .iter()
            .map(|(&(k, tau), p)| {
                (1.0 + (k * k) as f64).powf(s) / bracket((tau - omega(k, 2)) as f64) * p.norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        let got = bilinear_norm(BilinearForm::Lemma31, s, &u1, &u2).unwrap();
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn probes_are_deterministic() {
        let setup = ProbeSetup::new(grid(16, 1), 8, 12, 42);
        let a = l4_probe(&setup).unwrap();
        let b = l4_probe(&setup).unwrap();
        assert_eq!(a, b);
        assert!(a.ratio_max >= a.ratio_mean && a.ratio_mean > 0.0);
        assert_eq!(a.ratios[a.argmax_sample], a.ratio_max);
        let mut rng = ChaCha8Rng::seed_from_u64(a.argmax_seed);
        let f = setup.random_field(&mut rng).unwrap();
        assert_eq!(l4_ratio(&f).unwrap(), Some(a.ratio_max));
    }

    #[test]
    fn probe_preconditions() {
        let mut setup = ProbeSetup::new(grid(16, 1), 8, 2, 0);
        assert!(bilinear_probe(BilinearForm::Lemma31, 0.4, &setup).is_err());
        assert!(bilinear_probe(BilinearForm::Lemma32, -0.5, &setup).is_ok());
        setup.t_window = 5.0;
        assert!(l4_probe(&setup).is_err());
        setup.t_window = TAU;
        setup.n_samples = 0;
        assert!(l4_probe(&setup).is_err());
    }

    #[test]
    fn free_samples_scale_with_window() {
        // the same profile on windows 2π and 4π: v is 2π-periodic, so the
        // ratio only picks up the lattice factor 2^{-1/4}
        let g = grid(32, 1);
        let a = random(32, 8, 7);
        let mut b = SpaceTimeField::zeros(g, 8, 2.0 * TAU).unwrap();
        for (k, l, c) in a.support() {
            if l == 0 {
                b.set(k, 0, c).unwrap();
            }
        }
        let mut a0 = SpaceTimeField::zeros(g, 8, TAU).unwrap();
        for (k, _, c) in b.support() {
            a0.set(k, 0, c).unwrap();
        }
        let ra = l4_ratio(&a0).unwrap().unwrap();
        let rb = l4_ratio(&b).unwrap().unwrap();
        assert!((rb / ra - 2f64.powf(-0.25)).abs() < 1e-12);
    }
}
