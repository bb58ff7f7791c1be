//! Exact resonance function `Ω = (k1+k2)^{2j+1} - k1^{2j+1} - k2^{2j+1}` and
//! brute-force scans of its size and level-set counts.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn pow_i128(base: i64, exp: u32) -> Option<i128> {
    (base as i128).checked_pow(exp)
}

/// `Ω` in 128-bit arithmetic, `None` on overflow.
pub fn resonance_i128(k1: i64, k2: i64, j: u32) -> Option<i128> {
    let p = 2 * j + 1;
    let k = k1.checked_add(k2)?;
    pow_i128(k, p)?
        .checked_sub(pow_i128(k1, p)?)?
        .checked_sub(pow_i128(k2, p)?)
}

/// `Ω` exactly, escalating to arbitrary precision when 128 bits overflow.
pub fn resonance_function(k1: i64, k2: i64, j: u32) -> BigInt {
    match resonance_i128(k1, k2, j) {
        Some(v) => BigInt::from(v),
        None => {
            let p = 2 * j + 1;
            let b = |x: i64| BigInt::from(x).pow(p);
            b(k1 + k2) - b(k1) - b(k2)
        }
    }
}

/// `|Ω| / (|k_min| |k_max|^{2j})` over the magnitudes of `k, k1, k2`.
pub fn equivalence_ratio(k1: i64, k2: i64, j: u32) -> f64 {
    let k = k1 + k2;
    let mut mags = [k.unsigned_abs(), k1.unsigned_abs(), k2.unsigned_abs()];
    mags.sort_unstable();
    let (kmin, kmax) = (mags[0], mags[2]);
    let den = (kmax as u128)
        .checked_pow(2 * j)
        .and_then(|p| p.checked_mul(kmin as u128));
    match (resonance_i128(k1, k2, j), den) {
        (Some(num), Some(den)) => {
            let num = num.unsigned_abs();
            let g = gcd(num, den).max(1);
            (num / g) as f64 / (den / g) as f64
        }
        _ => {
            let num = resonance_function(k1, k2, j).abs();
            let den = BigInt::from(kmax).pow(2 * j) * BigInt::from(kmin);
            big_ratio(&num, &den)
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn big_ratio(num: &BigInt, den: &BigInt) -> f64 {
    if den.is_zero() {
        return f64::INFINITY;
    }
    // keep ~60 significant bits of each before dividing
    let shift = num.bits().max(den.bits()).saturating_sub(60);
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceScanReport {
    pub j: u32,
    pub k_max: i64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `[k, k1, k2]` attaining `ratio_min`.
    pub argmin: [i64; 3],
    pub argmax: [i64; 3],
    /// Interactions with `ratio ≤ 0`.
    pub violations: u64,
}

#[derive(Clone, Copy)]
struct Extremes {
    min: (f64, i64, i64),
    max: (f64, i64, i64),
    violations: u64,
}

impl Extremes {
    fn merge(self, other: Self) -> Self {
        // ties resolve to the lexicographically first (k1, k2)
        let pick_min = |a: (f64, i64, i64), b: (f64, i64, i64)| {
            if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                b
            } else {
                a
            }
        };
        let pick_max = |a: (f64, i64, i64), b: (f64, i64, i64)| {
            if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                b
            } else {
                a
            }
        };
        Self {
            min: pick_min(self.min, other.min),
            max: pick_max(self.max, other.max),
            violations: self.violations + other.violations,
        }
    }
}

/// Exhaustive scan of `|Ω| / (|k_min||k_max|^{2j})` over nonzero `k1, k2`
/// with `|k1|, |k2| ≤ k_max` and `k1 + k2 ≠ 0`.
pub fn equivalence_scan(j: u32, k_max: i64) -> Result<ResonanceScanReport> {
    if k_max < 2 {
        return Err(invalid(format!("k_max must be at least 2, got {k_max}")));
    }
    if j == 0 {
        return Err(invalid("j must be at least 1"));
    }
    let rows: Vec<i64> = (-k_max..=k_max).filter(|&k| k != 0).collect();
    let ext = rows
        .par_iter()
        .map(|&k1| {
            let mut acc: Option<Extremes> = None;
            for k2 in -k_max..=k_max {
                if k2 == 0 || k1 + k2 == 0 {
                    continue;
                }
                let r = equivalence_ratio(k1, k2, j);
                let here = Extremes {
                    min: (r, k1, k2),
                    max: (r, k1, k2),
                    violations: u64::from(r <= 0.0 || r.is_nan()),
                };
                acc = Some(match acc {
                    Some(a) => a.merge(here),
                    None => here,
                });
            }
            acc
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(a.merge(b)),
                (a, None) => a,
                (None, b) => b,
            },
        )
        .expect("scan range is non-empty");
    let triple = |(_, k1, k2): (f64, i64, i64)| [k1 + k2, k1, k2];
    Ok(ResonanceScanReport {
        j,
        k_max,
        ratio_min: ext.min.0,
        ratio_max: ext.max.0,
        argmin: triple(ext.min),
        argmax: triple(ext.max),
        violations: ext.violations,
    })
}

/// Largest number of sorted `values` inside any window `[v, v + width]`
/// anchored at an attained value.
fn max_window_count(mut values: Vec<i128>, width: i128) -> usize {
    values.sort_unstable();
    let mut best = 0;
    let mut hi = 0;
    for lo in 0..values.len() {
        if hi < lo {
            hi = lo;
        }
        while hi < values.len() && values[hi] - values[lo] <= width {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    best
}

fn omega_values(k: i64, j: u32, k1s: impl Iterator<Item = i64>) -> Result<Vec<i128>> {
    k1s.map(|k1| {
        resonance_i128(k1, k - k1, j)
            .ok_or_else(|| invalid(format!("Ω({k1}, {}) exceeds 128 bits", k - k1)))
    })
    .collect()
}

/// Maximal number of `k1` with `0 < |k1| ≤ k1_range`, `k1 ≠ k`, whose
/// `Ω(k1, k - k1)` falls in one window of width `window`.
pub fn annulus_count(k: i64, j: u32, window: u64, k1_range: i64) -> Result<usize> {
    if k == 0 {
        return Err(invalid("annulus count needs k ≠ 0"));
    }
    let k1s = (-k1_range..=k1_range).filter(move |&k1| k1 != 0 && k1 != k);
    Ok(max_window_count(omega_values(k, j, k1s)?, window as i128))
}

/// The same count restricted to positive frequencies `0 < k1 < k`, the
/// setting in which the count obeys `≲ M^{1/(2j+1)}` uniformly in `k`.
pub fn positive_annulus_count(k: i64, j: u32, window: u64) -> Result<usize> {
    if k <= 0 {
        return Err(invalid("positive annulus count needs k > 0"));
    }
    Ok(max_window_count(omega_values(k, j, 1..k)?, window as i128))
}

/// `max_{1 ≤ k ≤ k_limit}` of [`positive_annulus_count`].
pub fn sup_positive_annulus_count(j: u32, window: u64, k_limit: i64) -> Result<usize> {
    (1..=k_limit)
        .into_par_iter()
        .map(|k| positive_annulus_count(k, j, window))
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))
}

/// Log-log slope of `counts` against `windows`.
pub fn count_exponent(windows: &[u64], counts: &[usize]) -> Option<f64> {
    let x: Vec<f64> = windows.iter().map(|&m| (m as f64).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).ln()).collect();
    crate::imethod::fit_line(&x, &y).map(|f| f.0)
}
