//! Named initial-data profiles.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::sobolev_norm;
use crate::error::{invalid, Error, Result};
use crate::spectral::{Grid, RealField};

/// Initial data specification.
///
/// Textual forms: `single_mode:<k>:<amplitude>`,
/// `broadband:<decay>:<seed>:<amplitude>` and `file:<path>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `amplitude · cos(k x)`.
    SingleMode { k: i64, amplitude: f64 },
    /// Random phases with `|c(k)| ∝ ⟨k⟩^{-decay}` on `1 ≤ |k| ≤ n/3`,
    /// rescaled to `‖u‖_{H¹} = amplitude`.
    Broadband { decay: f64, seed: u64, amplitude: f64 },
    /// Snapshot CSV in `k,re,im` format.
    File { path: String },
}

impl Profile {
    pub fn build(&self, grid: Grid) -> Result<RealField> {
        match self {
            Profile::SingleMode { k, amplitude } => {
                if *k <= 0 || *k > grid.nyquist() {
                    return Err(invalid(format!(
                        "single_mode k must be in 1..={}, got {k}",
                        grid.nyquist()
                    )));
                }
                RealField::from_positive_modes(grid, [(*k, Complex64::new(0.5 * amplitude, 0.0))])
            }
            Profile::Broadband {
                decay,
                seed,
                amplitude,
            } => broadband(grid, *decay, *seed, *amplitude),
            Profile::File { path } => {
                let f = std::fs::File::open(path)
                    .map_err(|e| Error::Io(format!("{path}: {e}")))?;
                let u = RealField::read_csv(std::io::BufReader::new(f), grid.j())?;
                if u.grid() != grid {
                    return Err(invalid(format!(
                        "{path} holds {} modes but the grid has {}",
                        u.grid().n_points(),
                        grid.n_points()
                    )));
                }
                Ok(u)
            }
        }
    }
}

fn broadband(grid: Grid, decay: f64, seed: u64, amplitude: f64) -> Result<RealField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cut = grid.dealias_cutoff();
    let modes: Vec<(i64, Complex64)> = (1..=cut)
        .map(|k| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let weight = (1.0 + (k * k) as f64).powf(-0.5 * decay);
            (k, Complex64::new(re, im) * weight)
        })
        .collect();
    let raw = RealField::from_positive_modes(grid, modes)?;
    let norm = sobolev_norm(&raw, 1.0);
    if norm == 0.0 {
        return Ok(raw);
    }
    Ok(raw.scale(amplitude / norm))
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::SingleMode { k, amplitude } => write!(f, "single_mode:{k}:{amplitude}"),
            Profile::Broadband {
                decay,
                seed,
                amplitude,
            } => write!(f, "broadband:{decay}:{seed}:{amplitude}"),
            Profile::File { path } => write!(f, "file:{path}"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize, what: &str| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| invalid(format!("profile `{s}` is missing {what}")))?
                .parse::<f64>()
                .map_err(|e| invalid(format!("profile `{s}`: {what}: {e}")))
        };
        match parts[0] {
            "single_mode" if parts.len() == 3 => Ok(Profile::SingleMode {
                k: parts[1]
                    .parse()
                    .map_err(|e| invalid(format!("profile `{s}`: k: {e}")))?,
                amplitude: num(2, "amplitude")?,
            }),
            "broadband" if parts.len() == 4 => Ok(Profile::Broadband {
                decay: num(1, "decay")?,
                seed: parts[2]
                    .parse()
                    .map_err(|e| invalid(format!("profile `{s}`: seed: {e}")))?,
                amplitude: num(3, "amplitude")?,
            }),
            "file" if parts.len() >= 2 => Ok(Profile::File {
                path: parts[1..].join(":"),
            }),
            _ => Err(invalid(format!(
                "unrecognized profile `{s}`; expected single_mode:k:a, broadband:decay:seed:a or file:path"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for text in ["single_mode:1:0.1", "broadband:2:7:1", "file:/tmp/a.csv"] {
            let p: Profile = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!("single_mode:1".parse::<Profile>().is_err());
        assert!("wave:1:2".parse::<Profile>().is_err());
    }

    #[test]
    fn broadband_is_normalized_and_band_limited() {
        let g = Grid::new(64, 1).unwrap();
        let u = Profile::Broadband {
            decay: 2.0,
            seed: 3,
            amplitude: 0.5,
        }
        .build(g)
        .unwrap();
        assert!((sobolev_norm(&u, 1.0) - 0.5).abs() < 1e-14);
        assert_eq!(u.coeff(0), Complex64::new(0.0, 0.0));
        assert!(u.max_active_mode(0.0) <= g.dealias_cutoff());
    }

    #[test]
    fn single_mode_amplitude() {
        let g = Grid::new(16, 1).unwrap();
        let u = Profile::SingleMode { k: 2, amplitude: 0.1 }.build(g).unwrap();
        for (x, v) in g.points().into_iter().zip(u.samples()) {
            assert!((v - 0.1 * (2.0 * x).cos()).abs() < 1e-15);
        }
        assert!(Profile::SingleMode { k: 9, amplitude: 1.0 }.build(g).is_err());
    }
}
