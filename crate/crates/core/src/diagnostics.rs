//! Sobolev norms and per-snapshot monitoring records.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::numfmt::Num;
use crate::spectral::RealField;

/// `(Σ_k ⟨k⟩^{2s} |c(k)|²)^{1/2}` with `⟨k⟩ = (1+k²)^{1/2}`.
pub fn sobolev_norm(u: &RealField, s: f64) -> f64 {
    let grid = u.grid();
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = grid.mode(i) as f64;
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// `Σ_k (1+k²)|c(k)|²`, conserved by the exact flow.
pub fn h1_energy(u: &RealField) -> f64 {
    let grid = u.grid();
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = grid.mode(i) as f64;
            (1.0 + k * k) * c.norm_sqr()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mean: f64,
    pub h1_energy: f64,
    /// `(s, ‖u‖_{H^s})` in the configured order.
    pub hs_norms: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub i_energy: Option<f64>,
}

pub fn record(traj: &Trajectory, s_list: &[f64]) -> Vec<DiagnosticsRecord> {
    traj.times()
        .iter()
        .zip(traj.states())
        .map(|(&time, u)| DiagnosticsRecord {
            time,
            mean: u.mean(),
            h1_energy: h1_energy(u),
            hs_norms: s_list.iter().map(|&s| (s, sobolev_norm(u, s))).collect(),
            i_energy: None,
        })
        .collect()
}

/// Largest `|E(t) - E(0)| / E(0)` over the records; zero for zero data.
pub fn max_relative_energy_drift(records: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    if first.h1_energy == 0.0 {
        return 0.0;
    }
    records
        .iter()
        .map(|r| ((r.h1_energy - first.h1_energy) / first.h1_energy).abs())
        .fold(0.0, f64::max)
}

/// CSV with header `time,mean,h1_energy,hs_<s>...` (plus `i_energy` when
/// any record carries it).
pub fn write_records_csv<W: Write>(records: &[DiagnosticsRecord], mut w: W) -> std::io::Result<()> {
    let with_i = records.iter().any(|r| r.i_energy.is_some());
    write!(w, "time,mean,h1_energy")?;
    if let Some(r) = records.first() {
        for (s, _) in &r.hs_norms {
            write!(w, ",hs_{s}")?;
        }
    }
    if with_i {
        write!(w, ",i_energy")?;
    }
    writeln!(w)?;
    for r in records {
        write!(w, "{},{},{}", Num(r.time), Num(r.mean), Num(r.h1_energy))?;
        for (_, v) in &r.hs_norms {
            write!(w, ",{}", Num(*v))?;
        }
        if with_i {
            match r.i_energy {
                Some(v) => write!(w, ",{}", Num(v))?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// One JSON object per line.
pub fn write_records_jsonl<W: Write>(records: &[DiagnosticsRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, EvolutionParams};
    use crate::spectral::Grid;
    use num_complex::Complex64;

    fn cos_field() -> RealField {
        let g = Grid::new(16, 1).unwrap();
        RealField::from_positive_modes(g, [(1, Complex64::new(0.5, 0.0))]).unwrap()
    }

    #[test]
    fn cosine_norms() {
        let u = cos_field();
        assert!((sobolev_norm(&u, 1.0) - 1.0).abs() < 1e-15);
        assert!((h1_energy(&u) - 1.0).abs() < 1e-15);
        // L² under the normalized measure: mean of cos² = ½
        assert!((sobolev_norm(&u, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        let z = RealField::zeros(u.grid());
        assert_eq!(sobolev_norm(&z, 3.5), 0.0);
        assert_eq!(h1_energy(&z), 0.0);
        assert!((h1_energy(&u.scale(3.0)) - 9.0 * h1_energy(&u)).abs() < 1e-14);
    }

    #[test]
    fn records_follow_trajectory() {
        let u = cos_field();
        let single = evolve(&u, &EvolutionParams::new(0.1, 0.0), 1).unwrap();
        assert_eq!(record(&single, &[1.0]).len(), 1);

        let traj = evolve(&u, &EvolutionParams::new(0.01, 1.0).linear(), 10).unwrap();
        let recs = record(&traj, &[0.5, 2.0]);
        assert_eq!(recs.len(), traj.len());
        for r in &recs {
            for (i, (_, v)) in r.hs_norms.iter().enumerate() {
                let v0 = recs[0].hs_norms[i].1;
                assert!(((v - v0) / v0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_and_jsonl_layout() {
        let traj = evolve(&cos_field(), &EvolutionParams::new(0.1, 0.2), 1).unwrap();
        let recs = record(&traj, &[0.5]);
        let mut csv = Vec::new();
        write_records_csv(&recs, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("time,mean,h1_energy,hs_0.5\n0,0,1,"));
        let mut jl = Vec::new();
        write_records_jsonl(&recs, &mut jl).unwrap();
        let jl = String::from_utf8(jl).unwrap();
        assert_eq!(jl.lines().count(), 3);
        let back: DiagnosticsRecord = serde_json::from_str(jl.lines().next().unwrap()).unwrap();
        assert_eq!(back, recs[0]);
    }
}
