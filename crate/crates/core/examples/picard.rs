//! Picard iteration of the Duhamel map on a short window.

use hsw::diagnostics::sobolev_norm;
use hsw::dynamics::{evolve, picard_iterate, EvolutionParams};
use hsw::profiles::Profile;
use hsw::spectral::Grid;

fn main() -> hsw::Result<()> {
    let grid = Grid::new(64, 1)?;
    let u0 = Profile::Broadband { decay: 2.0, seed: 4, amplitude: 0.1 }.build(grid)?;
    let delta = 0.05;
    let params = EvolutionParams::new(1e-4, delta);

    let rep = picard_iterate(&u0, delta, 8, &params, 1.0)?;
    for (i, d) in rep.distances().iter().enumerate() {
        println!("iterate {:>2}: sup_t |u_(n+1) - u_n|_H1 = {d:.3e}", i + 1);
    }
    for r in rep.ratios(1e-15) {
        println!("ratio {r:.3e}");
    }

    let direct = evolve(&u0, &params, 1)?;
    let gap = direct
        .states()
        .iter()
        .zip(rep.fixed_point().states())
        .map(|(a, b)| sobolev_norm(&a.sub(b).unwrap(), 1.0))
        .fold(0.0, f64::max);
    println!("fixed point vs time stepper: {gap:.3e}");
    Ok(())
}
