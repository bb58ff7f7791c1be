//! Modified energy E(Iu): commutator decomposition of one increment, then
//! its decay across cutoffs N.

use hsw::dynamics::{evolve, EvolutionParams};
use hsw::imethod::{commutator_terms, energy_increment, scaling_study, IMultiplier};
use hsw::profiles::Profile;
use hsw::spectral::Grid;

fn main() -> hsw::Result<()> {
    let grid = Grid::new(64, 1)?;
    let u0 = Profile::Broadband { decay: 2.0, seed: 11, amplitude: 1.0 }.build(grid)?;
    let delta = 0.02;
    let params = EvolutionParams::new(1e-5, delta);

    let traj = evolve(&u0, &params, 1)?;
    let im = IMultiplier::new(0.6, 8)?;
    let inc = energy_increment(&traj, &im);
    let t = commutator_terms(&traj, &im)?;
    println!("E(Iu)(δ) - E(Iu)(0) = {inc:.6e}");
    println!("T1 + T2 + T3        = {:.6e}  ({:.3e}, {:.3e}, {:.3e})", t.sum(), t.t1, t.t2, t.t3);

    let ladder: Vec<IMultiplier> = [4, 8, 12, 16, 20]
        .iter()
        .map(|&n| IMultiplier::new(0.6, n))
        .collect::<hsw::Result<_>>()?;
    let rep = scaling_study(&u0, delta, &ladder, &params)?;
    rep.write_csv(std::io::stdout().lock())?;
    println!("log-log slope {:?}", rep.slope);
    Ok(())
}
