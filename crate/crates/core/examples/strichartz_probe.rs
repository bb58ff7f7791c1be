//! Random-data probe of ‖u‖_{L⁴} ≤ C ‖u‖_{X^{0,b}}.

use num_complex::Complex64;

use hsw::spectral::Grid;
use hsw::xsb::{l4_norm, l4_probe, strichartz_exponent, xsb_norm, Ensemble, ProbeSetup, SpaceTimeField};

fn main() -> hsw::Result<()> {
    let grid = Grid::new(32, 1)?;
    let b = strichartz_exponent(1);

    let mut atom = SpaceTimeField::zeros(grid, 16, std::f64::consts::TAU)?;
    atom.set_real_pair(3, 0, Complex64::new(1.0, 0.0))?;
    println!("2 cos(3x + 27t): L4 {:.6}, X^(0,{b:.4}) {:.6}", l4_norm(&atom)?, xsb_norm(&atom, 0.0, b));

    for ensemble in [Ensemble::Free, Ensemble::Mixed] {
        let mut setup = ProbeSetup::new(grid, 16, 200, 2024);
        setup.ensemble = ensemble;
        let rep = l4_probe(&setup)?;
        println!(
            "{ensemble:?}: max ratio {:.4} (sample {}, seed {}), mean {:.4}",
            rep.ratio_max, rep.argmax_sample, rep.argmax_seed, rep.ratio_mean
        );
    }
    Ok(())
}
