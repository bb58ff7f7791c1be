//! Polynomial growth bound for H^s below the energy space, against a
//! long simulation.

use hsw::dynamics::EvolutionParams;
use hsw::gwp::{default_epsilon, growth_campaign, growth_exponents, regularity_threshold};
use hsw::profiles::Profile;
use hsw::spectral::Grid;

fn main() -> hsw::Result<()> {
    for j in 1..=3 {
        let th = regularity_threshold(j);
        let law = growth_exponents(j, 0.9, default_epsilon(j))?;
        println!(
            "j = {j}: s > {th:.4}; at s = 0.9 f = {:.6}, T^{:.5}, data^{:.5}",
            law.f_j, law.exponent_t, law.exponent_data
        );
    }

    let u0 = Profile::Broadband { decay: 2.0, seed: 5, amplitude: 0.1 }.build(Grid::new(64, 1)?)?;
    let c = growth_campaign(&u0, 0.8, default_epsilon(1), &EvolutionParams::new(1e-3, 20.0), 100)?;
    let (t, sup) = c.series.last().copied().unwrap();
    println!("sup_(t <= {t}) |u|_H0.8 = {sup:.6}");
    println!("measured exponent {:?} vs bound {:.4}: within {}", c.measured_exponent, c.law.exponent_t, c.within_bound());
    Ok(())
}
