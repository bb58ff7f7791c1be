//! Grids, transforms, Fourier symbols and the dealiased product.
//!
//! ```text
//! cargo run --example spectral_basics
//! ```

use hsw::spectral::{apply_symbol, dealias, derivative_symbol, forward_transform, inverse_transform, product, Grid};

fn main() -> hsw::Result<()> {
    let grid = Grid::new(32, 1)?;
    let x = grid.points();
    let samples: Vec<f64> = x.iter().map(|&x| x.sin() + 0.5 * (3.0 * x).cos()).collect();
    let u = forward_transform(&samples, grid)?;
    println!("c(1) = {}, c(3) = {}", u.coeff(1), u.coeff(3));

    // ∂x of sin x + cos 3x / 2 is cos x - 3 sin 3x / 2
    let ux = apply_symbol(&u, derivative_symbol(1))?;
    let back = inverse_transform(&ux)?;
    let err = x
        .iter()
        .zip(&back)
        .map(|(&x, v)| (v - (x.cos() - 1.5 * (3.0 * x).sin())).abs())
        .fold(0.0, f64::max);
    println!("derivative max error {err:.2e}");

    let uu = product(&u, &u, false)?;
    let uu_cut = dealias(&uu);
    println!(
        "u² has top mode {}, after the 2/3 cut {} (cutoff {})",
        uu.max_active_mode(1e-14),
        uu_cut.max_active_mode(1e-14),
        grid.dealias_cutoff()
    );
    Ok(())
}
