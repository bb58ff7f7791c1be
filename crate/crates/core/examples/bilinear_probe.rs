//! Random-data probes of the two bilinear X^{s,b} estimates at their
//! threshold regularity, and one notch below.

use hsw::spectral::Grid;
use hsw::xsb::{bilinear_probe, BilinearForm, ProbeSetup};

fn main() -> hsw::Result<()> {
    let setup = ProbeSetup::new(Grid::new(32, 1)?, 16, 100, 7);
    for form in [BilinearForm::Lemma31, BilinearForm::Lemma32] {
        let s = form.threshold(1);
        let rep = bilinear_probe(form, s, &setup)?;
        println!("{} at s = {s}: max ratio {:.4e}", form.name(), rep.ratio_max);
        match bilinear_probe(form, s - 0.25, &setup) {
            Ok(_) => println!("  below threshold accepted?"),
            Err(e) => println!("  s = {}: {e}", s - 0.25),
        }
    }
    Ok(())
}
