//! How many frequencies k1 put Ω(k1, k - k1) in a window of width M.

use hsw::resonance::{annulus_count, count_exponent, sup_positive_annulus_count};

fn main() -> hsw::Result<()> {
    let j = 1;
    let windows = [1u64, 10, 100, 1_000, 10_000];
    let mut signed = Vec::new();
    let mut positive = Vec::new();
    for &m in &windows {
        signed.push(annulus_count(1, j, m, 128)?);
        positive.push(sup_positive_annulus_count(j, m, 64)?);
        println!("M = {m:>6}: signed {:>4}  positive sup {:>3}", signed.last().unwrap(), positive.last().unwrap());
    }
    println!("signed exponent {:.3}", count_exponent(&windows, &signed).unwrap());
    println!(
        "positive exponent {:.3} (1/(2j+1) = {:.3})",
        count_exponent(&windows, &positive).unwrap(),
        1.0 / (2 * j + 1) as f64
    );
    Ok(())
}
