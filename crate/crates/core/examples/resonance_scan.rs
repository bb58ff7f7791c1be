//! Size of the resonance function against |k k1 k2| k_max^(2j-2).

use hsw::resonance::{equivalence_ratio, equivalence_scan, resonance_function};

fn main() -> hsw::Result<()> {
    println!("Ω(3, 4) for j = 1: {}", resonance_function(3, 4, 1));
    println!("Ω(1000, -999) for j = 8: {}", resonance_function(1000, -999, 8));
    println!("ratio at (5, 7), j = 2: {}", equivalence_ratio(5, 7, 2));
    for j in 1..=3 {
        let r = equivalence_scan(j, 48)?;
        println!(
            "j = {j}: ratio in [{:.6}, {:.6}], extremes at {:?} / {:?}, violations {}",
            r.ratio_min, r.ratio_max, r.argmin, r.argmax, r.violations
        );
    }
    Ok(())
}
