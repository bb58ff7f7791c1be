//! Text form of floats in every CSV artifact: shortest round-trip digits,
//! switching to exponent notation outside `[1e-5, 1e16)`.

use std::fmt;

#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Num;

    #[test]
    fn round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 4.832349172767536e-5, 3e-300, 1e16, -2.5e-7, 123456.789] {
            let s = Num(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(Num(1e-7).to_string(), "1e-7");
        assert_eq!(Num(0.25).to_string(), "0.25");
    }
}
