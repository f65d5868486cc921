use serde::{Deserialize, Serialize};
use std::fmt;

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Exact non-negative fraction, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Ratio { num: num / g, den: den / g }
    }

    /// Arithmetic mean; `None` for an empty slice.
    pub fn mean(items: &[Ratio]) -> Option<Ratio> {
        let first = items.first()?;
        let sum = items[1..].iter().fold(*first, |acc, r| {
            let den = acc.den / gcd(acc.den, r.den) * r.den;
            Ratio::new(acc.num * (den / acc.den) + r.num * (den / r.den), den)
        });
        Some(Ratio::new(sum.num, sum.den * items.len() as u128))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Decimal text with `places` digits, rounded half up.
    pub fn format(self, places: u32) -> String {
        let scale = 10u128.pow(places);
        let scaled = (self.num * scale * 2 + self.den) / (self.den * 2);
        if places == 0 {
            return scaled.to_string();
        }
        format!("{}.{:0width$}", scaled / scale, scaled % scale, width = places as usize)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formatting() {
        assert_eq!(Ratio::new(9, 10).to_string(), "0.90");
        assert_eq!(Ratio::new(1, 1).to_string(), "1.00");
        assert_eq!(Ratio::new(2, 3).to_string(), "0.67");
        assert_eq!(Ratio::new(1, 8).format(2), "0.13");
        assert_eq!(Ratio::new(0, 7).to_string(), "0.00");
        assert_eq!(Ratio::new(7, 2).format(0), "4");
    }

    #[test]
    fn mean_is_exact() {
        let m = Ratio::mean(&[Ratio::new(1, 3), Ratio::new(1, 3), Ratio::new(1, 3)]).unwrap();
        assert_eq!(m, Ratio::new(1, 3));
        let m = Ratio::mean(&[Ratio::new(9, 10), Ratio::new(1, 1), Ratio::new(7, 10), Ratio::new(9, 10), Ratio::new(8, 10), Ratio::new(9, 10)]).unwrap();
        assert_eq!(m, Ratio::new(52, 60));
        assert_eq!(m.to_string(), "0.87");
        assert!(Ratio::mean(&[]).is_none());
    }

    proptest! {
        #[test]
        fn mean_matches_float(nums in proptest::collection::vec((0u128..=20, 1u128..=20), 1..8)) {
            let rs: Vec<Ratio> = nums.iter().map(|&(n, d)| Ratio::new(n.min(d), d)).collect();
            let exact = Ratio::mean(&rs).unwrap().to_f64();
            let float = rs.iter().map(|r| r.to_f64()).sum::<f64>() / rs.len() as f64;
            prop_assert!((exact - float).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&exact));
        }
    }
}
