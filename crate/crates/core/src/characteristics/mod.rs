//! Half-integer theta characteristics `[a/2; b/2]` with `a, b ∈ {0,1}^g`.
//!
//! The two bit vectors are packed into `u64` words with the first
//! coordinate in the most significant position, so that integer order on
//! `(a << g) | b` is the lexicographic order on `(a_1..a_g, b_1..b_g)` and
//! concatenation of characteristics is a shift.

mod hyperelliptic;

pub use hyperelliptic::{
    branch_point_characteristic, hyperelliptic_nonvanishing_classes, hyperelliptic_theta2_count,
    hyperelliptic_theta2_enumerated, hyperelliptic_theta2_formula, BranchSubsetClass,
    MAX_HYPERELLIPTIC_ENUMERATION_GENUS, MAX_HYPERELLIPTIC_GENUS,
};

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest genus for which all `4^g` characteristics are materialized.
pub const MAX_ENUMERATION_GENUS: usize = 12;

/// Largest genus a packed characteristic can carry.
pub const MAX_GENUS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    /// `+1` for even, `-1` for odd: the sign picked up by `θ[c](-z)`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl Add for Parity {
    type Output = Parity;

    fn add(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("even"),
            Parity::Odd => f.write_str("odd"),
        }
    }
}

/// A characteristic `[a/2; b/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Characteristic {
    g: usize,
    a: u64,
    b: u64,
}

fn pack(bits: &[u8]) -> Result<u64> {
    let mut word = 0u64;
    for &bit in bits {
        if bit > 1 {
            return Err(Error::InvalidArgument(format!(
                "characteristic entries must be 0 or 1, got {bit}"
            )));
        }
        word = (word << 1) | u64::from(bit);
    }
    Ok(word)
}

impl Characteristic {
    pub fn new(a: &[u8], b: &[u8]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        check_genus(a.len(), MAX_GENUS)?;
        Ok(Characteristic {
            g: a.len(),
            a: pack(a)?,
            b: pack(b)?,
        })
    }

    /// Builds a characteristic from packed words (first coordinate in the
    /// most significant of the low `g` bits).
    pub fn from_bits(g: usize, a: u64, b: u64) -> Result<Self> {
        check_genus(g, MAX_GENUS)?;
        let mask = low_mask(g);
        if a & !mask != 0 || b & !mask != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit pattern wider than genus {g}"
            )));
        }
        Ok(Characteristic { g, a, b })
    }

    pub fn zero(g: usize) -> Result<Self> {
        Self::from_bits(g, 0, 0)
    }

    /// The characteristic at position `index` of the lexicographic
    /// enumeration.
    pub fn from_index(g: usize, index: u64) -> Result<Self> {
        check_genus(g, MAX_GENUS)?;
        if g < 32 && index >> (2 * g) != 0 {
            return Err(Error::InvalidArgument(format!(
                "index {index} out of range for genus {g}"
            )));
        }
        Self::from_bits(g, index >> g, index & low_mask(g))
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn a_bits(&self) -> u64 {
        self.a
    }

    pub fn b_bits(&self) -> u64 {
        self.b
    }

    /// Position in the lexicographic enumeration.
    pub fn index(&self) -> u64 {
        (self.a << self.g) | self.b
    }

    pub fn a(&self) -> Vec<u8> {
        unpack(self.a, self.g)
    }

    pub fn b(&self) -> Vec<u8> {
        unpack(self.b, self.g)
    }

    /// `a/2` as reals.
    pub fn alpha(&self) -> Vec<f64> {
        self.a().into_iter().map(|x| 0.5 * f64::from(x)).collect()
    }

    /// `b/2` as reals.
    pub fn beta(&self) -> Vec<f64> {
        self.b().into_iter().map(|x| 0.5 * f64::from(x)).collect()
    }

    pub fn parity(&self) -> Parity {
        parity(self)
    }

    pub fn is_odd(&self) -> bool {
        self.parity().is_odd()
    }

    /// Sum in `A[2] ≅ (Z/2)^{2g}`.
    pub fn xor(&self, other: &Characteristic) -> Result<Characteristic> {
        if self.g != other.g {
            return Err(Error::DimensionMismatch {
                expected: self.g,
                found: other.g,
            });
        }
        Ok(Characteristic {
            g: self.g,
            a: self.a ^ other.a,
            b: self.b ^ other.b,
        })
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |bits: Vec<u8>| bits.iter().map(|b| b.to_string()).collect::<String>();
        write!(f, "[{};{}]", row(self.a()), row(self.b()))
    }
}

fn unpack(word: u64, g: usize) -> Vec<u8> {
    (0..g).map(|i| ((word >> (g - 1 - i)) & 1) as u8).collect()
}

fn low_mask(g: usize) -> u64 {
    if g >= 64 {
        u64::MAX
    } else {
        (1u64 << g) - 1
    }
}

pub(crate) fn check_genus(g: usize, max: usize) -> Result<()> {
    if g == 0 || g > max {
        return Err(Error::GenusOutOfRange { g, min: 1, max });
    }
    Ok(())
}

/// Even iff `a·b ≡ 0 (mod 2)`.
pub fn parity(c: &Characteristic) -> Parity {
    if (c.a & c.b).count_ones().is_multiple_of(2) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// All `4^g` characteristics in lexicographic order of `(a, b)`.
pub fn enumerate_characteristics(g: usize) -> Result<Vec<Characteristic>> {
    check_genus(g, MAX_ENUMERATION_GENUS)?;
    let mask = low_mask(g);
    Ok((0..1u64 << (2 * g))
        .map(|idx| Characteristic {
            g,
            a: idx >> g,
            b: idx & mask,
        })
        .collect())
}

/// Characteristic of a product variety: the factors' vectors concatenated.
pub fn product_characteristic(c1: &Characteristic, c2: &Characteristic) -> Result<Characteristic> {
    let g = c1.g + c2.g;
    check_genus(g, MAX_GENUS)?;
    Ok(Characteristic {
        g,
        a: (c1.a << c2.g) | c2.a,
        b: (c1.b << c2.g) | c2.b,
    })
}

/// Number of odd characteristics in genus `g`, `2^{g-1}(2^g - 1)`.
pub fn odd_count(g: usize) -> u64 {
    (1u64 << (g - 1)) * ((1u64 << g) - 1)
}

/// Number of even characteristics in genus `g`, `2^{g-1}(2^g + 1)`.
pub fn even_count(g: usize) -> u64 {
    (1u64 << (g - 1)) * ((1u64 << g) + 1)
}

/// The sharp bound `4^g - 3^g` on `Θ(2)`.
pub fn theta2_bound(g: usize) -> u64 {
    4u64.pow(g as u32) - 3u64.pow(g as u32)
}

/// The bound `m^{2g}(4^g - 3^g)` on `Θ(2m)`.
pub fn theta_2m_bound(g: usize, m: u64) -> u64 {
    m.pow(2 * g as u32) * theta2_bound(g)
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Tally of torsion points on a theta divisor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    pub g: usize,
    /// Torsion order.
    pub n: u64,
    /// Odd 2-torsion points, which lie on every symmetric theta divisor.
    pub odd_count: u64,
    /// The remaining points counted on the divisor (vanishing even
    /// thetanulls when `n = 2`).
    pub even_vanishing: u64,
    pub theta_n: u64,
    pub bound: u64,
    pub achieves_bound: bool,
}

impl CountReport {
    pub(crate) fn new(g: usize, n: u64, odd_count: u64, even_vanishing: u64, bound: u64) -> Self {
        let theta_n = odd_count + even_vanishing;
        CountReport {
            g,
            n,
            odd_count,
            even_vanishing,
            theta_n,
            bound,
            achieves_bound: theta_n == bound,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_parity(c: &Characteristic) -> Parity {
        let dot: u32 = c
            .a()
            .iter()
            .zip(c.b())
            .map(|(&x, y)| u32::from(x * y))
            .sum();
        if dot.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    #[test]
    fn parity_examples() {
        assert_eq!(
            Characteristic::new(&[0, 0], &[0, 0]).unwrap().parity(),
            Parity::Even
        );
        assert_eq!(
            Characteristic::new(&[1], &[1]).unwrap().parity(),
            Parity::Odd
        );
        let all = enumerate_characteristics(2).unwrap();
        let odd = all.iter().filter(|c| c.is_odd()).count();
        assert_eq!((all.len() - odd, odd), (10, 6));
    }

    #[test]
    fn enumeration_counts_match_brute_force() {
        for g in 1..=10 {
            let all = enumerate_characteristics(g).unwrap();
            assert_eq!(all.len() as u64, 4u64.pow(g as u32));
            let odd = all.iter().filter(|c| brute_parity(c).is_odd()).count() as u64;
            assert_eq!(odd, odd_count(g));
            assert_eq!(all.len() as u64 - odd, even_count(g));
            assert!(all.iter().all(|c| c.parity() == brute_parity(c)));
        }
    }

    #[test]
    fn enumeration_order_and_examples() {
        assert_eq!(enumerate_characteristics(1).unwrap().len(), 4);
        let g3 = enumerate_characteristics(3).unwrap();
        assert_eq!(g3.len(), 64);
        assert_eq!(g3.iter().filter(|c| c.is_odd()).count(), 28);
        let g2 = enumerate_characteristics(2).unwrap();
        assert_eq!(g2[0].a(), vec![0, 0]);
        assert_eq!(g2[0].b(), vec![0, 0]);
        assert_eq!(g2[1].b(), vec![0, 1]);
        assert_eq!(g2[4].a(), vec![0, 1]);
        assert!(g2
            .windows(2)
            .all(|w| (w[0].a(), w[0].b()) < (w[1].a(), w[1].b())));
        for (i, c) in g2.iter().enumerate() {
            assert_eq!(c.index(), i as u64);
            assert_eq!(Characteristic::from_index(2, i as u64).unwrap(), *c);
        }
    }

    #[test]
    fn enumeration_rejects_bad_genus() {
        assert!(matches!(
            enumerate_characteristics(0),
            Err(Error::GenusOutOfRange { .. })
        ));
        assert!(matches!(
            enumerate_characteristics(13),
            Err(Error::GenusOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_malformed_vectors() {
        assert!(Characteristic::new(&[0, 2], &[0, 0]).is_err());
        assert!(Characteristic::new(&[0], &[0, 0]).is_err());
        assert!(Characteristic::from_bits(2, 4, 0).is_err());
    }

    #[test]
    fn product_examples() {
        let odd = Characteristic::new(&[1], &[1]).unwrap();
        let even = Characteristic::new(&[1], &[0]).unwrap();
        let p = product_characteristic(&odd, &odd).unwrap();
        assert_eq!(p.genus(), 2);
        assert_eq!(p.a(), vec![1, 1]);
        assert_eq!(p.parity(), Parity::Even);
        assert_eq!(
            product_characteristic(&even, &even).unwrap().parity(),
            Parity::Even
        );
        assert_eq!(
            product_characteristic(&even, &odd).unwrap().parity(),
            Parity::Odd
        );
    }

    /// g-fold products of genus-one characteristics with at least one odd
    /// factor number 4^g - 3^g.
    #[test]
    fn products_with_an_odd_factor() {
        let factors = enumerate_characteristics(1).unwrap();
        for g in 1..=6 {
            let mut products = factors.clone();
            for _ in 1..g {
                products = products
                    .iter()
                    .flat_map(|p| {
                        factors
                            .iter()
                            .map(move |f| product_characteristic(p, f).unwrap())
                    })
                    .collect();
            }
            assert_eq!(products.len() as u64, 4u64.pow(g as u32));
            let with_odd_factor = products
                .iter()
                .filter(|c| (0..g).any(|i| (c.a()[i] & c.b()[i]) == 1))
                .count() as u64;
            assert_eq!(with_odd_factor, theta2_bound(g));
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(
            (1..=5).map(theta2_bound).collect::<Vec<_>>(),
            vec![1, 7, 37, 175, 781]
        );
        assert_eq!(theta_2m_bound(2, 2), 112);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(41, 20), 269_128_937_220);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_char(max_g: usize) -> impl Strategy<Value = Characteristic> {
            (1..=max_g).prop_flat_map(|g| {
                (0..1u64 << g, 0..1u64 << g)
                    .prop_map(move |(a, b)| Characteristic::from_bits(g, a, b).unwrap())
            })
        }

        proptest! {
            #[test]
            fn product_is_associative_and_parity_additive(
                c1 in arb_char(6), c2 in arb_char(6), c3 in arb_char(6)
            ) {
                let left = product_characteristic(&product_characteristic(&c1, &c2).unwrap(), &c3).unwrap();
                let right = product_characteristic(&c1, &product_characteristic(&c2, &c3).unwrap()).unwrap();
                prop_assert_eq!(left, right);
                prop_assert_eq!(left.parity(), c1.parity() + c2.parity() + c3.parity());
                let mut a = c1.a(); a.extend(c2.a()); a.extend(c3.a());
                prop_assert_eq!(left.a(), a);
            }

            #[test]
            fn index_round_trips(c in arb_char(12)) {
                prop_assert_eq!(Characteristic::from_index(c.genus(), c.index()).unwrap(), c);
                prop_assert_eq!(Characteristic::new(&c.a(), &c.b()).unwrap(), c);
            }
        }
    }
}
