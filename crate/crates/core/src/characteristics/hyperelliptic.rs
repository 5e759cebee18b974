//! Branch-point calculus for hyperelliptic Jacobians.
//!
//! A curve of genus `g` has `2g+2` branch points `B = {1, …, 2g+2}`.
//! Subsets of `B` with `|T| ≡ g+1 (mod 2)`, taken up to complement, are in
//! bijection with the `4^g` two-torsion points. Following the classical
//! vanishing criterion, the class of `T` lies off the symmetric theta
//! divisor exactly when it has a representative with `|T| = g+1`.
//!
//! The explicit characteristic attached to each class uses the usual table
//! `η_1, …, η_{2g+2}` and the set `U` of odd-indexed finite branch points;
//! the class of `T` is sent to `η_{T∘U}`. Conventions for this table differ
//! across references, so only count-level consequences are relied on.

use serde::{Deserialize, Serialize};

use super::{binomial, check_genus, odd_count, theta2_bound, Characteristic, CountReport};
use crate::error::Result;

/// Upper limit for the closed-form hyperelliptic count.
pub const MAX_HYPERELLIPTIC_GENUS: usize = 20;

/// Upper limit for explicit enumeration of subset classes.
pub const MAX_HYPERELLIPTIC_ENUMERATION_GENUS: usize = 10;

/// A subset of the branch points, canonicalized to the lexicographically
/// smaller of itself and its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchSubsetClass {
    g: usize,
    /// Bit `k-1` set iff branch point `k` is a member.
    members: u64,
}

fn full_mask(g: usize) -> u64 {
    (1u64 << (2 * g + 2)) - 1
}

fn sorted_members(set: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |k| set >> k & 1 == 1).map(|k| k + 1)
}

/// Lexicographic comparison of two subsets as sorted sequences.
fn lex_less(s: u64, t: u64) -> bool {
    let diff = s ^ t;
    if diff == 0 {
        return false;
    }
    let k = diff.trailing_zeros();
    let above = !((2u64 << k) - 1);
    if s >> k & 1 == 1 {
        // s continues with k; t either continues with something larger or stops
        t & above != 0
    } else {
        s & above == 0
    }
}

impl BranchSubsetClass {
    /// Canonical class of the subset given as 1-based branch point labels.
    pub fn new(g: usize, points: &[usize]) -> Result<Self> {
        check_genus(g, MAX_HYPERELLIPTIC_GENUS)?;
        let mut set = 0u64;
        for &k in points {
            if k == 0 || k > 2 * g + 2 {
                return Err(crate::Error::InvalidArgument(format!(
                    "branch point {k} outside 1..={}",
                    2 * g + 2
                )));
            }
            set |= 1 << (k - 1);
        }
        if (set.count_ones() as usize) % 2 != (g + 1) % 2 {
            return Err(crate::Error::InvalidArgument(format!(
                "subset size must be congruent to g+1 = {} mod 2",
                g + 1
            )));
        }
        Ok(Self::canonical(g, set))
    }

    fn canonical(g: usize, set: u64) -> Self {
        let complement = full_mask(g) & !set;
        let members = if lex_less(complement, set) {
            complement
        } else {
            set
        };
        BranchSubsetClass { g, members }
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    /// Members of the canonical representative, 1-based and ascending.
    pub fn members(&self) -> Vec<usize> {
        sorted_members(self.members).collect()
    }

    pub fn len(&self) -> usize {
        self.members.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.members == 0
    }

    /// True when a representative has exactly `g+1` points, i.e. the
    /// corresponding two-torsion point is off the theta divisor.
    pub fn is_nonvanishing(&self) -> bool {
        self.len() == self.g + 1
    }

    /// The characteristic `η_{T∘U}`.
    pub fn characteristic(&self) -> Characteristic {
        let g = self.g;
        let odd_finite: u64 = (0..=g).map(|i| 1u64 << (2 * i)).sum();
        let s = self.members ^ odd_finite;
        sorted_members(s).fold(Characteristic::zero(g).expect("genus checked"), |acc, k| {
            acc.xor(&branch_point_characteristic(g, k))
                .expect("same genus")
        })
    }
}

/// The characteristic `η_k` assigned to branch point `k ∈ 1..=2g+2`.
///
/// `η_{2i-1} = [e_i; 1…1 (i-1 ones) 0…0]`, `η_{2i} = [e_i; 1…1 (i ones) 0…0]`,
/// `η_{2g+1} = [0; 1…1]`, `η_{2g+2} = [0; 0]`.
pub fn branch_point_characteristic(g: usize, k: usize) -> Characteristic {
    assert!(
        (1..=2 * g + 2).contains(&k),
        "branch point {k} out of range"
    );
    // leading ones in the packed layout (coordinate 1 is the high bit)
    let leading = |n: usize| -> u64 { ((1u64 << n) - 1) << (g - n) };
    let (a, b) = if k <= 2 * g {
        let i = k.div_ceil(2);
        let ones = if k % 2 == 1 { i - 1 } else { i };
        (1u64 << (g - i), leading(ones))
    } else if k == 2 * g + 1 {
        (0, leading(g))
    } else {
        (0, 0)
    };
    Characteristic::from_bits(g, a, b).expect("bits fit genus")
}

/// All classes of subsets with `|T| ≡ g+1 (mod 2)` modulo complement, in
/// increasing order of their canonical bit pattern.
pub fn branch_subset_classes(g: usize) -> Result<Vec<BranchSubsetClass>> {
    check_genus(g, MAX_HYPERELLIPTIC_ENUMERATION_GENUS)?;
    let parity = ((g + 1) % 2) as u32;
    Ok((0..=full_mask(g))
        .filter(|set| set.count_ones() % 2 == parity)
        .filter(|&set| BranchSubsetClass::canonical(g, set).members == set)
        .map(|members| BranchSubsetClass { g, members })
        .collect())
}

/// The `C(2g+1, g)` classes lying off the theta divisor.
pub fn hyperelliptic_nonvanishing_classes(g: usize) -> Result<Vec<BranchSubsetClass>> {
    Ok(branch_subset_classes(g)?
        .into_iter()
        .filter(BranchSubsetClass::is_nonvanishing)
        .collect())
}

/// `Θ(2)` of a hyperelliptic Jacobian by explicit class enumeration.
pub fn hyperelliptic_theta2_enumerated(g: usize) -> Result<u64> {
    let classes = branch_subset_classes(g)?;
    let nonvanishing = classes.iter().filter(|c| c.is_nonvanishing()).count();
    Ok((classes.len() - nonvanishing) as u64)
}

/// `Θ(2) = 4^g - C(2g+1, g)` for a symmetric theta divisor on a
/// hyperelliptic Jacobian. For `g ≤ 10` the closed form is checked against
/// [`hyperelliptic_theta2_enumerated`].
/// `4^g - C(2g+1, g)`.
pub fn hyperelliptic_theta2_formula(g: usize) -> Result<u64> {
    check_genus(g, MAX_HYPERELLIPTIC_GENUS)?;
    Ok(4u64.pow(g as u32) - binomial(2 * g as u64 + 1, g as u64))
}

pub fn hyperelliptic_theta2_count(g: usize) -> Result<CountReport> {
    let theta = hyperelliptic_theta2_formula(g)?;
    if g <= MAX_HYPERELLIPTIC_ENUMERATION_GENUS {
        let enumerated = hyperelliptic_theta2_enumerated(g)?;
        assert_eq!(
            theta, enumerated,
            "closed form and enumeration disagree at g={g}"
        );
    }
    let odd = odd_count(g);
    Ok(CountReport::new(g, 2, odd, theta - odd, theta2_bound(g)))
}
