//! Gaussian tail bound for lattice sums.
//!
//! For a shifted lattice `Λ + w ⊂ R^g` whose points are pairwise at least
//! `2r` apart, the balls of radius `r` around the points outside the sphere
//! of radius `R ≥ 2r` are disjoint and lie outside the sphere of radius
//! `R - r`. On each such ball `‖v‖ ≥ ‖u‖ - r ≥ 0`, so averaging gives
//!
//! ```text
//! Σ_{‖v‖>R} exp(-‖v‖²) ≤ (g / r^g) ∫_{R-r}^∞ t^{g-1} exp(-(t-r)²) dt
//!                      = (g / r^g) Σ_j C(g-1, j) r^{g-1-j} Γ((j+1)/2, (R-2r)²) / 2.
//! ```

use std::f64::consts::PI;

use crate::characteristics::binomial;

/// Upper incomplete gamma `Γ(s, x)` for `s = k/2`, `k ≥ 1`.
pub(crate) fn upper_gamma_half(k: usize, x: f64) -> f64 {
    assert!(k >= 1 && x >= 0.0);
    let e = (-x).exp();
    // Γ(s+1, x) = s Γ(s, x) + x^s e^{-x}
    let (mut s, mut value) = if k % 2 == 1 {
        (0.5, PI.sqrt() * libm::erfc(x.sqrt()))
    } else {
        (1.0, e)
    };
    while s < k as f64 / 2.0 {
        value = s * value + x.powf(s) * e;
        s += 1.0;
    }
    value
}

/// Bound on `Σ exp(-‖v‖²)` over points of norm greater than `radius`,
/// for points separated by at least `2 * packing_radius`.
pub fn tail_bound(g: usize, packing_radius: f64, radius: f64) -> f64 {
    let r = packing_radius;
    assert!(r > 0.0 && radius >= 2.0 * r, "tail bound needs R >= 2r");
    let x = (radius - 2.0 * r).powi(2);
    let sum: f64 = (0..g)
        .map(|j| {
            binomial(g as u64 - 1, j as u64) as f64
                * r.powi((g - 1 - j) as i32)
                * 0.5
                * upper_gamma_half(j + 1, x)
        })
        .sum();
    // slack for the rounding in erfc and the recurrence
    g as f64 / r.powi(g as i32) * sum * (1.0 + 1e-10)
}

/// Smallest radius (to within a relative 1e-6) whose tail bound is at most
/// `target`.
pub fn radius_for(g: usize, packing_radius: f64, target: f64) -> f64 {
    let lo0 = 2.0 * packing_radius;
    if tail_bound(g, packing_radius, lo0) <= target {
        return lo0;
    }
    let mut lo = lo0;
    let mut hi = lo0 + 1.0;
    while tail_bound(g, packing_radius, hi) > target {
        lo = hi;
        hi = lo0 + 2.0 * (hi - lo0);
        if hi > 1e4 {
            return f64::INFINITY;
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if tail_bound(g, packing_radius, mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incomplete_gamma_values() {
        // Γ(1/2, 0) = √π, Γ(1, x) = e^{-x}, Γ(2, x) = (1+x) e^{-x}
        assert!((upper_gamma_half(1, 0.0) - PI.sqrt()).abs() < 1e-15);
        assert!((upper_gamma_half(2, 1.5) - (-1.5f64).exp()).abs() < 1e-15);
        assert!((upper_gamma_half(4, 1.5) - 2.5 * (-1.5f64).exp()).abs() < 1e-15);
        // Γ(3/2, x) = √x e^{-x} + (√π/2) erfc(√x)
        let x = 2.0f64;
        let expect = x.sqrt() * (-x).exp() + 0.5 * PI.sqrt() * libm::erfc(x.sqrt());
        assert!((upper_gamma_half(3, x) - expect).abs() < 1e-15);
    }

    /// Compares against direct sums over shifted one- and two-dimensional
    /// lattices.
    #[test]
    fn bound_dominates_actual_tail() {
        for (spacing, shift) in [(1.0, 0.3), (1.77, 0.0), (0.6, 0.49)] {
            let r = spacing / 2.0;
            for radius in [2.0 * r, 2.5, 4.0] {
                if radius < 2.0 * r {
                    continue;
                }
                let actual: f64 = (-200i64..=200)
                    .map(|k| spacing * (k as f64 + shift))
                    .filter(|v: &f64| v.abs() > radius)
                    .map(|v| (-v * v).exp())
                    .sum();
                assert!(actual <= tail_bound(1, r, radius), "1d {spacing} {radius}");
                let actual2: f64 = (-60i64..=60)
                    .flat_map(|a| (-60i64..=60).map(move |b| (a, b)))
                    .map(|(a, b)| {
                        let x = spacing * (a as f64 + shift);
                        let y = spacing * (b as f64 - shift);
                        x * x + y * y
                    })
                    .filter(|q| q.sqrt() > radius)
                    .map(|q| (-q).exp())
                    .sum();
                assert!(actual2 <= tail_bound(2, r, radius), "2d {spacing} {radius}");
            }
        }
    }

    #[test]
    fn radius_meets_target() {
        for g in 1..=5 {
            for target in [1e-3, 1e-9, 1e-15] {
                let r = radius_for(g, 0.8, target);
                assert!(tail_bound(g, 0.8, r) <= target);
                assert!(tail_bound(g, 0.8, r * (1.0 - 1e-4)) > target || r == 1.6);
            }
        }
    }
}
