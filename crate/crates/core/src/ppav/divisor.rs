//! Explicit points on the theta divisor, used to probe the degenerate
//! locus of the multiplication maps.

use num_complex::Complex64;

use crate::characteristics::Characteristic;
use crate::theta::{RiemannMatrix, ThetaEvaluator};

/// On `diag(τ_1, …, τ_g)` the divisor is the union of the loci where some
/// coordinate equals the odd half-period `(1 + τ_i)/2`. Returns `rest` with
/// coordinate `index` replaced by that half-period.
pub fn product_divisor_point(
    tau: &RiemannMatrix,
    index: usize,
    rest: &[Complex64],
) -> Vec<Complex64> {
    let mut z = rest.to_vec();
    z[index] = (Complex64::new(1.0, 0.0) + tau.entry(index, index)) * 0.5;
    z
}

/// Solves `θ(z) = 0` by the secant method in one coordinate, starting from
/// `start`. Returns the point once the growth-normalized theta modulus is
/// below `1e-12`, or `None` if the iteration does not converge.
pub fn divisor_point_near(
    ev: &ThetaEvaluator,
    start: &[Complex64],
    coordinate: usize,
) -> Option<Vec<Complex64>> {
    let g = ev.genus();
    let zero = Characteristic::zero(g).ok()?;
    let eval = |z: &[Complex64]| -> Option<(Complex64, f64)> {
        let s = ev.theta_scaled(z, &zero, 1e-13).ok()?;
        // holomorphic value, and its normalized modulus
        Some((s.value * s.log_scale.exp(), s.value.norm()))
    };
    let mut z0 = start.to_vec();
    let mut z1 = start.to_vec();
    z1[coordinate] += Complex64::new(1e-3, 5e-4);
    let (mut f0, _) = eval(&z0)?;
    let (mut f1, mut a1) = eval(&z1)?;
    for _ in 0..60 {
        if a1 < 1e-12 {
            return Some(z1);
        }
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            return None;
        }
        let step = f1 * (z1[coordinate] - z0[coordinate]) / denom;
        if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1.0 {
            return None;
        }
        z0.clone_from(&z1);
        f0 = f1;
        z1[coordinate] -= step;
        let (f, a) = eval(&z1)?;
        f1 = f;
        a1 = a;
    }
    (a1 < 1e-12).then_some(z1)
}
