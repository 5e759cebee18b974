//! Period matrices and torsion counts on the theta divisor
//! `Θ = {θ(z, τ) = 0}`.

mod divisor;
pub mod io;

pub use divisor::{divisor_point_near, product_divisor_point};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characteristics::{
    check_genus, enumerate_characteristics, odd_count, theta2_bound, Characteristic, CountReport,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::theta::{RiemannMatrix, ThetaEvaluator};

/// Default absolute precision of theta evaluations.
pub const DEFAULT_EPS: f64 = 1e-9;
/// Default vanishing threshold on normalized theta moduli.
pub const DEFAULT_VANISH_TOL: f64 = 1e-6;
/// Largest `n^{2g}` accepted by [`torsion_points`].
pub const TORSION_BUDGET: u64 = 10_000_000;
/// Largest `n^{2g}` accepted by [`theta_n_count`].
pub const COUNT_BUDGET: u64 = 1_000_000;
/// Largest genus for [`random_ppav`].
pub const MAX_RANDOM_GENUS: usize = 4;

/// Weight of the perturbation `Q` in [`random_ppav`].
const RANDOM_IMAG_WEIGHT: f64 = 0.25;

/// `diag(τ_1, …, τ_g)`: the product of the elliptic curves `C/(Z + τ_i Z)`.
pub fn product_ppav(taus: &[Complex64]) -> Result<RiemannMatrix> {
    if let Some(t) = taus.iter().find(|t| t.im.is_nan() || t.im <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "factor modulus {t} must have positive imaginary part"
        )));
    }
    RiemannMatrix::diagonal(taus)
}

/// A generic period matrix `S + i(I + Q/4)`: `S` symmetric with entries in
/// `[-1/2, 1/2]`, `Q` symmetric positive semidefinite of spectral norm one.
/// Deterministic in `seed`.
pub fn random_ppav(g: usize, seed: u64) -> Result<RiemannMatrix> {
    check_genus(g, MAX_RANDOM_GENUS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut re = DMatrix::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let v = rng.gen_range(-0.5..=0.5);
            re[(i, j)] = v;
            re[(j, i)] = v;
        }
    }
    let b = DMatrix::from_fn(g, g, |_, _| rng.gen_range(-1.0..=1.0));
    let q = &b * b.transpose();
    let norm = SymmetricEigen::new(q.clone()).eigenvalues.max();
    let q = if norm > 0.0 { q / norm } else { q };
    let im = DMatrix::identity(g, g) + q * RANDOM_IMAG_WEIGHT;
    RiemannMatrix::from_real_imag(re, im)
}

/// The `n`-torsion point `(m + τk)/n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorsionPoint {
    m: Vec<u64>,
    k: Vec<u64>,
    order: u64,
}

impl TorsionPoint {
    pub fn new(m: Vec<u64>, k: Vec<u64>, order: u64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument(
                "torsion order must be at least 1".into(),
            ));
        }
        if m.len() != k.len() {
            return Err(Error::DimensionMismatch {
                expected: m.len(),
                found: k.len(),
            });
        }
        if m.is_empty() {
            return Err(Error::GenusOutOfRange {
                g: 0,
                min: 1,
                max: usize::MAX,
            });
        }
        if m.iter().chain(&k).any(|&v| v >= order) {
            return Err(Error::InvalidArgument(format!(
                "numerators must lie in 0..{order}"
            )));
        }
        Ok(TorsionPoint { m, k, order })
    }

    /// The two-torsion point `(b + τa)/2` of a characteristic `[a; b]`.
    pub fn from_characteristic(c: &Characteristic) -> Self {
        let widen = |v: Vec<u8>| v.into_iter().map(u64::from).collect();
        TorsionPoint {
            m: widen(c.b()),
            k: widen(c.a()),
            order: 2,
        }
    }

    /// Inverse of [`TorsionPoint::from_characteristic`], for points of
    /// order dividing two.
    pub fn to_characteristic(&self) -> Option<Characteristic> {
        let half = |v: &[u64]| -> Option<Vec<u8>> {
            v.iter()
                .map(|&x| match (self.order, x) {
                    (2, x) => Some(x as u8),
                    (n, x) if n % 2 == 0 && (2 * x) % n == 0 => Some((2 * x / n) as u8),
                    (1, _) => Some(0),
                    _ => None,
                })
                .collect()
        };
        Characteristic::new(&half(&self.k)?, &half(&self.m)?).ok()
    }

    pub fn genus(&self) -> usize {
        self.m.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn m(&self) -> &[u64] {
        &self.m
    }

    pub fn k(&self) -> &[u64] {
        &self.k
    }

    /// `k/n`, the real coordinates along `τ`.
    pub fn alpha(&self) -> Vec<f64> {
        self.k
            .iter()
            .map(|&v| v as f64 / self.order as f64)
            .collect()
    }

    /// `m/n`, the real coordinates along `Z^g`.
    pub fn beta(&self) -> Vec<f64> {
        self.m
            .iter()
            .map(|&v| v as f64 / self.order as f64)
            .collect()
    }

    /// The point of `C^g` it represents.
    pub fn to_complex(&self, tau: &RiemannMatrix) -> Vec<Complex64> {
        tau.lattice_point(&self.beta(), &self.alpha())
    }

    /// The point lies in `A[2]`.
    pub fn is_two_torsion(&self) -> bool {
        self.to_characteristic().is_some()
    }
}

/// All of `A[n]`, ordered lexicographically on `(k, m)`; for `n = 2` the
/// order matches [`enumerate_characteristics`] under `a = k`, `b = m`.
pub fn torsion_points(g: usize, n: u64) -> Result<Vec<TorsionPoint>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "torsion order must be at least 1".into(),
        ));
    }
    check_genus(g, 64)?;
    let total = n
        .checked_pow(2 * g as u32)
        .filter(|&t| t <= TORSION_BUDGET)
        .ok_or(Error::BudgetExceeded {
            needed: n.saturating_pow(2 * g as u32),
            limit: TORSION_BUDGET,
        })?;
    Ok((0..total)
        .map(|mut idx| {
            let mut digits = vec![0u64; 2 * g];
            for d in digits.iter_mut().rev() {
                *d = idx % n;
                idx /= n;
            }
            let m = digits.split_off(g);
            TorsionPoint {
                m,
                k: digits,
                order: n,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Vanishes,
    Nonvanishing,
    Ambiguous,
}

/// Membership decision for one point against `Θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishVerdict {
    pub point: TorsionPoint,
    /// Normalized modulus of the theta value.
    pub theta_abs: f64,
    /// Normalized error bound.
    pub error_bound: f64,
    pub verdict: Verdict,
}

/// Two-threshold classification with the gap `[vanish_tol, 10·vanish_tol]`.
pub fn classify(theta_abs: f64, error_bound: f64, vanish_tol: f64) -> Verdict {
    if theta_abs < vanish_tol && error_bound < vanish_tol / 10.0 {
        Verdict::Vanishes
    } else if theta_abs > 10.0 * vanish_tol {
        Verdict::Nonvanishing
    } else {
        Verdict::Ambiguous
    }
}

pub(crate) fn check_tolerances(eps: f64, vanish_tol: f64) -> Result<()> {
    if !(vanish_tol > 0.0 && vanish_tol < 0.1) {
        return Err(Error::InvalidArgument(format!(
            "vanish_tol {vanish_tol:e} must lie in (0, 0.1)"
        )));
    }
    if !(eps > 0.0 && eps <= vanish_tol / 10.0) {
        return Err(Error::InvalidArgument(format!(
            "eps {eps:e} must be positive and at most vanish_tol/10 = {:e}",
            vanish_tol / 10.0
        )));
    }
    Ok(())
}

/// A value whose vanishing is decided by symmetry rather than numerics.
const BY_PARITY: Option<(f64, f64)> = None;

/// Normalizes raw `(modulus, error)` pairs by the largest modulus and
/// classifies them; `None` entries vanish exactly.
fn verdicts(
    points: Vec<TorsionPoint>,
    raw: Vec<Option<(f64, f64)>>,
    vanish_tol: f64,
) -> Result<Vec<VanishVerdict>> {
    let scale = raw.iter().flatten().map(|&(v, _)| v).fold(0.0, f64::max);
    if raw.iter().any(Option::is_some) && (scale.is_nan() || scale <= 0.0) {
        return Err(Error::Ambiguous("all evaluated theta values vanish".into()));
    }
    Ok(points
        .into_iter()
        .zip(raw)
        .map(|(point, r)| match r {
            None => VanishVerdict {
                point,
                theta_abs: 0.0,
                error_bound: 0.0,
                verdict: Verdict::Vanishes,
            },
            Some((v, e)) => {
                let (theta_abs, error_bound) = (v / scale, e / scale);
                VanishVerdict {
                    verdict: classify(theta_abs, error_bound, vanish_tol),
                    point,
                    theta_abs,
                    error_bound,
                }
            }
        })
        .collect())
}

fn ambiguity_check(verdicts: &[VanishVerdict], what: &str) -> Result<()> {
    let ambiguous: Vec<String> = verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::Ambiguous)
        .map(|v| {
            format!(
                "(m={:?}, k={:?}, n={}) |θ|={:.3e} ± {:.1e}",
                v.point.m, v.point.k, v.point.order, v.theta_abs, v.error_bound
            )
        })
        .collect();
    if ambiguous.is_empty() {
        Ok(())
    } else {
        Err(Error::Ambiguous(format!(
            "{what}: {}",
            ambiguous.join("; ")
        )))
    }
}

/// Verdicts for all `4^g` half-periods. Odd ones vanish by parity; even
/// thetanulls are normalized by the largest even thetanull.
pub fn theta2_verdicts(
    tau: &RiemannMatrix,
    eps: f64,
    vanish_tol: f64,
    exec: Execution,
) -> Result<Vec<VanishVerdict>> {
    check_tolerances(eps, vanish_tol)?;
    let g = tau.genus();
    let chars = enumerate_characteristics(g)?;
    let ev = ThetaEvaluator::new(tau);
    let origin = vec![Complex64::new(0.0, 0.0); g];
    let raw = exec::try_map(&chars, exec, |c| -> Result<Option<(f64, f64)>> {
        if c.is_odd() {
            return Ok(BY_PARITY);
        }
        let r = ev.theta_scaled(&origin, c, eps)?;
        Ok(Some((r.value.norm(), r.error_bound)))
    })?;
    verdicts(
        chars
            .iter()
            .map(TorsionPoint::from_characteristic)
            .collect(),
        raw,
        vanish_tol,
    )
}

/// `Θ(2)`: odd half-periods plus vanishing even thetanulls.
pub fn theta2_count(tau: &RiemannMatrix, eps: f64, vanish_tol: f64) -> Result<CountReport> {
    theta2_count_with(tau, eps, vanish_tol, Execution::default())
}

pub fn theta2_count_with(
    tau: &RiemannMatrix,
    eps: f64,
    vanish_tol: f64,
    exec: Execution,
) -> Result<CountReport> {
    let g = tau.genus();
    let verdicts = theta2_verdicts(tau, eps, vanish_tol, exec)?;
    ambiguity_check(&verdicts, "thetanull classification")?;
    let even_vanishing = verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::Vanishes)
        .filter(|v| !v.point.to_characteristic().is_some_and(|c| c.is_odd()))
        .count() as u64;
    let report = CountReport::new(g, 2, odd_count(g), even_vanishing, theta2_bound(g));
    if report.theta_n > report.bound {
        return Err(Error::BoundViolation(format!(
            "Θ(2) = {} exceeds 4^g - 3^g = {}",
            report.theta_n, report.bound
        )));
    }
    Ok(report)
}

/// Verdicts for every point of `A[n]`, via the rational-characteristic
/// thetanulls `θ[k/n, m/n](0)`, which vanish exactly when `θ((m+τk)/n)`
/// does. Normalized by the largest evaluated modulus.
pub fn theta_n_verdicts(
    tau: &RiemannMatrix,
    n: u64,
    eps: f64,
    vanish_tol: f64,
    exec: Execution,
) -> Result<Vec<VanishVerdict>> {
    check_tolerances(eps, vanish_tol)?;
    let g = tau.genus();
    let needed = n.saturating_pow(2 * g as u32);
    if needed > COUNT_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            limit: COUNT_BUDGET,
        });
    }
    let points = torsion_points(g, n)?;
    let ev = ThetaEvaluator::new(tau);
    let origin = vec![Complex64::new(0.0, 0.0); g];
    let raw = exec::try_map(&points, exec, |p| -> Result<Option<(f64, f64)>> {
        if p.to_characteristic().is_some_and(|c| c.is_odd()) {
            return Ok(BY_PARITY);
        }
        let r = ev.eval_scaled(&origin, &p.alpha(), &p.beta(), eps)?;
        Ok(Some((r.value.norm(), r.error_bound)))
    })?;
    verdicts(points, raw, vanish_tol)
}

/// `Θ(n) = #A[n] ∩ Θ`. For even `n = 2m` the report's bound is
/// `m^{2g}(4^g - 3^g)` and exceeding it is an error; for odd `n` the bound
/// is the trivial `n^{2g}`.
pub fn theta_n_count(
    tau: &RiemannMatrix,
    n: u64,
    eps: f64,
    vanish_tol: f64,
) -> Result<CountReport> {
    theta_n_count_with(tau, n, eps, vanish_tol, Execution::default())
}

pub fn theta_n_count_with(
    tau: &RiemannMatrix,
    n: u64,
    eps: f64,
    vanish_tol: f64,
    exec: Execution,
) -> Result<CountReport> {
    let g = tau.genus();
    let verdicts = theta_n_verdicts(tau, n, eps, vanish_tol, exec)?;
    ambiguity_check(&verdicts, &format!("{n}-torsion classification"))?;
    let is_odd_half_period =
        |v: &VanishVerdict| v.point.to_characteristic().is_some_and(|c| c.is_odd());
    let odd = if n.is_multiple_of(2) { odd_count(g) } else { 0 };
    let others = verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::Vanishes && !is_odd_half_period(v))
        .count() as u64;
    let bound = if n.is_multiple_of(2) {
        crate::characteristics::theta_2m_bound(g, n / 2)
    } else {
        n.pow(2 * g as u32)
    };
    let report = CountReport::new(g, n, odd, others, bound);
    if report.theta_n > report.bound {
        return Err(Error::BoundViolation(format!(
            "Θ({n}) = {} exceeds {}",
            report.theta_n, report.bound
        )));
    }
    Ok(report)
}

/// Verdicts for the translates `w + η`, `η ∈ A[2]`, against `Θ`, read off
/// from `θ[η](w)`. Normalized by the largest of the `4^g` moduli. When `w`
/// is exactly zero the odd characteristics vanish by parity.
pub fn two_torsion_translate_verdicts(
    tau: &RiemannMatrix,
    w: &[Complex64],
    eps: f64,
    vanish_tol: f64,
    exec: Execution,
) -> Result<Vec<VanishVerdict>> {
    check_tolerances(eps, vanish_tol)?;
    let g = tau.genus();
    if w.len() != g {
        return Err(Error::DimensionMismatch {
            expected: g,
            found: w.len(),
        });
    }
    let at_origin = w.iter().all(|v| v.re == 0.0 && v.im == 0.0);
    let chars = enumerate_characteristics(g)?;
    let ev = ThetaEvaluator::new(tau);
    let raw = exec::try_map(&chars, exec, |c| -> Result<Option<(f64, f64)>> {
        if at_origin && c.is_odd() {
            return Ok(BY_PARITY);
        }
        let r = ev.theta_scaled(w, c, eps)?;
        Ok(Some((r.value.norm(), r.error_bound)))
    })?;
    verdicts(
        chars
            .iter()
            .map(TorsionPoint::from_characteristic)
            .collect(),
        raw,
        vanish_tol,
    )
}

#[cfg(test)]
mod tests;
