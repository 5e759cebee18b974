//! Riemann theta functions with characteristics,
//!
//! ```text
//! θ[α,β](z, τ) = Σ_{n ∈ Z^g} exp(πi (n+α)ᵀτ(n+α) + 2πi (n+α)ᵀ(z+β)),
//! ```
//!
//! evaluated in double precision with a certified absolute error bound.
//!
//! Evaluation proceeds in three steps. The characteristic is absorbed into
//! the argument, `θ[α,β](z) = exp(πi αᵀτα + 2πi αᵀ(z+β)) θ(z + β + τα)`.
//! The argument is then reduced modulo `Z^g + τZ^g` so that
//! `c = (Im τ)⁻¹ Im z` lies in `[-1/2, 1/2]^g`, accumulating the automorphy
//! factor. Finally the growth `exp(π yᵀ(Im τ)⁻¹y)` is split off and the
//! remaining oscillatory sum is taken over the ellipsoid
//! `π (n+c)ᵀ Im τ (n+c) ≤ R²`, with `R` chosen from the Gaussian tail bound
//! in [`tail`].
//!
//! Results carry the growth exponent separately ([`ScaledTheta`]) so that
//! vanishing decisions and rank computations can work with quantities of
//! order one.

pub mod lattice;
mod matrix;
pub mod tail;

pub use matrix::{RiemannMatrix, MAX_CONDITION, MAX_MATRIX_GENUS, SYMMETRY_TOLERANCE};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characteristics::Characteristic;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use lattice::{BudgetExhausted, EllipsoidEnumerator};

/// Lattice points summed per evaluation before giving up.
pub const DEFAULT_POINT_BUDGET: u64 = 10_000_000;

/// Unit roundoff of `f64`.
const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

const BLOCK: usize = 64;

/// Fraction of the error budget granted to truncation; the rest absorbs
/// rounding.
const TAIL_SHARE: f64 = 0.1;

/// A theta value and a bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaResult {
    pub value: Complex64,
    pub error_bound: f64,
}

/// A theta value with its growth factor split off: the full value is
/// `exp(log_scale) * value`, and `error_bound` bounds the error of `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledTheta {
    pub log_scale: f64,
    pub value: Complex64,
    pub error_bound: f64,
    /// Lattice points summed.
    pub points: u64,
}

/// Outcome of comparing `θ(z + τk)` with `exp(-πi kᵀτk - 2πi kᵀz) θ(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiPeriodicityDefect {
    pub defect: f64,
    /// Error bound propagated from both evaluations.
    pub bound: f64,
}

/// Evaluator prepared for one period matrix: Cholesky frame of `π Im τ`,
/// `(Im τ)⁻¹` and the packing radius of the lattice.
#[derive(Debug, Clone)]
pub struct ThetaEvaluator {
    tau: RiemannMatrix,
    g: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    y_inv: Vec<f64>,
    enumerator: EllipsoidEnumerator,
    packing_radius: f64,
    budget: u64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y).abs()).sum()
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let g = v.len();
    (0..g).map(|i| dot(&m[i * g..(i + 1) * g], v)).collect()
}

fn quad(m: &[f64], v: &[f64]) -> f64 {
    dot(v, &mat_vec(m, v))
}

fn quad_abs(m: &[f64], v: &[f64]) -> f64 {
    let g = v.len();
    (0..g)
        .map(|i| {
            (0..g)
                .map(|j| (v[i] * m[i * g + j] * v[j]).abs())
                .sum::<f64>()
        })
        .sum()
}

fn frac(t: f64) -> f64 {
    t - t.round()
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Reduced argument data shared by the scaled and unscaled entry points.
struct Prepared {
    /// Logarithm of the modulus of the accumulated prefactor.
    log_total: f64,
    /// Absolute error of `log_total`.
    log_err: f64,
    /// Unit-modulus phase of the prefactor.
    phase: Complex64,
    phase_err: f64,
    /// `π yᵀ(Im τ)⁻¹y`, equal to `log_total` up to rounding.
    log_scale: f64,
    centre: Vec<f64>,
    delta_y: Vec<f64>,
    x_red: Vec<f64>,
}

/// Deterministic blocked pairwise summation.
struct PairwiseSum {
    stack: Vec<(u32, Complex64)>,
    block: Complex64,
    in_block: usize,
    blocks: u64,
    terms: usize,
}

impl PairwiseSum {
    fn new() -> Self {
        PairwiseSum {
            stack: Vec::new(),
            block: Complex64::new(0.0, 0.0),
            in_block: 0,
            blocks: 0,
            terms: 0,
        }
    }

    fn add(&mut self, t: Complex64) {
        self.block += t;
        self.in_block += 1;
        self.terms += 1;
        if self.in_block == BLOCK {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let mut s = std::mem::replace(&mut self.block, Complex64::new(0.0, 0.0));
        self.in_block = 0;
        self.blocks += 1;
        let mut level = 0;
        while let Some(&(l, top)) = self.stack.last() {
            if l != level {
                break;
            }
            self.stack.pop();
            s = top + s;
            level += 1;
        }
        self.stack.push((level, s));
    }

    /// The sum and the factor `γ` with `|error| ≤ γ · Σ|t_i|`.
    fn finish(mut self) -> (Complex64, f64) {
        if self.in_block > 0 {
            self.flush();
        }
        let total = self
            .stack
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &(_, s)| acc + s);
        let depth = 64 - self.blocks.leading_zeros() as usize;
        let run = if self.blocks > 1 {
            BLOCK
        } else {
            self.terms.min(BLOCK)
        };
        // first-order recursive-summation bound, √2 for complex parts
        let gamma = 1.5 * (run + 2 * depth) as f64 * UNIT_ROUNDOFF;
        (total, gamma)
    }
}

impl ThetaEvaluator {
    pub fn new(tau: &RiemannMatrix) -> Self {
        let g = tau.genus();
        let q = tau.im() * PI;
        let enumerator =
            EllipsoidEnumerator::new(&q).expect("Im τ positive definite by construction");
        let y_inv = tau
            .im()
            .clone()
            .try_inverse()
            .expect("Im τ invertible by construction");
        let rho2 = enumerator.shortest_vector_sq();
        ThetaEvaluator {
            tau: tau.clone(),
            g,
            x: row_major(tau.re()),
            y: row_major(tau.im()),
            y_inv: row_major(&y_inv),
            enumerator,
            packing_radius: 0.5 * rho2.sqrt() * (1.0 - 1e-9),
            budget: DEFAULT_POINT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn tau(&self) -> &RiemannMatrix {
        &self.tau
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    /// Half the length of a shortest vector of the lattice `T Z^g`,
    /// `TᵀT = π Im τ`.
    pub fn packing_radius(&self) -> f64 {
        self.packing_radius
    }

    /// `π yᵀ (Im τ)⁻¹ y` for `y = Im z`: the logarithm of the growth of
    /// `|θ(z)|`, shared by every characteristic.
    pub fn growth_exponent(&self, z: &[Complex64]) -> f64 {
        let y: Vec<f64> = z.iter().map(|w| w.im).collect();
        PI * quad(&self.y_inv, &y)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.g {
            return Err(Error::DimensionMismatch {
                expected: self.g,
                found,
            });
        }
        Ok(())
    }

    /// Absorbs the characteristic, reduces the argument and fixes the
    /// Gaussian centre.
    fn prepare(&self, z: &[Complex64], alpha: &[f64], beta: &[f64]) -> Result<Prepared> {
        let g = self.g;
        self.check_dim(z.len())?;
        self.check_dim(alpha.len())?;
        self.check_dim(beta.len())?;
        if z.iter().any(|w| !w.re.is_finite() || !w.im.is_finite())
            || alpha.iter().chain(beta).any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite argument".into()));
        }
        let (x, y) = (&self.x, &self.y);
        let z_re: Vec<f64> = z.iter().map(|w| w.re).collect();
        let z_im: Vec<f64> = z.iter().map(|w| w.im).collect();

        // characteristic prefactor, w = z + β + τα
        let x_alpha = mat_vec(x, alpha);
        let y_alpha = mat_vec(y, alpha);
        let w_re: Vec<f64> = (0..g).map(|i| z_re[i] + beta[i] + x_alpha[i]).collect();
        let w_im: Vec<f64> = (0..g).map(|i| z_im[i] + y_alpha[i]).collect();
        let z_beta: Vec<f64> = (0..g).map(|i| z_re[i] + beta[i]).collect();
        let log_char = -PI * dot(alpha, &y_alpha) - 2.0 * PI * dot(alpha, &z_im);
        let turns_char = 0.5 * dot(alpha, &x_alpha) + dot(alpha, &z_beta);
        let mut log_mag = PI * quad_abs(y, alpha) + 2.0 * PI * dot_abs(alpha, &z_im);
        let mut turn_mag = 0.5 * quad_abs(x, alpha) + dot_abs(alpha, &z_beta);

        // reduce modulo τZ^g
        let c = mat_vec(&self.y_inv, &w_im);
        let k: Vec<f64> = c.iter().map(|v| v.round()).collect();
        let y_k = mat_vec(y, &k);
        let x_k = mat_vec(x, &k);
        let w2_re: Vec<f64> = (0..g).map(|i| w_re[i] - x_k[i]).collect();
        let w2_im: Vec<f64> = (0..g).map(|i| w_im[i] - y_k[i]).collect();
        let log_red = PI * dot(&k, &y_k) + 2.0 * PI * dot(&k, &w2_im);
        let turns_red = -0.5 * dot(&k, &x_k) - dot(&k, &w2_re);
        log_mag += PI * quad_abs(y, &k) + 2.0 * PI * dot_abs(&k, &w2_im);
        turn_mag += 0.5 * quad_abs(x, &k) + dot_abs(&k, &w2_re);

        // reduce modulo Z^g (exact periodicity)
        let x_red: Vec<f64> = w2_re.iter().map(|&v| frac(v)).collect();

        // Gaussian centre, refined once so that Y·centre reproduces Im w.
        // Any remaining discrepancy is carried exactly by `delta_y`.
        let mut centre = mat_vec(&self.y_inv, &w2_im);
        let resid: Vec<f64> = mat_vec(y, &centre)
            .iter()
            .zip(&w2_im)
            .map(|(a, b)| a - b)
            .collect();
        let fix = mat_vec(&self.y_inv, &resid);
        for (ci, fi) in centre.iter_mut().zip(&fix) {
            *ci -= fi;
        }
        let delta_y: Vec<f64> = mat_vec(y, &centre)
            .iter()
            .zip(&w2_im)
            .map(|(a, b)| a - b)
            .collect();
        let log_centre = PI * quad(y, &centre);
        log_mag += PI * quad_abs(y, &centre);

        let turns = frac(turns_char) + frac(turns_red);
        let op_factor = (2 * g + 4) as f64 * UNIT_ROUNDOFF;
        Ok(Prepared {
            log_total: log_char + log_red + log_centre,
            log_err: op_factor * log_mag,
            phase: Complex64::from_polar(1.0, 2.0 * PI * turns),
            phase_err: op_factor * 2.0 * PI * turn_mag + 4.0 * UNIT_ROUNDOFF,
            log_scale: self.growth_exponent(z),
            centre,
            delta_y,
            x_red,
        })
    }

    /// Radius needed for a tail below `target`, or the failure to report.
    fn radius(&self, target: f64, requested: f64, unit: f64) -> Result<f64> {
        let g = self.g;
        let radius = tail::radius_for(g, self.packing_radius, target);
        if radius.is_finite() && self.enumerator.estimated_count(radius) <= self.budget as f64 {
            return Ok(radius);
        }
        Err(self.budget_failure(requested, unit))
    }

    fn budget_failure(&self, requested: f64, unit: f64) -> Error {
        let g = self.g as f64;
        let unit_ball = PI.powf(g / 2.0) / libm::tgamma(g / 2.0 + 1.0);
        let r_max = (self.budget as f64 * self.enumerator.det() / unit_ball).powf(1.0 / g);
        let r_max = r_max.max(2.0 * self.packing_radius);
        Error::PrecisionUnachievable {
            requested,
            best: unit * tail::tail_bound(self.g, self.packing_radius, r_max),
        }
    }

    /// The reduced oscillatory sum and a bound on its absolute error
    /// (truncation plus rounding).
    fn lattice_sum(
        &self,
        prep: &Prepared,
        radius: f64,
    ) -> std::result::Result<(Complex64, f64, u64), BudgetExhausted> {
        let g = self.g;
        let x = &self.x;
        let mut sum = PairwiseSum::new();
        let mut abs_sum = 0.0;
        let mut abs_err = 0.0;
        let angle_ops = 2.0 * PI * (g * g + g + 1) as f64;
        let mut nf = vec![0.0; g];
        let points = self.enumerator.for_each(
            &prep.centre,
            radius * radius * (1.0 + 1e-10),
            self.budget,
            |n, q| {
                for i in 0..g {
                    nf[i] = n[i] as f64;
                }
                let t = 0.5 * quad(x, &nf) + dot(&nf, &prep.x_red);
                let t_abs = 0.5 * quad_abs(x, &nf) + dot_abs(&nf, &prep.x_red);
                let expo = -q + 2.0 * PI * dot(&nf, &prep.delta_y);
                let modulus = expo.exp();
                sum.add(Complex64::from_polar(modulus, 2.0 * PI * frac(t)));
                abs_sum += modulus;
                abs_err += modulus
                    * UNIT_ROUNDOFF
                    * (angle_ops * t_abs + 2.0 * (g as f64 + 2.0) * (q + 1.0) + 4.0);
            },
        )?;
        let (total, gamma) = sum.finish();
        let truncation = tail::tail_bound(g, self.packing_radius, radius);
        Ok((total, truncation + abs_err + gamma * abs_sum, points))
    }

    /// `θ[α,β](z)` with real characteristic vectors, to absolute error
    /// `eps_scaled` after removing the growth factor.
    pub fn eval_scaled(
        &self,
        z: &[Complex64],
        alpha: &[f64],
        beta: &[f64],
        eps_scaled: f64,
    ) -> Result<ScaledTheta> {
        if eps_scaled.is_nan() || eps_scaled <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "precision must be positive, got {eps_scaled:e}"
            )));
        }
        let prep = self.prepare(z, alpha, beta)?;
        let residual = prep.log_total - prep.log_scale;
        let unit = residual.exp();
        let radius = self.radius(TAIL_SHARE * eps_scaled / unit, eps_scaled, unit)?;
        let (total, sum_err, points) = self
            .lattice_sum(&prep, radius)
            .map_err(|_| self.budget_failure(eps_scaled, unit))?;
        let value = prep.phase * total * unit;
        let rel = prep.log_err
            + (2 * self.g + 4) as f64 * UNIT_ROUNDOFF * prep.log_scale.abs()
            + prep.phase_err
            + 4.0 * UNIT_ROUNDOFF;
        let error_bound = unit * sum_err + value.norm() * rel;
        if error_bound.is_nan() || error_bound > eps_scaled {
            return Err(Error::PrecisionUnachievable {
                requested: eps_scaled,
                best: error_bound,
            });
        }
        Ok(ScaledTheta {
            log_scale: prep.log_scale,
            value,
            error_bound,
            points,
        })
    }

    /// `θ[c](z)` with the growth factor split off, `eps_scaled` applying to
    /// the scaled value.
    pub fn theta_scaled(
        &self,
        z: &[Complex64],
        c: &Characteristic,
        eps_scaled: f64,
    ) -> Result<ScaledTheta> {
        self.check_dim(c.genus())?;
        self.eval_scaled(z, &c.alpha(), &c.beta(), eps_scaled)
    }

    /// `θ[c](z, τ)` to absolute error `eps`.
    pub fn theta(&self, z: &[Complex64], c: &Characteristic, eps: f64) -> Result<ThetaResult> {
        self.check_dim(c.genus())?;
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "precision must be positive, got {eps:e}"
            )));
        }
        let prep = self.prepare(z, &c.alpha(), &c.beta())?;
        if prep.log_total > 700.0 {
            return Err(Error::PrecisionUnachievable {
                requested: eps,
                best: f64::INFINITY,
            });
        }
        let scale = prep.log_total.exp();
        let radius = self.radius(TAIL_SHARE * eps / scale, eps, scale)?;
        let (total, sum_err, _) = self
            .lattice_sum(&prep, radius)
            .map_err(|_| self.budget_failure(eps, scale))?;
        let value = prep.phase * total * scale;
        let rel = prep.log_err + prep.phase_err + 4.0 * UNIT_ROUNDOFF;
        let error_bound = scale * sum_err * (1.0 + 4.0 * UNIT_ROUNDOFF) + value.norm() * rel;
        if error_bound.is_nan() || error_bound > eps {
            return Err(Error::PrecisionUnachievable {
                requested: eps,
                best: error_bound,
            });
        }
        Ok(ThetaResult { value, error_bound })
    }

    /// Matrix `[point][characteristic]` of theta values.
    pub fn theta_batch(
        &self,
        points: &[Vec<Complex64>],
        chars: &[Characteristic],
        eps: f64,
        exec: Execution,
    ) -> Result<Vec<Vec<ThetaResult>>> {
        let jobs: Vec<(usize, usize)> = (0..points.len())
            .flat_map(|p| (0..chars.len()).map(move |c| (p, c)))
            .collect();
        let flat = exec::try_map(&jobs, exec, |&(p, c)| {
            self.theta(&points[p], &chars[c], eps)
        })?;
        Ok(flat
            .chunks(chars.len().max(1))
            .take(points.len())
            .map(|row| row.to_vec())
            .collect())
    }

    /// Compares `θ(z + τk)` with `exp(-πi kᵀτk - 2πi kᵀz) θ(z)`.
    pub fn quasiperiodicity_defect(
        &self,
        z: &[Complex64],
        k: &[i64],
        eps: f64,
    ) -> Result<QuasiPeriodicityDefect> {
        self.check_dim(z.len())?;
        self.check_dim(k.len())?;
        let zero = Characteristic::zero(self.g)?;
        let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
        let shifted: Vec<Complex64> = self
            .tau
            .apply_real(&kf)
            .iter()
            .zip(z)
            .map(|(a, b)| a + b)
            .collect();
        let lhs = self.theta(&shifted, &zero, eps)?;
        let rhs = self.theta(z, &zero, eps)?;
        let tau_k = self.tau.apply_real(&kf);
        let k_tau_k: Complex64 = tau_k.iter().zip(&kf).map(|(a, b)| a * b).sum();
        let k_z: Complex64 = z.iter().zip(&kf).map(|(a, b)| a * b).sum();
        let arg = Complex64::new(0.0, -PI) * k_tau_k + Complex64::new(0.0, -2.0 * PI) * k_z;
        let factor = arg.exp();
        let predicted = factor * rhs.value;
        let defect = (lhs.value - predicted).norm();
        let bound = lhs.error_bound
            + factor.norm() * rhs.error_bound
            + predicted.norm()
                * UNIT_ROUNDOFF
                * 8.0
                * ((self.g * self.g) as f64 + 2.0)
                * (arg.norm() + 1.0);
        Ok(QuasiPeriodicityDefect { defect, bound })
    }
}

/// `θ[c](z, τ)` to absolute error `eps`.
pub fn theta(
    z: &[Complex64],
    tau: &RiemannMatrix,
    c: &Characteristic,
    eps: f64,
) -> Result<ThetaResult> {
    ThetaEvaluator::new(tau).theta(z, c, eps)
}

/// Theta values for every (point, characteristic) pair, sharing the
/// per-matrix preparation. Entries are bitwise identical to [`theta`].
pub fn theta_batch(
    points: &[Vec<Complex64>],
    tau: &RiemannMatrix,
    chars: &[Characteristic],
    eps: f64,
) -> Result<Vec<Vec<ThetaResult>>> {
    ThetaEvaluator::new(tau).theta_batch(points, chars, eps, Execution::default())
}

/// See [`ThetaEvaluator::quasiperiodicity_defect`].
pub fn quasiperiodicity_defect(
    z: &[Complex64],
    tau: &RiemannMatrix,
    k: &[i64],
    eps: f64,
) -> Result<QuasiPeriodicityDefect> {
    ThetaEvaluator::new(tau).quasiperiodicity_defect(z, k, eps)
}
