//! Multiplication maps `M(x, y)` on sections of the doubled polarization,
//! probed by sampling products of second-order theta functions.
//!
//! Sections of `t_x^* L²` are modelled by `z ↦ f_σ(z + x)` with
//! `f_σ(w) = θ[σ/2, 0](2w, 2τ)`. The image of `M(x, y)` is spanned by the
//! `4^g` products `f_σ(z + x) f_σ'(z + y)`, so its rank is the rank of the
//! matrix of their values at enough generic sample points. Every value is
//! taken with the growth factor of `z` removed; the factor is common to a
//! column and does not affect the rank.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characteristics::{check_genus, enumerate_characteristics};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ppav::{
    divisor_point_near, theta2_count_with, two_torsion_translate_verdicts, TorsionPoint, Verdict,
    DEFAULT_EPS, DEFAULT_VANISH_TOL,
};
use crate::theta::{RiemannMatrix, ThetaEvaluator};

/// Largest genus handled here (256 × 528 matrices).
pub const MAX_MULTMAP_GENUS: usize = 4;
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Smallest `σ_r / σ_{r+1}` at which a rank cut is trusted.
pub const MIN_GAP_RATIO: f64 = 1e3;
pub const MAX_SAMPLES: usize = 100_000;

/// `2·4^g + 16`.
pub fn default_samples(g: usize) -> usize {
    2 * (1usize << (2 * g)) + 16
}

/// Numerical settings shared by the rank computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSettings {
    pub eps: f64,
    pub vanish_tol: f64,
    pub rel_tol: f64,
    /// `None` means [`default_samples`].
    pub n_samples: Option<usize>,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for RankSettings {
    fn default() -> Self {
        RankSettings {
            eps: DEFAULT_EPS,
            vanish_tol: DEFAULT_VANISH_TOL,
            rel_tol: DEFAULT_REL_TOL,
            n_samples: None,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

impl RankSettings {
    pub fn samples(&self, g: usize) -> usize {
        self.n_samples.unwrap_or_else(|| default_samples(g))
    }
}

/// Singular-value rank of a sampled map, optionally checked against the
/// count predicted from theta vanishing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub numerical_rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rel_tol: f64,
    /// `σ_r / σ_{r+1}` at the cut; infinite at full rank. Serialized as
    /// `null` when infinite.
    #[serde(with = "infinite_as_null")]
    pub gap_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kempf_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agrees: Option<bool>,
    /// `rank ≥ 3^g`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meets_lower_bound: Option<bool>,
}

impl RankReport {
    pub fn is_reliable(&self) -> bool {
        self.gap_ratio >= MIN_GAP_RATIO
    }

    fn require_reliable(&self) -> Result<()> {
        if self.is_reliable() {
            Ok(())
        } else {
            Err(Error::UnreliableRank {
                rank: self.numerical_rank,
                gap_ratio: self.gap_ratio,
                required: MIN_GAP_RATIO,
            })
        }
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Uniform points `s + τt`, `s, t ∈ [0, 1)^g`, deterministic in `seed`.
pub fn sample_points(tau: &RiemannMatrix, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let g = tau.genus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let s: Vec<f64> = (0..g).map(|_| rng.gen()).collect();
            let t: Vec<f64> = (0..g).map(|_| rng.gen()).collect();
            tau.lattice_point(&s, &t)
        })
        .collect()
}

/// The second-order theta functions, evaluated at translates.
struct SecondOrderBasis {
    ev: ThetaEvaluator,
    alphas: Vec<Vec<f64>>,
    zero: Vec<f64>,
}

impl SecondOrderBasis {
    fn new(tau: &RiemannMatrix) -> Result<Self> {
        let g = tau.genus();
        let ev = ThetaEvaluator::new(&tau.scaled(2.0)?);
        let alphas = (0..1u64 << g)
            .map(|s| {
                (0..g)
                    .map(|i| ((s >> (g - 1 - i)) & 1) as f64 / 2.0)
                    .collect()
            })
            .collect();
        Ok(SecondOrderBasis {
            ev,
            alphas,
            zero: vec![0.0; g],
        })
    }

    /// Growth-normalized `f_σ(w)` for all `σ`, in lexicographic order.
    fn values(&self, w: &[Complex64], eps: f64) -> Result<Vec<Complex64>> {
        let doubled: Vec<Complex64> = w.iter().map(|v| v * 2.0).collect();
        self.alphas
            .iter()
            .map(|a| Ok(self.ev.eval_scaled(&doubled, a, &self.zero, eps)?.value))
            .collect()
    }
}

fn check_inputs(tau: &RiemannMatrix, points: &[&[Complex64]], n_samples: usize) -> Result<()> {
    let g = tau.genus();
    check_genus(g, MAX_MULTMAP_GENUS)?;
    for p in points {
        if p.len() != g {
            return Err(Error::DimensionMismatch {
                expected: g,
                found: p.len(),
            });
        }
    }
    if n_samples < 2 * (1 << (2 * g)) {
        return Err(Error::InvalidArgument(format!(
            "n_samples {n_samples} is below 2·4^g = {}",
            2 * (1 << (2 * g))
        )));
    }
    if n_samples > MAX_SAMPLES {
        return Err(Error::BudgetExceeded {
            needed: n_samples as u64,
            limit: MAX_SAMPLES as u64,
        });
    }
    Ok(())
}

/// Values of `f_σ(z_j + x) f_σ'(z_j + y)`: rows `(σ, σ')` lexicographic,
/// one column per sample point.
pub fn product_evaluation_matrix(
    tau: &RiemannMatrix,
    x: &[Complex64],
    y: &[Complex64],
    n_samples: usize,
    seed: u64,
    eps: f64,
    exec: Execution,
) -> Result<DMatrix<Complex64>> {
    check_inputs(tau, &[x, y], n_samples)?;
    let basis = SecondOrderBasis::new(tau)?;
    let samples = sample_points(tau, n_samples, seed);
    let dim = basis.alphas.len();
    let columns = exec::try_map(&samples, exec, |z| -> Result<Vec<Complex64>> {
        let shift =
            |v: &[Complex64]| -> Vec<Complex64> { z.iter().zip(v).map(|(a, b)| a + b).collect() };
        let fx = basis.values(&shift(x), eps)?;
        let fy = basis.values(&shift(y), eps)?;
        Ok(fx
            .iter()
            .flat_map(|a| fy.iter().map(move |b| a * b))
            .collect())
    })?;
    Ok(DMatrix::from_fn(dim * dim, n_samples, |r, c| columns[c][r]))
}

/// Values of the symmetric products `f_σ f_σ'`, `σ ≤ σ'`, at the sample
/// points: the map from quadrics in the `f_σ` to fourth-order functions.
pub fn symmetric_product_matrix(
    tau: &RiemannMatrix,
    n_samples: usize,
    seed: u64,
    eps: f64,
    exec: Execution,
) -> Result<DMatrix<Complex64>> {
    let g = tau.genus();
    let origin = vec![Complex64::new(0.0, 0.0); g];
    check_inputs(tau, &[&origin], n_samples)?;
    let basis = SecondOrderBasis::new(tau)?;
    let samples = sample_points(tau, n_samples, seed);
    let dim = basis.alphas.len();
    let columns = exec::try_map(&samples, exec, |z| -> Result<Vec<Complex64>> {
        let f = basis.values(z, eps)?;
        Ok((0..dim)
            .flat_map(|i| (i..dim).map(move |j| (i, j)))
            .map(|(i, j)| f[i] * f[j])
            .collect())
    })?;
    let rows = dim * (dim + 1) / 2;
    Ok(DMatrix::from_fn(rows, n_samples, |r, c| columns[c][r]))
}

/// Rank as the number of singular values at least `rel_tol·σ_1`, after
/// scaling each row to unit maximum modulus.
pub fn numerical_rank(m: &DMatrix<Complex64>, rel_tol: f64) -> Result<RankReport> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rel_tol {rel_tol:e} must lie in (0, 1)"
        )));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut scaled = m.clone();
    for mut row in scaled.row_iter_mut() {
        let max = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max > 0.0 {
            row.unscale_mut(max);
        }
    }
    let mut singular_values: Vec<f64> = if scaled.is_empty() {
        Vec::new()
    } else {
        scaled
            .try_svd(false, false, f64::EPSILON, 10_000)
            .ok_or(Error::Decomposition)?
            .singular_values
            .iter()
            .copied()
            .collect()
    };
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let top = singular_values.first().copied().unwrap_or(0.0);
    let numerical_rank = if top > 0.0 {
        singular_values
            .iter()
            .filter(|&&s| s >= rel_tol * top)
            .count()
    } else {
        0
    };
    let gap_ratio = match (numerical_rank, singular_values.get(numerical_rank)) {
        (0, _) | (_, None) => f64::INFINITY,
        (r, Some(&next)) => singular_values[r - 1] / next,
    };
    Ok(RankReport {
        numerical_rank,
        singular_values,
        rel_tol,
        gap_ratio,
        kempf_count: None,
        agrees: None,
        meets_lower_bound: None,
    })
}

/// `#{η ∈ A[2] : y − x + η ∉ Θ}`.
pub fn kempf_predicted_rank(
    tau: &RiemannMatrix,
    x: &[Complex64],
    y: &[Complex64],
    eps: f64,
    vanish_tol: f64,
    exec: Execution,
) -> Result<usize> {
    let g = tau.genus();
    for p in [x, y] {
        if p.len() != g {
            return Err(Error::DimensionMismatch {
                expected: g,
                found: p.len(),
            });
        }
    }
    let w: Vec<Complex64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
    let verdicts = two_torsion_translate_verdicts(tau, &w, eps, vanish_tol, exec)?;
    if verdicts.iter().any(|v| v.verdict == Verdict::Ambiguous) {
        let worst = verdicts
            .iter()
            .filter(|v| v.verdict == Verdict::Ambiguous)
            .map(|v| v.theta_abs)
            .fold(f64::NAN, f64::min);
        return Err(Error::Ambiguous(format!(
            "a translate y - x + η has normalized |θ| = {worst:.3e}"
        )));
    }
    Ok(verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::Nonvanishing)
        .count())
}

/// Numerical rank of `M(x, y)` together with the predicted count. An
/// unreliable cut or an ambiguous prediction is an error; a disagreement
/// is reported through `agrees`.
pub fn verify_kempf(
    tau: &RiemannMatrix,
    x: &[Complex64],
    y: &[Complex64],
    settings: &RankSettings,
) -> Result<RankReport> {
    let g = tau.genus();
    let m = product_evaluation_matrix(
        tau,
        x,
        y,
        settings.samples(g),
        settings.seed,
        settings.eps,
        settings.exec,
    )?;
    let mut report = numerical_rank(&m, settings.rel_tol)?;
    report.require_reliable()?;
    let predicted =
        kempf_predicted_rank(tau, x, y, settings.eps, settings.vanish_tol, settings.exec)?;
    report.kempf_count = Some(predicted);
    report.agrees = Some(report.numerical_rank == predicted);
    report.meets_lower_bound = Some(report.numerical_rank as u64 >= 3u64.pow(g as u32));
    Ok(report)
}

/// Quadrics in the second-order theta functions that vanish on the image
/// of `A`: the kernel of `Sym² H⁰(L²) → H⁰(L⁴)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymKernel {
    /// `2^{g-1}(2^g + 1)`.
    pub products: usize,
    pub kernel_dim: usize,
    pub rank: RankReport,
}

pub fn sym_kernel_dim(tau: &RiemannMatrix, settings: &RankSettings) -> Result<SymKernel> {
    let g = tau.genus();
    let m = symmetric_product_matrix(
        tau,
        settings.samples(g),
        settings.seed,
        settings.eps,
        settings.exec,
    )?;
    let rank = numerical_rank(&m, settings.rel_tol)?;
    rank.require_reliable()?;
    Ok(SymKernel {
        products: m.nrows(),
        kernel_dim: m.nrows() - rank.numerical_rank,
        rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanPoint {
    /// Uniform in the fundamental domain.
    Generic,
    /// On `Θ`, away from `A[2]`.
    OnDivisor,
    TwoTorsion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub kind: ScanPoint,
    pub x: Vec<Complex64>,
    pub report: RankReport,
    /// At least 11 away from `A[2]`, exactly 10 on it.
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScan {
    pub entries: Vec<ScanEntry>,
    pub holds: bool,
    pub min_rank_off_two_torsion: Option<usize>,
}

/// Ranks of `M(0, x)` on an irreducible genus-2 ppav: `trials` uniform
/// points, points of `Θ` found by root-finding near each odd half-period,
/// and all sixteen half-periods.
pub fn g2_irreducible_rank_scan(
    tau: &RiemannMatrix,
    trials: usize,
    scan_seed: u64,
    settings: &RankSettings,
) -> Result<RankScan> {
    if tau.genus() != 2 {
        return Err(Error::Precondition(format!(
            "the scan needs genus 2, got {}",
            tau.genus()
        )));
    }
    let count = theta2_count_with(tau, settings.eps, settings.vanish_tol, settings.exec)?;
    if count.theta_n != 6 {
        return Err(Error::Precondition(format!(
            "Θ(2) = {} ≠ 6: the ppav has a vanishing even thetanull and is a product",
            count.theta_n
        )));
    }
    let mut points: Vec<(ScanPoint, Vec<Complex64>)> = sample_points(tau, trials, scan_seed)
        .into_iter()
        .map(|x| (ScanPoint::Generic, x))
        .collect();

    let ev = ThetaEvaluator::new(tau);
    let mut rng = ChaCha8Rng::seed_from_u64(scan_seed ^ 0x5eed);
    let two_torsion: Vec<TorsionPoint> = enumerate_characteristics(2)?
        .iter()
        .map(TorsionPoint::from_characteristic)
        .collect();
    for c in enumerate_characteristics(2)?.iter().filter(|c| c.is_odd()) {
        let mut start = TorsionPoint::from_characteristic(c).to_complex(tau);
        start[1] += Complex64::new(rng.gen_range(0.1..0.3), rng.gen_range(-0.2..0.2));
        if let Some(z) = divisor_point_near(&ev, &start, 0) {
            if !is_two_torsion(tau, &z) {
                points.push((ScanPoint::OnDivisor, z));
            }
        }
    }
    points.extend(
        two_torsion
            .iter()
            .map(|p| (ScanPoint::TwoTorsion, p.to_complex(tau))),
    );

    let origin = vec![Complex64::new(0.0, 0.0); 2];
    let mut entries = Vec::with_capacity(points.len());
    for (kind, x) in points {
        let report = verify_kempf(tau, &origin, &x, settings)?;
        let within_bound = match kind {
            ScanPoint::TwoTorsion => report.numerical_rank == 10,
            _ => report.numerical_rank >= 11,
        };
        entries.push(ScanEntry {
            kind,
            x,
            report,
            within_bound,
        });
    }
    Ok(RankScan {
        holds: entries.iter().all(|e| e.within_bound),
        min_rank_off_two_torsion: entries
            .iter()
            .filter(|e| e.kind != ScanPoint::TwoTorsion)
            .map(|e| e.report.numerical_rank)
            .min(),
        entries,
    })
}

fn is_two_torsion(tau: &RiemannMatrix, z: &[Complex64]) -> bool {
    let (s, t) = tau.lattice_coordinates(z);
    s.iter()
        .chain(&t)
        .all(|v| ((2.0 * v).round() - 2.0 * v).abs() < 1e-6)
}
