use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated (and removed) on construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Largest accepted condition number of `Im τ`.
pub const MAX_CONDITION: f64 = 1e8;

/// Largest genus the evaluator accepts.
pub const MAX_MATRIX_GENUS: usize = 8;

/// A point of the Siegel upper half space: `τ` symmetric with `Im τ`
/// positive definite and reasonably conditioned.
#[derive(Clone, PartialEq)]
pub struct RiemannMatrix {
    g: usize,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl fmt::Debug for RiemannMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RiemannMatrix(g={}, τ={:?})",
            self.g,
            self.tau().as_slice()
        )
    }
}

impl RiemannMatrix {
    pub fn new(tau: DMatrix<Complex64>) -> Result<Self> {
        if !tau.is_square() {
            return Err(Error::InvalidMatrix(format!(
                "τ must be square, got {}x{}",
                tau.nrows(),
                tau.ncols()
            )));
        }
        let re = tau.map(|z| z.re);
        let im = tau.map(|z| z.im);
        Self::from_real_imag(re, im)
    }

    /// Builds `τ` from row-major real and imaginary parts.
    pub fn from_parts(g: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if g == 0 {
            return Err(Error::GenusOutOfRange {
                g,
                min: 1,
                max: MAX_MATRIX_GENUS,
            });
        }
        for part in [re, im] {
            if part.len() != g * g {
                return Err(Error::DimensionMismatch {
                    expected: g * g,
                    found: part.len(),
                });
            }
        }
        Self::from_real_imag(
            DMatrix::from_row_slice(g, g, re),
            DMatrix::from_row_slice(g, g, im),
        )
    }

    pub fn from_real_imag(re: DMatrix<f64>, im: DMatrix<f64>) -> Result<Self> {
        let g = re.nrows();
        if g == 0 || g > MAX_MATRIX_GENUS {
            return Err(Error::GenusOutOfRange {
                g,
                min: 1,
                max: MAX_MATRIX_GENUS,
            });
        }
        if re.shape() != (g, g) || im.shape() != (g, g) {
            return Err(Error::InvalidMatrix(
                "real and imaginary parts differ in shape".into(),
            ));
        }
        if re.iter().chain(im.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let scale = re
            .iter()
            .zip(im.iter())
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max);
        let asym = (0..g)
            .flat_map(|i| (0..g).map(move |j| (i, j)))
            .map(|(i, j)| (re[(i, j)] - re[(j, i)]).hypot(im[(i, j)] - im[(j, i)]))
            .fold(0.0, f64::max);
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::InvalidMatrix(format!(
                "τ is not symmetric (asymmetry {asym:e})"
            )));
        }
        let re = (&re + re.transpose()) * 0.5;
        let im = (&im + im.transpose()) * 0.5;
        if im.clone().cholesky().is_none() {
            return Err(Error::InvalidMatrix("Im τ is not positive definite".into()));
        }
        let eig = SymmetricEigen::new(im.clone()).eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        if lo <= 0.0 {
            return Err(Error::InvalidMatrix("Im τ is not positive definite".into()));
        }
        if hi / lo > MAX_CONDITION {
            return Err(Error::InvalidMatrix(format!(
                "Im τ condition number {:e} exceeds {MAX_CONDITION:e}",
                hi / lo
            )));
        }
        Ok(RiemannMatrix { g, re, im })
    }

    /// `diag(τ_1, …, τ_g)`.
    pub fn diagonal(taus: &[Complex64]) -> Result<Self> {
        let g = taus.len();
        let mut tau = DMatrix::zeros(g, g);
        for (i, t) in taus.iter().enumerate() {
            tau[(i, i)] = *t;
        }
        Self::new(tau)
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> &DMatrix<f64> {
        &self.im
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn tau(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.g, self.g, |i, j| self.entry(i, j))
    }

    /// `s·τ` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if s.is_nan() || s <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale factor {s} must be positive"
            )));
        }
        Self::from_real_imag(&self.re * s, &self.im * s)
    }

    /// `τ·v` for a real vector `v`.
    pub fn apply_real(&self, v: &[f64]) -> Vec<Complex64> {
        (0..self.g)
            .map(|i| {
                (0..self.g).fold(Complex64::new(0.0, 0.0), |acc, j| {
                    acc + self.entry(i, j) * v[j]
                })
            })
            .collect()
    }

    /// The point `s + τ·t` of `C^g` with real lattice coordinates `s, t`.
    pub fn lattice_point(&self, s: &[f64], t: &[f64]) -> Vec<Complex64> {
        self.apply_real(t)
            .into_iter()
            .zip(s)
            .map(|(tt, &ss)| tt + ss)
            .collect()
    }

    /// Real lattice coordinates `(s, t)` with `z = s + τ·t`.
    pub fn lattice_coordinates(&self, z: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let y = nalgebra::DVector::from_iterator(self.g, z.iter().map(|w| w.im));
        let t = self
            .im
            .clone()
            .cholesky()
            .expect("validated on construction")
            .solve(&y);
        let s = (0..self.g)
            .map(|i| z[i].re - (0..self.g).map(|j| self.re[(i, j)] * t[j]).sum::<f64>())
            .collect();
        (s, t.iter().copied().collect())
    }
}
