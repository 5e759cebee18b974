//! Enumeration of integer points in an ellipsoid `‖T(n + c)‖² ≤ R²`
//! (Fincke–Pohst style, depth first from the last coordinate).

use nalgebra::DMatrix;

/// Enumerator for the quadratic form `Q = TᵀT`, with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct EllipsoidEnumerator {
    g: usize,
    /// `T_ii²`.
    diag2: Vec<f64>,
    /// `T_ij / T_ii` for `j > i`, row-major.
    mu: Vec<f64>,
    det: f64,
}

/// Returned when the visit count would exceed the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

impl EllipsoidEnumerator {
    /// `None` if `q` is not positive definite.
    pub fn new(q: &DMatrix<f64>) -> Option<Self> {
        let g = q.nrows();
        let l = q.clone().cholesky()?.unpack();
        let mut diag2 = vec![0.0; g];
        let mut mu = vec![0.0; g * g];
        let mut det = 1.0;
        for i in 0..g {
            let tii = l[(i, i)];
            diag2[i] = tii * tii;
            det *= tii;
            for j in i + 1..g {
                // T = Lᵀ so T_ij = L_ji
                mu[i * g + j] = l[(j, i)] / tii;
            }
        }
        Some(EllipsoidEnumerator { g, diag2, mu, det })
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    /// `det T = sqrt(det Q)`.
    pub fn det(&self) -> f64 {
        self.det
    }

    /// Visits every `n` with `‖T(n + center)‖² ≤ radius2` in a fixed order,
    /// passing the point and its squared norm. Fails without finishing once
    /// more than `budget` points have been found.
    pub fn for_each<F>(
        &self,
        center: &[f64],
        radius2: f64,
        budget: u64,
        mut visit: F,
    ) -> Result<u64, BudgetExhausted>
    where
        F: FnMut(&[i64], f64),
    {
        let g = self.g;
        let mut n = vec![0i64; g];
        let mut count = 0u64;
        self.descend(
            g, 0.0, center, radius2, budget, &mut n, &mut count, &mut visit,
        )?;
        Ok(count)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend<F>(
        &self,
        level: usize,
        partial: f64,
        center: &[f64],
        radius2: f64,
        budget: u64,
        n: &mut [i64],
        count: &mut u64,
        visit: &mut F,
    ) -> Result<(), BudgetExhausted>
    where
        F: FnMut(&[i64], f64),
    {
        if level == 0 {
            *count += 1;
            if *count > budget {
                return Err(BudgetExhausted);
            }
            visit(n, partial);
            return Ok(());
        }
        let i = level - 1;
        let g = self.g;
        let shift: f64 = (i + 1..g)
            .map(|j| self.mu[i * g + j] * (n[j] as f64 + center[j]))
            .sum();
        let mid = -center[i] - shift;
        let remaining = radius2 - partial;
        if remaining < 0.0 {
            return Ok(());
        }
        let half_width = (remaining / self.diag2[i]).sqrt();
        let lo = (mid - half_width).ceil() as i64;
        let hi = (mid + half_width).floor() as i64;
        for k in lo..=hi {
            let d = k as f64 - mid;
            let next = partial + self.diag2[i] * d * d;
            if next <= radius2 {
                n[i] = k;
                self.descend(i, next, center, radius2, budget, n, count, visit)?;
            }
        }
        Ok(())
    }

    /// Squared length of a shortest nonzero lattice vector `min ‖Tn‖²`.
    pub fn shortest_vector_sq(&self) -> f64 {
        let g = self.g;
        // the diagonal of Q bounds the minimum from above (unit vectors)
        let mut best = (0..g)
            .map(|i| {
                self.diag2[i]
                    + (0..i)
                        .map(|k| self.diag2[k] * self.mu[k * g + i] * self.mu[k * g + i])
                        .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        let zero = vec![0.0; g];
        let bound = best * (1.0 + 1e-9);
        let _ = self.for_each(&zero, bound, u64::MAX, |n, q| {
            if n.iter().any(|&k| k != 0) && q < best {
                best = q;
            }
        });
        best
    }

    /// Volume heuristic for the number of points in a ball of radius `r`.
    pub fn estimated_count(&self, radius: f64) -> f64 {
        let g = self.g as f64;
        let unit_ball = std::f64::consts::PI.powf(g / 2.0) / libm::tgamma(g / 2.0 + 1.0);
        unit_ball * radius.powf(g) / self.det
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(q: &DMatrix<f64>, c: &[f64], r2: f64, box_size: i64) -> Vec<Vec<i64>> {
        let g = q.nrows();
        let mut out = Vec::new();
        let total = (2 * box_size + 1).pow(g as u32);
        for idx in 0..total {
            let mut rem = idx;
            let n: Vec<i64> = (0..g)
                .map(|_| {
                    let k = rem % (2 * box_size + 1) - box_size;
                    rem /= 2 * box_size + 1;
                    k
                })
                .collect();
            let v: Vec<f64> = n.iter().zip(c).map(|(&k, &ci)| k as f64 + ci).collect();
            let mut s = 0.0;
            for i in 0..g {
                for j in 0..g {
                    s += v[i] * q[(i, j)] * v[j];
                }
            }
            if s <= r2 {
                out.push(n);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn matches_box_enumeration() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -0.3, 0.5, 1.5, 0.2, -0.3, 0.2, 1.0]);
        let e = EllipsoidEnumerator::new(&q).unwrap();
        let c = [0.3, -0.45, 0.1];
        for r2 in [0.5, 3.0, 10.0] {
            let mut got = Vec::new();
            e.for_each(&c, r2, u64::MAX, |n, _| got.push(n.to_vec()))
                .unwrap();
            got.sort();
            assert_eq!(got, brute(&q, &c, r2, 8));
        }
    }

    #[test]
    fn reports_norms() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let e = EllipsoidEnumerator::new(&q).unwrap();
        e.for_each(&[0.1, 0.2], 6.0, u64::MAX, |n, s| {
            let v = [n[0] as f64 + 0.1, n[1] as f64 + 0.2];
            let exact = v[0] * v[0] + 0.6 * v[0] * v[1] + 2.0 * v[1] * v[1];
            assert!((s - exact).abs() < 1e-12);
        })
        .unwrap();
    }

    #[test]
    fn budget_is_enforced() {
        let q = DMatrix::identity(2, 2);
        let e = EllipsoidEnumerator::new(&q).unwrap();
        assert_eq!(
            e.for_each(&[0.0, 0.0], 100.0, 10, |_, _| {}),
            Err(BudgetExhausted)
        );
    }

    #[test]
    fn shortest_vector() {
        // hexagonal form: minimum 1 attained off the axes as well
        let q = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]);
        let e = EllipsoidEnumerator::new(&q).unwrap();
        assert!((e.shortest_vector_sq() - 1.0).abs() < 1e-12);
        // skewed form whose minimum is far below the diagonal
        let q = DMatrix::from_row_slice(2, 2, &[5.0, 4.9, 4.9, 5.0]);
        let e = EllipsoidEnumerator::new(&q).unwrap();
        assert!((e.shortest_vector_sq() - 0.2).abs() < 1e-12);
    }
}
