//! Banded Cholesky factorization for the symmetric positive definite
//! pressure matrix. On an `nx × nx` five-point stencil the half bandwidth
//! is `nx`, so factorization costs `O(N nx²)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    /// Lower band, row-major: entry `(i, j)` with `i - bw <= j <= i` at
    /// `i * (bw + 1) + (i - j)`.
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Add `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn factor(mut self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = self.data[self.slot(i, j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::LinearSolve {
                            pivot: i,
                            value: s,
                            reason: "matrix is not positive definite",
                        });
                    }
                    let slot = self.slot(i, i);
                    self.data[slot] = s.sqrt();
                } else {
                    let slot = self.slot(i, j);
                    self.data[slot] = s / self.data[self.slot(j, j)];
                }
            }
        }
        Ok(BandedCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedSpd,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.slot(i, k)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= l.data[l.slot(k, i)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn laplacian(nx: usize, shift: f64) -> BandedSpd {
        let n = nx * nx;
        let mut a = BandedSpd::zeros(n, nx);
        for j in 0..nx {
            for i in 0..nx {
                let c = j * nx + i;
                a.add(c, c, shift);
                if i + 1 < nx {
                    a.add(c, c, 1.0);
                    a.add(c + 1, c + 1, 1.0);
                    a.add(c + 1, c, -1.0);
                }
                if j + 1 < nx {
                    a.add(c, c, 1.0);
                    a.add(c + nx, c + nx, 1.0);
                    a.add(c + nx, c, -1.0);
                }
            }
        }
        a
    }

    #[test]
    fn matches_dense_solve() {
        let nx = 7;
        let a = laplacian(nx, 0.3);
        let n = a.dim();
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let b: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let x = a.factor().unwrap().solve(&b);
        let oracle = dense.clone().cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-12 * (1.0 + oracle[i].abs()));
        }
        let r = &dense * DVector::from_vec(x) - DVector::from_vec(b);
        assert!(r.amax() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        let a = laplacian(3, -10.0);
        match a.factor() {
            Err(Error::LinearSolve { pivot, .. }) => assert_eq!(pivot, 0),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }
}
