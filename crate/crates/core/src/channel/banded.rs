//! Symmetric banded matrices with an in-place Cholesky factorization.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: entry `(i, j)` with `i - bw <= j <= i`.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `a * self + b * other`, both with the same shape.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!((self.n, self.bw), (other.n, other.bw));
        Self {
            n: self.n,
            bw: self.bw,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
            factored: false,
        }
    }

    /// `out = self * x`, for an unfactored matrix.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert!(!self.factored);
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            out[i] += row[0] * x[i];
            for j in lo..i {
                let a = row[i - j];
                out[i] += a * x[j];
                out[j] += a * x[i];
            }
        }
    }

    /// Replaces the band with its Cholesky factor `L` (`A = L L^T`).
    pub fn factor(&mut self) -> Result<()> {
        let bw = self.bw;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = self.data[self.idx(i, j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "matrix is not positive definite at pivot {i}"
                        )));
                    }
                    let k = self.idx(i, i);
                    self.data[k] = s.sqrt();
                } else {
                    let k = self.idx(i, j);
                    self.data[k] = s / self.data[self.idx(j, j)];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place using the factor.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored, "factor() must be called first");
        let bw = self.bw;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut s = b[i];
            for (k, bk) in b.iter().enumerate().take(i).skip(lo) {
                s -= self.data[self.idx(i, k)] * bk;
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
        for i in (0..self.n).rev() {
            let hi = (i + bw).min(self.n - 1);
            let mut s = b[i];
            for k in i + 1..=hi {
                s -= self.data[self.idx(k, i)] * b[k];
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn random_spd(n: usize, bw: usize, vals: &[f64]) -> (BandedSpd, DMatrix<f64>) {
        let mut b = BandedSpd::zeros(n, bw);
        let mut k = 0;
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                let v = vals[k % vals.len()];
                k += 1;
                b.add(i, j, v);
                b.add(i, i, v.abs() + 0.1);
                b.add(j, j, v.abs() + 0.1);
            }
            b.add(i, i, 1.0);
        }
        let d = DMatrix::from_fn(n, n, |i, j| b.get(i, j));
        (b, d)
    }

    proptest! {
        #[test]
        fn solve_matches_dense(n in 1usize..30, bw in 0usize..6,
                               vals in prop::collection::vec(-2.0f64..2.0, 1..40),
                               rhs in prop::collection::vec(-5.0f64..5.0, 30)) {
            let (mut b, d) = random_spd(n, bw, &vals);
            let mut y = vec![0.0; n];
            b.mul_vec(&rhs[..n], &mut y);
            let dy = &d * DVector::from_column_slice(&rhs[..n]);
            for i in 0..n {
                prop_assert!((y[i] - dy[i]).abs() < 1e-9);
            }
            b.factor().unwrap();
            b.solve_in_place(&mut y);
            for i in 0..n {
                prop_assert!((y[i] - rhs[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut b = BandedSpd::zeros(2, 1);
        b.add(0, 0, 1.0);
        b.add(1, 0, 2.0);
        b.add(1, 1, 1.0);
        assert!(b.factor().is_err());
    }
}
