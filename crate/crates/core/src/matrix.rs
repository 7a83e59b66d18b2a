//! Small dense integer matrices used for encode/decode weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the magnitude of any encode/decode weight.
pub const DEFAULT_WEIGHT_BOUND: i64 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<i64>>,
}

impl TryFrom<RawMatrix> for IntMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        let m = IntMatrix::from_rows(&raw.entries)?;
        if m.rows != raw.rows || m.cols != raw.cols {
            return Err(Error::InvalidMatrix(format!(
                "declared {}x{} but entries are {}x{}",
                raw.rows, raw.cols, m.rows, m.cols
            )));
        }
        Ok(m)
    }
}

impl From<IntMatrix> for RawMatrix {
    fn from(m: IntMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            entries: m.to_rows(),
        }
    }
}

impl IntMatrix {
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidMatrix("no rows".into()));
        }
        let cols = rows[0].as_ref().len();
        if cols == 0 {
            return Err(Error::InvalidMatrix("no columns".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Exact integer product `self * rhs`.
    pub fn mul(&self, rhs: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn row_l1(&self, r: usize) -> i64 {
        self.row(r).iter().map(|v| v.abs()).sum()
    }

    pub fn row_sum(&self, r: usize) -> i64 {
        self.row(r).iter().sum()
    }

    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    pub fn check_bound(&self, bound: i64) -> Result<()> {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.get(r, c);
                if v.abs() > bound {
                    return Err(Error::WeightBound {
                        row: r,
                        col: c,
                        value: v,
                        bound,
                    });
                }
            }
        }
        Ok(())
    }

    /// Reorders rows so that new row `i` is old row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let rows: Vec<&[i64]> = order.iter().map(|&i| self.row(i)).collect();
        Self::from_rows(&rows).expect("permutation of a valid matrix")
    }

    /// Reorders columns so that new column `j` is old column `order[j]`.
    pub fn permute_cols(&self, order: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, order.len());
        for r in 0..self.rows {
            for (j, &c) in order.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }
}

impl std::fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.rows {
            write!(f, "[")?;
            for (c, v) in self.row(r).iter().enumerate() {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{v:>3}")?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let m = IntMatrix::from_rows(&[[1, -1], [0, -2], [1, 1]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":3,"cols":2,"entries":[[1,-1],[0,-2],[1,1]]}"#);
        let back: IntMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_bad_shape() {
        let bad = r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#;
        assert!(serde_json::from_str::<IntMatrix>(bad).is_err());
        let ragged = r#"{"rows":2,"cols":2,"entries":[[1,0],[1]]}"#;
        assert!(serde_json::from_str::<IntMatrix>(ragged).is_err());
        let extra = r#"{"rows":1,"cols":1,"entries":[[1]],"x":0}"#;
        assert!(serde_json::from_str::<IntMatrix>(extra).is_err());
    }

    #[test]
    fn product_and_bound() {
        let t = IntMatrix::from_rows(&[[1, -1], [-2, 0], [1, 1]]).unwrap();
        let r = IntMatrix::from_rows(&[[-1, 0, 1], [0, -2, 0]]).unwrap();
        let p = r.mul(&t).unwrap();
        assert_eq!(p.to_rows(), vec![vec![0, 2], vec![4, 0]]);
        assert!(t.check_bound(2).is_ok());
        assert!(matches!(
            t.check_bound(1),
            Err(Error::WeightBound { row: 1, col: 0, .. })
        ));
        assert!(t.mul(&t).is_err());
    }
}
