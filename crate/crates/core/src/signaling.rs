//! Affine encoding and linear decoding over parallel wires.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{IntMatrix, DEFAULT_WEIGHT_BOUND};

pub const FORMAT_VERSION: u32 = 1;

/// Default cap on `n * 2^m` evaluations for word enumeration.
pub const DEFAULT_ENUM_BUDGET: u128 = 1 << 26;

/// Divides each row of `t` by its l1 norm.
pub fn l1_normalize(t: &IntMatrix) -> Result<Vec<Vec<Rational64>>> {
    (0..t.rows())
        .map(|i| {
            let s = t.row_l1(i);
            if s == 0 {
                return Err(Error::DegenerateRow(i));
            }
            Ok(t.row(i).iter().map(|&v| Rational64::new(v, s)).collect())
        })
        .collect()
}

/// A data word in {-1, +1}^m.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DataWord(Vec<i8>);

impl DataWord {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|b| **b != 1 && **b != -1) {
            return Err(Error::InvalidParameter(format!("data bit {b} is not +-1")));
        }
        Ok(Self(bits))
    }

    /// Bit `j` is +1 when bit `j` of `index` is set.
    pub fn from_index(m: usize, index: u64) -> Self {
        Self((0..m).map(|j| if index >> j & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn all(m: usize, v: i8) -> Self {
        Self(vec![v; m])
    }

    pub fn bits(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|b| -b).collect())
    }
}

/// Result of checking whether `R*T` is a scaled permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub monomial: bool,
    /// `permutation[j]` is the data lane recovered on output `j`.
    pub permutation: Vec<usize>,
    /// Nonzero entry of row `j` of `R*T`.
    pub gains: Vec<i64>,
    pub zero_bias: bool,
    pub product: Vec<Vec<i64>>,
}

pub fn check_decodability(t: &IntMatrix, r: &IntMatrix) -> Result<Certificate> {
    if r.cols() != t.rows() || r.rows() != t.cols() {
        return Err(Error::DimensionMismatch {
            context: "decode matrix shape",
            expected: t.rows(),
            actual: r.cols(),
        });
    }
    let p = r.mul(t)?;
    let m = p.rows();
    let mut permutation = Vec::with_capacity(m);
    let mut gains = Vec::with_capacity(m);
    let mut col_hits = vec![0usize; p.cols()];
    let mut monomial = p.rows() == p.cols();
    for j in 0..m {
        let nz: Vec<usize> = (0..p.cols()).filter(|&c| p.get(j, c) != 0).collect();
        for &c in &nz {
            col_hits[c] += 1;
        }
        if nz.len() == 1 {
            permutation.push(nz[0]);
            gains.push(p.get(j, nz[0]));
        } else {
            monomial = false;
        }
    }
    if col_hits.iter().any(|&h| h != 1) {
        monomial = false;
    }
    if !monomial {
        permutation.clear();
        gains.clear();
    }
    let zero_bias = (0..r.rows()).all(|j| r.row_sum(j) == 0);
    Ok(Certificate {
        monomial,
        permutation,
        gains,
        zero_bias,
        product: p.to_rows(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    format_version: u32,
    t: IntMatrix,
    r: IntMatrix,
    vddq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

/// Encode matrix `T` (n x m), decode matrix `R` (m x n) and supply voltage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawScheme", into = "RawScheme")]
pub struct SignalingScheme {
    pub name: Option<String>,
    t: IntMatrix,
    r: IntMatrix,
    vddq: f64,
    teff: Vec<Vec<Rational64>>,
    teff_f: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    cert: Certificate,
}

impl TryFrom<RawScheme> for SignalingScheme {
    type Error = Error;
    fn try_from(raw: RawScheme) -> Result<Self> {
        if raw.format_version != FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported scheme format_version {}",
                raw.format_version
            )));
        }
        let mut s = SignalingScheme::new(raw.t, raw.r, raw.vddq)?;
        s.name = raw.name;
        Ok(s)
    }
}

impl From<SignalingScheme> for RawScheme {
    fn from(s: SignalingScheme) -> Self {
        RawScheme {
            format_version: FORMAT_VERSION,
            t: s.t,
            r: s.r,
            vddq: s.vddq,
            name: s.name,
        }
    }
}

impl PartialEq for SignalingScheme {
    fn eq(&self, o: &Self) -> bool {
        self.t == o.t && self.r == o.r && self.vddq == o.vddq
    }
}

impl SignalingScheme {
    pub fn new(t: IntMatrix, r: IntMatrix, vddq: f64) -> Result<Self> {
        Self::with_bound(t, r, vddq, DEFAULT_WEIGHT_BOUND)
    }

    pub fn with_bound(t: IntMatrix, r: IntMatrix, vddq: f64, bound: i64) -> Result<Self> {
        if !(vddq.is_finite() && vddq > 0.0) {
            return Err(Error::InvalidParameter(format!("vddq must be positive, got {vddq}")));
        }
        t.check_bound(bound)?;
        r.check_bound(bound)?;
        let teff = l1_normalize(&t)?;
        let cert = check_decodability(&t, &r)?;
        let teff_f = teff
            .iter()
            .map(|row| row.iter().map(|x| *x.numer() as f64 / *x.denom() as f64).collect())
            .collect();
        let thresholds = (0..r.rows()).map(|j| 0.5 * vddq * r.row_sum(j) as f64).collect();
        Ok(Self {
            name: None,
            t,
            r,
            vddq,
            teff,
            teff_f,
            thresholds,
            cert,
        })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn n(&self) -> usize {
        self.t.rows()
    }

    pub fn m(&self) -> usize {
        self.t.cols()
    }

    pub fn t(&self) -> &IntMatrix {
        &self.t
    }

    pub fn r(&self) -> &IntMatrix {
        &self.r
    }

    pub fn vddq(&self) -> f64 {
        self.vddq
    }

    pub fn teff(&self) -> &[Vec<Rational64>] {
        &self.teff
    }

    pub fn teff_f64(&self) -> &[Vec<f64>] {
        &self.teff_f
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn certificate(&self) -> &Certificate {
        &self.cert
    }

    pub fn is_decodable(&self) -> bool {
        self.cert.monomial
    }

    pub fn pin_efficiency(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    pub fn with_vddq(&self, vddq: f64) -> Result<Self> {
        let mut s = Self::new(self.t.clone(), self.r.clone(), vddq)?;
        s.name = self.name.clone();
        Ok(s)
    }

    /// Same scheme with wires reordered: new wire `k` is old wire `order[k]`.
    pub fn reorder_wires(&self, order: &[usize]) -> Result<Self> {
        let t = self.t.permute_rows(order);
        let r = self.r.permute_cols(order);
        let mut s = Self::new(t, r, self.vddq)?;
        s.name = self.name.clone();
        Ok(s)
    }

    fn check_word(&self, d: &DataWord) -> Result<()> {
        if d.len() != self.m() {
            return Err(Error::DimensionMismatch {
                context: "data word",
                expected: self.m(),
                actual: d.len(),
            });
        }
        Ok(())
    }

    /// Exact fraction of vddq driven on each wire.
    pub fn level_fractions(&self, d: &DataWord) -> Result<Vec<Rational64>> {
        self.check_word(d)?;
        Ok((0..self.n())
            .map(|i| {
                let s = self.t.row_l1(i);
                let dot: i64 = self.t.row(i).iter().zip(d.bits()).map(|(&a, &b)| a * b as i64).sum();
                Rational64::new(dot + s, 2 * s)
            })
            .collect())
    }

    pub fn encode_symbol(&self, d: &DataWord) -> Result<Vec<f64>> {
        Ok(self
            .level_fractions(d)?
            .into_iter()
            .map(|a| self.vddq * (*a.numer() as f64) / (*a.denom() as f64))
            .collect())
    }

    pub fn decode_samples(&self, y: &[f64]) -> Result<Decoded> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "received samples",
                expected: self.n(),
                actual: y.len(),
            });
        }
        let w: Vec<f64> = (0..self.m())
            .map(|j| {
                let acc: f64 = self.r.row(j).iter().zip(y).map(|(&r, &v)| r as f64 * v).sum();
                acc - self.thresholds[j]
            })
            .collect();
        let bits = w.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect();
        Ok(Decoded { w, bits })
    }

    /// Maps decoded output bits back to data lanes using the certificate.
    pub fn recover_data(&self, bits: &[i8]) -> Result<DataWord> {
        if !self.cert.monomial {
            return Err(Error::NotDecodable);
        }
        let mut d = vec![0i8; self.m()];
        for (j, &b) in bits.iter().enumerate() {
            d[self.cert.permutation[j]] = b * self.cert.gains[j].signum() as i8;
        }
        DataWord::new(d)
    }

    pub fn drive_level_multiset(&self, budget: u128) -> Result<LevelMultiset> {
        let m = self.m();
        let required = (self.n() as u128) << m.min(100);
        if m >= 64 || required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        let mut first: Option<Vec<Rational64>> = None;
        let mut constant = true;
        let mut union: Vec<Rational64> = Vec::new();
        for idx in 0..(1u64 << m) {
            let mut lv = self.level_fractions(&DataWord::from_index(m, idx))?;
            lv.sort();
            for v in &lv {
                if !union.contains(v) {
                    union.push(*v);
                }
            }
            match &first {
                None => first = Some(lv),
                Some(f) => {
                    if *f != lv {
                        constant = false;
                    }
                }
            }
        }
        union.sort();
        let fractions = if constant { first.unwrap_or_default() } else { Vec::new() };
        Ok(LevelMultiset {
            constant,
            level_set: fractions.iter().map(|a| self.vddq * ratio_f64(a)).collect(),
            fractions,
            all_levels: union,
        })
    }
}

pub fn ratio_f64(a: &Rational64) -> f64 {
    *a.numer() as f64 / *a.denom() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub w: Vec<f64>,
    pub bits: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMultiset {
    pub constant: bool,
    /// Common sorted multiset in volts when `constant`.
    pub level_set: Vec<f64>,
    pub fractions: Vec<Rational64>,
    /// Every distinct level fraction seen over all words.
    pub all_levels: Vec<Rational64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    SingleEnded,
    Differential,
}

pub fn baseline_scheme(kind: BaselineKind, wires: usize, vddq: f64) -> Result<SignalingScheme> {
    if wires == 0 {
        return Err(Error::InvalidParameter("at least one wire is required".into()));
    }
    match kind {
        BaselineKind::SingleEnded => {
            let i = IntMatrix::identity(wires);
            Ok(SignalingScheme::new(i.clone(), i, vddq)?.named("se"))
        }
        BaselineKind::Differential => {
            if wires % 2 != 0 {
                return Err(Error::OddDifferential(wires));
            }
            let m = wires / 2;
            let mut t = IntMatrix::zeros(wires, m);
            let mut r = IntMatrix::zeros(m, wires);
            for k in 0..m {
                t.set(2 * k, k, 1);
                t.set(2 * k + 1, k, -1);
                r.set(k, 2 * k, 1);
                r.set(k, 2 * k + 1, -1);
            }
            Ok(SignalingScheme::new(t, r, vddq)?.named("differential"))
        }
    }
}

/// Levels reachable by a single row, as exact fractions of vddq.
pub fn row_levels(row: &[i64]) -> Vec<Rational64> {
    let s: i64 = row.iter().map(|v| v.abs()).sum();
    let nz: Vec<i64> = row.iter().copied().filter(|v| *v != 0).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << nz.len()) {
        let dot: i64 = nz
            .iter()
            .enumerate()
            .map(|(k, &v)| if mask >> k & 1 == 1 { v } else { -v })
            .sum();
        let a = Rational64::new(dot + s, 2 * s);
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out.sort();
    out
}

/// Named matrices used across examples and tests.
pub mod fixtures {
    use super::*;

    /// Toy 2-over-3 pair with the middle encode row as printed; not decodable.
    pub fn toy_printed(vddq: f64) -> SignalingScheme {
        let t = IntMatrix::from_rows(&[[1, -1], [0, -2], [1, 1]]).unwrap();
        let r = IntMatrix::from_rows(&[[-1, 0, 1], [0, -2, 0]]).unwrap();
        SignalingScheme::new(t, r, vddq).unwrap().named("toy-printed")
    }

    /// Toy 2-over-3 pair with the middle encode row transposed to `[-2, 0]`.
    pub fn toy_corrected(vddq: f64) -> SignalingScheme {
        let t = IntMatrix::from_rows(&[[1, -1], [-2, 0], [1, 1]]).unwrap();
        let r = IntMatrix::from_rows(&[[-1, 0, 1], [0, -2, 0]]).unwrap();
        SignalingScheme::new(t, r, vddq).unwrap().named("toy-corrected")
    }

    /// Three data lanes over four wires built from a Walsh basis.
    pub fn three_over_four(vddq: f64) -> SignalingScheme {
        let t = IntMatrix::from_rows(&[[1, 1, 1], [-1, 1, -1], [1, -1, -1], [-1, -1, 1]]).unwrap();
        let r = t.transpose();
        SignalingScheme::new(t, r, vddq).unwrap().named("xmas-3over4")
    }

    /// Seven lanes over eight wires with rows of weights {7, 5, 4}, placed
    /// for the reference bundle.
    pub fn seven_over_eight(vddq: f64) -> SignalingScheme {
        let t = IntMatrix::from_rows(&[
            [0, 0, -4, 0, 0, -5, -7],
            [0, 0, -4, 0, 0, -5, 7],
            [7, 5, 4, 0, 0, 0, 0],
            [0, -5, 4, -7, 0, 0, 0],
            [0, -5, 4, 7, 0, 0, 0],
            [-7, 5, 4, 0, 0, 0, 0],
            [0, 0, -4, 0, -7, 5, 0],
            [0, 0, -4, 0, 7, 5, 0],
        ])
        .unwrap();
        let r = IntMatrix::from_rows(&[
            [0, 0, 1, 0, 0, -1, 0, 0],
            [0, 0, 1, -1, -1, 1, 0, 0],
            [-1, -1, 1, 1, 1, 1, -1, -1],
            [0, 0, 0, -1, 1, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, -1, 1],
            [-1, -1, 0, 0, 0, 0, 1, 1],
            [-1, 1, 0, 0, 0, 0, 0, 0],
        ])
        .unwrap();
        SignalingScheme::new(t, r, vddq).unwrap().named("xmas-7over8")
    }
}
