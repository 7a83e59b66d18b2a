//! Decoded single-bit responses, worst-case eyes and crossing jitter.

mod cij;
mod compare;
mod eye;

pub use cij::{cij, cij_all, worst_cij, CijMode, CijReport, DEFAULT_CIJ_BUDGET};
pub use compare::{compare_schemes, worst_droop, ComparisonReport, ComparisonRow};
pub(crate) use eye::screen;
pub use eye::{eye, eye_all, worst_eye, EyeMethod, EyeReport, DEFAULT_EXHAUSTIVE_BUDGET};

use crate::channel::PulseResponseSet;
use crate::error::{Error, Result};
use crate::signaling::{DataWord, SignalingScheme};

/// Bit-affine decomposition of the decoded outputs.
///
/// `W_j(t) = bias_j(t mod T) + sum_{l,k} pulse[j][l][t - k T] * d_{l,k}`.
#[derive(Debug, Clone)]
pub struct CursorTable {
    pub m: usize,
    pub samples_per_symbol: usize,
    pub dt: f64,
    /// `pulse[j][l]`: contribution of a +1 bit on lane `l` to output `j`.
    pub pulse: Vec<Vec<Vec<f64>>>,
    /// Steady-state residual of the constant bias, per output and phase.
    pub bias: Vec<Vec<f64>>,
    /// Data lane recovered on each output.
    pub main_lane: Vec<usize>,
    /// Sign of the main cursor at its peak.
    pub main_sign: Vec<f64>,
    /// Sample index of the main cursor peak.
    pub peak: Vec<usize>,
}

/// Decoded response of output `j` to a unit pulse on wire `i`: `sum_p R[j][p] e[i][p]`.
pub fn decoded_wire_responses(scheme: &SignalingScheme, prs: &PulseResponseSet) -> Vec<Vec<Vec<f64>>> {
    let n = scheme.n();
    let r = scheme.r();
    (0..scheme.m())
        .map(|j| {
            (0..n)
                .map(|i| {
                    let mut acc = vec![0.0; prs.len()];
                    for p in 0..n {
                        let rjp = r.get(j, p) as f64;
                        if rjp == 0.0 {
                            continue;
                        }
                        for (a, v) in acc.iter_mut().zip(&prs.e[i][p]) {
                            *a += rjp * v;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn cursor_table(scheme: &SignalingScheme, prs: &PulseResponseSet) -> Result<CursorTable> {
    if !scheme.is_decodable() {
        return Err(Error::NotDecodable);
    }
    if prs.n() != scheme.n() {
        return Err(Error::DimensionMismatch {
            context: "channel wire count",
            expected: scheme.n(),
            actual: prs.n(),
        });
    }
    let m = scheme.m();
    let ns = prs.samples_per_symbol();
    let half = 0.5 * scheme.vddq();
    let teff = scheme.teff_f64();
    let dw = decoded_wire_responses(scheme, prs);
    let len = prs.len();
    let pulse: Vec<Vec<Vec<f64>>> = dw
        .iter()
        .map(|wires| {
            (0..m)
                .map(|l| {
                    let mut acc = vec![0.0; len];
                    for (i, w) in wires.iter().enumerate() {
                        let c = half * teff[i][l];
                        if c == 0.0 {
                            continue;
                        }
                        for (a, v) in acc.iter_mut().zip(w) {
                            *a += c * v;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let bias = dw
        .iter()
        .enumerate()
        .map(|(j, wires)| {
            (0..ns)
                .map(|ph| {
                    let mut s = 0.0;
                    for w in wires {
                        let mut t = ph;
                        while t < len {
                            s += w[t];
                            t += ns;
                        }
                    }
                    half * s - scheme.thresholds()[j]
                })
                .collect()
        })
        .collect();
    let cert = scheme.certificate();
    let main_lane = cert.permutation.clone();
    let mut main_sign = Vec::with_capacity(m);
    let mut peak = Vec::with_capacity(m);
    for j in 0..m {
        let p = &pulse[j][main_lane[j]];
        let s = if cert.gains[j] > 0 { 1.0 } else { -1.0 };
        let mut best = 0;
        for t in 0..len {
            if s * p[t] > s * p[best] {
                best = t;
            }
        }
        main_sign.push(s);
        peak.push(best);
    }
    Ok(CursorTable {
        m,
        samples_per_symbol: ns,
        dt: prs.dt,
        pulse,
        bias,
        main_lane,
        main_sign,
        peak,
    })
}

/// Largest `|contribution|` of wire `wire` to decoded output `j` over every
/// data pattern. Symbols are independent, so the maximum of the sum is the
/// sum of per-symbol maxima for each sample time.
pub fn max_wire_contribution(scheme: &SignalingScheme, prs: &PulseResponseSet, j: usize, wire: usize) -> Result<f64> {
    if j >= scheme.m() || wire >= scheme.n() {
        return Err(Error::InvalidParameter(format!("output {j} or wire {wire} out of range")));
    }
    if prs.n() != scheme.n() {
        return Err(Error::DimensionMismatch {
            context: "channel wire count",
            expected: scheme.n(),
            actual: prs.n(),
        });
    }
    let m = scheme.m();
    if m > 24 {
        return Err(Error::BudgetExceeded {
            required: 1u128 << m,
            budget: 1 << 24,
        });
    }
    let drive: Vec<f64> = (0..1u64 << m)
        .map(|idx| Ok(scheme.encode_symbol(&DataWord::from_index(m, idx))?[wire]))
        .collect::<Result<_>>()?;
    let (lo, hi) = drive.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let g = &decoded_wire_responses(scheme, prs)[j][wire];
    let ns = prs.samples_per_symbol();
    let mut worst = 0.0f64;
    for ph in 0..ns {
        let (mut up, mut down) = (0.0, 0.0);
        let mut t = ph;
        while t < g.len() {
            up += (lo * g[t]).max(hi * g[t]);
            down += (lo * g[t]).min(hi * g[t]);
            t += ns;
        }
        worst = worst.max(up.abs()).max(down.abs());
    }
    Ok(worst)
}

/// Cursor waveforms of one output restricted to a window of sample times.
#[derive(Debug, Clone)]
pub(crate) struct Window {
    /// Absolute sample index of the first window sample (symbol 0 starts at 0).
    pub start: i64,
    pub bias: Vec<f64>,
    /// Main cursor, already multiplied by its sign.
    pub main: Vec<f64>,
    /// Victim's own bit in the previous symbol, sign-adjusted like `main`.
    pub prev: Vec<f64>,
    /// Every other cursor as `(lane, symbol offset, samples)`.
    pub others: Vec<(usize, i64, Vec<f64>)>,
}

impl CursorTable {
    pub fn len(&self) -> usize {
        self.pulse[0][0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reconstructs `W_j` at absolute sample `t` for bits `d[l][k]`, where
    /// symbol `k` starts at sample `k * T` and bits before the stream are absent.
    pub fn reconstruct(&self, j: usize, d: &[Vec<i8>], t: usize) -> f64 {
        let ns = self.samples_per_symbol;
        let mut w = self.bias[j][t % ns];
        for (l, lane) in d.iter().enumerate() {
            for (k, &b) in lane.iter().enumerate() {
                let s = k * ns;
                if s <= t && t - s < self.len() {
                    w += self.pulse[j][l][t - s] * b as f64;
                }
            }
        }
        w
    }

    /// Window of samples `[lo, hi]` (absolute, may be negative) for output `j`.
    pub(crate) fn window(&self, j: usize, lo: i64, hi: i64) -> Window {
        let ns = self.samples_per_symbol as i64;
        let len = self.len() as i64;
        let sample = |l: usize, k: i64, t: i64| -> f64 {
            let u = t - k * ns;
            if u >= 0 && u < len {
                self.pulse[j][l][u as usize]
            } else {
                0.0
            }
        };
        let bias = (lo..=hi).map(|t| self.bias[j][t.rem_euclid(ns) as usize]).collect();
        let lane = self.main_lane[j];
        let s = self.main_sign[j];
        let main = (lo..=hi).map(|t| s * sample(lane, 0, t)).collect();
        let prev = (lo..=hi).map(|t| s * sample(lane, -1, t)).collect();
        let kmin = (lo - len + 1).div_euclid(ns);
        let kmax = hi.div_euclid(ns);
        let mut others = Vec::new();
        for l in 0..self.m {
            for k in kmin..=kmax {
                if l == lane && k == 0 {
                    continue;
                }
                let v: Vec<f64> = (lo..=hi).map(|t| sample(l, k, t)).collect();
                if v.iter().any(|x| *x != 0.0) {
                    others.push((l, k, v));
                }
            }
        }
        Window {
            start: lo,
            bias,
            main,
            prev,
            others,
        }
    }
}
