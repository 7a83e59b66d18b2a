//! Deterministic worst-case eye opening.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cij::{cij_on_table, CijMode};
use super::{cursor_table, CursorTable};
use crate::channel::PulseResponseSet;
use crate::error::{Error, Result};
use crate::linksim::{driver_current, gen_pattern, simulate_stream, PatternConfig, SupplyModel};
use crate::signaling::{DataWord, SignalingScheme};

pub const DEFAULT_EXHAUSTIVE_BUDGET: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EyeMethod {
    /// Peak distortion: sign every cursor against the decision.
    Pda,
    /// Enumerate every bit pattern within the memory span.
    Exhaustive { budget: u128 },
    /// Fold a simulated symbol stream; required for data-dependent supply droop.
    Stream { pattern: PatternConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeReport {
    pub output: usize,
    pub width_ui: f64,
    pub height_v: f64,
    pub p2p_jitter_s: f64,
    /// Best sampling instant, in UI after the launch of the symbol.
    pub sampling_phase: f64,
    pub method: String,
    pub open: bool,
}

/// Opening per sample of a window and the derived width/height.
pub(crate) struct Opening {
    pub start: i64,
    pub values: Vec<f64>,
}

impl Opening {
    /// `(height, width in samples, argmax index)`.
    pub fn measure(&self) -> (f64, f64, usize) {
        let v = &self.values;
        let mut a = 0;
        for (i, x) in v.iter().enumerate() {
            if *x > v[a] {
                a = i;
            }
        }
        if v[a] <= 0.0 {
            return (v[a], 0.0, a);
        }
        let mut l = a;
        while l > 0 && v[l - 1] > 0.0 {
            l -= 1;
        }
        let left = if l == 0 { 0.0 } else { (l - 1) as f64 + (-v[l - 1]) / (v[l] - v[l - 1]) };
        let mut r = a;
        while r + 1 < v.len() && v[r + 1] > 0.0 {
            r += 1;
        }
        let right = if r + 1 == v.len() {
            r as f64
        } else {
            r as f64 + v[r] / (v[r] - v[r + 1])
        };
        (v[a], right - left, a)
    }
}

fn pda_opening(ct: &CursorTable, j: usize) -> Opening {
    let ns = ct.samples_per_symbol as i64;
    let pk = ct.peak[j] as i64;
    let w = ct.window(j, pk - ns, pk + ns);
    let values = (0..w.main.len())
        .map(|t| {
            let others: f64 = w.others.iter().map(|(_, _, c)| c[t].abs()).sum();
            2.0 * (w.main[t] - others)
        })
        .collect();
    Opening { start: w.start, values }
}

fn exhaustive_opening(ct: &CursorTable, j: usize, budget: u128) -> Result<Opening> {
    let ns = ct.samples_per_symbol as i64;
    let pk = ct.peak[j] as i64;
    let w = ct.window(j, pk - ns, pk + ns);
    let k = w.others.len();
    let required = 1u128 << k.min(127);
    if k >= 64 || required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let (lo, hi) = extremes_gray(&w.others.iter().map(|(_, _, c)| c.as_slice()).collect::<Vec<_>>(), w.main.len());
    let values = (0..w.main.len()).map(|t| 2.0 * w.main[t] + lo[t] - hi[t]).collect();
    Ok(Opening { start: w.start, values })
}

/// Pointwise min and max of `sum_k c_k * d_k` over all sign patterns.
pub(crate) fn extremes_gray(cursors: &[&[f64]], len: usize) -> (Vec<f64>, Vec<f64>) {
    let k = cursors.len();
    // split the pattern space on the top bits so workers own disjoint ranges
    let split = k.min(6);
    let inner = k - split;
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0u64..(1 << split))
        .into_par_iter()
        .map(|hi_bits| {
            let mut x = vec![0.0; len];
            for (b, c) in cursors.iter().enumerate() {
                let sign = if b >= inner && hi_bits >> (b - inner) & 1 == 1 { 1.0 } else { -1.0 };
                for (xv, cv) in x.iter_mut().zip(c.iter()) {
                    *xv += sign * cv;
                }
            }
            let mut mn = x.clone();
            let mut mx = x.clone();
            let mut state = 0u64;
            for g in 1u64..(1 << inner) {
                let bit = g.trailing_zeros() as usize;
                state ^= 1 << bit;
                let sign = if state >> bit & 1 == 1 { 2.0 } else { -2.0 };
                let c = cursors[bit];
                for t in 0..len {
                    x[t] += sign * c[t];
                    if x[t] < mn[t] {
                        mn[t] = x[t];
                    }
                    if x[t] > mx[t] {
                        mx[t] = x[t];
                    }
                }
            }
            (mn, mx)
        })
        .collect();
    let mut mn = vec![f64::INFINITY; len];
    let mut mx = vec![f64::NEG_INFINITY; len];
    for (a, b) in parts {
        for t in 0..len {
            mn[t] = mn[t].min(a[t]);
            mx[t] = mx[t].max(b[t]);
        }
    }
    if k == 0 {
        return (vec![0.0; len], vec![0.0; len]);
    }
    (mn, mx)
}

/// Worst envelope CIJ (s), worst PDA height and width over all outputs,
/// from a single cursor table. Used to screen many candidates cheaply.
pub(crate) fn screen(scheme: &SignalingScheme, prs: &PulseResponseSet) -> Result<(f64, f64, f64)> {
    let ct = cursor_table(scheme, prs)?;
    let ns = ct.samples_per_symbol as f64;
    let (mut c, mut h, mut w) = (0.0f64, f64::INFINITY, f64::INFINITY);
    for j in 0..scheme.m() {
        let (hj, wj, _) = pda_opening(&ct, j).measure();
        h = h.min(hj.max(0.0));
        w = w.min((wj / ns).min(1.0));
        c = c.max(super::cij::cij_raw(&ct, j, CijMode::Envelope)?.spread_samples * ct.dt);
    }
    Ok((c, h, w))
}

/// True when total driver current is the same for every word.
fn supply_is_static(scheme: &SignalingScheme, supply: &SupplyModel) -> Result<bool> {
    if supply.inductance_h == 0.0 {
        return Ok(true);
    }
    if supply.topology != crate::linksim::SupplyTopology::Shared || scheme.m() > 20 {
        return Ok(false);
    }
    let first = driver_current(scheme, &DataWord::from_index(scheme.m(), 0), supply)?.total;
    for idx in 1..(1u64 << scheme.m()) {
        if driver_current(scheme, &DataWord::from_index(scheme.m(), idx), supply)?.total != first {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn eye(scheme: &SignalingScheme, prs: &PulseResponseSet, output: usize, method: &EyeMethod, supply: &SupplyModel) -> Result<EyeReport> {
    Ok(eye_all_inner(scheme, prs, Some(output), method, supply)?.remove(0))
}

pub fn eye_all(scheme: &SignalingScheme, prs: &PulseResponseSet, method: &EyeMethod, supply: &SupplyModel) -> Result<Vec<EyeReport>> {
    eye_all_inner(scheme, prs, None, method, supply)
}

/// Smallest height and width over all outputs.
pub fn worst_eye(reports: &[EyeReport]) -> Option<EyeReport> {
    let mut it = reports.iter();
    let mut w = it.next()?.clone();
    for r in it {
        if r.height_v < w.height_v {
            w.height_v = r.height_v;
            w.output = r.output;
            w.sampling_phase = r.sampling_phase;
        }
        w.width_ui = w.width_ui.min(r.width_ui);
        w.p2p_jitter_s = w.p2p_jitter_s.max(r.p2p_jitter_s);
        w.open &= r.open;
    }
    Some(w)
}

fn eye_all_inner(
    scheme: &SignalingScheme,
    prs: &PulseResponseSet,
    only: Option<usize>,
    method: &EyeMethod,
    supply: &SupplyModel,
) -> Result<Vec<EyeReport>> {
    let ct = cursor_table(scheme, prs)?;
    let outputs: Vec<usize> = match only {
        Some(j) if j >= scheme.m() => {
            return Err(Error::DimensionMismatch {
                context: "eye output index",
                expected: scheme.m(),
                actual: j,
            })
        }
        Some(j) => vec![j],
        None => (0..scheme.m()).collect(),
    };
    let ns = ct.samples_per_symbol as f64;
    let dt = ct.dt;
    match method {
        EyeMethod::Pda | EyeMethod::Exhaustive { .. } => {
            if !supply_is_static(scheme, supply)? {
                return Err(Error::NonlinearSupply);
            }
            outputs
                .iter()
                .map(|&j| {
                    let (op, name) = match method {
                        EyeMethod::Pda => (pda_opening(&ct, j), "pda"),
                        EyeMethod::Exhaustive { budget } => (exhaustive_opening(&ct, j, *budget)?, "exhaustive"),
                        EyeMethod::Stream { .. } => unreachable!(),
                    };
                    let (h, w, a) = op.measure();
                    let jit = jitter(&ct, j)?;
                    Ok(EyeReport {
                        output: j,
                        width_ui: (w / ns).min(1.0),
                        height_v: h.max(0.0),
                        p2p_jitter_s: jit * dt,
                        sampling_phase: (op.start + a as i64) as f64 / ns,
                        method: name.into(),
                        open: h > 0.0,
                    })
                })
                .collect()
        }
        EyeMethod::Stream { pattern } => {
            let data = gen_pattern(pattern, scheme.m())?;
            let out = simulate_stream(scheme, prs, &data, supply)?;
            outputs
                .iter()
                .map(|&j| {
                    let (op, jit) = stream_opening(&ct, j, &data, &out.w[j].samples, prs.memory_span)?;
                    let (h, w, a) = op.measure();
                    Ok(EyeReport {
                        output: j,
                        width_ui: (w / ns).min(1.0),
                        height_v: h.max(0.0),
                        p2p_jitter_s: jit * dt,
                        sampling_phase: (op.start + a as i64) as f64 / ns,
                        method: "stream".into(),
                        open: h > 0.0,
                    })
                })
                .collect()
        }
    }
}

/// Crossing spread in samples, exact when the search fits the default budget.
fn jitter(ct: &CursorTable, j: usize) -> Result<f64> {
    match cij_on_table(ct, j, CijMode::Exact { budget: super::DEFAULT_CIJ_BUDGET }) {
        Ok(r) => Ok(r.spread_samples),
        Err(Error::BudgetExceeded { .. }) => Ok(cij_on_table(ct, j, CijMode::Envelope)?.spread_samples),
        Err(e) => Err(e),
    }
}

fn stream_opening(ct: &CursorTable, j: usize, data: &[Vec<i8>], w: &[f64], skip: usize) -> Result<(Opening, f64)> {
    let ns = ct.samples_per_symbol as i64;
    let pk = ct.peak[j] as i64;
    let lane = ct.main_lane[j];
    let s = ct.main_sign[j];
    let k_len = data[0].len() as i64;
    let span = (2 * ns + 1) as usize;
    let mut hi_min = vec![f64::INFINITY; span];
    let mut lo_max = vec![f64::NEG_INFINITY; span];
    let mut crossings: Vec<f64> = Vec::new();
    let total = w.len() as i64;
    let first = skip as i64 + 1;
    let mut any = false;
    for k in first..k_len {
        let base = k * ns + pk - ns;
        if base < 0 || base + 2 * ns >= total {
            continue;
        }
        any = true;
        let bit = s * data[lane][k as usize] as f64;
        for u in 0..span {
            let v = s * w[(base + u as i64) as usize];
            if bit > 0.0 {
                hi_min[u] = hi_min[u].min(v);
            } else {
                lo_max[u] = lo_max[u].max(v);
            }
        }
        // crossing of a transition into symbol k
        let prev = s * data[lane][k as usize - 1] as f64;
        if prev != bit {
            let dir = bit;
            let mut last = dir * s * w[base as usize];
            for u in 1..=ns as usize {
                let v = dir * s * w[(base + u as i64) as usize];
                if v >= 0.0 && last < 0.0 {
                    crossings.push((u - 1) as f64 + (-last) / (v - last));
                    break;
                }
                last = v;
            }
        }
    }
    if !any {
        return Err(Error::StreamTooShort {
            got: k_len as usize,
            need: skip + 3,
        });
    }
    let values = (0..span)
        .map(|u| {
            if hi_min[u].is_finite() && lo_max[u].is_finite() {
                hi_min[u] - lo_max[u]
            } else {
                0.0
            }
        })
        .collect();
    let jit = if crossings.is_empty() {
        0.0
    } else {
        let mn = crossings.iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = crossings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx - mn
    };
    Ok((Opening { start: pk - ns, values }, jit))
}

#[cfg(test)]
mod tests {
    use super::super::tests_support::random_prs;
    use super::*;
    use crate::matrix::IntMatrix;
    use crate::signaling::fixtures::*;
    use crate::signaling::{baseline_scheme, BaselineKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const V: f64 = 0.4;

    #[test]
    fn ideal_channel_full_eye() {
        let s = baseline_scheme(BaselineKind::SingleEnded, 2, V).unwrap();
        let prs = PulseResponseSet::ideal(2, 32, 1e-10);
        let sup = SupplyModel::ideal(V);
        for m in [EyeMethod::Pda, EyeMethod::Exhaustive { budget: 1 << 20 }] {
            let r = eye(&s, &prs, 0, &m, &sup).unwrap();
            assert_eq!(r.width_ui, 1.0);
            assert!((r.height_v - V).abs() < 1e-15);
            assert_eq!(r.p2p_jitter_s, 0.0);
        }
    }

    #[test]
    fn pda_equals_exhaustive_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sup = SupplyModel::ideal(V);
        for _ in 0..4 {
            let prs = random_prs(&mut rng, 3, 32, 2);
            let s = toy_corrected(V);
            let a = eye_all(&s, &prs, &EyeMethod::Pda, &sup).unwrap();
            let b = eye_all(&s, &prs, &EyeMethod::Exhaustive { budget: 1 << 20 }, &sup).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x.height_v - y.height_v).abs() < 1e-9 * V);
                assert!((x.width_ui - y.width_ui).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gain_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let prs = random_prs(&mut rng, 3, 32, 2);
        let s = toy_corrected(V);
        let mut r2 = IntMatrix::zeros(2, 3);
        for j in 0..2 {
            for p in 0..3 {
                r2.set(j, p, 3 * s.r().get(j, p));
            }
        }
        let s3 = SignalingScheme::new(s.t().clone(), r2, V).unwrap();
        let sup = SupplyModel::ideal(V);
        let a = eye_all(&s, &prs, &EyeMethod::Pda, &sup).unwrap();
        let b = eye_all(&s3, &prs, &EyeMethod::Pda, &sup).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((3.0 * x.height_v - y.height_v).abs() < 1e-12);
            assert!((x.width_ui - y.width_ui).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_refusal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prs = random_prs(&mut rng, 3, 32, 3);
        let r = eye(&toy_corrected(V), &prs, 0, &EyeMethod::Exhaustive { budget: 4 }, &SupplyModel::ideal(V));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn droop_requires_stream() {
        let s = baseline_scheme(BaselineKind::SingleEnded, 2, V).unwrap();
        let prs = PulseResponseSet::ideal(2, 32, 1e-10);
        let sup = SupplyModel::with_inductance(V, 5e-9);
        assert!(matches!(eye(&s, &prs, 0, &EyeMethod::Pda, &sup), Err(Error::NonlinearSupply)));
        let m = EyeMethod::Stream {
            pattern: PatternConfig::Prbs7 { seed: 1, length: 300 },
        };
        let r = eye(&s, &prs, 0, &m, &sup).unwrap();
        let r0 = eye(&s, &prs, 0, &m, &SupplyModel::ideal(V)).unwrap();
        assert!(r.height_v < r0.height_v);
        // constant-multiset pair is unaffected, and PDA stays available
        let d = baseline_scheme(BaselineKind::Differential, 2, V).unwrap();
        assert!(eye(&d, &prs, 0, &EyeMethod::Pda, &sup).is_ok());
        let a = eye(&d, &prs, 0, &m, &sup).unwrap();
        let b = eye(&d, &prs, 0, &m, &SupplyModel::ideal(V)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stream_ideal_matches_pda() {
        let s = three_over_four(V);
        let prs = PulseResponseSet::ideal(4, 32, 1e-10);
        let m = EyeMethod::Stream {
            pattern: PatternConfig::Prbs7 { seed: 3, length: 400 },
        };
        let a = eye_all(&s, &prs, &m, &SupplyModel::ideal(V)).unwrap();
        let b = eye_all(&s, &prs, &EyeMethod::Pda, &SupplyModel::ideal(V)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.height_v - y.height_v).abs() < 1e-12);
            assert_eq!(x.width_ui, y.width_ui);
        }
    }
}
