//! Symbol-stream simulation by superposition of pulse responses, pattern
//! generation, and a lumped supply-droop model.

use serde::{Deserialize, Serialize};

use crate::channel::PulseResponseSet;
use crate::error::{Error, Result};
use crate::signaling::{ratio_f64, DataWord, SignalingScheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("waveform dt must be positive, got {dt}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("waveform has non-finite samples".into()));
        }
        Ok(Self { dt, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV with columns `time_s,value_v`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s,value_v\n");
        for (k, v) in self.samples.iter().enumerate() {
            s.push_str(&format!("{:e},{:e}\n", k as f64 * self.dt, v));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupplyTopology {
    /// One inductance feeds every driver.
    Shared,
    /// Each driver has its own inductance.
    PerDriver,
}

/// Lumped supply with resistive-divider drivers.
///
/// A driver at level fraction `a` draws `V * (g_div * a * (1 - a) + g_load * a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyModel {
    pub inductance_h: f64,
    pub nominal_vddq: f64,
    #[serde(default = "default_g_div")]
    pub g_div_s: f64,
    #[serde(default = "default_g_load")]
    pub g_load_s: f64,
    #[serde(default = "default_topology")]
    pub topology: SupplyTopology,
}

fn default_g_div() -> f64 {
    4e-3
}
/// Average charging conductance `C_line / T` of one reference wire
/// (about 320 fF including coupling) at 10 GS/s.
fn default_g_load() -> f64 {
    3.2e-3
}
fn default_topology() -> SupplyTopology {
    SupplyTopology::Shared
}

impl SupplyModel {
    pub fn ideal(vddq: f64) -> Self {
        Self::with_inductance(vddq, 0.0)
    }

    pub fn with_inductance(vddq: f64, inductance_h: f64) -> Self {
        Self {
            inductance_h,
            nominal_vddq: vddq,
            g_div_s: default_g_div(),
            g_load_s: default_g_load(),
            topology: default_topology(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inductance_h >= 0.0 && self.inductance_h.is_finite()) {
            return Err(Error::InvalidParameter("supply inductance must be nonnegative".into()));
        }
        if !(self.nominal_vddq > 0.0) || self.g_div_s < 0.0 || self.g_load_s < 0.0 {
            return Err(Error::InvalidParameter("supply voltage and conductances must be positive".into()));
        }
        Ok(())
    }

    pub fn level_current(&self, a: f64) -> f64 {
        self.nominal_vddq * (self.g_div_s * a * (1.0 - a) + self.g_load_s * a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverCurrent {
    pub per_driver: Vec<f64>,
    pub total: f64,
}

/// Sum of currents added in ascending order, so equal multisets give equal totals.
fn ordered_total(per: &[f64]) -> f64 {
    let mut s = per.to_vec();
    s.sort_by(f64::total_cmp);
    s.iter().sum()
}

pub fn driver_current(scheme: &SignalingScheme, d: &DataWord, supply: &SupplyModel) -> Result<DriverCurrent> {
    let per_driver: Vec<f64> = scheme
        .level_fractions(d)?
        .iter()
        .map(|a| supply.level_current(ratio_f64(a)))
        .collect();
    let total = ordered_total(&per_driver);
    Ok(DriverCurrent { per_driver, total })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternConfig {
    Prbs7 { seed: u64, length: usize },
    Prbs15 { seed: u64, length: usize },
    /// Every window of `window` symbols, concatenated in index order.
    Exhaustive { window: usize },
    Explicit { bits: Vec<Vec<i8>> },
}

/// Fibonacci LFSR with feedback taps at `degree` and `tap`.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u32,
    degree: u32,
    tap: u32,
}

impl Lfsr {
    pub fn new(degree: u32, tap: u32, seed: u64) -> Result<Self> {
        let mask = (1u64 << degree) - 1;
        let state = (seed & mask) as u32;
        if state == 0 {
            return Err(Error::ZeroSeed);
        }
        Ok(Self { state, degree, tap })
    }

    pub fn prbs7(seed: u64) -> Result<Self> {
        Self::new(7, 6, seed)
    }

    pub fn prbs15(seed: u64) -> Result<Self> {
        Self::new(15, 14, seed)
    }

    pub fn period(&self) -> usize {
        (1usize << self.degree) - 1
    }

    pub fn next_bit(&mut self) -> u8 {
        let b = ((self.state >> (self.degree - 1)) ^ (self.state >> (self.tap - 1))) & 1;
        self.state = ((self.state << 1) | b) & ((1 << self.degree) - 1);
        b as u8
    }
}

const EXHAUSTIVE_LIMIT: usize = 1 << 24;

/// Produces an `m x K` matrix of +-1 symbols.
pub fn gen_pattern(cfg: &PatternConfig, m: usize) -> Result<Vec<Vec<i8>>> {
    match cfg {
        PatternConfig::Prbs7 { seed, length } => prbs_lanes(Lfsr::prbs7(*seed)?, m, *length),
        PatternConfig::Prbs15 { seed, length } => prbs_lanes(Lfsr::prbs15(*seed)?, m, *length),
        PatternConfig::Exhaustive { window } => {
            let bits = m * window;
            if bits >= 32 || (*window << bits) > EXHAUSTIVE_LIMIT {
                return Err(Error::BudgetExceeded {
                    required: (*window as u128) << bits.min(100),
                    budget: EXHAUSTIVE_LIMIT as u128,
                });
            }
            let mut out = vec![Vec::with_capacity(window << bits); m];
            for idx in 0u64..(1 << bits) {
                for k in 0..*window {
                    for (l, lane) in out.iter_mut().enumerate() {
                        let b = idx >> (k * m + l) & 1;
                        lane.push(if b == 1 { 1 } else { -1 });
                    }
                }
            }
            Ok(out)
        }
        PatternConfig::Explicit { bits } => {
            if bits.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "explicit pattern lanes",
                    expected: m,
                    actual: bits.len(),
                });
            }
            let k = bits.first().map_or(0, |b| b.len());
            for lane in bits {
                if lane.len() != k {
                    return Err(Error::InvalidParameter("explicit pattern lanes differ in length".into()));
                }
                DataWord::new(lane.clone())?;
            }
            Ok(bits.clone())
        }
    }
}

fn prbs_lanes(mut lfsr: Lfsr, m: usize, length: usize) -> Result<Vec<Vec<i8>>> {
    let p = lfsr.period();
    let seq: Vec<i8> = (0..p).map(|_| if lfsr.next_bit() == 1 { 1 } else { -1 }).collect();
    let off = p / m.max(1);
    Ok((0..m)
        .map(|l| (0..length).map(|k| seq[(k + l * off) % p]).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamResult {
    /// Far-end wire voltages.
    pub y: Vec<Waveform>,
    /// Decoded, threshold-removed outputs.
    pub w: Vec<Waveform>,
    /// Supply droop per symbol (shared) or per driver and symbol.
    pub droop: Vec<Vec<f64>>,
}

/// Per-symbol supply seen by every driver: `v[i][k]`. The droop caused by
/// the current step into symbol `k` lowers the levels of symbol `k + 1`.
pub fn supply_voltages(scheme: &SignalingScheme, words: &[DataWord], supply: &SupplyModel, t_sym: f64) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = scheme.n();
    let k_len = words.len();
    let mut currents = Vec::with_capacity(k_len);
    for d in words {
        currents.push(driver_current(scheme, d, supply)?);
    }
    let l_over_t = supply.inductance_h / t_sym;
    let mut v = vec![vec![supply.nominal_vddq; k_len]; n];
    let droop = match supply.topology {
        SupplyTopology::Shared => {
            let mut dr = vec![0.0; k_len];
            for k in 1..k_len {
                dr[k] = l_over_t * (currents[k].total - currents[k - 1].total);
            }
            for vi in v.iter_mut() {
                for k in 1..k_len {
                    vi[k] -= dr[k - 1];
                }
            }
            vec![dr]
        }
        SupplyTopology::PerDriver => {
            let mut all = vec![vec![0.0; k_len]; n];
            for (i, di) in all.iter_mut().enumerate() {
                for k in 1..k_len {
                    di[k] = l_over_t * (currents[k].per_driver[i] - currents[k - 1].per_driver[i]);
                    v[i][k] -= di[k - 1];
                }
            }
            all
        }
    };
    Ok((v, droop))
}

/// Superposes pulse responses for the symbol stream `data` (m x K).
///
/// Wires sit at 0 V before the first symbol, so the first `memory_span`
/// symbols carry a start-up transient.
pub fn simulate_stream(
    scheme: &SignalingScheme,
    prs: &PulseResponseSet,
    data: &[Vec<i8>],
    supply: &SupplyModel,
) -> Result<StreamResult> {
    let n = scheme.n();
    let m = scheme.m();
    if prs.n() != n {
        return Err(Error::DimensionMismatch {
            context: "channel wire count",
            expected: n,
            actual: prs.n(),
        });
    }
    if data.len() != m {
        return Err(Error::DimensionMismatch {
            context: "data lanes",
            expected: m,
            actual: data.len(),
        });
    }
    supply.validate()?;
    if (supply.nominal_vddq - scheme.vddq()).abs() > 1e-12 * scheme.vddq() {
        return Err(Error::InvalidParameter(format!(
            "supply voltage {} differs from scheme vddq {}",
            supply.nominal_vddq,
            scheme.vddq()
        )));
    }
    let k_len = data[0].len();
    if data.iter().any(|l| l.len() != k_len) {
        return Err(Error::InvalidParameter("data lanes differ in length".into()));
    }
    if k_len < prs.memory_span {
        return Err(Error::StreamTooShort {
            got: k_len,
            need: prs.memory_span,
        });
    }
    let words: Vec<DataWord> = (0..k_len)
        .map(|k| DataWord::new(data.iter().map(|l| l[k]).collect()))
        .collect::<Result<_>>()?;
    let (vsup, droop) = supply_voltages(scheme, &words, supply, prs.symbol_period)?;
    let ns = prs.samples_per_symbol();
    let len = prs.len();
    let total = k_len * ns;
    let mut y = vec![vec![0.0; total]; n];
    for (k, d) in words.iter().enumerate() {
        let lv = scheme.level_fractions(d)?;
        let start = k * ns;
        let end = (start + len).min(total);
        for (i, a) in lv.iter().enumerate() {
            let amp = ratio_f64(a) * vsup[i][k];
            if amp == 0.0 {
                continue;
            }
            for (p, yp) in y.iter_mut().enumerate() {
                let e = &prs.e[i][p];
                for (t, out) in yp[start..end].iter_mut().enumerate() {
                    *out += amp * e[t];
                }
            }
        }
    }
    let r = scheme.r();
    let w = (0..m)
        .map(|j| {
            let thr = scheme.thresholds()[j];
            let s: Vec<f64> = (0..total)
                .map(|t| (0..n).map(|p| r.get(j, p) as f64 * y[p][t]).sum::<f64>() - thr)
                .collect();
            Waveform::new(prs.dt, s)
        })
        .collect::<Result<_>>()?;
    let y = y.into_iter().map(|s| Waveform::new(prs.dt, s)).collect::<Result<_>>()?;
    Ok(StreamResult { y, w, droop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signaling::fixtures::*;
    use crate::signaling::{baseline_scheme, BaselineKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const V: f64 = 0.4;

    #[test]
    fn prbs_periods() {
        for (mut l, p) in [(Lfsr::prbs7(1).unwrap(), 127usize), (Lfsr::prbs15(0x1234).unwrap(), 32767)] {
            let start = l.state;
            let mut k = 0;
            loop {
                l.next_bit();
                k += 1;
                if l.state == start {
                    break;
                }
            }
            assert_eq!(k, p);
        }
        assert!(matches!(Lfsr::prbs7(0), Err(Error::ZeroSeed)));
        assert!(matches!(Lfsr::prbs7(128), Err(Error::ZeroSeed)));
    }

    #[test]
    fn prbs7_balance() {
        let bits = gen_pattern(&PatternConfig::Prbs7 { seed: 0x5a, length: 127 }, 1).unwrap();
        let ones = bits[0].iter().filter(|b| **b == 1).count();
        assert_eq!(ones, 64);
    }

    #[test]
    fn pattern_kinds() {
        let ex = gen_pattern(&PatternConfig::Exhaustive { window: 3 }, 2).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].len(), 3 * 64);
        let mut windows: Vec<Vec<i8>> = (0..64)
            .map(|w| (0..3).flat_map(|k| [ex[0][w * 3 + k], ex[1][w * 3 + k]]).collect())
            .collect();
        windows.sort();
        windows.dedup();
        assert_eq!(windows.len(), 64);

        let bits = vec![vec![1, -1, 1], vec![-1, -1, 1]];
        assert_eq!(gen_pattern(&PatternConfig::Explicit { bits: bits.clone() }, 2).unwrap(), bits);
        assert!(gen_pattern(&PatternConfig::Explicit { bits }, 3).is_err());
    }

    #[test]
    fn driver_current_examples() {
        let s = SupplyModel::ideal(V);
        let d = baseline_scheme(BaselineKind::Differential, 2, V).unwrap();
        let a = driver_current(&d, &DataWord::all(1, 1), &s).unwrap().total;
        let b = driver_current(&d, &DataWord::all(1, -1), &s).unwrap().total;
        assert_eq!(a, b);

        let se = baseline_scheme(BaselineKind::SingleEnded, 2, V).unwrap();
        let a = driver_current(&se, &DataWord::new(vec![1, 1]).unwrap(), &s).unwrap().total;
        let b = driver_current(&se, &DataWord::new(vec![1, -1]).unwrap(), &s).unwrap().total;
        assert_ne!(a, b);
    }

    #[test]
    fn identity_channel_pulse() {
        let s = toy_corrected(V);
        let prs = PulseResponseSet::ideal(3, 32, 1e-10);
        // lane 1 pulses once, lane 0 holds steady at -1 after a +1
        let data = vec![vec![-1, -1, -1, -1], vec![-1, 1, -1, -1]];
        let out = simulate_stream(&s, &prs, &data, &SupplyModel::ideal(V)).unwrap();
        // output 0 recovers lane 1; row l1 norms of 2 cancel the integer gain of 2
        let w0 = &out.w[0].samples;
        assert!((w0[40] - 0.5 * V).abs() < 1e-12);
        assert!((w0[10] + 0.5 * V).abs() < 1e-12);
        assert!(out.w[0].samples[70].abs() > 0.0);
        assert!(out.droop[0].iter().all(|d| *d == 0.0));
    }

    #[test]
    fn superposition_and_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let ns = 32;
        let mut e = vec![vec![vec![0.0; 3 * ns]; n]; n];
        for row in e.iter_mut() {
            for w in row.iter_mut() {
                for v in w.iter_mut() {
                    *v = rng.gen_range(-0.2..0.6);
                }
            }
        }
        let prs = PulseResponseSet::new(1e-10 / ns as f64, 1e-10, 3, e).unwrap();
        let s = toy_corrected(V);
        let sup = SupplyModel::ideal(V);
        let data: Vec<Vec<i8>> = (0..2).map(|_| (0..12).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()).collect();
        let base = simulate_stream(&s, &prs, &data, &sup).unwrap();
        let shifted: Vec<Vec<i8>> = data.iter().map(|l| std::iter::once(-1).chain(l.iter().copied()).collect()).collect();
        let sh = simulate_stream(&s, &prs, &shifted, &sup).unwrap();
        // delayed by one symbol, plus the response to the leading symbol
        for p in 0..n {
            for t in 0..base.y[p].len() {
                let lead_only = lead_contribution(&s, &prs, t + ns);
                let want = base.y[p].samples[t] + lead_only[p];
                assert!((sh.y[p].samples[t + ns] - want).abs() < 1e-12);
            }
        }
    }

    fn lead_contribution(s: &SignalingScheme, prs: &PulseResponseSet, t: usize) -> Vec<f64> {
        let lv = s.encode_symbol(&DataWord::all(2, -1)).unwrap();
        (0..s.n())
            .map(|p| {
                (0..s.n())
                    .map(|i| if t < prs.len() { lv[i] * prs.e[i][p][t] } else { 0.0 })
                    .sum()
            })
            .collect()
    }
}
