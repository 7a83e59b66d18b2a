//! Side-by-side metrics for several schemes.

use serde::{Deserialize, Serialize};

use super::cij::{cij_all, worst_cij, CijMode};
use super::eye::{eye_all, worst_eye, EyeMethod};
use crate::channel::PulseResponseSet;
use crate::error::{Error, Result};
use crate::linksim::{driver_current, PatternConfig, SupplyModel};
use crate::signaling::{DataWord, SignalingScheme, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub pin_efficiency: f64,
    pub cij_worst_s: f64,
    pub cij_mode: String,
    pub eye_width_ui: f64,
    pub eye_height_v: f64,
    pub p2p_jitter_s: f64,
    /// Largest symbol-to-symbol supply droop over all data transitions.
    pub ssn_droop_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format_version: u32,
    pub rows: Vec<ComparisonRow>,
}

/// Worst droop `L/T * (I_max - I_min)` over every pair of data words.
pub fn worst_droop(scheme: &SignalingScheme, supply: &SupplyModel, symbol_period: f64) -> Result<f64> {
    let m = scheme.m();
    if m > 24 {
        return Err(Error::BudgetExceeded {
            required: 1u128 << m,
            budget: 1 << 24,
        });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for idx in 0..(1u64 << m) {
        let i = driver_current(scheme, &DataWord::from_index(m, idx), supply)?.total;
        lo = lo.min(i);
        hi = hi.max(i);
    }
    Ok(supply.inductance_h / symbol_period * (hi - lo))
}

/// Evaluates each `(scheme, channel)` pair. PDA eyes are used when the supply
/// current is data independent, a PRBS7 stream otherwise.
pub fn compare_schemes(
    entries: &[(SignalingScheme, PulseResponseSet)],
    supply: &SupplyModel,
    cij_mode: CijMode,
) -> Result<ComparisonReport> {
    let mut rows = Vec::with_capacity(entries.len());
    for (idx, (s, prs)) in entries.iter().enumerate() {
        let supply = SupplyModel {
            nominal_vddq: s.vddq(),
            ..supply.clone()
        };
        let droop = worst_droop(s, &supply, prs.symbol_period)?;
        let method = if droop == 0.0 {
            EyeMethod::Pda
        } else {
            EyeMethod::Stream {
                pattern: PatternConfig::Prbs7 { seed: 1, length: 4 * 127 },
            }
        };
        let eyes = eye_all(s, prs, &method, &supply)?;
        let e = worst_eye(&eyes).expect("scheme has at least one output");
        let (cij, mode) = match cij_all(s, prs, cij_mode) {
            Ok(r) => (r, cij_mode),
            Err(Error::BudgetExceeded { .. }) => (cij_all(s, prs, CijMode::Envelope)?, CijMode::Envelope),
            Err(err) => return Err(err),
        };
        let c = worst_cij(&cij).expect("scheme has at least one output");
        rows.push(ComparisonRow {
            name: s.name.clone().unwrap_or_else(|| format!("scheme{idx}")),
            n: s.n(),
            m: s.m(),
            pin_efficiency: s.pin_efficiency(),
            cij_worst_s: c.cij_s,
            cij_mode: match mode {
                CijMode::Exact { .. } => "exact".into(),
                CijMode::Envelope => "envelope".into(),
            },
            eye_width_ui: e.width_ui,
            eye_height_v: e.height_v,
            p2p_jitter_s: e.p2p_jitter_s,
            ssn_droop_v: droop,
        });
    }
    Ok(ComparisonReport {
        format_version: FORMAT_VERSION,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signaling::fixtures::three_over_four;
    use crate::signaling::{baseline_scheme, BaselineKind};

    #[test]
    fn empty_list() {
        let r = compare_schemes(&[], &SupplyModel::ideal(0.4), CijMode::Envelope).unwrap();
        assert!(r.rows.is_empty());
    }

    #[test]
    fn pin_efficiencies_and_droop() {
        let v = 0.4;
        let t = 1e-10;
        let entries = vec![
            (baseline_scheme(BaselineKind::SingleEnded, 4, v).unwrap(), PulseResponseSet::ideal(4, 32, t)),
            (baseline_scheme(BaselineKind::Differential, 4, v).unwrap(), PulseResponseSet::ideal(4, 32, t)),
            (three_over_four(v), PulseResponseSet::ideal(4, 32, t)),
        ];
        let supply = SupplyModel::with_inductance(v, 5e-9);
        let r = compare_schemes(&entries, &supply, CijMode::Exact { budget: 1 << 20 }).unwrap();
        let pe: Vec<f64> = r.rows.iter().map(|x| x.pin_efficiency).collect();
        assert_eq!(pe, vec![1.0, 0.5, 0.75]);
        assert!(r.rows[0].ssn_droop_v > 0.0);
        assert_eq!(r.rows[1].ssn_droop_v, 0.0);
    }
}
