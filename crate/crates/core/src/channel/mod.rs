//! Coupled on-chip wire bundles: geometry, parasitics, ladder network and
//! sampled single-bit pulse responses.

mod banded;
mod ctle;
mod io;
mod ladder;
mod setup;
mod transient;

pub use banded::BandedSpd;
pub use ctle::Ctle;
pub use io::{export_responses, import_responses, ResponseMeta};
pub use ladder::Ladder;
pub use setup::ChannelSetup;
pub use transient::{pulse_responses, step_responses, TransientConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REFERENCE_JSON: &str = include_str!("../../data/reference_channel.json");

/// Constants of the parallel-plate plus fringe parasitic model.
///
/// Per-length values in fF/mm and ohm/mm with dimensions in um:
/// `r = sheet / W * 1000`, `c1 = k1 / S`, `c2 = k2 * W`, `cg = kg * W + fringe`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub sheet_res_ohm_sq: f64,
    pub k1_ff_um_per_mm: f64,
    pub k2_ff_per_um_mm: f64,
    pub kg_ff_per_um_mm: f64,
    pub fringe_ff_per_mm: f64,
    pub drv_resistance_ohm: f64,
    pub load_cap_ff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelGeometry {
    pub spacing_um: f64,
    pub width_um: f64,
    pub length_mm: f64,
    pub n_wires: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default)]
    pub calibration: Calibration,
}

fn default_layers() -> usize {
    2
}

/// Reference bundle and its calibration as shipped in the default config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceFile {
    geometry: ReferenceGeometry,
    calibration: Calibration,
    ctle: Ctle,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceGeometry {
    spacing_um: f64,
    width_um: f64,
    length_mm: f64,
    n_wires: usize,
    layers: usize,
}

fn reference_file() -> ReferenceFile {
    serde_json::from_str(REFERENCE_JSON).expect("bundled reference channel config parses")
}

impl Default for Calibration {
    fn default() -> Self {
        reference_file().calibration
    }
}

impl ChannelGeometry {
    /// The calibrated reference bundle.
    pub fn reference() -> Self {
        let f = reference_file();
        Self {
            spacing_um: f.geometry.spacing_um,
            width_um: f.geometry.width_um,
            length_mm: f.geometry.length_mm,
            n_wires: f.geometry.n_wires,
            layers: f.geometry.layers,
            calibration: f.calibration,
        }
    }

    pub fn with_wires(&self, n: usize) -> Self {
        Self {
            n_wires: n,
            ..self.clone()
        }
    }

    pub fn pitch_um(&self) -> f64 {
        self.spacing_um + self.width_um
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.spacing_um) || !pos(self.width_um) || !pos(self.length_mm) {
            return Err(Error::InvalidGeometry(format!(
                "S, W, L must be positive (S={}, W={}, L={})",
                self.spacing_um, self.width_um, self.length_mm
            )));
        }
        if self.n_wires == 0 {
            return Err(Error::InvalidGeometry("at least one wire".into()));
        }
        if self.layers != 1 && self.layers != 2 {
            return Err(Error::InvalidGeometry(format!("layers must be 1 or 2, got {}", self.layers)));
        }
        let c = &self.calibration;
        let vals = [
            c.sheet_res_ohm_sq,
            c.k1_ff_um_per_mm,
            c.k2_ff_per_um_mm,
            c.kg_ff_per_um_mm,
            c.fringe_ff_per_mm,
            c.drv_resistance_ohm,
            c.load_cap_ff,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGeometry("calibration constants must be nonnegative".into()));
        }
        if c.drv_resistance_ohm == 0.0 {
            return Err(Error::InvalidGeometry("driver resistance must be positive".into()));
        }
        Ok(())
    }
}

/// Per-length electrical parameters of the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParasiticSet {
    pub r_per_len: f64,
    pub cg_per_len: f64,
    pub c1_per_len: f64,
    pub c2_per_len: f64,
    pub drv_resistance: f64,
    pub load_cap: f64,
    pub ratio_c1_c2: f64,
}

pub fn map_geometry(geom: &ChannelGeometry) -> ParasiticSet {
    let c = &geom.calibration;
    let c1 = c.k1_ff_um_per_mm / geom.spacing_um;
    let c2 = c.k2_ff_per_um_mm * geom.width_um;
    ParasiticSet {
        r_per_len: c.sheet_res_ohm_sq * 1000.0 / geom.width_um,
        cg_per_len: c.kg_ff_per_um_mm * geom.width_um + c.fringe_ff_per_mm,
        c1_per_len: c1,
        c2_per_len: c2,
        drv_resistance: c.drv_resistance_ohm,
        load_cap: c.load_cap_ff,
        ratio_c1_c2: if c2 > 0.0 { c1 / c2 } else { f64::INFINITY },
    }
}

/// Coupling capacitance per length between wires `a` and `b` (fF/mm).
pub fn coupling(par: &ParasiticSet, layers: usize, a: usize, b: usize) -> f64 {
    let d = a.abs_diff(b);
    match (layers, d) {
        (1, 1) => par.c1_per_len,
        (2, 1) => par.c2_per_len,
        (2, 2) => par.c1_per_len,
        _ => 0.0,
    }
}

/// Sampled single-bit pulse responses `e[i][j]`: far end of wire `j` for a
/// unit pulse on wire `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseResponseSet {
    pub dt: f64,
    pub symbol_period: f64,
    pub memory_span: usize,
    pub e: Vec<Vec<Vec<f64>>>,
}

impl PulseResponseSet {
    pub fn new(dt: f64, symbol_period: f64, memory_span: usize, e: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let prs = Self {
            dt,
            symbol_period,
            memory_span,
            e,
        };
        prs.validate()?;
        Ok(prs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::MalformedResponse(format!("dt must be positive, got {}", self.dt)));
        }
        samples_per_symbol(self.dt, self.symbol_period)?;
        let n = self.e.len();
        if n == 0 {
            return Err(Error::MalformedResponse("no wires".into()));
        }
        let len = self.e[0].first().map_or(0, |v| v.len());
        for row in &self.e {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "response matrix",
                    expected: n,
                    actual: row.len(),
                });
            }
            for w in row {
                if w.len() != len {
                    return Err(Error::DimensionMismatch {
                        context: "response length",
                        expected: len,
                        actual: w.len(),
                    });
                }
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::MalformedResponse("non-finite sample".into()));
                }
            }
        }
        if self.memory_span == 0 {
            return Err(Error::MalformedResponse("memory span must be at least one symbol".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn len(&self) -> usize {
        self.e[0][0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples_per_symbol(&self) -> usize {
        samples_per_symbol(self.dt, self.symbol_period).expect("validated")
    }

    /// Ideal crosstalk-free channel: each wire passes a rectangular pulse.
    pub fn ideal(n: usize, samples_per_symbol: usize, symbol_period: f64) -> Self {
        let len = samples_per_symbol;
        let mut e = vec![vec![vec![0.0; len]; n]; n];
        for (i, row) in e.iter_mut().enumerate() {
            row[i].iter_mut().for_each(|v| *v = 1.0);
        }
        Self {
            dt: symbol_period / samples_per_symbol as f64,
            symbol_period,
            memory_span: 1,
            e,
        }
    }

    /// Same responses with every off-diagonal waveform scaled by `alpha`.
    pub fn scale_coupling(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for (i, row) in out.e.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                if i != j {
                    w.iter_mut().for_each(|v| *v *= alpha);
                }
            }
        }
        out
    }

    /// Restricts to a subset of wires, in the given order.
    pub fn subset(&self, wires: &[usize]) -> Self {
        let e = wires
            .iter()
            .map(|&i| wires.iter().map(|&j| self.e[i][j].clone()).collect())
            .collect();
        Self {
            e,
            ..self.clone()
        }
    }

    pub fn peak(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .flat_map(|w| w.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

pub(crate) fn samples_per_symbol(dt: f64, t: f64) -> Result<usize> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("symbol period must be positive, got {t}")));
    }
    let ratio = t / dt;
    let ns = ratio.round();
    if ns < 1.0 || (ratio - ns).abs() > 1e-6 * ratio {
        return Err(Error::InvalidParameter(format!(
            "symbol period {t:e} s is not an integer multiple of dt {dt:e} s"
        )));
    }
    Ok(ns as usize)
}

/// Insertion loss and far-end crosstalk of the ladder at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub freq_hz: f64,
    /// `il_db[i]`: loss from the source of wire `i` to its far end, positive dB.
    pub il_db: Vec<f64>,
    /// `fext_db[i][j]`: source of wire `i` to far end of wire `j`, dB. The
    /// diagonal holds the through gain, `-il_db[i]`.
    pub fext_db: Vec<Vec<f64>>,
}

pub const DB_FLOOR: f64 = -200.0;

pub fn frequency_response(geom: &ChannelGeometry, par: &ParasiticSet, f: f64, segments: usize) -> Result<FrequencyResponse> {
    if !(f >= 0.0 && f.is_finite()) {
        return Err(Error::InvalidParameter(format!("frequency must be nonnegative, got {f}")));
    }
    geom.validate()?;
    let ladder = Ladder::build(geom, par, segments)?;
    let h = ladder.transfer(f)?;
    let n = geom.n_wires;
    let db = |x: f64| if x > 0.0 { (20.0 * x.log10()).max(DB_FLOOR) } else { DB_FLOOR };
    let il_db = (0..n).map(|i| -db(h[i][i])).collect();
    let fext_db = (0..n)
        .map(|i| (0..n).map(|j| db(h[i][j])).collect())
        .collect();
    Ok(FrequencyResponse {
        freq_hz: f,
        il_db,
        fext_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_ratio_is_unity() {
        let g = ChannelGeometry::reference();
        let p = map_geometry(&g);
        assert!((p.ratio_c1_c2 - 1.0).abs() < 0.02, "ratio {}", p.ratio_c1_c2);
    }

    #[test]
    fn ratio_limits() {
        let mut g = ChannelGeometry::reference();
        g.spacing_um = 1e9;
        assert!(map_geometry(&g).ratio_c1_c2 < 1e-6);
        let g0 = ChannelGeometry::reference();
        let mut g2 = g0.clone();
        g2.length_mm *= 2.0;
        assert_eq!(map_geometry(&g0).ratio_c1_c2, map_geometry(&g2).ratio_c1_c2);
    }

    #[test]
    fn geometry_validation() {
        let mut g = ChannelGeometry::reference();
        g.layers = 3;
        assert!(g.validate().is_err());
        g.layers = 2;
        g.spacing_um = 0.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn dc_has_no_loss() {
        let g = ChannelGeometry::reference();
        let fr = frequency_response(&g, &map_geometry(&g), 0.0, 16).unwrap();
        for il in &fr.il_db {
            assert!(il.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_coupling_hits_floor() {
        let mut g = ChannelGeometry::reference().with_wires(3);
        g.calibration.k1_ff_um_per_mm = 0.0;
        g.calibration.k2_ff_per_um_mm = 0.0;
        let fr = frequency_response(&g, &map_geometry(&g), 5e9, 16).unwrap();
        assert_eq!(fr.fext_db[0][1], DB_FLOOR);
    }

    #[test]
    fn ideal_fixture() {
        let p = PulseResponseSet::ideal(2, 32, 1e-10);
        assert_eq!(p.samples_per_symbol(), 32);
        assert!(p.validate().is_ok());
        assert_eq!(p.e[0][1], vec![0.0; 32]);
    }

    #[test]
    fn non_integer_period_rejected() {
        assert!(samples_per_symbol(3e-12, 1e-10).is_err());
        assert_eq!(samples_per_symbol(1e-10 / 64.0, 1e-10).unwrap(), 64);
    }
}
