//! Symbol-rate bisection, edge density and the design-space sweep.

use serde::{Deserialize, Serialize};

use super::{search_schemes, SearchConfig};
use crate::analysis::{cij_all, eye_all, worst_cij, worst_eye, CijMode, EyeMethod};
use crate::channel::{frequency_response, map_geometry, ChannelGeometry, ChannelSetup};
use crate::error::{Error, Result};
use crate::linksim::SupplyModel;
use crate::signaling::{SignalingScheme, FORMAT_VERSION};

pub const EDGE_DENSITY_NOTE: &str = "reconstructed formula: m*B / (ceil((n + clock_wires) / layers) * (S + W))";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyeMask {
    pub width_ui: f64,
    pub height_v: f64,
}

impl Default for EyeMask {
    fn default() -> Self {
        Self {
            width_ui: 0.7,
            height_v: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSearch {
    #[serde(default = "default_min_rate")]
    pub min_gsps: f64,
    #[serde(default = "default_max_rate")]
    pub max_gsps: f64,
    /// Relative width of the final bracket.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

fn default_min_rate() -> f64 {
    1.0
}
fn default_max_rate() -> f64 {
    32.0
}
fn default_resolution() -> f64 {
    0.01
}

impl Default for RateSearch {
    fn default() -> Self {
        Self {
            min_gsps: default_min_rate(),
            max_gsps: default_max_rate(),
            resolution: default_resolution(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Largest passing rate, 0 when the mask fails at the minimum rate.
    pub b_max_gsps: f64,
    /// Smallest rate above `b_max_gsps` known to fail, if any.
    pub fail_gsps: Option<f64>,
    pub ceiling_hit: bool,
    pub evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
}

/// Worst-output PDA eye of `scheme` at `rate_gsps`: `(width_ui, height_v)`.
fn eye_at(scheme: &SignalingScheme, setup: &ChannelSetup, rate_gsps: f64) -> Result<(f64, f64)> {
    let prs = setup.responses(rate_gsps)?;
    let e = eye_all(scheme, &prs, &EyeMethod::Pda, &SupplyModel::ideal(scheme.vddq()))?;
    let w = worst_eye(&e).expect("at least one output");
    Ok((w.width_ui, w.height_v))
}

/// Bisection on the symbol rate. The result passes the mask and the rate
/// `resolution` above it fails, unless the ceiling is reached.
pub fn max_symbol_rate(scheme: &SignalingScheme, setup: &ChannelSetup, mask: &EyeMask, search: &RateSearch) -> Result<RateReport> {
    if setup.geometry.n_wires != scheme.n() {
        return Err(Error::DimensionMismatch {
            context: "geometry wire count",
            expected: scheme.n(),
            actual: setup.geometry.n_wires,
        });
    }
    if !(search.min_gsps > 0.0 && search.max_gsps > search.min_gsps && search.resolution > 0.0) {
        return Err(Error::InvalidParameter("rate search needs 0 < min < max and a positive resolution".into()));
    }
    let mut evals = 0;
    let mut pass = |b: f64| -> Result<bool> {
        evals += 1;
        let (w, h) = eye_at(scheme, setup, b)?;
        Ok(w >= mask.width_ui && h >= mask.height_v)
    };
    if !pass(search.min_gsps)? {
        let (w, h) = eye_at(scheme, setup, search.min_gsps)?;
        return Ok(RateReport {
            b_max_gsps: 0.0,
            fail_gsps: Some(search.min_gsps),
            ceiling_hit: false,
            evaluations: evals + 1,
            diagnosis: Some(format!(
                "at {} GS/s the eye is {w:.3} UI x {h:.4} V against a mask of {} UI x {} V",
                search.min_gsps, mask.width_ui, mask.height_v
            )),
        });
    }
    if pass(search.max_gsps)? {
        return Ok(RateReport {
            b_max_gsps: search.max_gsps,
            fail_gsps: None,
            ceiling_hit: true,
            evaluations: evals,
            diagnosis: None,
        });
    }
    let step = 1.0 + search.resolution;
    let (mut lo, mut hi) = (search.min_gsps, search.max_gsps);
    loop {
        while hi > lo * step {
            let mid = (lo * hi).sqrt();
            if pass(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // certify the failure exactly one resolution step above
        let probe = lo * step;
        if probe >= search.max_gsps || !pass(probe)? {
            return Ok(RateReport {
                b_max_gsps: lo,
                fail_gsps: Some(probe.min(search.max_gsps)),
                ceiling_hit: false,
                evaluations: evals,
                diagnosis: None,
            });
        }
        lo = probe;
        hi = hi.max(lo * step * step).min(search.max_gsps);
    }
}

/// Aggregate bandwidth per edge length in Tb/s/mm.
pub fn edge_density(m: usize, rate_gsps: f64, n: usize, clock_wires: usize, layers: usize, pitch_um: f64) -> Result<f64> {
    if !(pitch_um > 0.0) || layers == 0 {
        return Err(Error::InvalidGeometry("edge density needs a positive pitch and at least one layer".into()));
    }
    let tracks = (n + clock_wires).div_ceil(layers) as f64;
    Ok(m as f64 * rate_gsps / (tracks * pitch_um))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMetrics {
    pub eye_width_ui: f64,
    pub eye_height_v: f64,
    pub cij_worst_s: f64,
    pub edge_density_tbps_per_mm: f64,
    pub il_db: f64,
    pub ratio_c1c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub geometry: ChannelGeometry,
    pub n: usize,
    pub m: usize,
    pub symbol_rate_gsps: f64,
    pub scheme: SignalingScheme,
    pub metrics: DesignMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub spacing_um: Vec<f64>,
    pub width_um: Vec<f64>,
    pub n_values: Vec<usize>,
    /// Rate at which candidate schemes are placed and ranked.
    #[serde(default = "default_rank_rate")]
    pub rank_rate_gsps: f64,
    #[serde(default)]
    pub rate: RateSearch,
    #[serde(default = "default_il_max")]
    pub il_max_db: f64,
    #[serde(default = "default_il_freq")]
    pub il_freq_hz: f64,
    #[serde(default = "default_ratio_min")]
    pub ratio_min: f64,
    #[serde(default = "default_ratio_max")]
    pub ratio_max: f64,
    #[serde(default = "default_clock")]
    pub clock_wires: usize,
    #[serde(default = "default_vddq")]
    pub vddq: f64,
}

fn default_rank_rate() -> f64 {
    10.0
}
fn default_il_max() -> f64 {
    10.0
}
fn default_il_freq() -> f64 {
    5e9
}
fn default_ratio_min() -> f64 {
    0.9
}
fn default_ratio_max() -> f64 {
    1.1
}
fn default_clock() -> usize {
    2
}
fn default_vddq() -> f64 {
    0.4
}

impl SearchSpace {
    /// Single geometry, every `n` in `n_values`.
    pub fn at(spacing_um: f64, width_um: f64, n_values: Vec<usize>) -> Self {
        Self {
            spacing_um: vec![spacing_um],
            width_um: vec![width_um],
            n_values,
            rank_rate_gsps: default_rank_rate(),
            rate: RateSearch::default(),
            il_max_db: default_il_max(),
            il_freq_hz: default_il_freq(),
            ratio_min: default_ratio_min(),
            ratio_max: default_ratio_max(),
            clock_wires: default_clock(),
            vddq: default_vddq(),
        }
    }
}

/// Why a region of the space produced no design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub spacing_um: f64,
    pub width_um: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub constraint: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub format_version: u32,
    pub edge_density_formula: String,
    pub best: Option<DesignPoint>,
    /// Best point per `n`, in increasing `n`.
    pub frontier: Vec<DesignPoint>,
    pub rejections: Vec<Rejection>,
}

fn worst_il(geom: &ChannelGeometry, f: f64, segments: usize) -> Result<f64> {
    let fr = frequency_response(geom, &map_geometry(geom), f, segments)?;
    Ok(fr.il_db.iter().copied().fold(f64::MIN, f64::max))
}

/// Sweeps geometry and wire count. Each `(S, W)` is filtered by the coupling
/// ratio and loss limits, schemes are searched per `n`, the rate is bisected
/// and the edge density evaluated. `template` supplies every search setting
/// except `n` and `m`.
pub fn optimize(
    space: &SearchSpace,
    mask: &EyeMask,
    template: &SearchConfig,
    setup: &ChannelSetup,
) -> Result<OptimizeReport> {
    if space.spacing_um.is_empty() || space.width_um.is_empty() || space.n_values.is_empty() {
        return Err(Error::EmptySpace("spacing, width and n lists must be nonempty".into()));
    }
    let mut ns = space.n_values.clone();
    ns.sort_unstable();
    ns.dedup();
    let n_probe = *ns.last().expect("nonempty");
    let mut rejections = Vec::new();
    let mut points: Vec<DesignPoint> = Vec::new();
    for &s in &space.spacing_um {
        for &w in &space.width_um {
            let mut geom = setup.geometry.clone();
            geom.spacing_um = s;
            geom.width_um = w;
            geom.validate()?;
            let par = map_geometry(&geom);
            let reject = |constraint: &str, n: Option<usize>, detail: String| Rejection {
                spacing_um: s,
                width_um: w,
                n,
                constraint: constraint.into(),
                detail,
            };
            if par.ratio_c1_c2 < space.ratio_min || par.ratio_c1_c2 > space.ratio_max {
                rejections.push(reject(
                    "coupling_ratio",
                    None,
                    format!("C1/C2 = {:.4} outside [{}, {}]", par.ratio_c1_c2, space.ratio_min, space.ratio_max),
                ));
                continue;
            }
            let il = worst_il(&geom.with_wires(n_probe), space.il_freq_hz, setup.segments)?;
            if il > space.il_max_db {
                rejections.push(reject(
                    "insertion_loss",
                    None,
                    format!("IL = {il:.3} dB at {:e} Hz exceeds {} dB", space.il_freq_hz, space.il_max_db),
                ));
                continue;
            }
            for &n in &ns {
                let local = ChannelSetup {
                    geometry: geom.with_wires(n),
                    ..setup.clone()
                };
                let cfg = SearchConfig {
                    n,
                    m: None,
                    ..template.clone()
                };
                if cfg.validate().is_err() {
                    rejections.push(reject("search", Some(n), "no data lane for this wire count".into()));
                    continue;
                }
                let prs = local.responses(space.rank_rate_gsps)?;
                let rep = search_schemes(&cfg, &prs, space.vddq)?;
                let Some(best) = rep.ranked.first() else {
                    rejections.push(reject(
                        "decodability",
                        Some(n),
                        format!("{} matrices assembled, none with a valid decoder", rep.assembled),
                    ));
                    continue;
                };
                let scheme = best.scheme.clone();
                let rate = max_symbol_rate(&scheme, &local, mask, &space.rate)?;
                if rate.b_max_gsps == 0.0 {
                    rejections.push(reject("eye_mask", Some(n), rate.diagnosis.unwrap_or_default()));
                    continue;
                }
                let b = rate.b_max_gsps;
                let prs_b = local.responses(b)?;
                let eyes = eye_all(&scheme, &prs_b, &EyeMethod::Pda, &SupplyModel::ideal(space.vddq))?;
                let e = worst_eye(&eyes).expect("at least one output");
                let cij = match cij_all(&scheme, &prs_b, CijMode::Exact { budget: template.cij_budget }) {
                    Ok(r) => r,
                    Err(Error::BudgetExceeded { .. }) => cij_all(&scheme, &prs_b, CijMode::Envelope)?,
                    Err(err) => return Err(err),
                };
                let ed = edge_density(scheme.m(), b, n, space.clock_wires, geom.layers, geom.pitch_um())?;
                points.push(DesignPoint {
                    geometry: local.geometry.clone(),
                    n,
                    m: scheme.m(),
                    symbol_rate_gsps: b,
                    metrics: DesignMetrics {
                        eye_width_ui: e.width_ui,
                        eye_height_v: e.height_v,
                        cij_worst_s: worst_cij(&cij).expect("at least one output").cij_s,
                        edge_density_tbps_per_mm: ed,
                        il_db: il,
                        ratio_c1c2: par.ratio_c1_c2,
                    },
                    scheme,
                });
            }
        }
    }
    let mut frontier: Vec<DesignPoint> = Vec::new();
    for &n in &ns {
        let best = points
            .iter()
            .filter(|p| p.n == n)
            .fold(None, |acc: Option<&DesignPoint>, p| match acc {
                Some(a) if a.metrics.edge_density_tbps_per_mm >= p.metrics.edge_density_tbps_per_mm => Some(a),
                _ => Some(p),
            });
        if let Some(p) = best {
            frontier.push(p.clone());
        }
    }
    let best = frontier.iter().fold(None, |acc: Option<&DesignPoint>, p| match acc {
        Some(a) if a.metrics.edge_density_tbps_per_mm >= p.metrics.edge_density_tbps_per_mm => Some(a),
        _ => Some(p),
    });
    Ok(OptimizeReport {
        format_version: FORMAT_VERSION,
        edge_density_formula: EDGE_DENSITY_NOTE.into(),
        best: best.cloned(),
        frontier,
        rejections,
    })
}

/// Frontier table with header `n,B_max,ED,cij_worst,eye_w,eye_h`.
pub fn frontier_csv(frontier: &[DesignPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "B_max", "ED", "cij_worst", "eye_w", "eye_h"])?;
    for p in frontier {
        w.write_record([
            p.n.to_string(),
            format!("{:e}", p.symbol_rate_gsps),
            format!("{:e}", p.metrics.edge_density_tbps_per_mm),
            format!("{:e}", p.metrics.cij_worst_s),
            format!("{:e}", p.metrics.eye_width_ui),
            format!("{:e}", p.metrics.eye_height_v),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_density_reference_figure() {
        let ed = edge_density(7, 10.0, 8, 2, 2, 0.486).unwrap();
        assert!((ed - 28.806).abs() < 1e-3);
        assert!((ed / 8.0 - 3.6).abs() / 3.6 < 0.02);
        let half = edge_density(7, 10.0, 8, 2, 2, 0.972).unwrap();
        assert!((half * 2.0 - ed).abs() < 1e-12);
        let se = edge_density(8, 10.0, 8, 2, 2, 0.486).unwrap();
        assert!((ed / se - 7.0 / 8.0).abs() < 1e-12);
        assert!(edge_density(7, 10.0, 8, 2, 2, 0.0).is_err());
    }

    #[test]
    fn ideal_channel_hits_ceiling() {
        // no coupling, negligible loss: only the ceiling bounds the rate
        let mut g = ChannelGeometry::reference().with_wires(2);
        g.length_mm = 1e-3;
        g.calibration.load_cap_ff = 1e-3;
        let setup = ChannelSetup::bare(g);
        let s = crate::signaling::baseline_scheme(crate::signaling::BaselineKind::Differential, 2, 0.4).unwrap();
        let r = max_symbol_rate(&s, &setup, &EyeMask::default(), &RateSearch { min_gsps: 1.0, max_gsps: 8.0, resolution: 0.01 }).unwrap();
        assert!(r.ceiling_hit);
        assert_eq!(r.b_max_gsps, 8.0);
    }

    #[test]
    fn bisection_certificate() {
        let setup = ChannelSetup::reference().with_wires(2);
        let s = crate::signaling::baseline_scheme(crate::signaling::BaselineKind::Differential, 2, 0.4).unwrap();
        let mask = EyeMask::default();
        let r = max_symbol_rate(&s, &setup, &mask, &RateSearch::default()).unwrap();
        assert!(r.b_max_gsps > 0.0 && !r.ceiling_hit);
        let (w, h) = eye_at(&s, &setup, r.b_max_gsps).unwrap();
        assert!(w >= mask.width_ui && h >= mask.height_v);
        let (w, h) = eye_at(&s, &setup, r.b_max_gsps * 1.01).unwrap();
        assert!(w < mask.width_ui || h < mask.height_v);
    }

    #[test]
    fn impossible_mask_reports_every_region() {
        let mut space = SearchSpace::at(0.126, 0.36, vec![2]);
        space.spacing_um.push(0.2);
        let mask = EyeMask {
            width_ui: 0.7,
            height_v: 10.0,
        };
        let rep = optimize(&space, &mask, &SearchConfig::new(2), &ChannelSetup::reference()).unwrap();
        assert!(rep.best.is_none());
        let kinds: Vec<&str> = rep.rejections.iter().map(|r| r.constraint.as_str()).collect();
        assert_eq!(kinds, vec!["eye_mask", "coupling_ratio"]);
    }
}
