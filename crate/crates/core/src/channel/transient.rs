//! Time-domain integration of the ladder and pulse-response extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ladder::Ladder;
use super::{samples_per_symbol, ChannelGeometry, ParasiticSet, PulseResponseSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientConfig {
    pub symbol_period_s: f64,
    #[serde(default = "default_sps")]
    pub samples_per_symbol: usize,
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// Simulated length in symbols; responses must decay inside it.
    #[serde(default = "default_window")]
    pub window_symbols: usize,
    /// Truncation floor relative to the largest response sample.
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_sps() -> usize {
    64
}
fn default_segments() -> usize {
    32
}
fn default_window() -> usize {
    24
}
fn default_floor() -> f64 {
    1e-3
}

impl TransientConfig {
    pub fn new(symbol_period_s: f64) -> Self {
        Self {
            symbol_period_s,
            samples_per_symbol: default_sps(),
            segments: default_segments(),
            window_symbols: default_window(),
            floor: default_floor(),
        }
    }

    pub fn at_rate_gsps(rate: f64) -> Self {
        Self::new(1e-9 / rate)
    }

    pub fn dt(&self) -> f64 {
        self.symbol_period_s / self.samples_per_symbol as f64
    }
}

/// Far-end step responses `s[i][j][k]` at `t = k * dt` for a unit step on wire `i`.
pub fn step_responses(ladder: &Ladder, dt: f64, steps: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = ladder.n_wires;
    let nodes = ladder.nodes();
    // two backward-Euler half steps, then trapezoidal
    let mut a_be = ladder.c.combine(2.0 / dt, &ladder.g, 1.0);
    a_be.factor()?;
    let mut a_tr = ladder.c.combine(1.0 / dt, &ladder.g, 0.5);
    a_tr.factor()?;
    let rhs_tr = ladder.c.combine(1.0 / dt, &ladder.g, -0.5);
    let c_be = ladder.c.combine(2.0 / dt, &ladder.g, 0.0);

    let out: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut res = vec![vec![0.0; steps + 1]; n];
            let mut v = vec![0.0; nodes];
            let mut tmp = vec![0.0; nodes];
            let src = ladder.near(i);
            let bsrc = ladder.drv_conductance;
            let mut k = 1;
            let record = |k: usize, v: &[f64], res: &mut Vec<Vec<f64>>| {
                for (j, r) in res.iter_mut().enumerate() {
                    r[k] = v[ladder.far(j)];
                }
            };
            if steps >= 1 {
                for _ in 0..2 {
                    c_be.mul_vec(&v, &mut tmp);
                    tmp[src] += bsrc;
                    a_be.solve_in_place(&mut tmp);
                    std::mem::swap(&mut v, &mut tmp);
                }
                record(1, &v, &mut res);
                k = 2;
            }
            while k <= steps {
                rhs_tr.mul_vec(&v, &mut tmp);
                tmp[src] += bsrc;
                a_tr.solve_in_place(&mut tmp);
                std::mem::swap(&mut v, &mut tmp);
                record(k, &v, &mut res);
                k += 1;
            }
            res
        })
        .collect();
    Ok(out)
}

/// Smallest whole number of symbols after which every sample stays below
/// `floor * peak`.
pub(crate) fn certify_span(e: &[Vec<Vec<f64>>], ns: usize, floor: f64) -> (usize, f64) {
    let peak = e.iter().flatten().flat_map(|w| w.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let thr = floor * peak;
    let mut last = 0;
    for w in e.iter().flatten() {
        if let Some(p) = w.iter().rposition(|v| v.abs() >= thr) {
            last = last.max(p);
        }
    }
    ((last / ns) + 1, thr)
}

pub fn pulse_responses(geom: &ChannelGeometry, par: &ParasiticSet, cfg: &TransientConfig) -> Result<PulseResponseSet> {
    if cfg.segments < 8 {
        return Err(Error::InvalidParameter(format!("at least 8 segments required, got {}", cfg.segments)));
    }
    if cfg.samples_per_symbol < 32 {
        return Err(Error::InvalidParameter(format!(
            "at least 32 samples per symbol required, got {}",
            cfg.samples_per_symbol
        )));
    }
    if cfg.window_symbols < 2 {
        return Err(Error::InvalidParameter("window must cover at least two symbols".into()));
    }
    let dt = cfg.dt();
    let ns = samples_per_symbol(dt, cfg.symbol_period_s)?;
    let ladder = Ladder::build(geom, par, cfg.segments)?;
    let steps = cfg.window_symbols * ns;
    let s = step_responses(&ladder, dt, steps)?;
    let e: Vec<Vec<Vec<f64>>> = s
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| (0..steps).map(|k| w[k] - if k >= ns { w[k - ns] } else { 0.0 }).collect())
                .collect()
        })
        .collect();
    finish(e, dt, cfg.symbol_period_s, ns, cfg.window_symbols, cfg.floor)
}

pub(crate) fn finish(
    mut e: Vec<Vec<Vec<f64>>>,
    dt: f64,
    symbol_period: f64,
    ns: usize,
    window: usize,
    floor: f64,
) -> Result<PulseResponseSet> {
    let (span, thr) = certify_span(&e, ns, floor);
    if span >= window {
        let tail = e
            .iter()
            .flatten()
            .map(|w| w.last().copied().unwrap_or(0.0).abs())
            .fold(0.0, f64::max);
        return Err(Error::ExtendWindow {
            window,
            level: tail,
            floor: thr,
        });
    }
    for w in e.iter_mut().flatten() {
        w.truncate(span * ns);
    }
    PulseResponseSet::new(dt, symbol_period, span, e)
}

#[cfg(test)]
mod tests {
    use super::super::map_geometry;
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    /// Exact step response through the modal decomposition of the ladder.
    fn modal_step(ladder: &Ladder, i: usize, times: &[f64]) -> Vec<Vec<f64>> {
        let nn = ladder.nodes();
        let c = DMatrix::from_fn(nn, nn, |a, b| ladder.c.get(a, b));
        let g = DMatrix::from_fn(nn, nn, |a, b| ladder.g.get(a, b));
        // C = U D U^T, C^{-1/2} G C^{-1/2} = Q L Q^T
        let ce = SymmetricEigen::new(c);
        let cinvh = &ce.eigenvectors
            * DMatrix::from_diagonal(&ce.eigenvalues.map(|x| 1.0 / x.sqrt()))
            * ce.eigenvectors.transpose();
        let m = &cinvh * g * &cinvh;
        let me = SymmetricEigen::new(m);
        let mut b = nalgebra::DVector::zeros(nn);
        b[ladder.near(i)] = ladder.drv_conductance;
        // x = C^{1/2} v,  dx/dt = -M x + C^{-1/2} b
        let bt = me.eigenvectors.transpose() * (&cinvh * b);
        let mut out = vec![vec![0.0; times.len()]; ladder.n_wires];
        for (ti, &t) in times.iter().enumerate() {
            let z = nalgebra::DVector::from_fn(nn, |k, _| {
                let l = me.eigenvalues[k];
                bt[k] * (1.0 - (-l * t).exp()) / l
            });
            let v = &cinvh * (&me.eigenvectors * z);
            for (j, o) in out.iter_mut().enumerate() {
                o[ti] = v[ladder.far(j)];
            }
        }
        out
    }

    fn small_geom(n: usize, layers: usize) -> ChannelGeometry {
        let mut g = ChannelGeometry::reference().with_wires(n);
        g.layers = layers;
        g
    }

    #[test]
    fn matches_modal_solution() {
        let g = small_geom(3, 2);
        let p = map_geometry(&g);
        let l = Ladder::build(&g, &p, 8).unwrap();
        let dt = 1e-10 / 64.0;
        let steps = 640;
        let s = step_responses(&l, dt, steps).unwrap();
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        for i in 0..3 {
            let exact = modal_step(&l, i, &times);
            for j in 0..3 {
                for k in (0..=steps).step_by(8) {
                    let err = (s[i][j][k] - exact[j][k]).abs();
                    assert!(err < 5e-3, "i={i} j={j} k={k} err={err}");
                }
            }
        }
    }

    #[test]
    fn single_wire_is_lowpass() {
        let g = small_geom(1, 1);
        let prs = pulse_responses(&g, &map_geometry(&g), &TransientConfig::at_rate_gsps(5.0)).unwrap();
        let e = &prs.e[0][0];
        assert!(e.iter().all(|v| *v >= -1e-9 && *v <= 1.0 + 1e-9));
        let peak = e.iter().cloned().fold(0.0, f64::max);
        assert!(peak > 0.3 && peak < 1.0);
        assert_eq!(e[0], 0.0);
    }

    #[test]
    fn symmetric_three_wire() {
        let g = small_geom(3, 1);
        let prs = pulse_responses(&g, &map_geometry(&g), &TransientConfig::at_rate_gsps(10.0)).unwrap();
        let peak = prs.peak();
        for k in 0..prs.len() {
            assert!((prs.e[0][1][k] - prs.e[2][1][k]).abs() < 1e-9 * peak);
        }
    }

    #[test]
    fn too_short_window_reported() {
        let g = small_geom(2, 2);
        let mut cfg = TransientConfig::at_rate_gsps(40.0);
        cfg.window_symbols = 2;
        assert!(matches!(
            pulse_responses(&g, &map_geometry(&g), &cfg),
            Err(Error::ExtendWindow { window: 2, .. })
        ));
    }

    #[test]
    fn preconditions() {
        let g = small_geom(2, 2);
        let mut cfg = TransientConfig::at_rate_gsps(10.0);
        cfg.segments = 4;
        assert!(pulse_responses(&g, &map_geometry(&g), &cfg).is_err());
        let mut cfg = TransientConfig::at_rate_gsps(10.0);
        cfg.samples_per_symbol = 16;
        assert!(pulse_responses(&g, &map_geometry(&g), &cfg).is_err());
    }
}
