//! Segmented RC ladder of an n-wire coupled bundle.
//!
//! Each wire has `N + 1` nodes. Node 0 is tied to its driver through the
//! driver resistance, node `N` is the unterminated far end with a load cap.
//! Nodes are numbered segment-major (`k * n + wire`) so the system is banded.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::banded::BandedSpd;
use super::{coupling, ChannelGeometry, ParasiticSet};
use crate::error::{Error, Result};

const FF: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct Ladder {
    pub n_wires: usize,
    pub segments: usize,
    /// Conductance matrix including the driver conductances (S).
    pub g: BandedSpd,
    /// Capacitance matrix (F).
    pub c: BandedSpd,
    pub drv_conductance: f64,
}

impl Ladder {
    pub fn build(geom: &ChannelGeometry, par: &ParasiticSet, segments: usize) -> Result<Self> {
        geom.validate()?;
        if segments == 0 {
            return Err(Error::InvalidParameter("ladder needs at least one segment".into()));
        }
        let n = geom.n_wires;
        let nodes = n * (segments + 1);
        let bw = n.max(1);
        let mut g = BandedSpd::zeros(nodes, bw);
        let mut c = BandedSpd::zeros(nodes, bw);
        let seg_len = geom.length_mm / segments as f64;
        let gs = 1.0 / (par.r_per_len * seg_len);
        let gd = 1.0 / par.drv_resistance;
        if !gs.is_finite() {
            return Err(Error::InvalidGeometry("wire resistance must be positive".into()));
        }
        let node = |k: usize, w: usize| k * n + w;
        for w in 0..n {
            g.add(node(0, w), node(0, w), gd);
            for k in 0..segments {
                let (a, b) = (node(k, w), node(k + 1, w));
                g.add(a, a, gs);
                g.add(b, b, gs);
                g.add(b, a, -gs);
            }
            c.add(node(segments, w), node(segments, w), par.load_cap * FF);
        }
        for k in 0..=segments {
            let frac = if k == 0 || k == segments { 0.5 } else { 1.0 };
            let len = seg_len * frac;
            for w in 0..n {
                let a = node(k, w);
                c.add(a, a, par.cg_per_len * len * FF);
                for v in w + 1..(w + 3).min(n) {
                    let cc = coupling(par, geom.layers, w, v) * len * FF;
                    if cc == 0.0 {
                        continue;
                    }
                    let b = node(k, v);
                    c.add(a, a, cc);
                    c.add(b, b, cc);
                    c.add(b, a, -cc);
                }
            }
        }
        Ok(Self {
            n_wires: n,
            segments,
            g,
            c,
            drv_conductance: gd,
        })
    }

    pub fn nodes(&self) -> usize {
        self.g.dim()
    }

    pub fn near(&self, wire: usize) -> usize {
        wire
    }

    pub fn far(&self, wire: usize) -> usize {
        self.segments * self.n_wires + wire
    }

    /// `|V_far,j / V_src,i|` for every driven wire `i` and observed wire `j`.
    pub fn transfer(&self, f: f64) -> Result<Vec<Vec<f64>>> {
        let nodes = self.nodes();
        let w = 2.0 * std::f64::consts::PI * f;
        let y = DMatrix::from_fn(nodes, nodes, |i, j| Complex64::new(self.g.get(i, j), w * self.c.get(i, j)));
        let lu = y.lu();
        let n = self.n_wires;
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            let mut b = nalgebra::DVector::from_element(nodes, Complex64::new(0.0, 0.0));
            b[self.near(i)] = Complex64::new(self.drv_conductance, 0.0);
            let v = lu.solve(&b).ok_or(Error::IllConditioned(f))?;
            if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(Error::IllConditioned(f));
            }
            for (j, h) in row.iter_mut().enumerate() {
                *h = v[self.far(j)].norm();
            }
        }
        Ok(out)
    }
}
