//! Behavioral receive-side continuous-time linear equalizer.
//!
//! `H(s) = (1 + s/wz) / ((1 + s/wp1)(1 + s/wp2))`, unity gain at DC,
//! discretized with the bilinear transform on the response grid.

use serde::{Deserialize, Serialize};

use super::transient::finish;
use super::PulseResponseSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ctle {
    pub zero_hz: f64,
    pub pole1_hz: f64,
    pub pole2_hz: f64,
}

/// First-order section `(b0 + b1 z^-1) / (1 + a1 z^-1)`.
#[derive(Debug, Clone, Copy)]
struct Biquad1 {
    b0: f64,
    b1: f64,
    a1: f64,
}

impl Biquad1 {
    /// Bilinear map of `(1 + s/wz) / (1 + s/wp)`; `wz = inf` drops the zero.
    fn new(wz: f64, wp: f64, dt: f64) -> Self {
        let k = 2.0 / dt;
        let nz = if wz.is_finite() { k / wz } else { 0.0 };
        let np = k / wp;
        let d = 1.0 + np;
        Self {
            b0: (1.0 + nz) / d,
            b1: (1.0 - nz) / d,
            a1: (1.0 - np) / d,
        }
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(x.len());
        let (mut xp, mut yp) = (0.0, 0.0);
        for &v in x {
            let o = self.b0 * v + self.b1 * xp - self.a1 * yp;
            y.push(o);
            xp = v;
            yp = o;
        }
        y
    }
}

impl Ctle {
    pub fn new(zero_hz: f64, pole1_hz: f64, pole2_hz: f64) -> Self {
        Self {
            zero_hz,
            pole1_hz,
            pole2_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("zero", self.zero_hz), ("pole1", self.pole1_hz), ("pole2", self.pole2_hz)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("CTLE {name} frequency must be positive")));
            }
        }
        Ok(())
    }

    /// Peak-to-DC gain ratio in dB, evaluated on a log grid.
    pub fn peaking_db(&self) -> f64 {
        (0..400)
            .map(|k| 1e7 * 10f64.powf(k as f64 / 100.0))
            .map(|f| 20.0 * self.gain(f).log10())
            .fold(f64::MIN, f64::max)
    }

    pub fn gain(&self, f: f64) -> f64 {
        let x = |fc: f64| (1.0 + (f / fc).powi(2)).sqrt();
        x(self.zero_hz) / (x(self.pole1_hz) * x(self.pole2_hz))
    }

    pub fn filter(&self, x: &[f64], dt: f64) -> Vec<f64> {
        let tau = 2.0 * std::f64::consts::PI;
        let s1 = Biquad1::new(tau * self.zero_hz, tau * self.pole1_hz, dt);
        let s2 = Biquad1::new(f64::INFINITY, tau * self.pole2_hz, dt);
        s2.run(&s1.run(x))
    }

    /// Filters every response and re-certifies the memory span.
    pub fn apply(&self, prs: &PulseResponseSet, floor: f64) -> Result<PulseResponseSet> {
        self.validate()?;
        let ns = prs.samples_per_symbol();
        // room for the filter tail: 24 time constants of the slowest pole
        let tau = 1.0 / (2.0 * std::f64::consts::PI * self.pole1_hz.min(self.pole2_hz));
        let pad = (24.0 * tau / prs.symbol_period).ceil() as usize + 1;
        let total = (prs.len().div_ceil(ns) + pad) * ns;
        let e = prs
            .e
            .iter()
            .map(|row| {
                row.iter()
                    .map(|w| {
                        let mut x = w.clone();
                        x.resize(total, 0.0);
                        self.filter(&x, prs.dt)
                    })
                    .collect()
            })
            .collect();
        finish(e, prs.dt, prs.symbol_period, ns, total / ns, floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unity_dc_gain() {
        let c = Ctle::new(1e9, 4e9, 20e9);
        let dt = 1e-12;
        let y = c.filter(&vec![1.0; 20000], dt);
        assert!((y.last().unwrap() - 1.0).abs() < 1e-9);
        assert!(c.peaking_db() > 6.0);
    }

    #[test]
    fn ideal_pulse_area_preserved() {
        let prs = PulseResponseSet::ideal(1, 64, 1e-10);
        let c = Ctle::new(1e9, 4e9, 20e9);
        let out = c.apply(&prs, 1e-4).unwrap();
        let area: f64 = out.e[0][0].iter().sum();
        // unit DC gain keeps the pulse area up to the truncated tail
        assert!((area - 64.0).abs() < 0.5, "area {area}");
        assert!(out.memory_span >= 1);
    }
}
