//! Channel plus receiver front end, turned into pulse responses at a given rate.

use serde::{Deserialize, Serialize};

use super::transient::{pulse_responses, TransientConfig};
use super::{map_geometry, reference_file, ChannelGeometry, Ctle, PulseResponseSet};
use crate::error::{Error, Result};

/// Largest simulated window before giving up on a non-decaying response.
const MAX_WINDOW_SYMBOLS: usize = 768;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSetup {
    pub geometry: ChannelGeometry,
    /// Receive equalizer applied to every far-end response; `null` disables it.
    #[serde(default)]
    pub ctle: Option<Ctle>,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "default_sps")]
    pub samples_per_symbol: usize,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_segments() -> usize {
    32
}
fn default_sps() -> usize {
    64
}
fn default_floor() -> f64 {
    1e-3
}

impl ChannelSetup {
    /// Calibrated reference bundle with its default equalizer.
    pub fn reference() -> Self {
        Self {
            geometry: ChannelGeometry::reference(),
            ctle: Some(reference_file().ctle),
            segments: default_segments(),
            samples_per_symbol: default_sps(),
            floor: default_floor(),
        }
    }

    pub fn bare(geometry: ChannelGeometry) -> Self {
        Self {
            geometry,
            ctle: None,
            segments: default_segments(),
            samples_per_symbol: default_sps(),
            floor: default_floor(),
        }
    }

    pub fn with_wires(&self, n: usize) -> Self {
        Self {
            geometry: self.geometry.with_wires(n),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if let Some(c) = &self.ctle {
            c.validate()?;
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(Error::InvalidParameter(format!("floor must lie in (0, 1), got {}", self.floor)));
        }
        Ok(())
    }

    /// Pulse responses at `rate_gsps`, growing the simulated window until the
    /// responses decay below the floor.
    pub fn responses(&self, rate_gsps: f64) -> Result<PulseResponseSet> {
        self.validate()?;
        if !(rate_gsps > 0.0 && rate_gsps.is_finite()) {
            return Err(Error::InvalidParameter(format!("symbol rate must be positive, got {rate_gsps}")));
        }
        let par = map_geometry(&self.geometry);
        let mut cfg = TransientConfig::at_rate_gsps(rate_gsps);
        cfg.segments = self.segments;
        cfg.samples_per_symbol = self.samples_per_symbol;
        cfg.floor = self.floor;
        loop {
            match pulse_responses(&self.geometry, &par, &cfg) {
                Ok(prs) => {
                    return match &self.ctle {
                        Some(c) => c.apply(&prs, self.floor),
                        None => Ok(prs),
                    }
                }
                Err(Error::ExtendWindow { .. }) if cfg.window_symbols * 2 <= MAX_WINDOW_SYMBOLS => {
                    cfg.window_symbols *= 2;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips() {
        let s = ChannelSetup::reference();
        let j = serde_json::to_string(&s).unwrap();
        let back: ChannelSetup = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
        assert!(serde_json::from_str::<ChannelSetup>(&j.replace("\"segments\"", "\"segs\"")).is_err());
    }

    #[test]
    fn high_rate_keeps_sampling_density() {
        let s = ChannelSetup::reference().with_wires(2);
        let prs = s.responses(20.0).unwrap();
        assert!(prs.memory_span >= 1);
        assert_eq!(prs.samples_per_symbol(), 64);
    }
}
