//! Config files for every subcommand. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use xmas::analysis::{CijMode, EyeMethod, DEFAULT_CIJ_BUDGET};
use xmas::channel::{import_responses, ChannelSetup, PulseResponseSet};
use xmas::linksim::{PatternConfig, SupplyModel};
use xmas::search::{EyeMask, SearchConfig, SearchSpace};
use xmas::signaling::{baseline_scheme, fixtures, BaselineKind, SignalingScheme};

pub const DEFAULT_VDDQ: f64 = 0.4;

fn default_vddq() -> f64 {
    DEFAULT_VDDQ
}
fn default_rate() -> f64 {
    10.0
}
fn default_sps() -> usize {
    32
}
fn default_freq() -> f64 {
    5e9
}
fn default_pattern() -> PatternConfig {
    PatternConfig::Prbs7 { seed: 1, length: 4 * 127 }
}
fn default_eye_method() -> EyeMethod {
    EyeMethod::Pda
}
fn default_cij_mode() -> CijMode {
    CijMode::Exact {
        budget: DEFAULT_CIJ_BUDGET,
    }
}

/// Reads a JSON config. Errors name the JSON path of the offending field.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        anyhow::anyhow!("invalid config {} at `{at}`: {}", path.display(), e.inner())
    })
}

/// Resolves `p` against the directory of the config file.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSource {
    Fixture {
        name: String,
        #[serde(default = "default_vddq")]
        vddq: f64,
    },
    Baseline {
        kind: BaselineKind,
        wires: usize,
        #[serde(default = "default_vddq")]
        vddq: f64,
    },
    Inline(SignalingScheme),
    /// A scheme JSON, or a search report whose top-ranked scheme is used.
    File(PathBuf),
}

pub fn fixture(name: &str, vddq: f64) -> Result<SignalingScheme> {
    Ok(match name {
        "toy_printed" => fixtures::toy_printed(vddq),
        "toy_corrected" => fixtures::toy_corrected(vddq),
        "three_over_four" => fixtures::three_over_four(vddq),
        "seven_over_eight" => fixtures::seven_over_eight(vddq),
        other => bail!("unknown fixture `{other}`; expected toy_printed, toy_corrected, three_over_four or seven_over_eight"),
    })
}

impl SchemeSource {
    pub fn load(&self, base: &Path) -> Result<SignalingScheme> {
        match self {
            SchemeSource::Fixture { name, vddq } => fixture(name, *vddq),
            SchemeSource::Baseline { kind, wires, vddq } => Ok(baseline_scheme(*kind, *wires, *vddq)?),
            SchemeSource::Inline(s) => Ok(s.clone()),
            SchemeSource::File(p) => {
                let p = resolve(base, p);
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading scheme {}", p.display()))?;
                let v: serde_json::Value = serde_json::from_str(&text)?;
                let v = match v.get("ranked") {
                    Some(r) => r
                        .get(0)
                        .and_then(|x| x.get("scheme"))
                        .cloned()
                        .with_context(|| format!("{} holds no ranked scheme", p.display()))?,
                    None => v,
                };
                serde_json::from_value(v).with_context(|| format!("parsing scheme {}", p.display()))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSource {
    /// Synthesized from geometry; the reference bundle when `setup` is absent.
    Synth {
        #[serde(default)]
        setup: Option<ChannelSetup>,
        #[serde(default = "default_rate")]
        rate_gsps: f64,
    },
    /// Response CSV with its JSON sidecar.
    File(PathBuf),
    /// Crosstalk-free identity channel.
    Ideal {
        #[serde(default = "default_sps")]
        samples_per_symbol: usize,
        #[serde(default = "default_rate")]
        rate_gsps: f64,
    },
}

impl Default for ChannelSource {
    fn default() -> Self {
        ChannelSource::Synth {
            setup: None,
            rate_gsps: default_rate(),
        }
    }
}

impl ChannelSource {
    pub fn load(&self, base: &Path, n: usize) -> Result<PulseResponseSet> {
        let prs = match self {
            ChannelSource::Synth { setup, rate_gsps } => {
                let setup = setup.clone().unwrap_or_else(|| ChannelSetup::reference().with_wires(n));
                setup.responses(*rate_gsps)?
            }
            ChannelSource::File(p) => {
                let p = resolve(base, p);
                import_responses(&p).with_context(|| format!("importing responses {}", p.display()))?
            }
            ChannelSource::Ideal {
                samples_per_symbol,
                rate_gsps,
            } => {
                if !(*rate_gsps > 0.0) || *samples_per_symbol == 0 {
                    bail!("ideal channel needs a positive rate and samples per symbol");
                }
                PulseResponseSet::ideal(n, *samples_per_symbol, 1e-9 / rate_gsps)
            }
        };
        if prs.n() != n {
            bail!("channel has {} wires but the scheme drives {n}", prs.n());
        }
        Ok(prs)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "ChannelSetup::reference")]
    pub setup: ChannelSetup,
    #[serde(default = "default_rate")]
    pub rate_gsps: f64,
    #[serde(default = "default_freq")]
    pub freq_hz: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            setup: ChannelSetup::reference(),
            rate_gsps: default_rate(),
            freq_hz: default_freq(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scheme: SchemeSource,
    #[serde(default)]
    pub channel: ChannelSource,
    #[serde(default = "default_pattern")]
    pub pattern: PatternConfig,
    #[serde(default)]
    pub supply: Option<SupplyModel>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyeConfig {
    pub scheme: SchemeSource,
    #[serde(default)]
    pub channel: ChannelSource,
    #[serde(default = "default_eye_method")]
    pub method: EyeMethod,
    #[serde(default)]
    pub supply: Option<SupplyModel>,
    /// Restrict to one decoded output.
    #[serde(default)]
    pub output: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CijConfig {
    pub scheme: SchemeSource,
    #[serde(default)]
    pub channel: ChannelSource,
    #[serde(default = "default_cij_mode")]
    pub mode: CijMode,
    #[serde(default)]
    pub output: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchCmdConfig {
    pub search: SearchConfig,
    /// Reference bundle with `search.n` wires when absent.
    #[serde(default)]
    pub setup: Option<ChannelSetup>,
    #[serde(default = "default_rate")]
    pub rate_gsps: f64,
    #[serde(default = "default_vddq")]
    pub vddq: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub space: SearchSpace,
    #[serde(default)]
    pub mask: EyeMask,
    /// Search settings applied to every `n`; its own `n` and `m` are ignored.
    #[serde(default)]
    pub template: Option<SearchConfig>,
    #[serde(default = "ChannelSetup::reference")]
    pub setup: ChannelSetup,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareEntry {
    pub scheme: SchemeSource,
    #[serde(default)]
    pub channel: ChannelSource,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub entries: Vec<CompareEntry>,
    #[serde(default)]
    pub supply: Option<SupplyModel>,
    #[serde(default = "default_cij_mode")]
    pub cij_mode: CijMode,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse<T: DeserializeOwned>(s: &str) -> Result<T> {
        let dir = tempfile::tempdir()?;
        let p = dir.path().join("c.json");
        std::fs::write(&p, s)?;
        load(&p)
    }

    #[test]
    fn unknown_key_names_path() {
        let e = parse::<EyeConfig>(r#"{"scheme": {"fixture": {"name": "toy_corrected", "vdd": 1}}}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("scheme.fixture"), "{msg}");
        assert!(msg.contains("vdd"), "{msg}");
    }

    #[test]
    fn minimal_eye_config() {
        let c: EyeConfig = parse(r#"{"scheme": {"baseline": {"kind": "single_ended", "wires": 2}}, "channel": {"ideal": {}}}"#).unwrap();
        assert_eq!(c.method, EyeMethod::Pda);
        let s = c.scheme.load(Path::new("c.json")).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(c.channel.load(Path::new("c.json"), 2).unwrap().samples_per_symbol(), 32);
    }

    #[test]
    fn wire_count_mismatch() {
        let src = ChannelSource::Ideal {
            samples_per_symbol: 8,
            rate_gsps: 10.0,
        };
        assert!(src.load(Path::new("x"), 3).is_ok());
        let file = ChannelSource::File("missing.csv".into());
        assert!(file.load(Path::new("/nonexistent/c.json"), 3).is_err());
    }

    #[test]
    fn unknown_fixture() {
        assert!(fixture("nope", 0.4).is_err());
        assert_eq!(fixture("seven_over_eight", 0.4).unwrap().m(), 7);
    }
}
