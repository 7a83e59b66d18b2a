//! One function per subcommand.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use xmas::analysis::{cij, cij_all, compare_schemes, eye, eye_all, worst_cij, worst_eye, CijReport, EyeMethod, EyeReport};
use xmas::channel::{export_responses, frequency_response, map_geometry, ParasiticSet, PulseResponseSet};
use xmas::linksim::{gen_pattern, simulate_stream, PatternConfig, SupplyModel};
use xmas::search::{frontier_csv, optimize as run_optimize, search_schemes, SearchConfig};
use xmas::signaling::{SignalingScheme, FORMAT_VERSION};

use crate::config::{self, *};
use crate::output::{csv_table, num, write_json, write_text};
use crate::svg::eye_svg;
use crate::{Cli, Format, Infeasible};

fn require_config(cli: &Cli) -> Result<&Path> {
    cli.config.as_deref().context("this subcommand needs --config <path>")
}

pub fn with_seed(p: &PatternConfig, seed: Option<u64>) -> PatternConfig {
    match (p, seed) {
        (PatternConfig::Prbs7 { length, .. }, Some(s)) => PatternConfig::Prbs7 { seed: s, length: *length },
        (PatternConfig::Prbs15 { length, .. }, Some(s)) => PatternConfig::Prbs15 { seed: s, length: *length },
        _ => p.clone(),
    }
}

#[derive(Debug, Serialize)]
pub struct ChannelReport {
    pub format_version: u32,
    pub freq_hz: f64,
    pub il_db: Vec<f64>,
    pub il_worst_db: f64,
    /// Largest nearest-neighbor far-end coupling, dB.
    pub fext_nn_db: f64,
    pub parasitics: ParasiticSet,
    pub rate_gsps: f64,
    pub memory_span: usize,
    pub samples_per_symbol: usize,
}

pub fn channel_report(cfg: &SynthConfig) -> Result<(ChannelReport, PulseResponseSet)> {
    let g = &cfg.setup.geometry;
    let par = map_geometry(g);
    let fr = frequency_response(g, &par, cfg.freq_hz, cfg.setup.segments)?;
    let n = g.n_wires;
    let mut nn = f64::NEG_INFINITY;
    for i in 0..n {
        for j in [i.wrapping_sub(1), i + 1] {
            if j < n {
                nn = nn.max(fr.fext_db[i][j]);
            }
        }
    }
    let prs = cfg.setup.responses(cfg.rate_gsps)?;
    let rep = ChannelReport {
        format_version: FORMAT_VERSION,
        freq_hz: cfg.freq_hz,
        il_worst_db: fr.il_db.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        il_db: fr.il_db,
        fext_nn_db: nn,
        parasitics: par,
        rate_gsps: cfg.rate_gsps,
        memory_span: prs.memory_span,
        samples_per_symbol: prs.samples_per_symbol(),
    };
    Ok((rep, prs))
}

pub fn synth_channel(cli: &Cli) -> Result<()> {
    let cfg: SynthConfig = match &cli.config {
        Some(p) => config::load(p)?,
        None => SynthConfig::default(),
    };
    let (rep, prs) = channel_report(&cfg)?;
    let csv = cli.out.join("responses.csv");
    export_responses(&prs, &csv)?;
    println!("wrote {}", csv.display());
    write_json(&cli.out, "channel_report.json", &rep)?;
    Ok(())
}

pub fn simulate(cli: &Cli) -> Result<()> {
    let path = require_config(cli)?;
    let cfg: SimulateConfig = config::load(path)?;
    let scheme = cfg.scheme.load(path)?;
    let prs = cfg.channel.load(path, scheme.n())?;
    let supply = cfg.supply.clone().unwrap_or_else(|| SupplyModel::ideal(scheme.vddq()));
    let data = gen_pattern(&with_seed(&cfg.pattern, cli.seed), scheme.m())?;
    let res = simulate_stream(&scheme, &prs, &data, &supply)?;
    let mut header: Vec<String> = vec!["time_s".into()];
    header.extend((0..scheme.n()).map(|i| format!("y{i}")));
    header.extend((0..scheme.m()).map(|j| format!("w{j}")));
    let len = res.y[0].len();
    let rows: Vec<Vec<String>> = (0..len)
        .map(|k| {
            let mut r = vec![num(k as f64 * prs.dt)];
            r.extend(res.y.iter().map(|w| num(w.samples[k])));
            r.extend(res.w.iter().map(|w| num(w.samples[k])));
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    write_text(&cli.out, "waveforms.csv", &csv_table(&h, &rows)?)?;
    #[derive(Serialize)]
    struct Summary {
        format_version: u32,
        scheme: Option<String>,
        symbols: usize,
        samples: usize,
        dt: f64,
        max_droop_v: f64,
    }
    let max_droop = res.droop.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    write_json(
        &cli.out,
        "simulate.json",
        &Summary {
            format_version: FORMAT_VERSION,
            scheme: scheme.name.clone(),
            symbols: data[0].len(),
            samples: len,
            dt: prs.dt,
            max_droop_v: max_droop,
        },
    )?;
    if cli.svg {
        write_eye_svgs(cli, &scheme, &prs, &supply, &cfg.pattern)?;
    }
    Ok(())
}

/// Renders one SVG per decoded output from a simulated stream.
pub fn write_eye_svgs(cli: &Cli, scheme: &SignalingScheme, prs: &PulseResponseSet, supply: &SupplyModel, pattern: &PatternConfig) -> Result<Vec<PathBuf>> {
    let data = gen_pattern(&with_seed(pattern, cli.seed), scheme.m())?;
    let res = simulate_stream(scheme, prs, &data, supply)?;
    let name = scheme.name.clone().unwrap_or_else(|| "scheme".into());
    res.w
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let svg = eye_svg(&format!("{name} output {j}"), &w.samples, prs.samples_per_symbol(), prs.memory_span);
            write_text(&cli.out, &format!("eye_{j}.svg"), &svg)
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct EyeFile {
    pub format_version: u32,
    pub scheme: Option<String>,
    pub reports: Vec<EyeReport>,
    pub worst: EyeReport,
}

fn eye_rows(reports: &[EyeReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.output.to_string(),
                num(r.width_ui),
                num(r.height_v),
                num(r.p2p_jitter_s),
                num(r.sampling_phase),
                r.method.clone(),
                r.open.to_string(),
            ]
        })
        .collect()
}

pub fn eye_cmd(cli: &Cli) -> Result<()> {
    let path = require_config(cli)?;
    let cfg: EyeConfig = config::load(path)?;
    let scheme = cfg.scheme.load(path)?;
    let prs = cfg.channel.load(path, scheme.n())?;
    let supply = cfg.supply.clone().unwrap_or_else(|| SupplyModel::ideal(scheme.vddq()));
    let method = match &cfg.method {
        EyeMethod::Stream { pattern } => EyeMethod::Stream {
            pattern: with_seed(pattern, cli.seed),
        },
        m => m.clone(),
    };
    let reports = match cfg.output {
        Some(j) => vec![eye(&scheme, &prs, j, &method, &supply)?],
        None => eye_all(&scheme, &prs, &method, &supply)?,
    };
    match cli.format {
        Format::Json => {
            let worst = worst_eye(&reports).context("scheme has no outputs")?;
            write_json(
                &cli.out,
                "eye.json",
                &EyeFile {
                    format_version: FORMAT_VERSION,
                    scheme: scheme.name.clone(),
                    reports,
                    worst,
                },
            )?;
        }
        Format::Csv => {
            let h = ["output", "width_ui", "height_v", "p2p_jitter_s", "sampling_phase", "method", "open"];
            write_text(&cli.out, "eye.csv", &csv_table(&h, &eye_rows(&reports))?)?;
        }
    }
    if cli.svg {
        let pattern = match &cfg.method {
            EyeMethod::Stream { pattern } => pattern.clone(),
            _ => PatternConfig::Prbs7 { seed: 1, length: 4 * 127 },
        };
        write_eye_svgs(cli, &scheme, &prs, &supply, &pattern)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct CijFile {
    pub format_version: u32,
    pub scheme: Option<String>,
    pub reports: Vec<CijReport>,
    pub worst: CijReport,
}

pub fn cij_cmd(cli: &Cli) -> Result<()> {
    let path = require_config(cli)?;
    let cfg: CijConfig = config::load(path)?;
    let scheme = cfg.scheme.load(path)?;
    let prs = cfg.channel.load(path, scheme.n())?;
    let reports = match cfg.output {
        Some(j) => vec![cij(&scheme, &prs, j, cfg.mode)?],
        None => cij_all(&scheme, &prs, cfg.mode)?,
    };
    let worst = worst_cij(&reports).context("scheme has no outputs")?.clone();
    match cli.format {
        Format::Json => {
            write_json(
                &cli.out,
                "cij.json",
                &CijFile {
                    format_version: FORMAT_VERSION,
                    scheme: scheme.name.clone(),
                    reports,
                    worst,
                },
            )?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.output.to_string(),
                        r.lane.to_string(),
                        num(r.earliest_s),
                        num(r.latest_s),
                        num(r.cij_s),
                        r.mode.clone(),
                        r.closed.to_string(),
                    ]
                })
                .collect();
            let h = ["output", "lane", "earliest_s", "latest_s", "cij_s", "mode", "closed"];
            write_text(&cli.out, "cij.csv", &csv_table(&h, &rows)?)?;
        }
    }
    Ok(())
}

pub fn search(cli: &Cli) -> Result<()> {
    let path = require_config(cli)?;
    let cfg: SearchCmdConfig = config::load(path)?;
    let setup = cfg
        .setup
        .clone()
        .unwrap_or_else(|| xmas::channel::ChannelSetup::reference().with_wires(cfg.search.n));
    let prs = setup.responses(cfg.rate_gsps)?;
    let rep = search_schemes(&cfg.search, &prs, cfg.vddq)?;
    match cli.format {
        Format::Json => {
            write_json(&cli.out, "search.json", &rep)?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = rep
                .ranked
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    vec![
                        k.to_string(),
                        r.scheme.name.clone().unwrap_or_default(),
                        num(r.cij_s()),
                        num(r.cij_envelope_s),
                        num(r.eye_height_v),
                        num(r.eye_width_ui),
                    ]
                })
                .collect();
            let h = ["rank", "name", "cij_s", "cij_envelope_s", "eye_h", "eye_w"];
            write_text(&cli.out, "search.csv", &csv_table(&h, &rows)?)?;
        }
    }
    if rep.ranked.is_empty() {
        return Err(Infeasible(format!(
            "no decodable scheme for n={} m={} ({} matrices assembled)",
            rep.n, rep.m, rep.assembled
        ))
        .into());
    }
    Ok(())
}

pub fn optimize(cli: &Cli) -> Result<()> {
    let path = require_config(cli)?;
    let cfg: OptimizeConfig = config::load(path)?;
    let template = cfg.template.clone().unwrap_or_else(|| SearchConfig::new(2));
    let rep = run_optimize(&cfg.space, &cfg.mask, &template, &cfg.setup)?;
    write_text(&cli.out, "frontier.csv", &frontier_csv(&rep.frontier)?)?;
    write_json(&cli.out, "optimize.json", &rep)?;
    if rep.best.is_none() {
        bail!(Infeasible(format!("no design point met the constraints ({} rejections)", rep.rejections.len())));
    }
    Ok(())
}

pub fn compare(cli: &Cli) -> Result<()> {
    let path = require_config(cli)?;
    let cfg: CompareConfig = config::load(path)?;
    let mut entries = Vec::with_capacity(cfg.entries.len());
    for (k, e) in cfg.entries.iter().enumerate() {
        let s = e.scheme.load(path).with_context(|| format!("entries[{k}].scheme"))?;
        let prs = e.channel.load(path, s.n()).with_context(|| format!("entries[{k}].channel"))?;
        entries.push((s, prs));
    }
    let vddq = entries.first().map_or(DEFAULT_VDDQ, |(s, _)| s.vddq());
    let supply = cfg.supply.clone().unwrap_or_else(|| SupplyModel::ideal(vddq));
    let rep = compare_schemes(&entries, &supply, cfg.cij_mode)?;
    match cli.format {
        Format::Json => {
            write_json(&cli.out, "compare.json", &rep)?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        r.n.to_string(),
                        r.m.to_string(),
                        num(r.pin_efficiency),
                        num(r.cij_worst_s),
                        r.cij_mode.clone(),
                        num(r.eye_width_ui),
                        num(r.eye_height_v),
                        num(r.p2p_jitter_s),
                        num(r.ssn_droop_v),
                    ]
                })
                .collect();
            let h = [
                "name",
                "n",
                "m",
                "pin_efficiency",
                "cij_worst_s",
                "cij_mode",
                "eye_w",
                "eye_h",
                "p2p_jitter_s",
                "ssn_droop_v",
            ];
            write_text(&cli.out, "compare.csv", &csv_table(&h, &rows)?)?;
        }
    }
    Ok(())
}
