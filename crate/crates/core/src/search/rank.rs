//! Wire placement and CIJ ranking of decodable candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{assemble_t, enumerate_rows, solve_r, SearchConfig};
use crate::analysis::{cij_all, worst_cij, CijMode};
use crate::channel::PulseResponseSet;
use crate::error::{Error, Result};
use crate::signaling::{SignalingScheme, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScheme {
    pub scheme: SignalingScheme,
    pub cij_envelope_s: f64,
    /// Present for the top candidates refined with the exact search.
    pub cij_exact_s: Option<f64>,
    pub eye_height_v: f64,
    pub eye_width_ui: f64,
}

impl RankedScheme {
    pub fn cij_s(&self) -> f64 {
        self.cij_exact_s.unwrap_or(self.cij_envelope_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    pub row_types: usize,
    pub assembled: usize,
    pub nodes: u64,
    pub complete: bool,
    pub duplicates: usize,
    pub decodable: usize,
    pub ranked: Vec<RankedScheme>,
}

fn quick_metrics(s: &SignalingScheme, prs: &PulseResponseSet) -> Result<(f64, f64, f64)> {
    crate::analysis::screen(s, prs)
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 > b.1)
}

/// Steepest-descent search over pairwise wire swaps minimizing the worst
/// envelope CIJ, ties broken by eye height.
pub fn place_wires(scheme: &SignalingScheme, prs: &PulseResponseSet) -> Result<SignalingScheme> {
    let n = scheme.n();
    let mut order: Vec<usize> = (0..n).collect();
    let (c, h, _) = quick_metrics(scheme, prs)?;
    let mut cur = (c, h);
    loop {
        let mut best: Option<((f64, f64), Vec<usize>)> = None;
        for a in 0..n {
            for b in a + 1..n {
                let mut o = order.clone();
                o.swap(a, b);
                let (c, h, _) = quick_metrics(&scheme.reorder_wires(&o)?, prs)?;
                if better((c, h), best.as_ref().map_or(cur, |x| x.0)) {
                    best = Some(((c, h), o));
                }
            }
        }
        match best {
            Some((score, o)) => {
                cur = score;
                order = o;
            }
            None => break,
        }
    }
    scheme.reorder_wires(&order)
}

/// Ranks by worst-output CIJ ascending, then eye height descending. The
/// `top_k` best by envelope are refined with the exact search.
pub fn rank_schemes(
    candidates: &[SignalingScheme],
    prs: &PulseResponseSet,
    top_k: usize,
    cij_budget: u128,
) -> Result<Vec<RankedScheme>> {
    for s in candidates {
        if !s.is_decodable() {
            return Err(Error::NotDecodable);
        }
    }
    let quick: Vec<(f64, f64, f64)> = candidates
        .par_iter()
        .map(|s| quick_metrics(s, prs))
        .collect::<Result<_>>()?;
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    let key = |i: &usize, c: f64| (c, -quick[*i].1, *i);
    idx.sort_by(|a, b| {
        let (x, y) = (key(a, quick[*a].0), key(b, quick[*b].0));
        x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2))
    });
    let exact: Vec<Option<f64>> = idx
        .par_iter()
        .enumerate()
        .map(|(pos, &i)| {
            if pos >= top_k {
                return Ok(None);
            }
            match cij_all(&candidates[i], prs, CijMode::Exact { budget: cij_budget }) {
                Ok(r) => Ok(Some(worst_cij(&r).expect("at least one output").cij_s)),
                Err(Error::BudgetExceeded { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut ranked: Vec<(usize, RankedScheme)> = idx
        .iter()
        .zip(exact)
        .map(|(&i, ex)| {
            (
                i,
                RankedScheme {
                    scheme: candidates[i].clone(),
                    cij_envelope_s: quick[i].0,
                    cij_exact_s: ex,
                    eye_height_v: quick[i].1,
                    eye_width_ui: quick[i].2,
                },
            )
        })
        .collect();
    ranked.sort_by(|(ia, a), (ib, b)| {
        a.cij_s()
            .total_cmp(&b.cij_s())
            .then(b.eye_height_v.total_cmp(&a.eye_height_v))
            .then(ia.cmp(ib))
    });
    Ok(ranked.into_iter().map(|(_, r)| r).collect())
}

/// Full pipeline: rows, assembly, decoder solve, placement and ranking on `prs`.
pub fn search_schemes(cfg: &SearchConfig, prs: &PulseResponseSet, vddq: f64) -> Result<SearchReport> {
    cfg.validate()?;
    if prs.n() != cfg.n {
        return Err(Error::DimensionMismatch {
            context: "channel wire count",
            expected: cfg.n,
            actual: prs.n(),
        });
    }
    let m = cfg.lanes();
    let types = match enumerate_rows(cfg) {
        Ok(t) => t,
        Err(Error::InfeasibleRows(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let asm = if types.is_empty() {
        None
    } else {
        Some(assemble_t(cfg, &types)?)
    };
    let mut rep = SearchReport {
        format_version: FORMAT_VERSION,
        n: cfg.n,
        m,
        row_types: types.len(),
        assembled: 0,
        nodes: 0,
        complete: true,
        duplicates: 0,
        decodable: 0,
        ranked: Vec::new(),
    };
    let Some(asm) = asm else {
        return Ok(rep);
    };
    rep.assembled = asm.candidates.len();
    rep.nodes = asm.nodes;
    rep.complete = asm.complete;
    rep.duplicates = asm.duplicates;
    let solved: Vec<Option<SignalingScheme>> = asm
        .candidates
        .par_iter()
        .take(cfg.max_candidates)
        .map(|t| {
            let r = match solve_r(t, cfg) {
                Ok(r) => r,
                Err(Error::InfeasibleDecoder { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let s = SignalingScheme::with_bound(t.clone(), r, vddq, cfg.weight_bound)?;
            let c = s.certificate();
            if !c.monomial || (cfg.require_zero_bias && !c.zero_bias) {
                return Ok(None);
            }
            if cfg.require_constant_multiset && !s.drive_level_multiset(1 << 24)?.constant {
                return Ok(None);
            }
            Ok(Some(s))
        })
        .collect::<Result<_>>()?;
    let schemes: Vec<SignalingScheme> = solved.into_iter().flatten().collect();
    rep.decodable = schemes.len();
    let placed: Vec<SignalingScheme> = schemes
        .par_iter()
        .enumerate()
        .map(|(k, s)| Ok(place_wires(s, prs)?.named(&format!("xmas-{}over{}-{k}", m, cfg.n))))
        .collect::<Result<_>>()?;
    rep.ranked = rank_schemes(&placed, prs, cfg.top_k, cfg.cij_budget)?;
    Ok(rep)
}
