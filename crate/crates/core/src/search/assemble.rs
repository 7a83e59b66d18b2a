//! Row enumeration and depth-first assembly of encode matrices.

use std::collections::BTreeMap;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SearchConfig;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::rational::{gcd_slice, rank_i64};
use crate::signaling::row_levels;

/// Canonical row types: nonzero magnitudes in descending order on the first
/// lanes, all positive, primitive. Lane placement and signs are free, so a
/// type stands for every row with the same magnitudes.
pub fn enumerate_rows(cfg: &SearchConfig) -> Result<Vec<Vec<i64>>> {
    cfg.validate()?;
    let m = cfg.lanes();
    let k_max = cfg.max_nonzeros_per_row.min(m);
    let family = cfg.level_family.as_ref().map(|f| f.levels());
    let mut out = Vec::new();
    let mut mags = Vec::new();
    fn rec(k: usize, max: i64, mags: &mut Vec<i64>, acc: &mut Vec<Vec<i64>>) {
        if !mags.is_empty() {
            acc.push(mags.clone());
        }
        if mags.len() == k {
            return;
        }
        for v in (1..=max).rev() {
            mags.push(v);
            rec(k, v, mags, acc);
            mags.pop();
        }
    }
    let mut all = Vec::new();
    rec(k_max, cfg.weight_bound, &mut mags, &mut all);
    for mags in all {
        if mags.len() < cfg.min_nonzeros_per_row || gcd_slice(&mags) != 1 {
            continue;
        }
        let levels = row_levels(&mags);
        if cfg.require_constant_multiset && levels.len() > cfg.n {
            continue;
        }
        if let Some(f) = &family {
            if !levels.iter().all(|l| f.contains(l)) {
                continue;
            }
        }
        let mut row = mags.clone();
        row.resize(m, 0);
        out.push((levels.len(), row));
    }
    if out.is_empty() {
        return Err(Error::InfeasibleRows(format!(
            "no row with at most {} nonzeros of magnitude <= {} fits the level constraints",
            cfg.max_nonzeros_per_row, cfg.weight_bound
        )));
    }
    // most constraining types first
    out.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| b.1.cmp(&a.1)));
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembleReport {
    pub candidates: Vec<IntMatrix>,
    pub nodes: u64,
    /// False when some branch hit the node budget.
    pub complete: bool,
    /// Matrices dropped as isomorphic to an earlier one.
    pub duplicates: usize,
}

/// Every lane placement and sign pattern of a row type, canonical placement first.
fn placements(ty: &[i64], m: usize) -> Vec<Vec<i64>> {
    let mags: Vec<i64> = ty.iter().copied().filter(|v| *v != 0).collect();
    let k = mags.len();
    let mut perms: Vec<Vec<i64>> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    // distinct permutations in lexicographic order of positions
    loop {
        let p: Vec<i64> = idx.iter().map(|&i| mags[i]).collect();
        if !perms.contains(&p) {
            perms.push(p);
        }
        if !next_permutation(&mut idx) {
            break;
        }
    }
    let mut out = Vec::new();
    for lanes in combinations(m, k) {
        for p in &perms {
            for signs in 0u32..(1 << k) {
                let mut row = vec![0; m];
                for (t, &l) in lanes.iter().enumerate() {
                    row[l] = if signs >> t & 1 == 1 { -p[t] } else { p[t] };
                }
                out.push(row);
            }
        }
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for l in start..m {
            cur.push(l);
            rec(l + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

/// A placed row with its level id on every data word.
struct Placed {
    row: Vec<i64>,
    ty: usize,
    words: Vec<u16>,
    support: u32,
}

struct Branch<'a> {
    cfg: &'a SearchConfig,
    rows: Vec<Placed>,
    type_levels: Vec<Vec<u64>>,
    nodes: u64,
    capped: bool,
    found: Vec<Vec<usize>>,
    m: usize,
}

fn compatible(a: &Placed, b: &Placed) -> bool {
    a.words.iter().zip(&b.words).all(|(x, y)| x != y)
}

impl Branch<'_> {
    fn dfs(&mut self, chosen: &mut Vec<usize>, cand: &[usize], union: &[u64], cover: u32) {
        self.nodes += 1;
        if self.nodes > self.cfg.node_budget {
            self.capped = true;
            return;
        }
        let n = self.cfg.n;
        if chosen.len() == n {
            let rows: Vec<Vec<i64>> = chosen.iter().map(|&i| self.rows[i].row.clone()).collect();
            if rank_i64(&rows) == self.m {
                self.found.push(chosen.clone());
            }
            return;
        }
        let remaining = n - chosen.len();
        let uncovered = self.m as u32 - cover.count_ones();
        if uncovered as usize > remaining * self.cfg.max_nonzeros_per_row {
            return;
        }
        for (pos, &c) in cand.iter().enumerate() {
            if self.capped {
                return;
            }
            if chosen.len() + (cand.len() - pos) < n {
                return;
            }
            let u: Vec<u64> = union.iter().zip(&self.type_levels[self.rows[c].ty]).map(|(a, b)| a | b).collect();
            if self.cfg.require_constant_multiset && u.iter().map(|w| w.count_ones() as usize).sum::<usize>() > n {
                continue;
            }
            let next: Vec<usize> = if self.cfg.require_constant_multiset {
                cand[pos + 1..].iter().copied().filter(|&k| compatible(&self.rows[c], &self.rows[k])).collect()
            } else {
                cand[pos + 1..].to_vec()
            };
            chosen.push(c);
            self.dfs(chosen, &next, &u, cover | self.rows[c].support);
            chosen.pop();
        }
    }
}

/// Depth-first assembly of `n` rows over `m` lanes.
///
/// Branches are indexed by the type of the first row, which is fixed at its
/// canonical placement; lane permutations and per-lane sign flips make this
/// choice free. Rows are taken in increasing index order, so each `T` is
/// produced as a set of rows. Isomorphic results are dropped.
pub fn assemble_t(cfg: &SearchConfig, types: &[Vec<i64>]) -> Result<AssembleReport> {
    cfg.validate()?;
    if types.is_empty() {
        return Err(Error::InfeasibleRows("no candidate rows".into()));
    }
    let m = cfg.lanes();
    for t in types {
        if t.len() != m {
            return Err(Error::DimensionMismatch {
                context: "row length",
                expected: m,
                actual: t.len(),
            });
        }
    }
    // global level ids
    let mut level_ids: BTreeMap<Rational64, usize> = BTreeMap::new();
    for t in types {
        for l in row_levels(t) {
            let next = level_ids.len();
            level_ids.entry(l).or_insert(next);
        }
    }
    if level_ids.len() > u16::MAX as usize {
        return Err(Error::InvalidParameter("too many distinct levels".into()));
    }
    let words_n = 1usize << m;
    let blocks = level_ids.len().div_ceil(64);
    let type_levels: Vec<Vec<u64>> = types
        .iter()
        .map(|t| {
            let mut b = vec![0u64; blocks];
            for l in row_levels(t) {
                let id = level_ids[&l];
                b[id / 64] |= 1 << (id % 64);
            }
            b
        })
        .collect();
    let place = |ty: usize, row: Vec<i64>| -> Placed {
        let s: i64 = row.iter().map(|v| v.abs()).sum();
        let words = (0..words_n)
            .map(|w| {
                let dot: i64 = row
                    .iter()
                    .enumerate()
                    .map(|(l, &v)| if w >> l & 1 == 1 { v } else { -v })
                    .sum();
                level_ids[&Rational64::new(dot + s, 2 * s)] as u16
            })
            .collect();
        let support = row.iter().enumerate().filter(|(_, v)| **v != 0).fold(0u32, |a, (l, _)| a | 1 << l);
        Placed { row, ty, words, support }
    };
    let union_size = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| (x | y).count_ones() as usize).sum::<usize>();

    let branches: Vec<(Vec<Vec<Vec<i64>>>, u64, bool)> = (0..types.len())
        .into_par_iter()
        .map(|b| {
            let mut rows = Vec::new();
            for (ti, t) in types.iter().enumerate().skip(b) {
                if cfg.require_constant_multiset && union_size(&type_levels[b], &type_levels[ti]) > cfg.n {
                    continue;
                }
                let pl = placements(t, m);
                let skip = usize::from(ti == b);
                if ti == b {
                    rows.push(place(ti, pl[0].clone()));
                }
                for r in pl.into_iter().skip(skip) {
                    rows.push(place(ti, r));
                }
            }
            let mut br = Branch {
                cfg,
                rows,
                type_levels: type_levels.clone(),
                nodes: 0,
                capped: false,
                found: Vec::new(),
                m,
            };
            let first = 0usize;
            let cand: Vec<usize> = (1..br.rows.len())
                .filter(|&k| !cfg.require_constant_multiset || compatible(&br.rows[first], &br.rows[k]))
                .collect();
            let union = type_levels[b].clone();
            let cover = br.rows[first].support;
            br.dfs(&mut vec![first], &cand, &union, cover);
            let mats = br
                .found
                .iter()
                .map(|f| f.iter().map(|&i| br.rows[i].row.clone()).collect())
                .collect();
            (mats, br.nodes, br.capped)
        })
        .collect();

    let mut nodes = 0;
    let mut complete = true;
    let mut kept: Vec<Vec<Vec<i64>>> = Vec::new();
    let mut by_sig: BTreeMap<Vec<Vec<i64>>, Vec<usize>> = BTreeMap::new();
    let mut duplicates = 0;
    for (mats, nd, capped) in branches {
        nodes += nd;
        complete &= !capped;
        for t in mats {
            let sig = signature(&t);
            let group = by_sig.entry(sig).or_default();
            if group.iter().any(|&k| isomorphic_rows(&kept[k], &t)) {
                duplicates += 1;
                continue;
            }
            group.push(kept.len());
            kept.push(t);
        }
    }
    let candidates = kept
        .iter()
        .map(|t| IntMatrix::from_rows(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(AssembleReport {
        candidates,
        nodes,
        complete,
        duplicates,
    })
}

/// Invariant under wire and lane permutation and per-lane sign flips.
fn signature(t: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i64>> = t
        .iter()
        .map(|r| {
            let mut a: Vec<i64> = r.iter().map(|v| v.abs()).collect();
            a.sort_unstable();
            a
        })
        .collect();
    rows.sort();
    let m = t.first().map_or(0, |r| r.len());
    let mut cols: Vec<Vec<i64>> = (0..m)
        .map(|c| {
            let mut a: Vec<i64> = t.iter().map(|r| r[c].abs()).collect();
            a.sort_unstable();
            a
        })
        .collect();
    cols.sort();
    rows.extend(cols);
    rows
}

/// True when `b` equals `a` up to wire order, lane order and per-lane sign.
pub fn isomorphic(a: &IntMatrix, b: &IntMatrix) -> bool {
    a.rows() == b.rows() && a.cols() == b.cols() && isomorphic_rows(&a.to_rows(), &b.to_rows())
}

fn isomorphic_rows(a: &[Vec<i64>], b: &[Vec<i64>]) -> bool {
    let m = a.first().map_or(0, |r| r.len());
    if signature(a) != signature(b) {
        return false;
    }
    let mut map: Vec<(usize, i64)> = Vec::with_capacity(m);
    let mut used = vec![false; m];
    fn partial_eq(a: &[Vec<i64>], b: &[Vec<i64>], map: &[(usize, i64)]) -> bool {
        let mut pa: Vec<Vec<i64>> = a.iter().map(|r| map.iter().enumerate().map(|(c, &(_, s))| s * r[c]).collect()).collect();
        let mut pb: Vec<Vec<i64>> = b.iter().map(|r| map.iter().map(|&(tc, _)| r[tc]).collect()).collect();
        pa.sort();
        pb.sort();
        pa == pb
    }
    fn rec(a: &[Vec<i64>], b: &[Vec<i64>], map: &mut Vec<(usize, i64)>, used: &mut [bool]) -> bool {
        let m = used.len();
        if map.len() == m {
            return true;
        }
        for tc in 0..m {
            if used[tc] {
                continue;
            }
            for s in [1, -1] {
                map.push((tc, s));
                used[tc] = true;
                if partial_eq(a, b, map) && rec(a, b, map, used) {
                    return true;
                }
                used[tc] = false;
                map.pop();
            }
        }
        false
    }
    rec(a, b, &mut map, &mut used)
}
