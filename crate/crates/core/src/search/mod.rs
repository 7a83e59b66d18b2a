//! Search for integer encode/decode pairs, symbol-rate bisection and
//! design-space optimization.
//!
//! The pipeline is row enumeration, multiset-pruned assembly of `T`, an exact
//! nullspace solve for `R`, wire placement and CIJ ranking.

mod assemble;
mod optimize;
mod rank;
mod solve;

pub use assemble::{assemble_t, enumerate_rows, isomorphic, AssembleReport};
pub use optimize::{
    edge_density, frontier_csv, max_symbol_rate, optimize, DesignMetrics, DesignPoint, EyeMask, OptimizeReport,
    RateReport, RateSearch, Rejection, SearchSpace, EDGE_DENSITY_NOTE,
};
pub use rank::{place_wires, rank_schemes, search_schemes, RankedScheme, SearchReport};
pub use solve::solve_r;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DEFAULT_WEIGHT_BOUND;

/// Levels as fractions `numerators / denominator` of the supply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelFamily {
    pub denominator: i64,
    pub numerators: Vec<i64>,
}

impl LevelFamily {
    pub fn levels(&self) -> Vec<Rational64> {
        let mut v: Vec<Rational64> = self.numerators.iter().map(|&k| Rational64::new(k, self.denominator)).collect();
        v.sort();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    /// Data lanes; `n - 1` when absent.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_bound")]
    pub weight_bound: i64,
    #[serde(default = "default_nonzeros")]
    pub max_nonzeros_per_row: usize,
    #[serde(default = "default_min_nonzeros")]
    pub min_nonzeros_per_row: usize,
    #[serde(default = "yes")]
    pub require_constant_multiset: bool,
    #[serde(default = "yes")]
    pub require_zero_bias: bool,
    #[serde(default)]
    pub level_family: Option<LevelFamily>,
    /// Assembly nodes allowed per first-row branch.
    #[serde(default = "default_nodes")]
    pub node_budget: u64,
    #[serde(default = "default_cij_budget")]
    pub cij_budget: u128,
    /// Candidates refined with the exact CIJ after the envelope pass.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Cap on the number of distinct `T` matrices carried into ranking.
    #[serde(default = "default_max_candidates")]
    pub max_candidates: usize,
}

fn default_bound() -> i64 {
    DEFAULT_WEIGHT_BOUND
}
fn default_nonzeros() -> usize {
    3
}
fn default_min_nonzeros() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_nodes() -> u64 {
    10_000_000
}
fn default_cij_budget() -> u128 {
    1 << 22
}
fn default_top_k() -> usize {
    8
}
fn default_max_candidates() -> usize {
    512
}

impl SearchConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            m: None,
            weight_bound: default_bound(),
            max_nonzeros_per_row: default_nonzeros(),
            min_nonzeros_per_row: default_min_nonzeros(),
            require_constant_multiset: true,
            require_zero_bias: true,
            level_family: None,
            node_budget: default_nodes(),
            cij_budget: default_cij_budget(),
            top_k: default_top_k(),
            max_candidates: default_max_candidates(),
        }
    }

    pub fn lanes(&self) -> usize {
        self.m.unwrap_or(self.n.saturating_sub(1))
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.lanes();
        if self.n == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!("need n >= 1 and m >= 1, got n={} m={m}", self.n)));
        }
        if m > self.n {
            return Err(Error::InvalidParameter(format!("m={m} exceeds n={}", self.n)));
        }
        if m > 16 {
            return Err(Error::InvalidParameter(format!("m={m} is too large to enumerate data words")));
        }
        if self.weight_bound < 1 {
            return Err(Error::InvalidParameter("weight bound must be positive".into()));
        }
        if self.max_nonzeros_per_row == 0 {
            return Err(Error::InvalidParameter("rows need at least one nonzero".into()));
        }
        if self.min_nonzeros_per_row > self.max_nonzeros_per_row.min(m) {
            return Err(Error::InvalidParameter(format!(
                "min_nonzeros_per_row={} exceeds the possible row support {}",
                self.min_nonzeros_per_row,
                self.max_nonzeros_per_row.min(m)
            )));
        }
        if let Some(f) = &self.level_family {
            if f.denominator <= 0 || f.numerators.iter().any(|&k| k < 0 || k > f.denominator) {
                return Err(Error::InvalidParameter("level family must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}
