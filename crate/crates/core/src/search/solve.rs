//! Exact construction of the decode matrix.

use super::SearchConfig;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::rational::{gcd_slice, rank_i64, QMatrix};
use crate::signaling::check_decodability;

/// Row `j` of the result recovers lane `j`: it is orthogonal to every other
/// column of `T` (and to the all-ones vector when zero bias is required) and
/// has a positive product with column `j`. Among valid integer rows the one
/// with the smallest support, then the smallest magnitudes, is chosen.
pub fn solve_r(t: &IntMatrix, cfg: &SearchConfig) -> Result<IntMatrix> {
    let n = t.rows();
    let m = t.cols();
    if rank_i64(&t.to_rows()) < m {
        return Err(Error::InfeasibleDecoder {
            lane: 0,
            reason: "T does not have full column rank".into(),
        });
    }
    let cols: Vec<Vec<i64>> = (0..m).map(|c| t.col(c)).collect();
    let mut r = IntMatrix::zeros(m, n);
    for l in 0..m {
        let mut a: Vec<Vec<i64>> = (0..m).filter(|&k| k != l).map(|k| cols[k].clone()).collect();
        if cfg.require_zero_bias {
            a.push(vec![1; n]);
        }
        let basis = if a.is_empty() {
            (0..n).map(|i| (0..n).map(|k| i64::from(k == i)).collect()).collect()
        } else {
            QMatrix::from_i64_rows(&a).nullspace_int()
        };
        let dot = |v: &[i64]| v.iter().zip(&cols[l]).map(|(a, b)| a * b).sum::<i64>();
        if basis.iter().all(|b| dot(b) == 0) {
            return Err(Error::InfeasibleDecoder {
                lane: l,
                reason: format!(
                    "the complement of the other columns{} is orthogonal to column {l}",
                    if cfg.require_zero_bias { " and the ones vector" } else { "" }
                ),
            });
        }
        let best = smallest_row(&basis, &dot, cfg.weight_bound).ok_or_else(|| Error::InfeasibleDecoder {
            lane: l,
            reason: format!("every decoding row exceeds the weight bound {}", cfg.weight_bound),
        })?;
        for (i, v) in best.iter().enumerate() {
            r.set(l, i, *v);
        }
    }
    let cert = check_decodability(t, &r)?;
    debug_assert!(cert.monomial);
    if !cert.monomial {
        return Err(Error::InfeasibleDecoder {
            lane: 0,
            reason: "product is not monomial".into(),
        });
    }
    Ok(r)
}

/// Smallest valid combination of the basis vectors with coefficients in `-c..=c`.
fn smallest_row(basis: &[Vec<i64>], dot: &dyn Fn(&[i64]) -> i64, bound: i64) -> Option<Vec<i64>> {
    let dim = basis.len();
    let n = basis[0].len();
    let reach: i64 = match dim {
        1 => 1,
        2 | 3 => 3,
        4 => 2,
        _ => 1,
    };
    let side = (2 * reach + 1) as usize;
    let total = side.checked_pow(dim as u32)?;
    let mut best: Option<((usize, i64, i64, Vec<i64>), Vec<i64>)> = None;
    for code in 0..total {
        let mut c = code;
        let mut v = vec![0i64; n];
        for b in basis {
            let coef = (c % side) as i64 - reach;
            c /= side;
            if coef != 0 {
                for (x, y) in v.iter_mut().zip(b) {
                    *x += coef * y;
                }
            }
        }
        let g = gcd_slice(&v);
        if g == 0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= g);
        let d = dot(&v);
        if d == 0 {
            continue;
        }
        if d < 0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let max = v.iter().map(|x| x.abs()).max().unwrap_or(0);
        if max > bound {
            continue;
        }
        let key = (
            v.iter().filter(|x| **x != 0).count(),
            max,
            v.iter().map(|x| x.abs()).sum::<i64>(),
            v.iter().map(|x| -x).collect::<Vec<i64>>(),
        );
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, v));
        }
    }
    best.map(|(_, v)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{assemble_t, enumerate_rows, LevelFamily};

    fn loose(n: usize) -> SearchConfig {
        let mut c = SearchConfig::new(n);
        c.require_zero_bias = false;
        c
    }

    #[test]
    fn identity() {
        let r = solve_r(&IntMatrix::identity(4), &loose(4)).unwrap();
        assert_eq!(r, IntMatrix::identity(4));
    }

    #[test]
    fn corrected_toy() {
        let t = IntMatrix::from_rows(&[[1, -1], [-2, 0], [1, 1]]).unwrap();
        let r = solve_r(&t, &loose(3)).unwrap();
        assert_eq!(r.to_rows(), vec![vec![0, -1, 0], vec![-1, 0, 1]]);
        let cert = check_decodability(&t, &r).unwrap();
        assert!(cert.monomial && !cert.zero_bias);
        let rz = solve_r(&t, &SearchConfig::new(3)).unwrap();
        assert!(check_decodability(&t, &rz).unwrap().zero_bias);
    }

    #[test]
    fn rank_deficient_is_infeasible() {
        let t = IntMatrix::from_rows(&[[1, 1], [2, 2], [1, 1]]).unwrap();
        assert!(matches!(solve_r(&t, &loose(3)), Err(Error::InfeasibleDecoder { .. })));
    }

    #[test]
    fn se_has_no_zero_bias_decoder() {
        // the ones vector lies in the span of the identity's columns
        let t = IntMatrix::identity(3);
        assert!(matches!(solve_r(&t, &SearchConfig::new(3)), Err(Error::InfeasibleDecoder { lane: 0, .. })));
    }

    #[test]
    fn eight_wire_solutions_are_exact() {
        let mut cfg = SearchConfig::new(8);
        cfg.level_family = Some(LevelFamily {
            denominator: 9,
            numerators: vec![0, 2, 3, 4, 5, 6, 7, 9],
        });
        let rep = assemble_t(&cfg, &enumerate_rows(&cfg).unwrap()).unwrap();
        let mut solved = 0;
        for t in rep.candidates.iter().take(20) {
            if let Ok(r) = solve_r(t, &cfg) {
                let c = check_decodability(t, &r).unwrap();
                assert!(c.monomial && c.zero_bias);
                assert_eq!(c.permutation, (0..7).collect::<Vec<_>>());
                solved += 1;
            }
        }
        assert!(solved > 0);
    }
}
