//! Ground-truth Personalized PageRank by fixed-point iteration.
//!
//! The iteration `x <- c x P + (1 - c) e_s`, started from `x = e_s`, is a
//! contraction with factor `c` in the L1 norm, so the residual falls
//! geometrically. The resolvent entry `z_ij = [I - cP]^{-1}_ij` is the
//! expected number of visits to `j` by a walk started at `i`, and equals
//! `pi_j(i) / (1 - c)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, Transitions, WalkConfig};
use crate::topk::{TopKKind, TopKReport};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PprVector {
    pub seed: NodeId,
    pub damping: f64,
    pub scores: Vec<f64>,
}

impl PprVector {
    pub fn get(&self, j: NodeId) -> f64 {
        self.scores[j]
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (j, s) in self.scores.iter().enumerate() {
            writeln!(w, "{j}\t{s}")?;
        }
        Ok(())
    }

    /// Scores sorted in descending order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.scores.clone();
        v.sort_unstable_by(|a, b| b.total_cmp(a));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventEntry {
    pub i: NodeId,
    pub j: NodeId,
    /// Expected number of visits to `j` by a walk started at `i`.
    pub value: f64,
}

/// Iteration budget that guarantees an L1 step below `tol`: the first step
/// is at most `2c`, and each further step shrinks by `c`.
pub fn default_max_iters(tol: f64, damping: f64) -> usize {
    ((tol / 2.0).ln() / damping.ln()).ceil().max(0.0) as usize + 1
}

pub fn solve_ppr(
    g: &Graph,
    cfg: &WalkConfig,
    tol: f64,
    max_iters: Option<usize>,
) -> Result<PprVector> {
    let t = Transitions::new(g, cfg)?;
    solve_transitions(&t, cfg.seed, tol, max_iters)
}

/// Solves with restarts at `restart`, keeping the transition matrix of `t`
/// (whose dangling rows may point at a different seed). Row `restart` of
/// `(1 - c) [I - cP]^{-1}`.
pub(crate) fn solve_transitions(
    t: &Transitions,
    restart: NodeId,
    tol: f64,
    max_iters: Option<usize>,
) -> Result<PprVector> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let c = t.damping();
    let s = restart;
    let n = t.node_count();
    if s >= n {
        return Err(Error::invalid(format!("node {s} out of range")));
    }
    let max_iters = max_iters.unwrap_or_else(|| default_max_iters(tol, c));

    let mut x = vec![0.0; n];
    x[s] = 1.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        next[s] = 1.0 - c;
        for (v, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let nbrs = t.neighbors(v);
            let share = c * xv / nbrs.len() as f64;
            for &d in nbrs {
                next[d] += share;
            }
        }
        // The L1 step bounds the fixed-point residual of `x`; `next` is
        // closer still by a factor c.
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual <= tol {
            return Ok(PprVector {
                seed: s,
                damping: c,
                scores: x,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        residual,
    })
}

/// `z_ij` for the transition matrix defined by `cfg` (including its seed,
/// which matters under the jump-to-seed dangling policy).
pub fn resolvent_entry(
    g: &Graph,
    cfg: &WalkConfig,
    i: NodeId,
    j: NodeId,
    tol: f64,
) -> Result<ResolventEntry> {
    if j >= g.node_count() {
        return Err(Error::invalid(format!("node {j} out of range")));
    }
    let t = Transitions::new(g, cfg)?;
    let pi = solve_transitions(&t, i, tol, None)?;
    Ok(ResolventEntry {
        i,
        j,
        value: pi.scores[j] / (1.0 - cfg.damping),
    })
}

/// The `k` nodes with largest score, descending, ties to the lower id.
pub fn top_k(v: &PprVector, k: usize) -> Result<TopKReport> {
    let n = v.scores.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "k must lie in [1, {n}], got {k}"
        )));
    }
    Ok(TopKReport::from_scores(
        v.scores.iter().copied().enumerate(),
        k,
        TopKKind::List,
    ))
}
