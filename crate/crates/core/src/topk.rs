//! Top-k lists and baskets, basket comparison, and convergence curves.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::graph::{Graph, NodeId, WalkConfig};
use crate::mc::{self, derive_seed, WalkMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopKKind {
    List,
    Basket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKReport {
    pub kind: TopKKind,
    /// Requested size. `ids` may be shorter when fewer candidates exist.
    pub k: usize,
    pub ids: Vec<NodeId>,
    pub scores: Vec<f64>,
}

/// Descending by score, ascending id on ties.
fn rank_order(a: &(NodeId, f64), b: &(NodeId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

impl TopKReport {
    /// Ranks `(id, score)` pairs and keeps the best `k`.
    pub fn from_scores<I>(scores: I, k: usize, kind: TopKKind) -> Self
    where
        I: IntoIterator<Item = (NodeId, f64)>,
    {
        let mut all: Vec<(NodeId, f64)> = scores.into_iter().collect();
        if k < all.len() {
            all.select_nth_unstable_by(k, rank_order);
            all.truncate(k);
        }
        all.sort_unstable_by(rank_order);
        let (ids, scores) = all.into_iter().unzip();
        TopKReport {
            kind,
            k,
            ids,
            scores,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Fewer than `k` entries were available.
    pub fn is_truncated(&self) -> bool {
        self.ids.len() < self.k
    }

    pub fn as_basket(mut self) -> Self {
        self.kind = TopKKind::Basket;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasketComparison {
    pub k: usize,
    /// Number of estimated basket members that belong to the true basket.
    pub correct: usize,
    pub erroneous: usize,
    /// Length of the longest common prefix of the two ordered lists.
    pub list_correct_prefix: usize,
}

impl BasketComparison {
    pub fn satisfies_relaxation(&self, l: usize) -> bool {
        self.erroneous <= l
    }
}

pub fn compare_baskets(truth: &TopKReport, estimate: &TopKReport) -> Result<BasketComparison> {
    if truth.k != estimate.k {
        return Err(Error::invalid(format!(
            "cannot compare top-{} with top-{}",
            truth.k, estimate.k
        )));
    }
    let k = truth.k;
    let truth_set: HashSet<NodeId> = truth.ids.iter().copied().collect();
    let correct = estimate
        .ids
        .iter()
        .filter(|id| truth_set.contains(id))
        .count();
    let list_correct_prefix = truth
        .ids
        .iter()
        .zip(&estimate.ids)
        .take_while(|(a, b)| a == b)
        .count();
    Ok(BasketComparison {
        k,
        correct,
        erroneous: k - correct,
        list_correct_prefix,
    })
}

pub fn satisfies_relaxation(cmp: &BasketComparison, l: usize) -> bool {
    cmp.satisfies_relaxation(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub m: u64,
    pub mean_correct: f64,
    pub std_correct: f64,
}

/// Number of correctly detected top-k basket members as a function of the
/// number of walks `m`, averaged over `repeats` independent estimations.
///
/// Repetition `r` at grid point `m` uses the stream seed
/// `derive_seed(derive_seed(rng_seed, m), r)`.
pub fn convergence_curve(
    g: &Graph,
    cfg: &WalkConfig,
    method: WalkMethod,
    k: usize,
    m_grid: &[u64],
    repeats: usize,
    rng_seed: u64,
) -> Result<Vec<CurveRow>> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    let pi = exact::solve_ppr(g, cfg, exact::DEFAULT_TOL, None)?;
    let truth = exact::top_k(&pi, k)?.as_basket();
    m_grid
        .iter()
        .map(|&m| {
            let grid_seed = derive_seed(rng_seed, m);
            let correct: Vec<f64> = (0..repeats as u64)
                .into_par_iter()
                .map(|r| {
                    let outcome = mc::run(g, cfg, method, m, derive_seed(grid_seed, r))?;
                    let est = mc::estimate(&outcome, cfg).top_k(k);
                    Ok(compare_baskets(&truth, &est)?.correct as f64)
                })
                .collect::<Result<_>>()?;
            let (mean, std) = mean_std(&correct);
            Ok(CurveRow {
                m,
                mean_correct: mean,
                std_correct: std,
            })
        })
        .collect()
}

/// Sample mean and (n-1)-normalized standard deviation; std is 0 for one value.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "m,mean_correct,std_correct")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.m, r.mean_correct, r.std_correct)?;
    }
    Ok(())
}
