//! Monte Carlo End Point and Complete Path estimators.
//!
//! Every walk starts at the seed; at each step it stops with probability
//! `1 - c` and otherwise moves to a uniformly chosen effective neighbor.
//! End Point records the terminal node of each walk. Complete Path records
//! every occupied state, including the start (time 0) and the terminal node,
//! so the expected count of node `j` per walk is `z_sj = pi_j / (1 - c)`.
//!
//! Walk `r` draws from its own generator seeded by `derive_seed(seed, r)`.
//! Outcomes therefore do not depend on how runs are split across threads.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, Transitions, WalkConfig};
use crate::topk::{TopKKind, TopKReport};

/// Runs per parallel work unit.
const CHUNK: u64 = 2048;
/// Graphs up to this size tally into dense per-chunk arrays.
const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMethod {
    EndPoint,
    CompletePath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkOutcome {
    pub method: WalkMethod,
    #[serde(rename = "m")]
    pub runs: u64,
    pub rng_seed: u64,
    /// End counts `L_j` (End Point) or total visit counts (Complete Path).
    pub counts: BTreeMap<NodeId, u64>,
}

impl WalkOutcome {
    pub fn count(&self, j: NodeId) -> u64 {
        self.counts.get(&j).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub method: WalkMethod,
    #[serde(rename = "m")]
    pub runs: u64,
    pub pi_hat: BTreeMap<NodeId, f64>,
}

impl MCEstimate {
    /// Estimate for node `j`; nodes never hit read as 0.
    pub fn get(&self, j: NodeId) -> f64 {
        self.pi_hat.get(&j).copied().unwrap_or(0.0)
    }

    /// Top-k among nodes with a nonzero estimate. Shorter than `k` when
    /// fewer nodes were hit.
    pub fn top_k(&self, k: usize) -> TopKReport {
        TopKReport::from_scores(self.pi_hat.iter().map(|(&j, &p)| (j, p)), k, TopKKind::List)
    }
}

/// SplitMix64 finalizer over `(base, index)`; used to key per-walk and
/// per-trial generator streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn walk_rng(seed: u64, run: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, run))
}

enum Tally {
    Dense(Vec<u64>),
    Sparse(HashMap<NodeId, u64>),
}

impl Tally {
    fn new(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            Tally::Dense(vec![0; n])
        } else {
            Tally::Sparse(HashMap::new())
        }
    }

    #[inline]
    fn add(&mut self, v: NodeId) {
        match self {
            Tally::Dense(c) => c[v] += 1,
            Tally::Sparse(c) => *c.entry(v).or_insert(0) += 1,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        match (&mut self, other) {
            (Tally::Dense(a), Tally::Dense(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            (Tally::Sparse(a), Tally::Sparse(b)) => {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
            }
            _ => unreachable!("tallies of one run share a representation"),
        }
        self
    }

    fn merge_into(self, counts: &mut BTreeMap<NodeId, u64>) {
        match self {
            Tally::Dense(c) => {
                for (j, v) in c.into_iter().enumerate().filter(|&(_, v)| v > 0) {
                    *counts.entry(j).or_insert(0) += v;
                }
            }
            Tally::Sparse(c) => {
                for (j, v) in c {
                    *counts.entry(j).or_insert(0) += v;
                }
            }
        }
    }
}

fn simulate_chunk(t: &Transitions, method: WalkMethod, seed: u64, runs: Range<u64>) -> Tally {
    let c = t.damping();
    let mut tally = Tally::new(t.node_count());
    for r in runs {
        let mut rng = walk_rng(seed, r);
        let mut v = t.seed();
        loop {
            if method == WalkMethod::CompletePath {
                tally.add(v);
            }
            if rng.random::<f64>() >= c {
                break;
            }
            let nbrs = t.neighbors(v);
            v = if nbrs.len() == 1 {
                nbrs[0]
            } else {
                nbrs[rng.random_range(0..nbrs.len())]
            };
        }
        if method == WalkMethod::EndPoint {
            tally.add(v);
        }
    }
    tally
}

/// Simulates runs `range` and adds their counts to `counts`.
fn simulate_into(
    t: &Transitions,
    method: WalkMethod,
    seed: u64,
    range: Range<u64>,
    counts: &mut BTreeMap<NodeId, u64>,
) {
    let n = t.node_count();
    let chunks: Vec<Range<u64>> = (range.start..range.end)
        .step_by(CHUNK as usize)
        .map(|a| a..(a + CHUNK).min(range.end))
        .collect();
    let tally = chunks
        .into_par_iter()
        .map(|rs| simulate_chunk(t, method, seed, rs))
        .reduce(|| Tally::new(n), Tally::merge);
    tally.merge_into(counts);
}

pub fn run(
    g: &Graph,
    cfg: &WalkConfig,
    method: WalkMethod,
    m: u64,
    rng_seed: u64,
) -> Result<WalkOutcome> {
    if m == 0 {
        return Err(Error::invalid("number of walks m must be at least 1"));
    }
    let t = Transitions::new(g, cfg)?;
    Ok(run_transitions(&t, method, m, rng_seed))
}

pub(crate) fn run_transitions(
    t: &Transitions,
    method: WalkMethod,
    m: u64,
    rng_seed: u64,
) -> WalkOutcome {
    let mut counts = BTreeMap::new();
    simulate_into(t, method, rng_seed, 0..m, &mut counts);
    WalkOutcome {
        method,
        runs: m,
        rng_seed,
        counts,
    }
}

/// MC End Point: the fraction of `m` walks ending at each node.
pub fn run_end_point(g: &Graph, cfg: &WalkConfig, m: u64, rng_seed: u64) -> Result<WalkOutcome> {
    run(g, cfg, WalkMethod::EndPoint, m, rng_seed)
}

/// MC Complete Path: visit counts over all states of `m` walks.
pub fn run_complete_path(
    g: &Graph,
    cfg: &WalkConfig,
    m: u64,
    rng_seed: u64,
) -> Result<WalkOutcome> {
    run(g, cfg, WalkMethod::CompletePath, m, rng_seed)
}

pub fn estimate(outcome: &WalkOutcome, cfg: &WalkConfig) -> MCEstimate {
    let m = outcome.runs as f64;
    let scale = match outcome.method {
        WalkMethod::EndPoint => 1.0 / m,
        WalkMethod::CompletePath => (1.0 - cfg.damping) / m,
    };
    MCEstimate {
        method: outcome.method,
        runs: outcome.runs,
        pi_hat: outcome
            .counts
            .iter()
            .map(|(&j, &c)| (j, c as f64 * scale))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveOutcome {
    pub outcome: WalkOutcome,
    pub stopped_at_m: u64,
    pub cap_reached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub k: usize,
    /// Required count gap between ranks k and k+1.
    pub gap_d: u64,
    pub batch: u64,
    pub m_cap: u64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams {
            k: 10,
            gap_d: 2,
            batch: 100,
            m_cap: 1_000_000,
        }
    }
}

/// Count gap between the k-th and (k+1)-th largest counts; unvisited nodes
/// count as 0.
pub fn rank_gap(counts: &BTreeMap<NodeId, u64>, k: usize) -> u64 {
    let mut vals: Vec<u64> = counts.values().copied().collect();
    vals.sort_unstable_by(|a, b| b.cmp(a));
    let at = |i: usize| vals.get(i).copied().unwrap_or(0);
    at(k - 1) - at(k)
}

/// Runs walks in batches until every node of the current top-k has at least
/// `gap_d` more hits than any node outside it, or `m_cap` walks are spent.
///
/// Batches continue the run numbering, so the outcome at the stopping point
/// equals a plain run with `m = stopped_at_m` and the same seed.
pub fn run_adaptive(
    g: &Graph,
    cfg: &WalkConfig,
    method: WalkMethod,
    params: AdaptiveParams,
    rng_seed: u64,
) -> Result<AdaptiveOutcome> {
    let AdaptiveParams {
        k,
        gap_d,
        batch,
        m_cap,
    } = params;
    if k == 0 || gap_d == 0 || batch == 0 || m_cap == 0 {
        return Err(Error::invalid("k, gap_d, batch and m_cap must all be at least 1"));
    }
    let t = Transitions::new(g, cfg)?;
    let mut counts = BTreeMap::new();
    let mut done = 0u64;
    let mut stopped = false;
    while done < m_cap {
        let next = (done + batch).min(m_cap);
        simulate_into(&t, method, rng_seed, done..next, &mut counts);
        done = next;
        if rank_gap(&counts, k) >= gap_d {
            stopped = true;
            break;
        }
    }
    Ok(AdaptiveOutcome {
        outcome: WalkOutcome {
            method,
            runs: done,
            rng_seed,
            counts,
        },
        stopped_at_m: done,
        cap_reached: !stopped,
    })
}
