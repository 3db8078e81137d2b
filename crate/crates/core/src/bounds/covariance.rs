use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::misrank::pairwise_misrank_clt;
use crate::error::{Error, Result};
use crate::exact::{solve_transitions, PprVector, DEFAULT_TOL};
use crate::graph::{Graph, NodeId, Transitions, WalkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEntry {
    pub s: NodeId,
    pub i: NodeId,
    pub j: NodeId,
    /// Limiting covariance of the per-walk visit counts `N_i`, `N_j`.
    pub value: f64,
}

/// Entries of the Complete Path covariance matrix
/// `Sigma(s) = Omega Z + Z^T Omega - Omega - Z^T e_s e_s^T Z`, with
/// `Omega = diag(z_s.)`, evaluated entrywise from exact solves so `Z` is
/// never formed. Solves are cached per restart node.
pub struct CovarianceModel {
    transitions: Transitions,
    seed: NodeId,
    damping: f64,
    solves: HashMap<NodeId, PprVector>,
}

impl CovarianceModel {
    pub fn new(g: &Graph, cfg: &WalkConfig) -> Result<Self> {
        Ok(CovarianceModel {
            transitions: Transitions::new(g, cfg)?,
            seed: cfg.seed,
            damping: cfg.damping,
            solves: HashMap::new(),
        })
    }

    fn row(&mut self, i: NodeId) -> Result<&PprVector> {
        if i >= self.transitions.node_count() {
            return Err(Error::invalid(format!("node {i} out of range")));
        }
        if !self.solves.contains_key(&i) {
            let v = solve_transitions(&self.transitions, i, DEFAULT_TOL, None)?;
            self.solves.insert(i, v);
        }
        Ok(&self.solves[&i])
    }

    /// Resolvent entry `z_ij`, the expected visits to `j` starting from `i`.
    pub fn z(&mut self, i: NodeId, j: NodeId) -> Result<f64> {
        let c = self.damping;
        let row = self.row(i)?;
        if j >= row.scores.len() {
            return Err(Error::invalid(format!("node {j} out of range")));
        }
        Ok(row.scores[j] / (1.0 - c))
    }

    /// `pi_j(s)` for the model's seed.
    pub fn pi(&mut self, j: NodeId) -> Result<f64> {
        Ok(self.z(self.seed, j)? * (1.0 - self.damping))
    }

    pub fn entry(&mut self, i: NodeId, j: NodeId) -> Result<CovEntry> {
        let s = self.seed;
        let z_si = self.z(s, i)?;
        let z_sj = self.z(s, j)?;
        let z_ij = self.z(i, j)?;
        let z_ji = self.z(j, i)?;
        let delta = if i == j { z_si } else { 0.0 };
        Ok(CovEntry {
            s,
            i,
            j,
            value: z_si * z_ij + z_ji * z_sj - delta - z_si * z_sj,
        })
    }

    /// CLT misranking probability `P{pi_hat_i <= pi_hat_j}` for Complete
    /// Path estimates from `m` walks.
    pub fn pairwise_misrank(&mut self, i: NodeId, j: NodeId, m: u64) -> Result<f64> {
        let scale = (1.0 - self.damping).powi(2);
        let var_i = scale * self.entry(i, i)?.value;
        let var_j = scale * self.entry(j, j)?.value;
        let cov = scale * self.entry(i, j)?.value;
        let (pi_i, pi_j) = (self.pi(i)?, self.pi(j)?);
        pairwise_misrank_clt(pi_i, pi_j, var_i, var_j, cov, m)
    }
}

pub fn covariance_entry(g: &Graph, cfg: &WalkConfig, i: NodeId, j: NodeId) -> Result<CovEntry> {
    CovarianceModel::new(g, cfg)?.entry(i, j)
}
