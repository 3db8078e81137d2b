use serde::{Deserialize, Serialize};

use super::{check_prob, check_runs};
use crate::error::{Error, Result};
use crate::exact::{solve_transitions, DEFAULT_TOL};
use crate::graph::{Graph, NodeId, Transitions, WalkConfig};
use crate::mc::WalkMethod;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub node: NodeId,
    pub method: WalkMethod,
    /// `sigma * sqrt(m)`, the part of the standard deviation free of `m`.
    pub sigma_per_sqrt_m: f64,
    pub m: Option<u64>,
    pub sigma: Option<f64>,
}

/// Standard deviation of the End Point estimate `L_k / m`.
pub fn sigma_end_point(pi_k: f64, m: u64) -> Result<f64> {
    check_prob("pi_k", pi_k)?;
    check_runs(m)?;
    Ok((pi_k * (1.0 - pi_k) / m as f64).sqrt())
}

fn complete_path_radicand(pi_k_of_s: f64, pi_k_of_k: f64, c: f64) -> Result<f64> {
    check_prob("pi_k(s)", pi_k_of_s)?;
    check_prob("pi_k(k)", pi_k_of_k)?;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("damping must lie in (0, 1), got {c}")));
    }
    let r = pi_k_of_s * (2.0 * pi_k_of_k - (1.0 - c) - pi_k_of_s);
    // tolerate rounding noise from exact solves
    if r < -1e-12 {
        return Err(Error::invalid(format!(
            "inconsistent inputs: negative variance {r} (pi_k(s)={pi_k_of_s}, pi_k(k)={pi_k_of_k}, c={c})"
        )));
    }
    Ok(r.max(0.0))
}

/// Standard deviation of the Complete Path estimate of node `k` from seed
/// `s`, given `pi_k(s)` and the return value `pi_k(k)`.
pub fn sigma_complete_path(pi_k_of_s: f64, pi_k_of_k: f64, c: f64, m: u64) -> Result<f64> {
    check_runs(m)?;
    Ok((complete_path_radicand(pi_k_of_s, pi_k_of_k, c)? / m as f64).sqrt())
}

/// The same with `pi_k(k)` replaced by `1 - c` (walks rarely return).
pub fn sigma_complete_path_approx(pi_k_of_s: f64, c: f64, m: u64) -> Result<f64> {
    sigma_complete_path(pi_k_of_s, 1.0 - c, c, m)
}

/// Analytic standard deviation of either estimator for `node`, from exact
/// solves seeded at `cfg.seed` and (Complete Path) at `node`.
pub fn variance_report(
    g: &Graph,
    cfg: &WalkConfig,
    node: NodeId,
    method: WalkMethod,
    m: Option<u64>,
) -> Result<VarianceReport> {
    let t = Transitions::new(g, cfg)?;
    if node >= g.node_count() {
        return Err(Error::invalid(format!("node {node} out of range")));
    }
    let from_seed = solve_transitions(&t, cfg.seed, DEFAULT_TOL, None)?;
    let pi_s = from_seed.scores[node];
    let sigma_per_sqrt_m = match method {
        WalkMethod::EndPoint => sigma_end_point(pi_s, 1)?,
        WalkMethod::CompletePath => {
            let pi_kk = solve_transitions(&t, node, DEFAULT_TOL, None)?.scores[node];
            sigma_complete_path(pi_s, pi_kk, cfg.damping, 1)?
        }
    };
    Ok(VarianceReport {
        node,
        method,
        sigma_per_sqrt_m,
        m,
        sigma: m.map(|m| sigma_per_sqrt_m / (m as f64).sqrt()),
    })
}
