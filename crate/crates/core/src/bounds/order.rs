use serde::{Deserialize, Serialize};

use super::{check_prob, check_runs, check_sorted};
use crate::error::{Error, Result};
use crate::special::{beta_reg_int, binom_sf, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    Sum,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub m: u64,
    pub r: u64,
    pub k: usize,
    /// 1-based rank of the node whose hits are counted.
    pub j: usize,
    /// `P{X_(rk) <= k}`: at least `r k` of the `m` end points land in the top k.
    pub p_order: f64,
    /// `P{Y_j >= r}` for the binomial hit count of rank `j`.
    pub p_hit: f64,
}

/// `P{X_(s) <= k}` for `m` i.i.d. end-point ranks, given
/// `p_head = P{X <= k}`. The `s`-th smallest rank is in the head exactly
/// when at least `s` draws are.
pub fn order_statistic_cdf(p_head: f64, s: u64, m: u64, mode: OrderMode) -> Result<f64> {
    check_prob("p_head", p_head)?;
    check_runs(m)?;
    if s == 0 || s > m {
        return Err(Error::invalid(format!("s must lie in [1, {m}], got {s}")));
    }
    Ok(match mode {
        OrderMode::Sum => binom_sf(s, m, p_head),
        OrderMode::Beta => beta_reg_int(s, m - s + 1, p_head),
    })
}

/// `P{Y_j >= r}` with `Y_j ~ Bin(m, pi_j)`; zero when `r > m`.
pub fn hit_probability(pi_j: f64, r: u64, m: u64) -> Result<f64> {
    check_prob("pi_j", pi_j)?;
    check_runs(m)?;
    if r == 0 {
        return Err(Error::invalid("r must be at least 1"));
    }
    Ok(binom_sf(r, m, pi_j))
}

/// Order-statistic and hit probabilities for a descending PPR vector.
pub fn detection_report(
    pi_sorted: &[f64],
    k: usize,
    j: usize,
    r: u64,
    m: u64,
    mode: OrderMode,
) -> Result<DetectionReport> {
    let n = pi_sorted.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must lie in [1, {n}], got {k}")));
    }
    if j == 0 || j > n {
        return Err(Error::invalid(format!("j must lie in [1, {n}], got {j}")));
    }
    if k < n {
        check_sorted(pi_sorted, k)?;
    }
    let p_head = pi_sorted[..k]
        .iter()
        .copied()
        .collect::<CompensatedSum>()
        .value()
        .min(1.0);
    let s = r.saturating_mul(k as u64);
    let p_order = if s == 0 || s > m {
        0.0
    } else {
        order_statistic_cdf(p_head, s, m, mode)?
    };
    Ok(DetectionReport {
        m,
        r,
        k,
        j,
        p_order,
        p_hit: hit_probability(pi_sorted[j - 1], r, m)?,
    })
}
