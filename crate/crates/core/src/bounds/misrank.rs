use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_prob, check_runs, check_sorted};
use crate::error::{Error, Result};
use crate::special::{binom_pmf, binom_sf, normal_sf, CompensatedSum};

/// Largest `m` accepted by the exact trinomial evaluation.
pub const MAX_EXACT_M: u64 = 500;

/// Longest stretch of tail ranks scanned when choosing `j*` automatically.
const J_STAR_SCAN: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    PairwiseExactMultinomial,
    PairwiseClt,
    BasketBonferroni,
    ListBonferroni,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseModel {
    Exact,
    Clt,
}

/// Split point of the basket bound, as a 1-based rank in `k+1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JStar {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisrankBound {
    pub kind: BoundKind,
    /// Bound clipped to `[0, 1]`.
    pub value: f64,
    pub unclipped: f64,
    pub k: Option<usize>,
    pub m: u64,
    pub j_star: Option<usize>,
}

/// `P{L_i <= L_j}` for the End Point counts of two nodes after `m` walks,
/// summed exactly over the trinomial law of `(L_i, L_j)`.
pub fn pairwise_misrank_exact(pi_i: f64, pi_j: f64, m: u64) -> Result<f64> {
    check_prob("pi_i", pi_i)?;
    check_prob("pi_j", pi_j)?;
    check_runs(m)?;
    let q = pi_i + pi_j;
    if q > 1.0 + 1e-12 {
        return Err(Error::invalid(format!("pi_i + pi_j must not exceed 1, got {q}")));
    }
    if m > MAX_EXACT_M {
        return Err(Error::invalid(format!(
            "exact evaluation is limited to m <= {MAX_EXACT_M}; use the CLT form for m = {m}"
        )));
    }
    if q == 0.0 {
        return Ok(1.0);
    }
    let q = q.min(1.0);
    // Condition on t = L_i + L_j ~ Bin(m, q); then L_i ~ Bin(t, pi_i / q).
    let p = (pi_i / q).min(1.0);
    let mut sum = CompensatedSum::new();
    for t in 0..=m {
        let w = binom_pmf(t, m, q);
        if w == 0.0 {
            continue;
        }
        let at_most_half = 1.0 - binom_sf(t / 2 + 1, t, p);
        sum.add(w * at_most_half);
    }
    Ok(sum.value().clamp(0.0, 1.0))
}

/// `1 - Phi(sqrt(m) rho)` with
/// `rho = (mean_i - mean_j) / sqrt(var_i - 2 cov_ij + var_j)`, the per-walk
/// moments of the two estimators.
pub fn pairwise_misrank_clt(
    mean_i: f64,
    mean_j: f64,
    var_i: f64,
    var_j: f64,
    cov_ij: f64,
    m: u64,
) -> Result<f64> {
    check_runs(m)?;
    let denom = var_i - 2.0 * cov_ij + var_j;
    if !(denom > 0.0) {
        return Err(Error::invalid(format!(
            "degenerate pair: variance of the difference is {denom}"
        )));
    }
    let rho = (mean_i - mean_j) / denom.sqrt();
    Ok(normal_sf((m as f64).sqrt() * rho))
}

/// `rho_ij` for End Point counts. Infinite when the difference has no
/// variance and `pi_i > pi_j`.
pub fn multinomial_rho(pi_i: f64, pi_j: f64) -> Result<f64> {
    check_prob("pi_i", pi_i)?;
    check_prob("pi_j", pi_j)?;
    let denom = pi_i * (1.0 - pi_i) + 2.0 * pi_i * pi_j + pi_j * (1.0 - pi_j);
    if denom > 0.0 {
        Ok((pi_i - pi_j) / denom.sqrt())
    } else if pi_i > pi_j {
        Ok(f64::INFINITY)
    } else {
        Err(Error::invalid(format!(
            "degenerate pair: pi_i = {pi_i}, pi_j = {pi_j}"
        )))
    }
}

/// CLT form of `P{L_i <= L_j}` for End Point counts.
pub fn pairwise_misrank_multinomial_clt(pi_i: f64, pi_j: f64, m: u64) -> Result<f64> {
    check_runs(m)?;
    match multinomial_rho(pi_i, pi_j) {
        Ok(rho) => Ok(normal_sf((m as f64).sqrt() * rho)),
        // both counts are deterministic and equal
        Err(_) => Ok(1.0),
    }
}

fn pairwise(model: PairwiseModel, pi_i: f64, pi_j: f64, m: u64) -> Result<f64> {
    match model {
        PairwiseModel::Exact => pairwise_misrank_exact(pi_i, pi_j, m),
        PairwiseModel::Clt => pairwise_misrank_multinomial_clt(pi_i, pi_j, m),
    }
}

fn check_gap(pi_sorted: &[f64], k: usize) -> Result<()> {
    if pi_sorted[k - 1] == pi_sorted[k] {
        return Err(Error::IllPosed(format!(
            "pi_k = pi_(k+1) = {}: the top-{k} basket is not unique",
            pi_sorted[k]
        )));
    }
    Ok(())
}

fn clipped(kind: BoundKind, raw: f64, k: usize, m: u64, j_star: Option<usize>) -> MisrankBound {
    MisrankBound {
        kind,
        value: raw.clamp(0.0, 1.0),
        unclipped: raw,
        k: Some(k),
        m,
        j_star,
    }
}

/// Bonferroni bound on the probability that the estimated top-k basket is
/// wrong: `sum_{i<=k<j} P{L_i <= L_j}`.
pub fn bonferroni_basket_bound(
    pi_sorted: &[f64],
    k: usize,
    m: u64,
    model: PairwiseModel,
) -> Result<MisrankBound> {
    check_sorted(pi_sorted, k)?;
    check_runs(m)?;
    check_gap(pi_sorted, k)?;
    let mut sum = CompensatedSum::new();
    for &pi_i in &pi_sorted[..k] {
        for &pi_j in &pi_sorted[k..] {
            sum.add(pairwise(model, pi_i, pi_j, m)?);
        }
    }
    Ok(clipped(BoundKind::BasketBonferroni, sum.value(), k, m, None))
}

/// Bonferroni basket bound with the tail beyond rank `j*` replaced by the
/// Gaussian bound at `rho_{i j*}`:
///
/// `sum_{i<=k} sum_{k<j<=j*} Q(sqrt(m) rho_ij)
///  + (n - j*) / sqrt(2 pi) sum_{i<=k} exp(-rho_{i j*}^2 m / 2)`.
pub fn basket_misrank_bound(
    pi_sorted: &[f64],
    k: usize,
    m: u64,
    j_star: JStar,
) -> Result<MisrankBound> {
    check_sorted(pi_sorted, k)?;
    check_runs(m)?;
    check_gap(pi_sorted, k)?;
    let n = pi_sorted.len();
    let (lo, hi) = match j_star {
        JStar::Auto => (k + 1, n.min(k + J_STAR_SCAN)),
        JStar::Fixed(j) if j > k && j <= n => (j, j),
        JStar::Fixed(j) => {
            return Err(Error::invalid(format!(
                "j* must lie in [{}, {n}], got {j}",
                k + 1
            )))
        }
    };
    let mf = m as f64;
    let head = &pi_sorted[..k];
    let mut near = CompensatedSum::new();
    for &pi_j in &pi_sorted[k..lo - 1] {
        for &pi_i in head {
            near.add(normal_sf(mf.sqrt() * multinomial_rho(pi_i, pi_j)?));
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for js in lo..=hi {
        let pi_js = pi_sorted[js - 1];
        let mut tail = CompensatedSum::new();
        for &pi_i in head {
            let rho = multinomial_rho(pi_i, pi_js)?;
            near.add(normal_sf(mf.sqrt() * rho));
            tail.add((-rho * rho * mf / 2.0).exp());
        }
        let total = near.value() + (n - js) as f64 / (2.0 * PI).sqrt() * tail.value();
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, js));
        }
    }
    let (raw, js) = best.expect("scan range is nonempty");
    Ok(clipped(BoundKind::BasketBonferroni, raw, k, m, Some(js)))
}

/// Bonferroni bound on the probability that the estimated top-k list is
/// wrong: adjacent pairs inside the list plus rank `k` against the tail.
pub fn list_misrank_bound(pi_sorted: &[f64], k: usize, m: u64) -> Result<MisrankBound> {
    check_sorted(pi_sorted, k)?;
    check_runs(m)?;
    if let Some(i) = (0..k).find(|&i| pi_sorted[i] == pi_sorted[i + 1]) {
        return Err(Error::IllPosed(format!(
            "pi at ranks {} and {} tie: the top-{k} list is not unique",
            i + 1,
            i + 2
        )));
    }
    let mut sum = CompensatedSum::new();
    for w in pi_sorted[..k].windows(2) {
        sum.add(pairwise_misrank_multinomial_clt(w[0], w[1], m)?);
    }
    for &pi_j in &pi_sorted[k..] {
        sum.add(pairwise_misrank_multinomial_clt(pi_sorted[k - 1], pi_j, m)?);
    }
    Ok(clipped(BoundKind::ListBonferroni, sum.value(), k, m, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_single_walk() {
        // outcomes: i (0.3), j (0.2), neither (0.5); L_i <= L_j unless i is hit
        let p = pairwise_misrank_exact(0.3, 0.2, 1).unwrap();
        assert!((p - 0.7).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_brute_force_trinomial() {
        let (a, b, m) = (0.13f64, 0.09f64, 25u64);
        let ln_fact = |n: u64| (1..=n).map(|x| (x as f64).ln()).sum::<f64>();
        let mut want = 0.0;
        for li in 0..=m {
            for lj in li..=m - li {
                let rest = m - li - lj;
                want += (ln_fact(m) - ln_fact(li) - ln_fact(lj) - ln_fact(rest)
                    + li as f64 * a.ln()
                    + lj as f64 * b.ln()
                    + rest as f64 * (1.0 - a - b).ln())
                .exp();
            }
        }
        assert!((pairwise_misrank_exact(a, b, m).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn exact_edge_cases() {
        assert!(pairwise_misrank_exact(0.2, 0.2, 40).unwrap() >= 0.5);
        assert_eq!(pairwise_misrank_exact(0.0, 0.0, 10).unwrap(), 1.0);
        assert!(pairwise_misrank_exact(1.0, 0.0, 10).unwrap() < 1e-15);
        assert!(pairwise_misrank_exact(0.6, 0.5, 10).is_err());
        assert!(pairwise_misrank_exact(0.1, 0.05, MAX_EXACT_M + 1).is_err());
    }

    #[test]
    fn clt_values() {
        assert!((pairwise_misrank_clt(0.3, 0.3, 0.1, 0.1, 0.0, 50).unwrap() - 0.5).abs() < 1e-15);
        // sqrt(m) rho = 1.2816 sits at the 90% normal quantile
        let p = pairwise_misrank_clt(1.2816, 0.0, 0.5, 0.5, 0.0, 1).unwrap();
        assert!((p - 0.10).abs() < 1e-4);
        assert!(pairwise_misrank_clt(0.2, 0.1, 0.1, 0.1, 0.1, 10).is_err());
        let mut last = 1.0;
        for m in [1, 10, 100, 1000] {
            let p = pairwise_misrank_multinomial_clt(0.05, 0.04, m).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn exact_and_clt_agree_at_moderate_m() {
        let exact = pairwise_misrank_exact(0.05, 0.02, 500).unwrap();
        let clt = pairwise_misrank_multinomial_clt(0.05, 0.02, 500).unwrap();
        assert!((exact - clt).abs() <= 0.02, "{exact} vs {clt}");
    }

    #[test]
    fn last_split_point_reduces_to_bonferroni() {
        let pi = [0.4, 0.25, 0.2, 0.1, 0.05];
        let split = basket_misrank_bound(&pi, 4, 30, JStar::Auto).unwrap();
        assert_eq!(split.j_star, Some(5));
        let plain = bonferroni_basket_bound(&pi, 4, 30, PairwiseModel::Clt).unwrap();
        assert!((split.unclipped - plain.unclipped).abs() < 1e-14);
    }

    #[test]
    fn auto_split_is_no_worse_than_fixed() {
        let pi: Vec<f64> = (0..40).map(|i| 0.5f64.powi(i + 1)).collect();
        let auto = basket_misrank_bound(&pi, 3, 2000, JStar::Auto).unwrap();
        for j in 4..=40 {
            let fixed = basket_misrank_bound(&pi, 3, 2000, JStar::Fixed(j)).unwrap();
            assert!(auto.unclipped <= fixed.unclipped + 1e-15);
        }
        assert!(basket_misrank_bound(&pi, 3, 2000, JStar::Fixed(3)).is_err());
        assert!(basket_misrank_bound(&pi, 3, 2000, JStar::Fixed(41)).is_err());
    }

    #[test]
    fn ties_are_ill_posed() {
        let pi = [0.4, 0.2, 0.2, 0.1];
        assert!(matches!(
            basket_misrank_bound(&pi, 2, 100, JStar::Auto),
            Err(Error::IllPosed(_))
        ));
        assert!(matches!(
            list_misrank_bound(&pi, 2, 100),
            Err(Error::IllPosed(_))
        ));
        assert!(basket_misrank_bound(&pi, 1, 100, JStar::Auto).is_ok());
    }

    #[test]
    fn list_with_k_one_is_basket_bonferroni() {
        let pi = [0.5, 0.2, 0.15, 0.1, 0.05];
        let list = list_misrank_bound(&pi, 1, 40).unwrap();
        let basket = bonferroni_basket_bound(&pi, 1, 40, PairwiseModel::Clt).unwrap();
        assert!((list.unclipped - basket.unclipped).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(basket_misrank_bound(&[0.1, 0.5], 1, 10, JStar::Auto).is_err());
        assert!(basket_misrank_bound(&[0.5, 0.1], 2, 10, JStar::Auto).is_err());
        assert!(basket_misrank_bound(&[0.5, 0.1], 1, 0, JStar::Auto).is_err());
        assert!(list_misrank_bound(&[0.5, 0.1], 0, 10).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn distribution() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(0.01f64..1.0, 3..12).prop_map(|w| {
                let total: f64 = w.iter().sum();
                let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
                p.sort_unstable_by(|a, b| b.total_cmp(a));
                p
            })
        }

        proptest! {
            #[test]
            fn bounds_in_unit_interval_and_monotone_in_m(
                pi in distribution(), k_frac in 0.0f64..1.0, m in 1u64..5000
            ) {
                let k = 1 + ((pi.len() - 1) as f64 * k_frac) as usize % (pi.len() - 1);
                prop_assume!(pi[k - 1] > pi[k]);
                let a = basket_misrank_bound(&pi, k, m, JStar::Auto).unwrap();
                let b = basket_misrank_bound(&pi, k, 2 * m, JStar::Auto).unwrap();
                prop_assert!((0.0..=1.0).contains(&a.value));
                prop_assert!(b.unclipped <= a.unclipped + 1e-12);
            }

            #[test]
            fn exact_pairwise_in_unit_interval(
                a in 0.0f64..0.5, b in 0.0f64..0.5, m in 1u64..200
            ) {
                let p = pairwise_misrank_exact(a, b, m).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                if a == b {
                    prop_assert!(p >= 0.5 - 1e-12);
                }
            }
        }
    }
}
