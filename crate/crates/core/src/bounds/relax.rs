use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_prob, check_runs, check_sorted};
use crate::error::{Error, Result};
use crate::exact::{self, DEFAULT_TOL};
use crate::graph::{Graph, WalkConfig};
use crate::mc::{self, derive_seed, WalkMethod};
use crate::special::{poisson_pmf, poisson_sf, CompensatedSum};
use crate::topk::compare_baskets;

/// Head mass left beyond `y` at which the `E(M1)` series is cut.
const SERIES_CUTOFF: f64 = 1e-12;

/// Tolerance of the hypothesis `pi_(k+1) = (1 - eps) a`.
const HYPOTHESIS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub a: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub k: usize,
    pub pi_k_plus_1: f64,
    /// Smallest integer walk count meeting the sufficient bound and `eps > 1/y`.
    pub m: u64,
    /// Visit threshold `ceil(m a)`.
    pub y: u64,
    /// `mu(y)` evaluated exactly at the recommended `m`.
    pub mu_y: f64,
    /// Whether `mu(y) < alpha k`.
    pub condition_holds: bool,
    /// `mu(y)` was evaluated on the worst-case tail rather than a given one.
    pub worst_case_tail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    /// Poisson mean parameter (expected number of walks).
    pub m: f64,
    pub k: usize,
    pub y: u64,
    pub mu_y: f64,
    pub e_m1: f64,
    pub recommended_m: Option<Recommendation>,
}

impl RelaxationReport {
    pub fn new(pi_sorted: &[f64], k: usize, m: f64, y: u64) -> Result<Self> {
        check_sorted(pi_sorted, k)?;
        Ok(RelaxationReport {
            m,
            k,
            y,
            mu_y: poisson_mu(&pi_sorted[k..], m, y)?,
            e_m1: expected_m1(pi_sorted, k, m)?,
            recommended_m: None,
        })
    }
}

fn check_mean(m: f64) -> Result<()> {
    if m >= 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("m must be finite and non-negative, got {m}")))
    }
}

/// `mu(y) = sum_j P{Poisson(m pi_j) >= y}` over the tail nodes.
pub fn poisson_mu(pi_tail: &[f64], m: f64, y: u64) -> Result<f64> {
    check_mean(m)?;
    let mut sum = CompensatedSum::new();
    for (j, &p) in pi_tail.iter().enumerate() {
        check_prob(&format!("pi_tail[{j}]"), p)?;
        sum.add(poisson_sf(y, m * p));
    }
    Ok(sum.value())
}

/// `E(M1) = k - (1/k) sum_y mu(y) sum_{i<=k} P(Y_i = y)` with independent
/// `Y_i ~ Poisson(m pi_i)`. Not clipped: it is negative when `mu` exceeds
/// `k` over the bulk of the head distribution.
pub fn expected_m1(pi_sorted: &[f64], k: usize, m: f64) -> Result<f64> {
    check_sorted(pi_sorted, k)?;
    check_mean(m)?;
    let head: Vec<f64> = pi_sorted[..k].iter().map(|p| m * p).collect();
    // Head mass below y_lo is under e^-70 for every head node.
    let y_lo = head
        .iter()
        .map(|&l| (l - 12.0 * l.sqrt() - 12.0).max(0.0).floor() as u64)
        .min()
        .unwrap_or(0);

    let mut tail: Vec<f64> = Vec::new();
    let mut mu = CompensatedSum::new();
    for &p in &pi_sorted[k..] {
        let sf = poisson_sf(y_lo, m * p);
        if sf > 0.0 {
            mu.add(sf);
            tail.push(m * p);
        }
    }
    let mut mu_y = mu.value();

    let mut series = CompensatedSum::new();
    let mut head_mass = CompensatedSum::new();
    let mut y = y_lo;
    loop {
        let head_pmf: f64 = head.iter().map(|&l| poisson_pmf(y, l)).sum();
        series.add(mu_y * head_pmf);
        head_mass.add(head_pmf);
        if k as f64 - head_mass.value() < SERIES_CUTOFF || mu_y == 0.0 {
            break;
        }
        let step: f64 = tail
            .iter()
            .map(|&l| poisson_pmf(y, l))
            .collect::<CompensatedSum>()
            .value();
        mu.add(-step);
        mu_y = mu.value().max(0.0);
        // nodes whose mass is spent no longer move mu
        tail.retain(|&l| (y as f64) < l || poisson_pmf(y + 1, l) > 0.0);
        y += 1;
    }
    Ok(k as f64 - series.value() / k as f64)
}

/// Tail that maximizes each Poisson term under `pi_j <= pi_(k+1)` and
/// `sum_j pi_j <= 1`: as many copies of `pi_(k+1)` as fit, plus the rest.
pub fn worst_case_tail(pi_k_plus_1: f64) -> Vec<f64> {
    if pi_k_plus_1 <= 0.0 {
        return Vec::new();
    }
    let copies = (1.0 / pi_k_plus_1).floor() as usize;
    let mut tail = vec![pi_k_plus_1; copies];
    let rest = 1.0 - copies as f64 * pi_k_plus_1;
    if rest > 0.0 {
        tail.push(rest);
    }
    tail
}

/// Walk count `m > 2 a^-1 eps^-2 (-log(eps pi_(k+1) alpha k))` sufficient
/// for `E(M1) > (1 - alpha) k` when every top-k node has at least
/// `y = m a` expected visits and `pi_(k+1) = (1 - eps) a`.
///
/// The condition `mu(y) < alpha k` is rechecked at `y = ceil(m a)` on
/// `tail` when given, else on [`worst_case_tail`].
pub fn recommended_m(
    a: f64,
    epsilon: f64,
    alpha: f64,
    k: usize,
    pi_k_plus_1: f64,
    tail: Option<&[f64]>,
) -> Result<Recommendation> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::invalid(format!("a must lie in (0, 1], got {a}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    check_prob("pi_(k+1)", pi_k_plus_1)?;
    if (pi_k_plus_1 - (1.0 - epsilon) * a).abs() > HYPOTHESIS_TOL {
        return Err(Error::invalid(format!(
            "pi_(k+1) = {pi_k_plus_1} differs from (1 - epsilon) a = {}",
            (1.0 - epsilon) * a
        )));
    }
    let arg = epsilon * pi_k_plus_1 * alpha * k as f64;
    if !(arg > 0.0 && arg < 1.0) {
        return Err(Error::invalid(format!(
            "epsilon * pi_(k+1) * alpha * k must lie in (0, 1), got {arg}"
        )));
    }
    let bound = 2.0 / (a * epsilon * epsilon) * -arg.ln();
    let m = (bound.floor() as u64 + 1).max((1.0 / (epsilon * a)).floor() as u64 + 1);
    let y = (m as f64 * a).ceil() as u64;
    let worst_case = tail.is_none();
    let worst;
    let tail = match tail {
        Some(t) => t,
        None => {
            worst = worst_case_tail(pi_k_plus_1);
            &worst
        }
    };
    let mu_y = poisson_mu(tail, m as f64, y)?;
    Ok(Recommendation {
        a,
        epsilon,
        alpha,
        k,
        pi_k_plus_1,
        m,
        y,
        mu_y,
        condition_holds: mu_y < alpha * k as f64,
        worst_case_tail: worst_case,
    })
}

/// Mean number of true top-k basket members found by End Point estimates
/// from `m` walks, over `trials` independent repetitions. Trial `t` uses the
/// stream seed `derive_seed(rng_seed, t)`.
pub fn expected_m0_empirical(
    g: &Graph,
    cfg: &WalkConfig,
    k: usize,
    m: u64,
    trials: u64,
    rng_seed: u64,
) -> Result<f64> {
    check_runs(m)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let pi = exact::solve_ppr(g, cfg, DEFAULT_TOL, None)?;
    let truth = exact::top_k(&pi, k)?.as_basket();
    let correct = (0..trials)
        .into_par_iter()
        .map(|t| {
            let outcome = mc::run(g, cfg, WalkMethod::EndPoint, m, derive_seed(rng_seed, t))?;
            let est = mc::estimate(&outcome, cfg).top_k(k);
            Ok(compare_baskets(&truth, &est)?.correct as u64)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(correct.iter().sum::<u64>() as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_examples() {
        assert_eq!(poisson_mu(&[], 100.0, 3).unwrap(), 0.0);
        assert_eq!(poisson_mu(&[0.1, 0.2, 0.0], 10.0, 0).unwrap(), 3.0);
        let want = 1.0 - (-2.0f64).exp() * 5.0;
        assert!((poisson_mu(&[0.02], 100.0, 3).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.3233).abs() < 1e-4);
        assert!(poisson_mu(&[0.1], -1.0, 2).is_err());
    }

    #[test]
    fn mu_telescopes() {
        let tail = [0.08, 0.05, 0.05, 0.01, 0.003];
        let m = 140.0;
        for y in 0..40 {
            let a = poisson_mu(&tail, m, y).unwrap();
            let b = poisson_mu(&tail, m, y + 1).unwrap();
            let pmf: f64 = tail.iter().map(|p| poisson_pmf(y, m * p)).sum();
            assert!(b <= a);
            assert!((a - b - pmf).abs() < 1e-13);
        }
    }

    #[test]
    fn m1_limits() {
        let pi = [0.4, 0.3, 0.2, 0.06, 0.04];
        // m = 0: every count is zero, so every tail node ties every head node
        assert!((expected_m1(&pi, 3, 0.0).unwrap() - 1.0).abs() < 1e-12);
        // zero tail: only the all-zero event K'_i = n - k remains
        let pi = [0.5f64, 0.3, 0.2, 0.0, 0.0];
        let m = 7.0f64;
        let zero_head: f64 = pi[..3].iter().map(|p| (-m * p).exp()).sum();
        let want = 3.0 - 2.0 * zero_head / 3.0;
        assert!((expected_m1(&pi, 3, m).unwrap() - want).abs() < 1e-12);
        assert!((expected_m1(&pi, 3, 1e4).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn m1_matches_direct_series() {
        let pi = [0.3, 0.25, 0.15, 0.12, 0.1, 0.05, 0.03];
        let k = 3;
        for m in [5.0, 60.0, 900.0] {
            let mut direct = 0.0;
            for y in 0..3000 {
                let head: f64 = pi[..k].iter().map(|p| poisson_pmf(y, m * p)).sum();
                direct += poisson_mu(&pi[k..], m, y).unwrap() * head;
            }
            let want = k as f64 - direct / k as f64;
            assert!((expected_m1(&pi, k, m).unwrap() - want).abs() < 1e-10, "m={m}");
        }
    }

    #[test]
    fn recommendation_rechecks_condition() {
        let (k, alpha, eps) = (10, 0.2, 0.5);
        let pi_next = 0.01;
        let a = pi_next / (1.0 - eps);
        let rec = recommended_m(a, eps, alpha, k, pi_next, None).unwrap();
        let bound = 2.0 / (a * eps * eps) * -(eps * pi_next * alpha * k as f64).ln();
        assert!(rec.m as f64 > bound && (rec.m as f64) <= bound + 1.0);
        assert!(eps > 1.0 / rec.y as f64);
        assert!(rec.condition_holds);
        assert!(rec.worst_case_tail);
        let tail = [0.01, 0.008, 0.005];
        let rec2 = recommended_m(a, eps, alpha, k, pi_next, Some(&tail)).unwrap();
        assert_eq!(rec2.m, rec.m);
        assert!(!rec2.worst_case_tail && rec2.mu_y <= rec.mu_y);
    }

    #[test]
    fn recommendation_decreases_with_alpha() {
        let a = 0.02 / 0.75;
        let ms: Vec<u64> = [0.1, 0.3, 0.6, 0.9]
            .iter()
            .map(|&alpha| recommended_m(a, 0.25, alpha, 5, 0.02, None).unwrap().m)
            .collect();
        assert!(ms.windows(2).all(|w| w[1] <= w[0]), "{ms:?}");
        assert!(ms[0] > ms[3]);
    }

    #[test]
    fn recommendation_guards() {
        assert!(recommended_m(0.05, 0.5, 0.2, 10, 0.03, None).is_err());
        assert!(recommended_m(0.04, 1.0, 0.2, 10, 0.0, None).is_err());
        assert!(recommended_m(0.04, 0.5, 1.0, 10, 0.02, None).is_err());
        assert!(recommended_m(0.04, 0.5, 0.2, 0, 0.02, None).is_err());
    }

    #[test]
    fn worst_case_tail_has_unit_mass() {
        let t = worst_case_tail(0.3);
        assert_eq!(t.len(), 4);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(worst_case_tail(0.0).is_empty());
    }

    #[test]
    fn m0_guards_and_single_walk() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
        let cfg = WalkConfig::new(0.8, 0);
        assert!(expected_m0_empirical(&g, &cfg, 2, 10, 0, 1).is_err());
        assert!(expected_m0_empirical(&g, &cfg, 2, 1, 200, 1).unwrap() <= 1.0);
        let many = expected_m0_empirical(&g, &cfg, 2, 20_000, 10, 1).unwrap();
        assert!((many - 2.0).abs() < 0.05);
    }
}
