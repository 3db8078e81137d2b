//! Analytical accuracy measures for the Monte Carlo estimators: standard
//! deviations, the Complete Path covariance, pairwise and Bonferroni
//! misranking bounds, order-statistic detection probabilities, and the
//! Poissonized relaxation analysis.

mod covariance;
mod misrank;
mod order;
mod relax;
mod variance;

pub use covariance::{covariance_entry, CovEntry, CovarianceModel};
pub use misrank::{
    basket_misrank_bound, bonferroni_basket_bound, list_misrank_bound, multinomial_rho,
    pairwise_misrank_clt, pairwise_misrank_exact, pairwise_misrank_multinomial_clt, BoundKind,
    JStar, MisrankBound, PairwiseModel, MAX_EXACT_M,
};
pub use order::{
    detection_report, hit_probability, order_statistic_cdf, DetectionReport, OrderMode,
};
pub use relax::{
    expected_m0_empirical, expected_m1, poisson_mu, recommended_m, worst_case_tail,
    Recommendation, RelaxationReport,
};
pub use variance::{
    sigma_complete_path, sigma_complete_path_approx, sigma_end_point, variance_report,
    VarianceReport,
};

use crate::error::{Error, Result};

pub(crate) fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")))
    }
}

pub(crate) fn check_runs(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::invalid("number of walks m must be at least 1"))
    } else {
        Ok(())
    }
}

/// Checks a descending probability vector and `1 <= k < n`.
pub(crate) fn check_sorted(pi_sorted: &[f64], k: usize) -> Result<()> {
    let n = pi_sorted.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must lie in [1, {}), got {k}", n)));
    }
    for (i, &p) in pi_sorted.iter().enumerate() {
        check_prob(&format!("pi[{i}]"), p)?;
    }
    if pi_sorted.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("probabilities must be sorted in descending order"));
    }
    Ok(())
}
