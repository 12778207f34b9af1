//! Normal–inverse-Wishart (BGe) score for Gaussian families.
//!
//! The joint prior over all `d` variables is `Σ ~ IW(α_w, T)` with
//! `μ | Σ ~ N(ν, Σ/α_μ)`; any sub-vector `Y` of `l` variables then has
//! `Σ_YY ~ IW(α_w − d + l, T_YY)`. The family score is
//! `log p(D_{pa ∪ i}) − log p(D_pa)`, which makes Markov-equivalent DAGs
//! score identically.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::dataset::{Feature, GaussianStats};

use super::ContinuousHyper;

/// Log multivariate gamma function Γ_l(a).
pub(crate) fn ln_mv_gamma(l: usize, a: f64) -> f64 {
    let lf = l as f64;
    lf * (lf - 1.0) / 4.0 * PI.ln() + (1..=l).map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0)).sum::<f64>()
}

/// Log-determinant via Cholesky; `None` when not positive definite.
pub(crate) fn ln_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Prior blocks `(T_YY, ν_Y)` for the variables `[features..., target]`.
///
/// Indicator features borrow the mean diagonal of `T` with zero prior mean;
/// a pragmatic treatment of discrete parents under a Gaussian score.
pub(crate) fn prior_blocks(
    hyper: &ContinuousHyper,
    features: &[Feature],
    target: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let l = features.len() + 1;
    let source = |a: usize| -> Option<usize> {
        if a + 1 == l {
            Some(target)
        } else {
            match features[a] {
                Feature::Continuous(c) => Some(c),
                Feature::Indicator { .. } => None,
            }
        }
    };
    let d = hyper.t.nrows();
    let mean_diag = hyper.t.diagonal().sum() / d as f64;
    let t = DMatrix::from_fn(l, l, |a, b| match (source(a), source(b)) {
        (Some(x), Some(y)) => hyper.t[(x, y)],
        _ if a == b => mean_diag,
        _ => 0.0,
    });
    let nu = DVector::from_fn(l, |a, _| source(a).map_or(0.0, |x| hyper.nu[x]));
    (t, nu)
}

/// Posterior scale `R = T + S + (α_μ N / (α_μ + N)) (ν − x̄)(ν − x̄)ᵀ` and
/// posterior mean over `[features..., target]`.
pub(crate) fn posterior_blocks(
    hyper: &ContinuousHyper,
    stats: &GaussianStats,
    target: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let (t, nu) = prior_blocks(hyper, &stats.features, target);
    if stats.n == 0 {
        return (t, nu);
    }
    let n = stats.n as f64;
    let am = hyper.alpha_mu;
    let xbar = DVector::from_vec(stats.means());
    let diff = &nu - &xbar;
    let r = t + stats.scatter() + (am * n / (am + n)) * &diff * diff.transpose();
    let mean = (am * nu + n * xbar) / (am + n);
    (r, mean)
}

/// `log p(D_Y)` for the variable subset `Y = idx` (indices into the family
/// block), given prior and posterior scale blocks.
fn ln_subset(
    idx: &[usize],
    t: &DMatrix<f64>,
    r: &DMatrix<f64>,
    n: f64,
    network_dim: usize,
    hyper: &ContinuousHyper,
) -> Option<f64> {
    let l = idx.len();
    if l == 0 {
        return Some(0.0);
    }
    let lf = l as f64;
    let sub = |m: &DMatrix<f64>| DMatrix::from_fn(l, l, |a, b| m[(idx[a], idx[b])]);
    let df = hyper.alpha_w - network_dim as f64 + lf;
    let am = hyper.alpha_mu;
    Some(
        lf / 2.0 * (am.ln() - (am + n).ln()) - lf * n / 2.0 * PI.ln()
            + ln_mv_gamma(l, (n + df) / 2.0)
            - ln_mv_gamma(l, df / 2.0)
            + df / 2.0 * ln_det_spd(&sub(t))?
            - (n + df) / 2.0 * ln_det_spd(&sub(r))?,
    )
}

/// Family score `log p(D_{pa ∪ target}) − log p(D_pa)`; `None` when a scale
/// block is singular.
pub(crate) fn family_log_marginal(
    hyper: &ContinuousHyper,
    stats: &GaussianStats,
    target: usize,
    network_dim: usize,
) -> Option<f64> {
    let (t, _) = prior_blocks(hyper, &stats.features, target);
    let (r, _) = posterior_blocks(hyper, stats, target);
    let l = stats.dim();
    let all: Vec<usize> = (0..l).collect();
    let n = stats.n as f64;
    let joint = ln_subset(&all, &t, &r, n, network_dim, hyper)?;
    let parents = ln_subset(&all[..l - 1], &t, &r, n, network_dim, hyper)?;
    Some(joint - parents)
}
