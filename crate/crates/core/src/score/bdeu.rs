//! Dirichlet–multinomial (BDeu) family score and posterior.

use statrs::function::gamma::ln_gamma;

use crate::dataset::CountStats;

/// Per-cell Dirichlet concentration `α / (q·r)`.
pub(crate) fn cell_alpha(ess: f64, stats: &CountStats) -> f64 {
    ess / (stats.n_configs() * stats.arity) as f64
}

/// log ∫ ∏ θ^N Dir(θ | α) dθ summed over parent configurations.
pub(crate) fn log_marginal(ess: f64, stats: &CountStats) -> f64 {
    let a_jk = cell_alpha(ess, stats);
    let a_j = a_jk * stats.arity as f64;
    let lg_a_jk = ln_gamma(a_jk);
    let lg_a_j = ln_gamma(a_j);
    let mut total = 0.0;
    for j in 0..stats.n_configs() {
        let row = stats.config(j);
        let n_j: u64 = row.iter().sum();
        if n_j == 0 {
            continue;
        }
        total += lg_a_j - ln_gamma(a_j + n_j as f64);
        for &n in row {
            if n > 0 {
                total += ln_gamma(a_jk + n as f64) - lg_a_jk;
            }
        }
    }
    total
}

/// Posterior Dirichlet concentrations, row-major by parent configuration.
pub(crate) fn posterior_alpha(ess: f64, stats: &CountStats) -> Vec<f64> {
    let a_jk = cell_alpha(ess, stats);
    stats.counts.iter().map(|&n| a_jk + n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(counts: Vec<u64>) -> CountStats {
        CountStats {
            parent_arities: vec![],
            arity: counts.len(),
            counts,
        }
    }

    #[test]
    fn beta_binomial_closed_forms() {
        // ∫ θ(1−θ) dθ = 1/6 and ∫ θ² dθ = 1/3 under Beta(1, 1)
        assert!((log_marginal(2.0, &root(vec![1, 1])) - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((log_marginal(2.0, &root(vec![2, 0])) - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((-log_marginal(2.0, &root(vec![1, 1])) - 1.79176).abs() < 1e-5);
    }

    #[test]
    fn sequential_predictive_oracle() {
        // chain rule: product of Pólya-urn predictive probabilities
        let counts = vec![3u64, 1, 4];
        let ess = 1.5;
        let a = ess / 3.0;
        let mut seen = [0.0f64; 3];
        let mut logp = 0.0;
        let mut total = 0.0;
        for (k, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                logp += ((a + seen[k]) / (ess + total)).ln();
                seen[k] += 1.0;
                total += 1.0;
            }
        }
        assert!((log_marginal(ess, &root(counts)) - logp).abs() < 1e-12);
    }

    #[test]
    fn conjugate_count_addition() {
        assert_eq!(posterior_alpha(2.0, &root(vec![3, 1])), vec![4.0, 2.0]);
    }
}
