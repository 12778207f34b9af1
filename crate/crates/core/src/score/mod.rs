//! Decomposable marginal likelihood `p(D | G)` with conjugate priors:
//! Dirichlet–multinomial for discrete families, normal–inverse-Wishart for
//! Gaussian ones.

mod bdeu;
mod bge;
mod cache;
mod params;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Dataset, NodeStats, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::graph::{Digraph, NodeSet};

pub use cache::ScoreCache;
pub use params::{
    draw_params, graph_posterior, node_posterior, relative_likelihood, DirichletPosterior,
    NiwPosterior, NodeParams, NodePosterior,
};

/// Normal–inverse-Wishart hyperparameters over all `d` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousHyper {
    pub alpha_mu: f64,
    pub alpha_w: f64,
    pub t: DMatrix<f64>,
    pub nu: DVector<f64>,
}

impl ContinuousHyper {
    pub fn new(alpha_mu: f64, alpha_w: f64, t: DMatrix<f64>, nu: DVector<f64>) -> Result<Self> {
        let h = ContinuousHyper {
            alpha_mu,
            alpha_w,
            t,
            nu,
        };
        h.validate()?;
        Ok(h)
    }

    /// `ν = 0`, `α_μ = 1`, `α_w = d + 2` and `T` chosen so the prior
    /// predictive covariance is the identity.
    pub fn default_for(d: usize) -> Self {
        let alpha_mu = 1.0;
        let alpha_w = d as f64 + 2.0;
        let scale = alpha_mu * (alpha_w - d as f64 - 1.0) / (alpha_mu + 1.0);
        ContinuousHyper {
            alpha_mu,
            alpha_w,
            t: DMatrix::identity(d, d) * scale,
            nu: DVector::zeros(d),
        }
    }

    pub fn d(&self) -> usize {
        self.t.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.t.nrows();
        if self.t.ncols() != d || self.nu.len() != d {
            return Err(Error::config("T must be d×d and ν of length d"));
        }
        if !(self.alpha_mu > 0.0) {
            return Err(Error::config("alpha_mu must be positive"));
        }
        if !(self.alpha_w > d as f64 - 1.0) {
            return Err(Error::config(format!("alpha_w must exceed d − 1 = {}", d as f64 - 1.0)));
        }
        if (&self.t - self.t.transpose()).abs().max() > 1e-12 || self.t.clone().cholesky().is_none() {
            return Err(Error::config("T must be symmetric positive definite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteHyper {
    pub ess: f64,
}

impl Default for DiscreteHyper {
    fn default() -> Self {
        DiscreteHyper { ess: 1.0 }
    }
}

/// All scoring hyperparameters for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHyper {
    pub continuous: ContinuousHyper,
    pub discrete: DiscreteHyper,
    /// Equal-frequency bins for continuous parents of discrete children.
    pub bins: usize,
}

impl ScoreHyper {
    pub fn default_for(d: usize) -> Self {
        ScoreHyper {
            continuous: ContinuousHyper::default_for(d),
            discrete: DiscreteHyper::default(),
            bins: DEFAULT_BINS,
        }
    }

    /// Applies optional overrides from a run configuration.
    pub fn from_config(cfg: &HyperConfig, d: usize) -> Result<Self> {
        let mut h = ScoreHyper::default_for(d);
        if let Some(am) = cfg.alpha_mu {
            h.continuous.alpha_mu = am;
        }
        if let Some(aw) = cfg.alpha_w {
            h.continuous.alpha_w = aw;
        }
        let c = &h.continuous;
        let scale = cfg
            .t_scale
            .unwrap_or(c.alpha_mu * (c.alpha_w - d as f64 - 1.0) / (c.alpha_mu + 1.0));
        h.continuous.t = DMatrix::identity(d, d) * scale;
        if let Some(ess) = cfg.ess {
            h.discrete.ess = ess;
        }
        if let Some(bins) = cfg.bins {
            h.bins = bins;
        }
        h.validate(d)?;
        Ok(h)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        self.continuous.validate()?;
        if self.continuous.d() != d {
            return Err(Error::invalid(format!(
                "hyperparameters are for {} variables, data has {d}",
                self.continuous.d()
            )));
        }
        if !(self.discrete.ess > 0.0) {
            return Err(Error::config("ess must be positive"));
        }
        if self.bins < 2 {
            return Err(Error::config("bins must be at least 2"));
        }
        Ok(())
    }

    /// Stable digest used in cache keys.
    pub fn digest(&self) -> u64 {
        let mut h = Sha256::new();
        let c = &self.continuous;
        for v in [c.alpha_mu, c.alpha_w, self.discrete.ess]
            .iter()
            .chain(c.t.iter())
            .chain(c.nu.iter())
        {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update((self.bins as u64).to_le_bytes());
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("sha256 digest has 32 bytes"))
    }
}

/// Optional hyperparameter overrides as they appear in a run config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub alpha_mu: Option<f64>,
    pub alpha_w: Option<f64>,
    /// Diagonal of `T`; derived from `alpha_mu`/`alpha_w` when absent.
    pub t_scale: Option<f64>,
    pub ess: Option<f64>,
    pub bins: Option<usize>,
}

pub(crate) fn family_name(ds: &Dataset, target: usize, parents: NodeSet) -> String {
    let pa: Vec<&str> = parents.iter().map(|p| ds.meta(p).name.as_str()).collect();
    format!("{} <- {{{}}}", ds.meta(target).name, pa.join(", "))
}

/// Closed-form log marginal likelihood of one family, uncached.
pub fn node_log_marginal(
    ds: &Dataset,
    target: usize,
    parents: NodeSet,
    hyper: &ScoreHyper,
) -> Result<f64> {
    hyper.validate(ds.d())?;
    let v = match ds.sufficient_stats(target, parents, hyper.bins)? {
        NodeStats::Counts(s) => bdeu::log_marginal(hyper.discrete.ess, &s),
        NodeStats::Gaussian(s) => bge::family_log_marginal(&hyper.continuous, &s, target, ds.d())
            .ok_or_else(|| Error::Singular {
                family: family_name(ds, target, parents),
            })?,
    };
    if !v.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite score for family {}",
            family_name(ds, target, parents)
        )));
    }
    Ok(v)
}

/// `Σ_i node_log_marginal(i, parents(i))`, uncached.
pub fn log_marginal_likelihood(g: &Digraph, ds: &Dataset, hyper: &ScoreHyper) -> Result<f64> {
    check_dims(g, ds)?;
    (0..g.d())
        .map(|i| node_log_marginal(ds, i, g.parents_of(i), hyper))
        .sum()
}

fn check_dims(g: &Digraph, ds: &Dataset) -> Result<()> {
    if g.d() != ds.d() {
        return Err(Error::invalid(format!(
            "graph has {} nodes, data has {} columns",
            g.d(),
            ds.d()
        )));
    }
    Ok(())
}

/// Cached family scorer bound to one dataset and hyperparameter set. Safe to
/// share across threads.
#[derive(Debug)]
pub struct Scorer<'a> {
    ds: &'a Dataset,
    hyper: ScoreHyper,
    digest: u64,
    cache: ScoreCache,
}

impl<'a> Scorer<'a> {
    pub fn new(ds: &'a Dataset, hyper: ScoreHyper) -> Result<Self> {
        Self::with_cache(ds, hyper, ScoreCache::default())
    }

    pub fn with_cache(ds: &'a Dataset, hyper: ScoreHyper, cache: ScoreCache) -> Result<Self> {
        hyper.validate(ds.d())?;
        let digest = hyper.digest();
        Ok(Scorer {
            ds,
            hyper,
            digest,
            cache,
        })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }

    pub fn hyper(&self) -> &ScoreHyper {
        &self.hyper
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    pub fn family(&self, target: usize, parents: NodeSet) -> Result<f64> {
        let key = cache::CacheKey {
            fingerprint: self.ds.fingerprint(),
            target,
            parents: parents.bits(),
            hyper: self.digest,
        };
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = node_log_marginal(self.ds, target, parents, &self.hyper)?;
        self.cache.insert(key, v);
        Ok(v)
    }

    pub fn log_marginal_likelihood(&self, g: &Digraph) -> Result<f64> {
        check_dims(g, self.ds)?;
        (0..g.d()).map(|i| self.family(i, g.parents_of(i))).sum()
    }
}
