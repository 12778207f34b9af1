//! Conjugate parameter posteriors, posterior draws and relative likelihood.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{bin_of, ColumnKind, Dataset, Feature, NodeStats};
use crate::error::{Error, Result};
use crate::graph::{Digraph, NodeSet};

use super::{bdeu, bge, family_name, ScoreHyper};

/// Parameters of one node's conditional distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NodeParams {
    /// `x = intercept + Σ coefs·features + sigma·U`, `U ~ N(0, 1)`.
    Linear {
        intercept: f64,
        coefs: Vec<f64>,
        sigma: f64,
        #[serde(default)]
        features: Vec<Feature>,
    },
    /// One probability row per parent configuration (lowest parent index
    /// varies fastest). `bin_edges[k]` is non-empty when parent `k` is a
    /// continuous column that gets binned.
    Table {
        #[serde(default)]
        parent_arities: Vec<usize>,
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        bin_edges: Vec<Vec<f64>>,
    },
}

impl NodeParams {
    pub fn validate(&self, tol: f64) -> Result<()> {
        match self {
            NodeParams::Linear {
                intercept,
                coefs,
                sigma,
                features,
            } => {
                if !(*sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::invalid(format!("noise sd {sigma} must be positive")));
                }
                if !intercept.is_finite() || coefs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("non-finite regression coefficient"));
                }
                if !features.is_empty() && features.len() != coefs.len() {
                    return Err(Error::invalid("coefficients and features differ in length"));
                }
            }
            NodeParams::Table {
                parent_arities,
                rows,
                bin_edges,
            } => {
                let q: usize = parent_arities.iter().product();
                if rows.len() != q {
                    return Err(Error::invalid(format!(
                        "table has {} rows, parent configurations need {q}",
                        rows.len()
                    )));
                }
                if !bin_edges.is_empty() && bin_edges.len() != parent_arities.len() {
                    return Err(Error::invalid("bin_edges must align with parents"));
                }
                let r = rows.first().map_or(0, Vec::len);
                for row in rows {
                    if row.len() != r || r == 0 {
                        return Err(Error::invalid("ragged probability table"));
                    }
                    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(Error::invalid("probability outside [0, 1]"));
                    }
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > tol {
                        return Err(Error::invalid(format!("table row sums to {s}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Conditional mean of a linear node given raw values of all columns.
    pub fn linear_mean(&self, values: &[f64]) -> Option<f64> {
        match self {
            NodeParams::Linear {
                intercept,
                coefs,
                features,
                ..
            } => Some(
                intercept
                    + coefs
                        .iter()
                        .zip(features)
                        .map(|(c, f)| c * f.of(values[f.column()]))
                        .sum::<f64>(),
            ),
            NodeParams::Table { .. } => None,
        }
    }

    /// Row index of a table node given raw parent values (ascending parent
    /// order).
    pub fn table_row(&self, parent_values: &[f64]) -> Option<usize> {
        match self {
            NodeParams::Table {
                parent_arities,
                bin_edges,
                ..
            } => {
                let mut idx = 0;
                let mut stride = 1;
                for (k, (&v, &a)) in parent_values.iter().zip(parent_arities).enumerate() {
                    let code = match bin_edges.get(k) {
                        Some(e) if !e.is_empty() => bin_of(e, v),
                        _ => v as usize,
                    };
                    idx += code.min(a - 1) * stride;
                    stride *= a;
                }
                Some(idx)
            }
            NodeParams::Linear { .. } => None,
        }
    }

    /// Fills in default regression features for a hand-written linear node.
    pub fn with_default_features(mut self, ds_kinds: &[ColumnKind], parents: NodeSet) -> Self {
        if let NodeParams::Linear { features, .. } = &mut self {
            if features.is_empty() {
                for p in parents.iter() {
                    match ds_kinds[p] {
                        ColumnKind::Continuous => features.push(Feature::Continuous(p)),
                        ColumnKind::Discrete(k) => features
                            .extend((1..k).map(|level| Feature::Indicator { column: p, level })),
                    }
                }
            }
        }
        self
    }
}

/// Dirichlet posterior over a conditional probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPosterior {
    pub parent_arities: Vec<usize>,
    pub arity: usize,
    /// Concentrations, row-major by parent configuration.
    pub alpha: Vec<f64>,
    pub bin_edges: Vec<Vec<f64>>,
}

impl DirichletPosterior {
    pub fn mean_rows(&self) -> Vec<Vec<f64>> {
        self.alpha
            .chunks(self.arity)
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|a| a / s).collect()
            })
            .collect()
    }

    pub fn mean_params(&self) -> NodeParams {
        NodeParams::Table {
            parent_arities: self.parent_arities.clone(),
            rows: self.mean_rows(),
            bin_edges: self.bin_edges.clone(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeParams {
        let rows = self
            .alpha
            .chunks(self.arity)
            .map(|row| {
                let mut g: Vec<f64> = row
                    .iter()
                    .map(|&a| Gamma::new(a, 1.0).expect("positive concentration").sample(rng))
                    .collect();
                let s: f64 = g.iter().sum();
                if s > 0.0 && s.is_finite() {
                    g.iter_mut().for_each(|v| *v /= s);
                } else {
                    // every gamma variate underflowed: fall back to the mean
                    let t: f64 = row.iter().sum();
                    g = row.iter().map(|a| a / t).collect();
                }
                g
            })
            .collect();
        NodeParams::Table {
            parent_arities: self.parent_arities.clone(),
            rows,
            bin_edges: self.bin_edges.clone(),
        }
    }
}

/// Normal–inverse-Wishart posterior over `[features..., target]`:
/// `Σ ~ IW(df, scale)`, `μ | Σ ~ N(mean, Σ / kappa)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPosterior {
    pub features: Vec<Feature>,
    pub kappa: f64,
    pub df: f64,
    pub mean: DVector<f64>,
    pub scale: DMatrix<f64>,
}

impl NiwPosterior {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn regression(&self, sigma: &DMatrix<f64>, mu: &DVector<f64>) -> Option<NodeParams> {
        let l = self.dim();
        let p = l - 1;
        let spp = sigma.view((0, 0), (p, p)).into_owned();
        let spt = sigma.view((0, p), (p, 1)).into_owned();
        let b = if p == 0 {
            DVector::zeros(0)
        } else {
            spp.cholesky()?.solve(&spt).column(0).into_owned()
        };
        let var = sigma[(p, p)] - (spt.transpose() * &b)[(0, 0)];
        if !(var > 0.0) {
            return None;
        }
        let intercept = mu[p] - (0..p).map(|k| b[k] * mu[k]).sum::<f64>();
        Some(NodeParams::Linear {
            intercept,
            coefs: b.iter().copied().collect(),
            sigma: var.sqrt(),
            features: self.features.clone(),
        })
    }

    /// Posterior-mean regression: coefficients `R_pp⁻¹ R_pt`, noise variance
    /// the mean of its inverse-gamma marginal.
    pub fn mean_params(&self) -> Option<NodeParams> {
        let l = self.dim() as f64;
        let shape_df = self.df - l + 1.0;
        let denom = if shape_df > 2.0 { shape_df - 2.0 } else { shape_df };
        let mut params = self.regression(&self.scale, &self.mean)?;
        if let NodeParams::Linear { sigma, .. } = &mut params {
            *sigma = (*sigma * *sigma / denom).sqrt();
        }
        Some(params)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<NodeParams> {
        let l = self.dim();
        // Σ = W⁻¹ with W ~ Wishart(df, scale⁻¹) via the Bartlett decomposition
        let prec = self.scale.clone().cholesky()?.inverse();
        let lp = prec.cholesky()?.l();
        let mut a = DMatrix::<f64>::zeros(l, l);
        for i in 0..l {
            let chi = ChiSquared::new(self.df - i as f64).ok()?;
            a[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let la = lp * a;
        let w = &la * la.transpose();
        let sigma = w.cholesky()?.inverse();
        let cov_l = (&sigma / self.kappa).cholesky()?.l();
        let z = DVector::from_fn(l, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mu = &self.mean + cov_l * z;
        self.regression(&sigma, &mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodePosterior {
    Gaussian(NiwPosterior),
    Categorical(DirichletPosterior),
}

impl NodePosterior {
    pub fn mean_params(&self) -> Result<NodeParams> {
        match self {
            NodePosterior::Categorical(p) => Ok(p.mean_params()),
            NodePosterior::Gaussian(p) => p
                .mean_params()
                .ok_or_else(|| Error::Numerical("posterior mean scale is not positive definite".into())),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NodeParams> {
        match self {
            NodePosterior::Categorical(p) => Ok(p.draw(rng)),
            NodePosterior::Gaussian(p) => p
                .draw(rng)
                .ok_or_else(|| Error::Numerical("inverse-Wishart draw failed".into())),
        }
    }
}

/// Conjugate posterior of one family's parameters.
pub fn node_posterior(
    ds: &Dataset,
    target: usize,
    parents: NodeSet,
    hyper: &ScoreHyper,
) -> Result<NodePosterior> {
    hyper.validate(ds.d())?;
    match ds.sufficient_stats(target, parents, hyper.bins)? {
        NodeStats::Counts(s) => {
            let bin_edges = parents
                .iter()
                .map(|p| match ds.kind(p) {
                    ColumnKind::Continuous => ds.bin_edges(p, hyper.bins),
                    ColumnKind::Discrete(_) => Vec::new(),
                })
                .collect();
            Ok(NodePosterior::Categorical(DirichletPosterior {
                alpha: bdeu::posterior_alpha(hyper.discrete.ess, &s),
                parent_arities: s.parent_arities,
                arity: s.arity,
                bin_edges,
            }))
        }
        NodeStats::Gaussian(s) => {
            let c = &hyper.continuous;
            let (scale, mean) = bge::posterior_blocks(c, &s, target);
            if bge::ln_det_spd(&scale).is_none() {
                return Err(Error::Singular {
                    family: family_name(ds, target, parents),
                });
            }
            let n = s.n as f64;
            Ok(NodePosterior::Gaussian(NiwPosterior {
                kappa: c.alpha_mu + n,
                df: c.alpha_w + n - ds.d() as f64 + s.dim() as f64,
                mean,
                scale,
                features: s.features,
            }))
        }
    }
}

/// Posteriors of every node of `g`.
pub fn graph_posterior(g: &Digraph, ds: &Dataset, hyper: &ScoreHyper) -> Result<Vec<NodePosterior>> {
    if g.d() != ds.d() {
        return Err(Error::invalid(format!(
            "graph has {} nodes, data has {} columns",
            g.d(),
            ds.d()
        )));
    }
    (0..g.d())
        .map(|i| node_posterior(ds, i, g.parents_of(i), hyper))
        .collect()
}

/// One joint posterior draw of all node parameters given `g`.
pub fn draw_params<R: Rng + ?Sized>(
    g: &Digraph,
    ds: &Dataset,
    hyper: &ScoreHyper,
    rng: &mut R,
) -> Result<Vec<NodeParams>> {
    graph_posterior(g, ds, hyper)?
        .iter()
        .map(|p| p.draw(rng))
        .collect()
}

/// `L(θ) / L(θ̂)` for one family, `θ̂` the maximum-likelihood estimate.
pub fn relative_likelihood(
    theta: &NodeParams,
    ds: &Dataset,
    target: usize,
    parents: NodeSet,
    bins: usize,
) -> Result<f64> {
    theta.validate(1e-9)?;
    match (theta, ds.sufficient_stats(target, parents, bins)?) {
        (NodeParams::Table { rows, .. }, NodeStats::Counts(s)) => {
            if rows.len() != s.n_configs() || rows[0].len() != s.arity {
                return Err(Error::invalid("table shape does not match the family"));
            }
            let mut log_ratio = 0.0;
            for (j, row) in rows.iter().enumerate() {
                let counts = s.config(j);
                let n_j: u64 = counts.iter().sum();
                for (&n, &p) in counts.iter().zip(row) {
                    if n > 0 {
                        log_ratio += n as f64 * (p.ln() - (n as f64 / n_j as f64).ln());
                    }
                }
            }
            Ok(log_ratio.exp().min(1.0))
        }
        (
            NodeParams::Linear {
                intercept,
                coefs,
                sigma,
                ..
            },
            NodeStats::Gaussian(s),
        ) => {
            if coefs.len() != s.features.len() {
                return Err(Error::invalid("coefficient count does not match the family"));
            }
            let l = s.features.len() + 1;
            let xtx = s.cross.view((0, 0), (l, l)).into_owned();
            let xty = s.cross.view((0, l), (l, 1)).into_owned();
            let beta = xtx
                .lu()
                .solve(&xty)
                .ok_or_else(|| Error::Numerical("singular design for maximum likelihood".into()))?;
            let n = s.n as f64;
            let y = ds.column(target);
            let mut rss_hat = 0.0;
            let mut rss = 0.0;
            for r in 0..ds.n() {
                let feats: Vec<f64> = s.features.iter().map(|f| f.value(ds, r)).collect();
                let fit_hat = beta[0] + (0..feats.len()).map(|k| beta[k + 1] * feats[k]).sum::<f64>();
                let fit = intercept + coefs.iter().zip(&feats).map(|(c, f)| c * f).sum::<f64>();
                rss_hat += (y[r] - fit_hat).powi(2);
                rss += (y[r] - fit).powi(2);
            }
            let var_hat = rss_hat / n;
            let (_, var_y) = crate::dataset::mean_var(y);
            if !(var_hat > 1e-12 * var_y.max(f64::MIN_POSITIVE)) {
                return Err(Error::Numerical(format!(
                    "zero residual variance for family {}",
                    family_name(ds, target, parents)
                )));
            }
            let s2 = sigma * sigma;
            let log_l = -0.5 * n * s2.ln() - rss / (2.0 * s2);
            let log_hat = -0.5 * n * var_hat.ln() - 0.5 * n;
            Ok((log_l - log_hat).exp().min(1.0))
        }
        _ => Err(Error::invalid("parameter type does not match the target column kind")),
    }
}
