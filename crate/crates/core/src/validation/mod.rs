//! Ground-truth models and brute-force oracles: ancestral sampling, exact
//! structure posteriors for small graphs, exact interventional effects, and
//! an end-to-end check of the estimation pipeline against a known truth.
//!
//! The oracles here deliberately avoid the estimator code paths: effects are
//! computed by full joint enumeration or matrix inversion rather than by the
//! per-graph propagation used in [`crate::causal`].

mod lucas;

pub use lucas::{five_node_binary, five_node_queries, lucas_model, lucas_queries};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::causal::{EngineOptions, InterventionSpec, DEFAULT_BUDGET};
use crate::dataset::{ColumnKind, ColumnMeta, Dataset, Feature, Role};
use crate::decision::{evaluate_interventions, BadValueModel, DecisionOptions, GraphValue, ValueFunction};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{enumerate_dags, Dag};
use crate::mcmc::{pinned_init, run_multichain, ChainConfig, GraphPosterior};
use crate::pc::{pc, PcConfig};
use crate::prior::{log_prior, PriorMatrix};
use crate::score::{log_marginal_likelihood, NodeParams, ScoreHyper, Scorer};

pub const MAX_EXACT_NODES: usize = 4;

/// A fully specified generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthModel {
    pub schema: Vec<ColumnMeta>,
    pub graph: Dag,
    pub params: Vec<NodeParams>,
}

impl GroundTruthModel {
    pub fn new(schema: Vec<ColumnMeta>, graph: Dag, params: Vec<NodeParams>) -> Result<Self> {
        let m = GroundTruthModel { schema, graph, params };
        m.validate()?;
        Ok(m)
    }

    pub fn d(&self) -> usize {
        self.schema.len()
    }

    /// Tables must condition on exactly the node's (discrete) parents with
    /// rows on the simplex; linear nodes regress on exactly their parents.
    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        if self.graph.d() != d || self.params.len() != d {
            return Err(Error::invalid("schema, graph and parameters disagree on the node count"));
        }
        crate::dataset::validate_schema(&self.schema)?;
        for i in 0..d {
            let parents = self.graph.parents_of(i).to_vec();
            let name = &self.schema[i].name;
            match (&self.params[i], self.schema[i].kind) {
                (
                    NodeParams::Table {
                        parent_arities, rows, ..
                    },
                    ColumnKind::Discrete(k),
                ) => {
                    let arities = parents
                        .iter()
                        .map(|&p| self.schema[p].kind.cardinality())
                        .collect::<Option<Vec<usize>>>()
                        .ok_or_else(|| Error::invalid(format!("`{name}` has a continuous parent")))?;
                    if *parent_arities != arities {
                        return Err(Error::invalid(format!("`{name}` parent arities do not match the graph")));
                    }
                    if rows.len() != arities.iter().product::<usize>() {
                        return Err(Error::invalid(format!("`{name}` needs one row per parent configuration")));
                    }
                    for row in rows {
                        let total: f64 = row.iter().sum();
                        if row.len() != k || row.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
                            return Err(Error::invalid(format!("`{name}` has a row off the simplex")));
                        }
                    }
                }
                (
                    NodeParams::Linear {
                        coefs,
                        sigma,
                        features,
                        intercept,
                    },
                    ColumnKind::Continuous,
                ) => {
                    let mut cols: Vec<usize> = features.iter().map(|f| f.column()).collect();
                    cols.dedup();
                    if cols != parents || coefs.len() != features.len() {
                        return Err(Error::invalid(format!("`{name}` features do not match its parents")));
                    }
                    if !(*sigma >= 0.0 && sigma.is_finite() && intercept.is_finite()) {
                        return Err(Error::invalid(format!("`{name}` needs a finite nonnegative noise scale")));
                    }
                }
                _ => return Err(Error::invalid(format!("`{name}` parameters do not fit its column kind"))),
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: GroundTruthModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn table_index(parent_arities: &[usize], parents: &[usize], values: &[f64]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (&p, &a) in parents.iter().zip(parent_arities) {
        idx += values[p] as usize * stride;
        stride *= a;
    }
    idx
}

/// Ancestral sampling of `n` rows.
pub fn sample_data<R: Rng + ?Sized>(m: &GroundTruthModel, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("need at least one row"));
    }
    let d = m.d();
    let order = m.graph.topological_order();
    let parents: Vec<Vec<usize>> = (0..d).map(|i| m.graph.parents_of(i).to_vec()).collect();
    let mut cols = vec![Vec::with_capacity(n); d];
    let mut row = vec![0.0; d];
    for _ in 0..n {
        for &i in &order {
            row[i] = match &m.params[i] {
                NodeParams::Table {
                    parent_arities, rows, ..
                } => {
                    let probs = &rows[table_index(parent_arities, &parents[i], &row)];
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut level = probs.len() - 1;
                    for (k, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            level = k;
                            break;
                        }
                    }
                    level as f64
                }
                NodeParams::Linear {
                    intercept,
                    coefs,
                    sigma,
                    features,
                } => {
                    let mean = intercept
                        + coefs
                            .iter()
                            .zip(features)
                            .map(|(c, f)| c * f.of(row[f.column()]))
                            .sum::<f64>();
                    mean + sigma * rng.sample::<f64, _>(StandardNormal)
                }
            };
        }
        for i in 0..d {
            cols[i].push(row[i]);
        }
    }
    Dataset::from_columns(m.schema.clone(), cols)
}

/// Normalized posterior over every DAG on `d ≤ 4` nodes, in enumeration
/// order.
pub fn exact_posterior(ds: &Dataset, prior: &PriorMatrix, hyper: &ScoreHyper) -> Result<Vec<(Dag, f64)>> {
    let d = ds.d();
    if d > MAX_EXACT_NODES {
        return Err(Error::invalid(format!(
            "exact posterior is limited to {MAX_EXACT_NODES} nodes, got {d}"
        )));
    }
    let dags = enumerate_dags(d)?;
    let mut logs = Vec::with_capacity(dags.len());
    for g in &dags {
        let lp = log_prior(g, prior)?;
        logs.push(if lp == f64::NEG_INFINITY {
            lp
        } else {
            lp + log_marginal_likelihood(g, ds, hyper)?
        });
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::config("prior excludes every graph"));
    }
    let z: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok(dags
        .into_iter()
        .zip(logs)
        .map(|(g, l)| (g, (l - top).exp() / z))
        .collect())
}

/// Exact effect of an intervention on one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrueEffect {
    /// Probability of each level.
    Distribution { probs: Vec<f64> },
    Moments { mean: f64, var: f64 },
}

impl TrueEffect {
    pub fn mean(&self) -> f64 {
        match self {
            TrueEffect::Distribution { probs } => probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
            TrueEffect::Moments { mean, .. } => *mean,
        }
    }
}

/// Exact `q` under `do(spec)` on the true model: full joint enumeration for
/// discrete models, `(I - Bᵀ)⁻¹` for linear-Gaussian ones.
pub fn true_interventional(m: &GroundTruthModel, spec: &InterventionSpec, q: usize) -> Result<TrueEffect> {
    let d = m.d();
    if q >= d {
        return Err(Error::invalid(format!("node {q} out of range")));
    }
    let mut clamp: Vec<Option<f64>> = vec![None; d];
    for a in &spec.assignments {
        if a.node >= d || clamp[a.node].is_some() {
            return Err(Error::invalid("intervention nodes must be distinct and in range"));
        }
        clamp[a.node] = Some(a.value);
    }
    if m.schema.iter().all(|c| c.kind.is_discrete()) {
        discrete_truth(m, &clamp, q)
    } else if m.params.iter().all(|p| {
        matches!(p, NodeParams::Linear { features, .. }
            if features.iter().all(|f| matches!(f, Feature::Continuous(_))))
    }) {
        Ok(linear_truth(m, &clamp, q))
    } else {
        Err(Error::invalid("exact effects need an all-discrete or all-linear model"))
    }
}

fn discrete_truth(m: &GroundTruthModel, clamp: &[Option<f64>], q: usize) -> Result<TrueEffect> {
    let d = m.d();
    let arity: Vec<usize> = m.schema.iter().map(|c| c.kind.cardinality().unwrap_or(1)).collect();
    for (i, c) in clamp.iter().enumerate() {
        if let Some(v) = c {
            if v.fract() != 0.0 || *v < 0.0 || *v as usize >= arity[i] {
                return Err(Error::invalid(format!("value {v} out of range for `{}`", m.schema[i].name)));
            }
        }
    }
    let free: Vec<usize> = (0..d).filter(|&i| clamp[i].is_none()).collect();
    let states: f64 = free.iter().map(|&i| arity[i] as f64).product();
    if states > DEFAULT_BUDGET {
        return Err(Error::BudgetExceeded {
            terms: states,
            budget: DEFAULT_BUDGET,
        });
    }
    let parents: Vec<Vec<usize>> = (0..d).map(|i| m.graph.parents_of(i).to_vec()).collect();
    let mut probs = vec![0.0; arity[q]];
    let mut x: Vec<f64> = clamp.iter().map(|c| c.unwrap_or(0.0)).collect();
    for s in 0..states as usize {
        let mut rest = s;
        for &i in &free {
            x[i] = (rest % arity[i]) as f64;
            rest /= arity[i];
        }
        let mut p = 1.0;
        for &i in &free {
            let NodeParams::Table {
                parent_arities, rows, ..
            } = &m.params[i]
            else {
                unreachable!("validated discrete model");
            };
            p *= rows[table_index(parent_arities, &parents[i], &x)][x[i] as usize];
        }
        probs[x[q] as usize] += p;
    }
    Ok(TrueEffect::Distribution { probs })
}

fn linear_truth(m: &GroundTruthModel, clamp: &[Option<f64>], q: usize) -> TrueEffect {
    let d = m.d();
    // x = c + W x + S e with W[i][p] the coefficient of p in i's equation
    let mut w = DMatrix::<f64>::zeros(d, d);
    let mut c = DMatrix::<f64>::zeros(d, 1);
    let mut s = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        if let Some(v) = clamp[i] {
            c[(i, 0)] = v;
            continue;
        }
        let NodeParams::Linear {
            intercept,
            coefs,
            sigma,
            features,
        } = &m.params[i]
        else {
            unreachable!("validated linear model");
        };
        c[(i, 0)] = *intercept;
        s[(i, i)] = *sigma;
        for (b, f) in coefs.iter().zip(features) {
            w[(i, f.column())] += b;
        }
    }
    let a = (DMatrix::<f64>::identity(d, d) - w)
        .try_inverse()
        .expect("I - W is unit triangular up to permutation");
    let mean = &a * c;
    let load = &a * s;
    let cov = &load * load.transpose();
    TrueEffect::Moments {
        mean: mean[(q, 0)],
        var: cov[(q, q)],
    }
}

/// One interventional query: `E[q | do(spec)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub spec: InterventionSpec,
    pub q: usize,
}

/// Settings for the sample → discover → MCMC → decide pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub steps: usize,
    pub chains: usize,
    pub burn_in: f64,
    /// Start chains from the PC estimate instead of the empty graph.
    pub pc_init: bool,
    /// Edge prior; uninformative when absent.
    pub prior: Option<PriorMatrix>,
    pub engine: EngineOptions,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            steps: 20_000,
            chains: 3,
            burn_in: crate::mcmc::DEFAULT_BURN_IN,
            pc_init: true,
            prior: None,
            engine: EngineOptions::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCheck {
    pub label: String,
    pub q: usize,
    pub estimate: f64,
    /// Posterior SD of the estimated mean: parameter spread within graphs
    /// plus spread across graphs.
    pub sd: f64,
    pub truth: f64,
    pub abs_error: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub n: usize,
    pub seed: u64,
    pub distinct_graphs: usize,
    pub r_hat: f64,
    pub checks: Vec<QueryCheck>,
}

impl EndToEndReport {
    pub fn max_abs_error(&self) -> f64 {
        self.checks.iter().map(|c| c.abs_error).fold(0.0, f64::max)
    }
}

/// Runs the pipeline on data sampled from `truth` with
/// `PipelineConfig::seed`.
pub fn sample_posterior(truth: &GroundTruthModel, n: usize, cfg: &PipelineConfig) -> Result<(Dataset, GraphPosterior, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ds = sample_data(truth, n, &mut rng)?;
    if !ds.all_discrete() {
        ds = ds.standardize()?;
    }
    let d = ds.d();
    let hyper = ScoreHyper::default_for(d);
    let prior = match &cfg.prior {
        Some(p) if p.d() != d => return Err(Error::config("prior size does not match the model")),
        Some(p) => p.clone(),
        None => PriorMatrix::uninformative(d),
    };
    let init = if cfg.pc_init {
        let pc_cfg = PcConfig {
            execution: cfg.execution,
            ..PcConfig::default()
        };
        pinned_init(&pc(&ds, &pc_cfg)?.dag, &prior)?
    } else {
        Dag::empty(d)?
    };
    let scorer = Scorer::new(&ds, hyper)?;
    let chain = ChainConfig {
        n_steps: cfg.steps,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        ..ChainConfig::new(init)
    };
    let mc = run_multichain(&chain, cfg.chains, None, &scorer, &prior, cfg.execution)?;
    Ok((ds, mc.merged, mc.r_hat))
}

/// Compares pipeline estimates with exact effects for each query. The
/// estimate is the model-averaged mean of `q` under the intervention.
pub fn end_to_end_check(truth: &GroundTruthModel, n: usize, cfg: &PipelineConfig, queries: &[Query]) -> Result<EndToEndReport> {
    if queries.is_empty() {
        return Err(Error::config("no queries to check"));
    }
    let (ds, post, r_hat) = sample_posterior(truth, n, cfg)?;
    let hyper = ScoreHyper::default_for(ds.d());
    let opts = DecisionOptions {
        engine: cfg.engine,
        seed: cfg.seed,
        execution: cfg.execution,
        ..DecisionOptions::default()
    };
    let mut checks = Vec::with_capacity(queries.len());
    for query in queries {
        let qds = ds.with_role(query.q, Role::Quality)?;
        let vf = ValueFunction::identity(qds.meta(query.q).name.clone());
        let bad = BadValueModel::default_for(&qds, &vf)?;
        let spec = InterventionSpec {
            cost: 0.0,
            ..query.spec.clone()
        };
        let report = evaluate_interventions(&post, &qds, std::slice::from_ref(&spec), &vf, &bad, &hyper, &opts)?
            .pop()
            .expect("one report per spec");
        let (estimate, sd) = epistemic_moments(&report.breakdown, &bad);
        let truth_mean = true_interventional(truth, &spec, query.q)?.mean();
        let abs_error = (estimate - truth_mean).abs();
        checks.push(QueryCheck {
            label: spec.label(&qds),
            q: query.q,
            estimate,
            sd,
            truth: truth_mean,
            abs_error,
            covered: abs_error <= 2.0 * sd,
        });
    }
    Ok(EndToEndReport {
        n,
        seed: cfg.seed,
        distinct_graphs: post.n_distinct(),
        r_hat,
        checks,
    })
}

/// Mixture mean and SD of the per-graph expected outcome (excluding the
/// outcome's own noise).
fn epistemic_moments(breakdown: &[crate::decision::GraphBreakdown], bad: &BadValueModel) -> (f64, f64) {
    let weights: Vec<f64> = breakdown.iter().map(|b| b.weight).collect();
    let values: Vec<GraphValue> = breakdown
        .iter()
        .map(|b| match b.moments {
            Some(m) => GraphValue::Good {
                mean: m.mean,
                var: m.between,
            },
            None => GraphValue::Bad,
        })
        .collect();
    let (mean, var) = crate::decision::bma_moments(&weights, &values, bad, 0.0).expect("posterior weights are valid");
    (mean, var.sqrt())
}
