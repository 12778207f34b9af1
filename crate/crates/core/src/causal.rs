//! Per-graph causal machinery: adjustment sets, identification under a
//! computational budget, and interventional moments of a linear outcome
//! obtained from the mutilated graph and posterior parameter draws.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, Role};
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};
use crate::score::{node_posterior, NodeParams, NodePosterior, ScoreHyper};

pub const DEFAULT_BUDGET: f64 = 1e6;
pub const DEFAULT_M_DRAWS: usize = 200;
pub const DEFAULT_MC_SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub node: usize,
    pub value: f64,
}

/// `do(I = i)` with its cost, in original data units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    #[serde(default)]
    pub name: String,
    pub assignments: Vec<Assignment>,
    #[serde(default)]
    pub cost: f64,
}

impl InterventionSpec {
    pub fn new(assignments: &[(usize, f64)], cost: f64) -> Self {
        InterventionSpec {
            name: String::new(),
            assignments: assignments
                .iter()
                .map(|&(node, value)| Assignment { node, value })
                .collect(),
            cost,
        }
    }

    pub fn nodes(&self) -> NodeSet {
        self.assignments.iter().map(|a| a.node).collect()
    }

    /// The name, or `col=value, ...` when unnamed.
    pub fn label(&self, ds: &Dataset) -> String {
        if !self.name.is_empty() {
            return self.name.clone();
        }
        self.assignments
            .iter()
            .map(|a| format!("{}={}", ds.meta(a.node).name, a.value))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Assigned nodes must be distinct, carry values their column can take,
    /// and (when the schema marks any intervention columns) be among them.
    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        if self.assignments.is_empty() {
            return Err(Error::config("intervention assigns no variable"));
        }
        if !self.cost.is_finite() {
            return Err(Error::config("intervention cost must be finite"));
        }
        let roles_declared = ds.schema().iter().any(|c| c.role == Role::Intervention);
        let mut seen = NodeSet::empty();
        for a in &self.assignments {
            ds.check_node(a.node)?;
            let meta = ds.meta(a.node);
            if seen.contains(a.node) {
                return Err(Error::config(format!("`{}` assigned twice", meta.name)));
            }
            seen.insert(a.node);
            if roles_declared && meta.role != Role::Intervention {
                return Err(Error::config(format!(
                    "`{}` is not an intervention column",
                    meta.name
                )));
            }
            match meta.kind {
                ColumnKind::Discrete(k) => {
                    if a.value.fract() != 0.0 || a.value < 0.0 || a.value >= k as f64 {
                        return Err(Error::config(format!(
                            "`{}` takes values 0..{}, got {}",
                            meta.name,
                            k - 1,
                            a.value
                        )));
                    }
                }
                ColumnKind::Continuous => {
                    if !a.value.is_finite() {
                        return Err(Error::config(format!("non-finite value for `{}`", meta.name)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Linear functional `Σ w_q q + offset` of quality nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub terms: Vec<(usize, f64)>,
    pub offset: f64,
}

impl Outcome {
    pub fn single(q: usize) -> Self {
        Outcome {
            terms: vec![(q, 1.0)],
            offset: 0.0,
        }
    }

    pub fn nodes(&self) -> NodeSet {
        self.terms.iter().map(|&(q, _)| q).collect()
    }

    /// Same functional expressed on model-unit (standardized) columns.
    fn to_model_units(&self, ds: &Dataset) -> Outcome {
        let mut offset = self.offset;
        let terms = self
            .terms
            .iter()
            .map(|&(q, w)| match ds.scale(q) {
                Some(s) => {
                    offset += w * s.mean;
                    (q, w * s.sd)
                }
                None => (q, w),
            })
            .collect();
        Outcome { terms, offset }
    }

    fn eval(&self, values: &[f64]) -> f64 {
        self.offset + self.terms.iter().map(|&(q, w)| w * values[q]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "set", rename_all = "lowercase")]
pub enum Strategy {
    /// Truncated factorization needs no adjustment: intervened nodes are
    /// roots, the outcome is not downstream, or a joint intervention is
    /// handled by the fully observed mutilated graph.
    Direct,
    Backdoor(Vec<usize>),
    Frontdoor(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BadReason {
    Unidentified,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Identification {
    Good { strategy: Strategy, terms: u64 },
    Bad { reason: BadReason, terms: u64 },
}

impl Identification {
    pub fn is_good(&self) -> bool {
        matches!(self, Identification::Good { .. })
    }
}

fn satisfies_backdoor(g: &Dag, x: usize, ys: NodeSet, z: NodeSet) -> bool {
    if z.contains(x) || !z.is_disjoint(ys) || ys.contains(x) {
        return false;
    }
    if !z.is_disjoint(g.descendants_of(x)) {
        return false;
    }
    let cut = Dag::new(g.without_outgoing(NodeSet::singleton(x))).expect("removing edges keeps acyclicity");
    cut.d_separated_sets(NodeSet::singleton(x), ys, z)
}

/// Adjustment set for the effect of `x` on `y`: the parents of `x`, checked
/// against the backdoor criterion.
pub fn backdoor_set(g: &Dag, x: usize, y: usize) -> Option<NodeSet> {
    backdoor_set_for(g, x, NodeSet::singleton(y))
}

pub fn backdoor_set_for(g: &Dag, x: usize, ys: NodeSet) -> Option<NodeSet> {
    let z = g.parents_of(x).difference(ys);
    satisfies_backdoor(g, x, ys, z).then_some(z)
}

/// Smallest valid adjustment set (lexicographically first among equals),
/// searched among non-descendants of `x`.
pub fn minimal_backdoor_set(g: &Dag, x: usize, ys: NodeSet) -> Option<NodeSet> {
    let pool = NodeSet::full(g.d())
        .difference(g.descendants_of(x))
        .difference(ys)
        .without(x);
    let max = g.parents_of(x).len();
    (0..=max.min(pool.len()))
        .flat_map(|k| pool.subsets_of_size(k))
        .find(|&z| satisfies_backdoor(g, x, ys, z))
}

/// Smallest mediator set satisfying the frontdoor criterion for `x -> y`.
pub fn frontdoor_set(g: &Dag, x: usize, y: usize) -> Option<NodeSet> {
    if x == y {
        return None;
    }
    let pool = g
        .descendants_of(x)
        .intersection(g.ancestral_closure(NodeSet::singleton(y)))
        .without(x)
        .without(y);
    (1..=pool.len())
        .flat_map(|k| pool.subsets_of_size(k))
        .find(|&m| frontdoor_ok(g, x, y, m))
}

fn frontdoor_ok(g: &Dag, x: usize, y: usize, m: NodeSet) -> bool {
    // every directed x -> y path passes through m
    let blocked = g.without_outgoing(m).without_incoming(m);
    if blocked.reaches(x, y) {
        return false;
    }
    // no open backdoor path from x to m
    let cut_x = Dag::new(g.without_outgoing(NodeSet::singleton(x))).expect("acyclic");
    if !cut_x.d_separated_sets(NodeSet::singleton(x), m, NodeSet::empty()) {
        return false;
    }
    // x blocks every backdoor path from m to y
    let cut_m = Dag::new(g.without_outgoing(m)).expect("acyclic");
    cut_m.d_separated_sets(m, NodeSet::singleton(y), NodeSet::singleton(x))
}

/// Number of joint configurations of the discrete members of `set`.
fn configurations(ds: &Dataset, set: NodeSet) -> f64 {
    set.iter()
        .map(|c| ds.kind(c).cardinality().unwrap_or(1) as f64)
        .product()
}

/// Nodes whose distribution is needed for `qs` after intervening on `xs`.
fn relevant_nodes(g: &Dag, xs: NodeSet, qs: NodeSet) -> NodeSet {
    g.mutilated(xs).ancestral_closure(qs).difference(xs)
}

fn saturating_terms(t: f64) -> u64 {
    if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64
    }
}

/// Decides whether the effect of `spec` on `qs` is usable under `budget`
/// discrete summation terms. Terms count the larger of the adjustment-set
/// configurations and the configurations enumerated in the mutilated graph.
pub fn classify(g: &Dag, ds: &Dataset, spec: &InterventionSpec, qs: NodeSet, budget: f64) -> Result<Identification> {
    spec.validate(ds)?;
    let xs = spec.nodes();
    let enum_terms = configurations(ds, relevant_nodes(g, xs, qs));
    let judge = |strategy: Strategy, adjust: NodeSet| {
        let t = enum_terms.max(configurations(ds, adjust));
        if t <= budget {
            Some(Identification::Good {
                strategy,
                terms: saturating_terms(t),
            })
        } else {
            None
        }
    };
    let exceeded = || Identification::Bad {
        reason: BadReason::BudgetExceeded,
        terms: saturating_terms(enum_terms),
    };
    let roots = xs.iter().all(|x| g.parents_of(x).is_empty());
    let downstream = xs.iter().any(|x| !g.descendants_of(x).is_disjoint(qs));
    if roots || !downstream || xs.len() > 1 {
        return Ok(judge(Strategy::Direct, NodeSet::empty()).unwrap_or_else(exceeded));
    }
    let x = xs.iter().next().expect("one assignment");
    let mut candidates = Vec::new();
    if let Some(z) = backdoor_set_for(g, x, qs) {
        candidates.push(Strategy::Backdoor(z.to_vec()));
    }
    if let Some(z) = minimal_backdoor_set(g, x, qs) {
        candidates.push(Strategy::Backdoor(z.to_vec()));
    }
    if qs.len() == 1 {
        let y = qs.iter().next().expect("one quality node");
        if let Some(m) = frontdoor_set(g, x, y) {
            candidates.push(Strategy::Frontdoor(m.to_vec()));
        }
    }
    if candidates.is_empty() {
        // unreachable when every variable is observed
        return Ok(Identification::Bad {
            reason: BadReason::Unidentified,
            terms: saturating_terms(enum_terms),
        });
    }
    for s in candidates {
        let set = match &s {
            Strategy::Backdoor(z) | Strategy::Frontdoor(z) => z.iter().copied().collect(),
            Strategy::Direct => NodeSet::empty(),
        };
        if let Some(r) = judge(s, set) {
            return Ok(r);
        }
    }
    Ok(exceeded())
}

/// Interventional moments of the outcome for one graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Total variance: `within + between`.
    pub var: f64,
    /// Expected variance given parameters.
    pub within: f64,
    /// Spread of the conditional mean across parameter draws.
    pub between: f64,
    /// Monte Carlo standard error of `mean`.
    pub mc_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    pub m_draws: usize,
    pub budget: f64,
    /// Forward samples per draw for graphs mixing discrete and continuous
    /// nodes.
    pub mc_samples: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            m_draws: DEFAULT_M_DRAWS,
            budget: DEFAULT_BUDGET,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Linear,
    Discrete,
    Mixed,
}

/// Parameter posteriors for one graph, computed once and reused across
/// interventions.
pub struct GraphModel<'a> {
    g: Dag,
    ds: &'a Dataset,
    posteriors: Vec<NodePosterior>,
}

impl<'a> GraphModel<'a> {
    pub fn new(g: &Dag, ds: &'a Dataset, hyper: &ScoreHyper) -> Result<Self> {
        if g.d() != ds.d() {
            return Err(Error::invalid("graph and data dimensions differ"));
        }
        let posteriors = (0..g.d())
            .map(|i| node_posterior(ds, i, g.parents_of(i), hyper))
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphModel {
            g: g.clone(),
            ds,
            posteriors,
        })
    }

    pub fn graph(&self) -> &Dag {
        &self.g
    }

    fn mode(&self, nodes: NodeSet, xs: NodeSet) -> Mode {
        let continuous = |c: usize| self.ds.kind(c) == ColumnKind::Continuous;
        if nodes.iter().all(|i| {
            continuous(i)
                && self
                    .g
                    .parents_of(i)
                    .iter()
                    .all(|p| continuous(p) || xs.contains(p))
        }) {
            Mode::Linear
        } else if nodes.iter().all(|i| !continuous(i)) {
            Mode::Discrete
        } else {
            Mode::Mixed
        }
    }

    /// Moments of `outcome` (original units) under `do(spec)`.
    pub fn interventional_moments<R: Rng + ?Sized>(
        &self,
        spec: &InterventionSpec,
        outcome: &Outcome,
        opts: &EngineOptions,
        rng: &mut R,
    ) -> Result<Moments> {
        let ds = self.ds;
        let qs = outcome.nodes();
        match classify(&self.g, ds, spec, qs, opts.budget)? {
            Identification::Good { .. } => {}
            Identification::Bad { reason, .. } => {
                return Err(Error::contract(format!(
                    "interventional moments requested for a graph classified bad ({reason:?})"
                )))
            }
        }
        if opts.m_draws == 0 {
            return Err(Error::config("m_draws must be positive"));
        }
        let xs = spec.nodes();
        let nodes = relevant_nodes(&self.g, xs, qs);
        let order: Vec<usize> = self
            .g
            .mutilated(xs)
            .topological_order()
            .into_iter()
            .filter(|i| nodes.contains(*i))
            .collect();
        let mut base = vec![0.0; ds.d()];
        for a in &spec.assignments {
            base[a.node] = ds.to_model_units(a.node, a.value);
        }
        let model_outcome = outcome.to_model_units(ds);
        let draw_set = |rng: &mut R| -> Result<Vec<Option<NodeParams>>> {
            let mut ps = vec![None; ds.d()];
            for &i in &order {
                ps[i] = Some(self.posteriors[i].draw(rng)?);
            }
            Ok(ps)
        };
        let mode = self.mode(nodes, xs);
        let m = opts.m_draws;
        match mode {
            Mode::Discrete => {
                let configs = configurations(ds, nodes);
                if configs > opts.budget {
                    return Err(Error::BudgetExceeded {
                        terms: configs,
                        budget: opts.budget,
                    });
                }
                let mut mean_params = vec![None; ds.d()];
                for &i in &order {
                    mean_params[i] = Some(self.posteriors[i].mean_params()?);
                }
                let (mean, within) = enumerate_moments(&self.g, &order, &mean_params, &base, ds, &model_outcome);
                let mut means = Vec::with_capacity(m);
                for _ in 0..m {
                    let ps = draw_set(rng)?;
                    means.push(enumerate_moments(&self.g, &order, &ps, &base, ds, &model_outcome).0);
                }
                let between = population_var(&means);
                Ok(Moments {
                    mean,
                    var: within + between,
                    within,
                    between,
                    mc_se: (between / m as f64).sqrt(),
                })
            }
            Mode::Linear | Mode::Mixed => {
                let mut means = Vec::with_capacity(m);
                let mut withins = Vec::with_capacity(m);
                for _ in 0..m {
                    let ps = draw_set(rng)?;
                    let (mu, v) = if mode == Mode::Linear {
                        linear_moments(&order, &ps, &base, xs, &model_outcome)
                    } else {
                        forward_moments(&self.g, &order, &ps, &base, &model_outcome, opts.mc_samples.max(2), rng)
                    };
                    means.push(mu);
                    withins.push(v);
                }
                let mean = means.iter().sum::<f64>() / m as f64;
                let within = withins.iter().sum::<f64>() / m as f64;
                let between = population_var(&means);
                Ok(Moments {
                    mean,
                    var: within + between,
                    within,
                    between,
                    mc_se: (between / m as f64).sqrt(),
                })
            }
        }
    }

    /// `d E[y | do(x)] / dx` in model units from posterior-mean coefficients;
    /// zero without a directed path.
    pub fn total_causal_coefficient(&self, x: usize, y: usize) -> Result<f64> {
        self.g.check_node(x)?;
        self.g.check_node(y)?;
        if x == y {
            return Err(Error::invalid("total effect needs two distinct nodes"));
        }
        let on_path = self
            .g
            .descendants_of(x)
            .intersection(self.g.ancestral_closure(NodeSet::singleton(y)))
            .without(x);
        if !on_path.contains(y) {
            return Ok(0.0);
        }
        let mut effect = vec![0.0; self.g.d()];
        effect[x] = 1.0;
        for i in self.g.topological_order() {
            if !on_path.contains(i) {
                continue;
            }
            let NodeParams::Linear { coefs, features, .. } = self.posteriors[i].mean_params()? else {
                return Err(Error::invalid(format!(
                    "`{}` is discrete; path coefficients need continuous nodes",
                    self.ds.meta(i).name
                )));
            };
            for (c, f) in coefs.iter().zip(&features) {
                match f {
                    crate::dataset::Feature::Continuous(p) => effect[i] += c * effect[*p],
                    crate::dataset::Feature::Indicator { column, .. } => {
                        if effect[*column] != 0.0 {
                            return Err(Error::invalid("discrete node on a causal path"));
                        }
                    }
                }
            }
        }
        Ok(effect[y])
    }
}

/// Convenience wrapper building a [`GraphModel`] for one query.
pub fn interventional_moments<R: Rng + ?Sized>(
    g: &Dag,
    ds: &Dataset,
    spec: &InterventionSpec,
    outcome: &Outcome,
    hyper: &ScoreHyper,
    opts: &EngineOptions,
    rng: &mut R,
) -> Result<Moments> {
    GraphModel::new(g, ds, hyper)?.interventional_moments(spec, outcome, opts, rng)
}

/// Sum over directed `x -> y` paths of products of posterior-mean edge
/// coefficients (model units).
pub fn total_causal_coefficient(g: &Dag, ds: &Dataset, x: usize, y: usize, hyper: &ScoreHyper) -> Result<f64> {
    GraphModel::new(g, ds, hyper)?.total_causal_coefficient(x, y)
}

fn population_var(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n
}

/// Mean and covariance propagation through a linear-Gaussian mutilated
/// graph.
fn linear_moments(
    order: &[usize],
    params: &[Option<NodeParams>],
    clamp: &[f64],
    xs: NodeSet,
    outcome: &Outcome,
) -> (f64, f64) {
    let d = clamp.len();
    let mut mean = clamp.to_vec();
    let mut cov = vec![vec![0.0; d]; d];
    // every non-intervened node is in `order`; intervened ones are constant
    let mut done: Vec<usize> = Vec::with_capacity(order.len());
    for &i in order {
        let Some(NodeParams::Linear {
            intercept,
            coefs,
            sigma,
            features,
        }) = &params[i]
        else {
            unreachable!("linear mode only holds linear nodes");
        };
        // split features into random (continuous, non-intervened) parts and
        // constants
        let mut mu = *intercept;
        let mut loads: Vec<(usize, f64)> = Vec::new();
        for (c, f) in coefs.iter().zip(features) {
            let p = f.column();
            if xs.contains(p) {
                mu += c * f.of(clamp[p]);
            } else {
                mu += c * mean[p];
                loads.push((p, *c));
            }
        }
        mean[i] = mu;
        for &j in &done {
            let v: f64 = loads.iter().map(|&(p, c)| c * cov[p][j]).sum();
            cov[i][j] = v;
            cov[j][i] = v;
        }
        let mut var = sigma * sigma;
        for &(p, c) in &loads {
            for &(q, e) in &loads {
                var += c * e * cov[p][q];
            }
        }
        cov[i][i] = var;
        done.push(i);
    }
    let mu = outcome.eval(&mean);
    let mut v = 0.0;
    for &(p, a) in &outcome.terms {
        for &(q, b) in &outcome.terms {
            v += a * b * cov[p][q];
        }
    }
    (mu, v.max(0.0))
}

/// Exact mean and variance of the outcome by enumerating every joint
/// configuration of the (discrete) relevant nodes.
fn enumerate_moments(
    g: &Dag,
    order: &[usize],
    params: &[Option<NodeParams>],
    clamp: &[f64],
    ds: &Dataset,
    outcome: &Outcome,
) -> (f64, f64) {
    let dist = enumerate_outcome(g, order, params, clamp, ds, outcome);
    let mean: f64 = dist.iter().map(|(v, p)| v * p).sum();
    let var: f64 = dist.iter().map(|(v, p)| p * (v - mean).powi(2)).sum();
    (mean, var.max(0.0))
}

fn parent_values(g: &Dag, i: usize, values: &[f64]) -> Vec<f64> {
    g.parents_of(i).iter().map(|p| values[p]).collect()
}

/// `(outcome value, probability)` for each configuration of `order`.
fn enumerate_outcome(
    g: &Dag,
    order: &[usize],
    params: &[Option<NodeParams>],
    clamp: &[f64],
    ds: &Dataset,
    outcome: &Outcome,
) -> Vec<(f64, f64)> {
    let arity: Vec<usize> = order
        .iter()
        .map(|&i| ds.kind(i).cardinality().expect("discrete node"))
        .collect();
    let total: usize = arity.iter().product();
    let mut values = clamp.to_vec();
    let mut out = Vec::with_capacity(total);
    let mut codes = vec![0usize; order.len()];
    for _ in 0..total {
        for (k, &i) in order.iter().enumerate() {
            values[i] = codes[k] as f64;
        }
        let mut p = 1.0;
        for (k, &i) in order.iter().enumerate() {
            let node = params[i].as_ref().expect("relevant node has parameters");
            let NodeParams::Table { rows, .. } = node else {
                unreachable!("discrete mode only holds tables");
            };
            let row = node
                .table_row(&parent_values(g, i, &values))
                .expect("table node");
            p *= rows[row][codes[k]];
            if p == 0.0 {
                break;
            }
        }
        out.push((outcome.eval(&values), p));
        for k in 0..codes.len() {
            codes[k] += 1;
            if codes[k] < arity[k] {
                break;
            }
            codes[k] = 0;
        }
    }
    out
}

/// Forward sampling for graphs that mix discrete and continuous nodes.
fn forward_moments<R: Rng + ?Sized>(
    g: &Dag,
    order: &[usize],
    params: &[Option<NodeParams>],
    clamp: &[f64],
    outcome: &Outcome,
    samples: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut values = clamp.to_vec();
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        for &i in order {
            let node = params[i].as_ref().expect("relevant node has parameters");
            values[i] = match node {
                NodeParams::Linear { sigma, .. } => {
                    node.linear_mean(&values).expect("linear node") + sigma * rng.sample::<f64, _>(StandardNormal)
                }
                NodeParams::Table { rows, .. } => {
                    let row = &rows[node.table_row(&parent_values(g, i, &values)).expect("table node")];
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut code = row.len() - 1;
                    for (k, p) in row.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            code = k;
                            break;
                        }
                    }
                    code as f64
                }
            };
        }
        draws.push(outcome.eval(&values));
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Exact distribution of a discrete node `q` under `do(spec)` for fixed
/// parameters (model units for clamped continuous values).
pub fn discrete_interventional_distribution(
    g: &Dag,
    ds: &Dataset,
    params: &[NodeParams],
    spec: &InterventionSpec,
    q: usize,
    budget: f64,
) -> Result<Vec<f64>> {
    spec.validate(ds)?;
    let k = ds
        .kind(q)
        .cardinality()
        .ok_or_else(|| Error::invalid("distribution requested for a continuous node"))?;
    let xs = spec.nodes();
    let mut clamp = vec![0.0; ds.d()];
    for a in &spec.assignments {
        clamp[a.node] = ds.to_model_units(a.node, a.value);
    }
    if xs.contains(q) {
        let mut dist = vec![0.0; k];
        dist[clamp[q] as usize] = 1.0;
        return Ok(dist);
    }
    let nodes = relevant_nodes(g, xs, NodeSet::singleton(q));
    if nodes.iter().any(|i| ds.kind(i) == ColumnKind::Continuous) {
        return Err(Error::invalid("exact enumeration needs discrete ancestors"));
    }
    let terms = configurations(ds, nodes);
    if terms > budget {
        return Err(Error::BudgetExceeded { terms, budget });
    }
    let order: Vec<usize> = g
        .mutilated(xs)
        .topological_order()
        .into_iter()
        .filter(|i| nodes.contains(*i))
        .collect();
    let ps: Vec<Option<NodeParams>> = params.iter().cloned().map(Some).collect();
    let mut dist = vec![0.0; k];
    for (v, p) in enumerate_outcome(g, &order, &ps, &clamp, ds, &Outcome::single(q)) {
        dist[v as usize] += p;
    }
    Ok(dist)
}
