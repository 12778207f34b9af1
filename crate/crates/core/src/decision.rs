//! Model-averaged expected value and risk of candidate interventions, with a
//! fallback value distribution for graphs where an effect cannot be computed,
//! and the Pareto front over (value, risk).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::causal::{classify, EngineOptions, GraphModel, Identification, InterventionSpec, Moments, Outcome};
use crate::dataset::{ColumnKind, Dataset, Role};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mcmc::GraphPosterior;
use crate::score::ScoreHyper;

pub const DEFAULT_PARETO_EPS: f64 = 1e-9;
pub const DEFAULT_NAIVE_BAND: f64 = 0.1;
/// `r_bad` default as a multiple of the sample variance of `v(Q)`.
pub const BAD_VARIANCE_FACTOR: f64 = 10.0;

/// `v(q) = Σ w_c q_c + offset` over quality columns, keyed by column name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueFunction {
    pub weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub offset: f64,
}

impl ValueFunction {
    pub fn identity(column: impl Into<String>) -> Self {
        ValueFunction {
            weights: BTreeMap::from([(column.into(), 1.0)]),
            offset: 0.0,
        }
    }

    /// Resolves column names against `ds`. Every weighted column must carry
    /// the quality role.
    pub fn outcome(&self, ds: &Dataset) -> Result<Outcome> {
        if self.weights.is_empty() {
            return Err(Error::config("value function has no quality columns"));
        }
        if !self.offset.is_finite() {
            return Err(Error::config("value function offset must be finite"));
        }
        let mut terms = Vec::with_capacity(self.weights.len());
        for (name, &w) in &self.weights {
            let c = ds
                .index_of(name)
                .ok_or_else(|| Error::config(format!("value function names unknown column `{name}`")))?;
            if ds.meta(c).role != Role::Quality {
                return Err(Error::config(format!("value function column `{name}` is not a quality column")));
            }
            if !w.is_finite() {
                return Err(Error::config(format!("non-finite weight for `{name}`")));
            }
            terms.push((c, w));
        }
        Ok(Outcome {
            terms,
            offset: self.offset,
        })
    }

    /// `v(q)` evaluated on every row.
    pub fn row_values(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let outcome = self.outcome(ds)?;
        Ok((0..ds.n())
            .map(|r| outcome.offset + outcome.terms.iter().map(|&(c, w)| w * ds.value(r, c)).sum::<f64>())
            .collect())
    }
}

/// Value distribution `N(v_bad, r_bad)` assumed for an intervention whose
/// effect a graph cannot supply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadValueModel {
    pub v_bad: f64,
    pub r_bad: f64,
}

impl BadValueModel {
    pub fn new(v_bad: f64, r_bad: f64) -> Result<Self> {
        let m = BadValueModel { v_bad, r_bad };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.v_bad.is_finite() {
            return Err(Error::config("v_bad must be finite"));
        }
        if !(self.r_bad > 0.0 && self.r_bad.is_finite()) {
            return Err(Error::config(format!("r_bad must be positive, got {}", self.r_bad)));
        }
        Ok(())
    }

    /// Sample mean of `v(Q)` and ten times its sample variance.
    pub fn default_for(ds: &Dataset, vf: &ValueFunction) -> Result<Self> {
        let v = vf.row_values(ds)?;
        let (mean, var) = sample_moments(&v);
        Self::new(mean, BAD_VARIANCE_FACTOR * var)
            .map_err(|_| Error::config("v(Q) is constant in the data; set the bad-value model explicitly"))
    }
}

/// Per-graph input to the mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphValue {
    Good { mean: f64, var: f64 },
    Bad,
}

/// Mixture mean and variance of `V - cost` over graphs weighted by `weights`
/// (normalized here). Bad graphs contribute `(v_bad, r_bad)`.
pub fn bma_moments(weights: &[f64], values: &[GraphValue], bad: &BadValueModel, cost: f64) -> Result<(f64, f64)> {
    if weights.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    if weights.len() != values.len() {
        return Err(Error::invalid("one value per weighted graph expected"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("graph weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("graph weights do not normalize"));
    }
    let moments = |v: &GraphValue| match *v {
        GraphValue::Good { mean, var } => (mean, var),
        GraphValue::Bad => (bad.v_bad, bad.r_bad),
    };
    let mean = weights
        .iter()
        .zip(values)
        .map(|(w, v)| w / total * moments(v).0)
        .sum::<f64>();
    // Σ w (Var + E²) − ē², written as within plus between for stability
    let var = weights
        .iter()
        .zip(values)
        .map(|(w, v)| {
            let (m, s) = moments(v);
            w / total * (s + (m - mean).powi(2))
        })
        .sum::<f64>();
    Ok((mean - cost, var))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBreakdown {
    pub edges: Vec<(usize, usize)>,
    pub weight: f64,
    pub identification: Identification,
    /// Moments of `v(Q)` before cost; absent for bad graphs.
    pub moments: Option<Moments>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionReport {
    pub label: String,
    pub spec: InterventionSpec,
    pub e_value: f64,
    pub risk: f64,
    pub good_mass: f64,
    pub pareto: bool,
    pub breakdown: Vec<GraphBreakdown>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionOptions {
    pub engine: EngineOptions,
    pub seed: u64,
    pub execution: Execution,
    pub pareto_eps: f64,
}

impl Default for DecisionOptions {
    fn default() -> Self {
        DecisionOptions {
            engine: EngineOptions::default(),
            seed: 0,
            execution: Execution::default(),
            pareto_eps: DEFAULT_PARETO_EPS,
        }
    }
}

/// Stream id of the generator used for `(spec, graph)`. The spec part
/// depends only on the assignments, so identical interventions share draws.
fn stream_of(spec: &InterventionSpec, graph: usize) -> u64 {
    let mut assignments: Vec<(usize, u64)> = spec.assignments.iter().map(|a| (a.node, a.value.to_bits())).collect();
    assignments.sort_unstable();
    let mut h = Sha256::new();
    for (node, bits) in assignments {
        h.update((node as u64).to_le_bytes());
        h.update(bits.to_le_bytes());
    }
    let key = u32::from_le_bytes(h.finalize()[..4].try_into().expect("sha256 digest has 32 bytes"));
    (u64::from(key) << 32) | graph as u64
}

/// One report per spec, flagged for the Pareto front. Graphs are processed
/// in parallel; each `(spec, graph)` pair draws from its own seeded stream so
/// results do not depend on scheduling.
pub fn evaluate_interventions(
    post: &GraphPosterior,
    ds: &Dataset,
    specs: &[InterventionSpec],
    vf: &ValueFunction,
    bad: &BadValueModel,
    hyper: &ScoreHyper,
    opts: &DecisionOptions,
) -> Result<Vec<InterventionReport>> {
    if specs.is_empty() {
        return Err(Error::config("no interventions to evaluate"));
    }
    if post.entries.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    if post.d != ds.d() {
        return Err(Error::invalid("posterior and data dimensions differ"));
    }
    bad.validate()?;
    let outcome = vf.outcome(ds)?;
    for s in specs {
        s.validate(ds)?;
        if !s.nodes().is_disjoint(outcome.nodes()) {
            return Err(Error::config(format!(
                "`{}` assigns a quality column",
                s.label(ds)
            )));
        }
    }
    let weights = post.weights();
    let indexed: Vec<usize> = (0..post.entries.len()).collect();
    // per graph, one (identification, moments) per spec
    let per_graph = opts.execution.try_map(&indexed, |&gi| -> Result<Vec<(Identification, Option<Moments>)>> {
        let g = &post.entries[gi].dag;
        let mut model: Option<GraphModel> = None;
        let mut out = Vec::with_capacity(specs.len());
        for spec in specs {
            let id = classify(g, ds, spec, outcome.nodes(), opts.engine.budget)?;
            let moments = if id.is_good() {
                if model.is_none() {
                    model = Some(GraphModel::new(g, ds, hyper)?);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(stream_of(spec, gi));
                let m = model
                    .as_ref()
                    .expect("model built above")
                    .interventional_moments(spec, &outcome, &opts.engine, &mut rng)?;
                Some(m)
            } else {
                None
            };
            out.push((id, moments));
        }
        Ok(out)
    })?;
    let mut reports = Vec::with_capacity(specs.len());
    for (si, spec) in specs.iter().enumerate() {
        let mut values = Vec::with_capacity(weights.len());
        let mut breakdown = Vec::with_capacity(weights.len());
        let mut good_mass = 0.0;
        for (gi, w) in weights.iter().enumerate() {
            let (id, moments) = &per_graph[gi][si];
            values.push(match moments {
                Some(m) => {
                    good_mass += w;
                    GraphValue::Good {
                        mean: m.mean,
                        var: m.var,
                    }
                }
                None => GraphValue::Bad,
            });
            breakdown.push(GraphBreakdown {
                edges: post.entries[gi].dag.edges(),
                weight: *w,
                identification: id.clone(),
                moments: *moments,
            });
        }
        let (e_value, risk) = bma_moments(&weights, &values, bad, spec.cost)?;
        reports.push(InterventionReport {
            label: spec.label(ds),
            spec: spec.clone(),
            e_value,
            risk,
            good_mass: good_mass.clamp(0.0, 1.0),
            pareto: false,
            breakdown,
        });
    }
    Ok(pareto_front(&reports, opts.pareto_eps))
}

/// True when `(e2, r2)` dominates `(e1, r1)`: no worse on both coordinates
/// and better on one, with differences within `eps` counted as ties.
pub fn dominates(e2: f64, r2: f64, e1: f64, r1: f64, eps: f64) -> bool {
    e2 >= e1 - eps && r2 <= r1 + eps && (e2 > e1 + eps || r2 < r1 - eps)
}

/// Front membership of `(e_value, risk)` points.
pub fn pareto_flags(points: &[(f64, f64)], eps: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].0.total_cmp(&points[a].0).then(points[a].1.total_cmp(&points[b].1)));
    let mut flags = vec![true; points.len()];
    for (pos, &i) in order.iter().enumerate() {
        let (e, r) = points[i];
        // only points with e' >= e - eps can dominate; they sit before the
        // first sorted point that falls below that threshold
        let reach = order[pos..]
            .iter()
            .position(|&j| points[j].0 < e - eps)
            .map_or(order.len(), |k| pos + k);
        flags[i] = !order[..reach]
            .iter()
            .any(|&j| j != i && dominates(points[j].0, points[j].1, e, r, eps));
    }
    flags
}

/// Copies of `reports` with `pareto` set.
pub fn pareto_front(reports: &[InterventionReport], eps: f64) -> Vec<InterventionReport> {
    let points: Vec<(f64, f64)> = reports.iter().map(|r| (r.e_value, r.risk)).collect();
    reports
        .iter()
        .zip(pareto_flags(&points, eps))
        .map(|(r, pareto)| InterventionReport { pareto, ..r.clone() })
        .collect()
}

/// Mean and unbiased variance; variance is zero for fewer than two values.
fn sample_moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() < 2 {
        0.0
    } else {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    (mean, var)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveMoments {
    pub e_value: f64,
    pub risk: f64,
    pub support: usize,
}

/// Conditional moments of `v(Q) - cost` among rows that look like the
/// intervention: exact matches on discrete columns, then for each continuous
/// column the `band` fraction of remaining rows nearest the assigned value.
pub fn naive_moments(ds: &Dataset, spec: &InterventionSpec, vf: &ValueFunction, band: f64) -> Result<NaiveMoments> {
    spec.validate(ds)?;
    if !(band > 0.0 && band <= 1.0) {
        return Err(Error::config("naive conditioning band must lie in (0, 1]"));
    }
    let v = vf.row_values(ds)?;
    let mut rows: Vec<usize> = (0..ds.n()).collect();
    for a in spec.assignments.iter().filter(|a| ds.kind(a.node).is_discrete()) {
        rows.retain(|&r| ds.value(r, a.node) == a.value);
    }
    for a in spec.assignments.iter().filter(|a| ds.kind(a.node) == ColumnKind::Continuous) {
        let keep = ((band * rows.len() as f64).ceil() as usize).min(rows.len());
        rows.sort_by(|&p, &q| {
            (ds.value(p, a.node) - a.value)
                .abs()
                .total_cmp(&(ds.value(q, a.node) - a.value).abs())
                .then(p.cmp(&q))
        });
        rows.truncate(keep);
        rows.sort_unstable();
    }
    if rows.is_empty() {
        return Err(Error::EmptySupport(spec.label(ds)));
    }
    let sel: Vec<f64> = rows.iter().map(|&r| v[r]).collect();
    let (mean, var) = sample_moments(&sel);
    Ok(NaiveMoments {
        e_value: mean - spec.cost,
        risk: var,
        support: rows.len(),
    })
}

/// Least-squares slope of column `y` on column `x`, in data units.
pub fn naive_slope(ds: &Dataset, x: usize, y: usize) -> Result<f64> {
    ds.check_node(x)?;
    ds.check_node(y)?;
    let (xs, ys) = (ds.column(x), ds.column(y));
    let (mx, _) = sample_moments(xs);
    let (my, _) = sample_moments(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid(format!("`{}` is constant", ds.meta(x).name)));
    }
    Ok(sxy / sxx)
}

/// Posterior-weighted total causal coefficient of `x` on `y` in model units.
pub fn bma_causal_coefficient(
    post: &GraphPosterior,
    ds: &Dataset,
    x: usize,
    y: usize,
    hyper: &ScoreHyper,
    exec: Execution,
) -> Result<f64> {
    if post.entries.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    let coefs = exec.try_map(&post.entries, |e| GraphModel::new(&e.dag, ds, hyper)?.total_causal_coefficient(x, y))?;
    Ok(post.weights().iter().zip(&coefs).map(|(w, c)| w * c).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnMeta;
    use crate::graph::Dag;
    use crate::mcmc::PosteriorEntry;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn good(mean: f64, var: f64) -> GraphValue {
        GraphValue::Good { mean, var }
    }

    fn report(e: f64, r: f64) -> InterventionReport {
        InterventionReport {
            label: String::new(),
            spec: InterventionSpec::new(&[(0, 0.0)], 0.0),
            e_value: e,
            risk: r,
            good_mass: 1.0,
            pareto: false,
            breakdown: vec![],
        }
    }

    fn posterior(d: usize, graphs: &[(&[(usize, usize)], u64)]) -> GraphPosterior {
        let entries: Vec<PosteriorEntry> = graphs
            .iter()
            .map(|(edges, count)| PosteriorEntry {
                dag: Dag::from_edges(d, edges).unwrap(),
                count: *count,
                log_posterior: 0.0,
            })
            .collect();
        GraphPosterior {
            d,
            total: entries.iter().map(|e| e.count).sum(),
            entries,
            trace: vec![],
        }
    }

    fn chain_data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 1.0 + 1.5 * v + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Dataset::from_columns(
            vec![
                ColumnMeta::continuous("x").with_role(Role::Intervention),
                ColumnMeta::continuous("q").with_role(Role::Quality),
            ],
            vec![x, y],
        )
        .unwrap()
    }

    #[test]
    fn mixture_examples() {
        let bad = BadValueModel::new(0.0, 4.0).unwrap();
        let (e, v) = bma_moments(&[1.0], &[good(2.0, 1.0)], &bad, 0.5).unwrap();
        assert_eq!((e, v), (1.5, 1.0));
        let (e, v) = bma_moments(&[0.5, 0.5], &[good(1.0, 0.0), good(3.0, 0.0)], &bad, 0.0).unwrap();
        assert_eq!((e, v), (2.0, 1.0));
        let (e, v) = bma_moments(&[0.3, 0.7], &[GraphValue::Bad, GraphValue::Bad], &bad, 1.0).unwrap();
        assert!((e + 1.0).abs() < 1e-15 && (v - 4.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_errors() {
        let bad = BadValueModel::new(0.0, 1.0).unwrap();
        assert!(matches!(bma_moments(&[], &[], &bad, 0.0), Err(Error::EmptyPosterior)));
        assert!(bma_moments(&[0.0, 0.0], &[GraphValue::Bad, GraphValue::Bad], &bad, 0.0).is_err());
        assert!(bma_moments(&[-1.0, 2.0], &[GraphValue::Bad, GraphValue::Bad], &bad, 0.0).is_err());
        assert!(BadValueModel::new(0.0, 0.0).is_err());
    }

    #[test]
    fn pareto_examples() {
        let front = |pts: &[(f64, f64)]| pareto_flags(pts, DEFAULT_PARETO_EPS);
        assert_eq!(front(&[(2.0, 1.0), (1.0, 2.0)]), vec![true, false]);
        assert_eq!(front(&[(2.0, 2.0), (1.0, 1.0)]), vec![true, true]);
        assert_eq!(front(&[(5.0, 3.0)]), vec![true]);
        assert_eq!(front(&[(1.0, 1.0), (1.0 + 1e-12, 1.0)]), vec![true, true]);
        let reports = pareto_front(&[report(2.0, 1.0), report(1.0, 2.0)], DEFAULT_PARETO_EPS);
        assert!(reports[0].pareto && !reports[1].pareto);
    }

    #[test]
    fn value_function_checks_roles() {
        let ds = chain_data(10, 1);
        assert!(ValueFunction::identity("q").outcome(&ds).is_ok());
        assert!(ValueFunction::identity("x").outcome(&ds).is_err());
        assert!(ValueFunction::identity("nope").outcome(&ds).is_err());
        let bad = BadValueModel::default_for(&ds, &ValueFunction::identity("q")).unwrap();
        let q = ds.column(1);
        let m = q.iter().sum::<f64>() / 10.0;
        assert!((bad.v_bad - m).abs() < 1e-12);
        let var = q.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 9.0;
        assert!((bad.r_bad - 10.0 * var).abs() < 1e-9);
    }

    #[test]
    fn naive_examples() {
        let ds = Dataset::from_columns(
            vec![
                ColumnMeta::discrete("x", 3).with_role(Role::Intervention),
                ColumnMeta::discrete("q", 2).with_role(Role::Quality),
            ],
            vec![vec![1.0, 0.0, 1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0, 1.0, 0.0]],
        )
        .unwrap();
        let vf = ValueFunction::identity("q");
        let m = naive_moments(&ds, &InterventionSpec::new(&[(0, 1.0)], 0.0), &vf, DEFAULT_NAIVE_BAND).unwrap();
        assert!((m.e_value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.support, 3);
        assert!((m.risk - 1.0 / 3.0).abs() < 1e-15);
        let r = naive_moments(&ds, &InterventionSpec::new(&[(0, 2.0)], 0.0), &vf, DEFAULT_NAIVE_BAND);
        assert!(matches!(r, Err(Error::EmptySupport(_))));
    }

    #[test]
    fn naive_band_on_continuous() {
        let ds = chain_data(1000, 2);
        let m = naive_moments(&ds, &InterventionSpec::new(&[(0, 0.0)], 0.0), &ValueFunction::identity("q"), 0.1).unwrap();
        assert_eq!(m.support, 100);
        assert!((m.e_value - 1.0).abs() < 0.15);
    }

    #[test]
    fn chain_specs_differ_by_the_coefficient() {
        let ds = chain_data(500, 3);
        let post = posterior(2, &[(&[(0, 1)], 1)]);
        let h = ScoreHyper::default_for(2);
        let specs = [
            InterventionSpec::new(&[(0, 1.0)], 0.0),
            InterventionSpec::new(&[(0, 2.0)], 0.0),
        ];
        let vf = ValueFunction::identity("q");
        let bad = BadValueModel::default_for(&ds, &vf).unwrap();
        let reports = evaluate_interventions(&post, &ds, &specs, &vf, &bad, &h, &DecisionOptions::default()).unwrap();
        let coef = bma_causal_coefficient(&post, &ds, 0, 1, &h, Execution::Sequential).unwrap();
        let slope = coef * ds.slope_to_original(0, 1);
        let gap = reports[1].e_value - reports[0].e_value;
        assert!((gap - slope).abs() < 0.02, "{gap} vs {slope}");
        assert!((slope - 1.5).abs() < 0.1);
        assert_eq!(reports[0].good_mass, 1.0);
    }

    #[test]
    fn deterministic_across_execution_strategies() {
        let ds = chain_data(200, 4);
        let post = posterior(2, &[(&[(0, 1)], 3), (&[], 1), (&[(1, 0)], 2)]);
        let h = ScoreHyper::default_for(2);
        let specs = [InterventionSpec::new(&[(0, 1.0)], 0.2)];
        let vf = ValueFunction::identity("q");
        let bad = BadValueModel::new(0.0, 1.0).unwrap();
        let run = |execution| {
            let opts = DecisionOptions {
                execution,
                seed: 9,
                ..Default::default()
            };
            evaluate_interventions(&post, &ds, &specs, &vf, &bad, &h, &opts).unwrap()
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }

    #[test]
    fn identical_assignments_share_draws() {
        let ds = chain_data(200, 4);
        let post = posterior(2, &[(&[(0, 1)], 3), (&[(1, 0)], 2)]);
        let h = ScoreHyper::default_for(2);
        let mut named = InterventionSpec::new(&[(0, 1.0)], 0.5);
        named.name = "named".into();
        let specs = [InterventionSpec::new(&[(0, 1.0)], 0.0), named];
        let opts = DecisionOptions {
            seed: 3,
            engine: EngineOptions {
                m_draws: 10,
                ..Default::default()
            },
            ..Default::default()
        };
        let bad = BadValueModel::new(0.0, 1.0).unwrap();
        let r = evaluate_interventions(&post, &ds, &specs, &ValueFunction::identity("q"), &bad, &h, &opts).unwrap();
        assert_eq!(r[0].e_value - 0.5, r[1].e_value);
        assert_eq!(r[0].risk, r[1].risk);
    }

    #[test]
    fn unreachable_outcome_uses_observational_moments() {
        // q -> x in every graph: intervening on x leaves q alone
        let ds = chain_data(300, 5);
        let post = posterior(2, &[(&[(1, 0)], 1)]);
        let vf = ValueFunction::identity("q");
        let bad = BadValueModel::new(-100.0, 1.0).unwrap();
        let r = evaluate_interventions(
            &post,
            &ds,
            &[InterventionSpec::new(&[(0, 5.0)], 0.0)],
            &vf,
            &bad,
            &ScoreHyper::default_for(2),
            &DecisionOptions::default(),
        )
        .unwrap();
        let (m, _) = sample_moments(ds.column(1));
        assert!((r[0].e_value - m).abs() < 0.1);
        assert!(r[0].pareto);
    }

    #[test]
    fn all_bad_graphs_fall_back() {
        let cols = (0..10).map(|c| (0..30).map(|r| ((r * (c + 1)) % 3) as f64).collect()).collect();
        let mut schema: Vec<ColumnMeta> = (0..10).map(|i| ColumnMeta::discrete(format!("t{i}"), 3)).collect();
        schema[8].role = Role::Intervention;
        schema[9].role = Role::Quality;
        let ds = Dataset::from_columns(schema, cols).unwrap();
        let mut edges: Vec<(usize, usize)> = (0..8).flat_map(|p| [(p, 8), (p, 9)]).collect();
        edges.push((8, 9));
        let post = posterior(10, &[(&edges, 1)]);
        let opts = DecisionOptions {
            engine: EngineOptions {
                budget: 100.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let bad = BadValueModel::new(0.25, 3.0).unwrap();
        let r = evaluate_interventions(
            &post,
            &ds,
            &[InterventionSpec::new(&[(8, 1.0)], 1.0)],
            &ValueFunction::identity("t9"),
            &bad,
            &ScoreHyper::default_for(10),
            &opts,
        )
        .unwrap();
        assert_eq!((r[0].e_value, r[0].risk, r[0].good_mass), (-0.75, 3.0, 0.0));
        assert!(r[0].breakdown[0].moments.is_none());
    }

    fn brute_front(pts: &[(f64, f64)], eps: f64) -> Vec<bool> {
        (0..pts.len())
            .map(|i| {
                !(0..pts.len()).any(|j| {
                    let (ej, rj) = pts[j];
                    let (ei, ri) = pts[i];
                    let weakly = ej >= ei - eps && rj <= ri + eps;
                    let strictly = ej > ei + eps || rj < ri - eps;
                    j != i && weakly && strictly
                })
            })
            .collect()
    }

    fn grid_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0u8..6, 0u8..6), 1..20)
            .prop_map(|v| v.into_iter().map(|(e, r)| (e as f64 * 0.5, r as f64 * 0.5)).collect())
    }

    proptest! {
        #[test]
        fn front_matches_brute_force(pts in grid_points()) {
            prop_assert_eq!(pareto_flags(&pts, DEFAULT_PARETO_EPS), brute_front(&pts, DEFAULT_PARETO_EPS));
        }

        #[test]
        fn front_is_nonempty_and_holds_a_best_value(pts in prop::collection::vec((-5.0f64..5.0, 0.0f64..5.0), 1..20)) {
            let flags = pareto_flags(&pts, DEFAULT_PARETO_EPS);
            let best = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(flags.iter().any(|&f| f));
            prop_assert!(pts.iter().zip(&flags).any(|(p, &f)| f && p.0 >= best - DEFAULT_PARETO_EPS));
        }

        #[test]
        fn mixture_variance_bounds(
            parts in prop::collection::vec((0.01f64..1.0, -10.0f64..10.0, 0.0f64..5.0, any::<bool>()), 1..12),
            v_bad in -5.0f64..5.0,
            r_bad in 0.01f64..5.0,
            cost in -3.0f64..3.0,
        ) {
            let bad = BadValueModel::new(v_bad, r_bad).unwrap();
            let w: Vec<f64> = parts.iter().map(|p| p.0).collect();
            let vals: Vec<GraphValue> = parts
                .iter()
                .map(|p| if p.3 { good(p.1, p.2) } else { GraphValue::Bad })
                .collect();
            let (e, var) = bma_moments(&w, &vals, &bad, cost).unwrap();
            let total: f64 = w.iter().sum();
            let mv = |v: &GraphValue| match *v { GraphValue::Good { mean, var } => (mean, var), GraphValue::Bad => (v_bad, r_bad) };
            let raw: f64 = w.iter().zip(&vals).map(|(w, v)| w / total * mv(v).0).sum();
            let second: f64 = w.iter().zip(&vals).map(|(w, v)| { let (m, s) = mv(v); w / total * (s + m * m) }).sum();
            let within: f64 = w.iter().zip(&vals).map(|(w, v)| w / total * mv(v).1).sum();
            prop_assert!((e - (raw - cost)).abs() < 1e-9);
            prop_assert!((var - (second - raw * raw)).abs() < 1e-9);
            prop_assert!(var >= within - 1e-12);
            let (e2, var2) = bma_moments(&w, &vals, &bad, cost + 1.5).unwrap();
            prop_assert!((e - e2 - 1.5).abs() < 1e-12);
            prop_assert_eq!(var, var2);
            if parts.iter().all(|p| p.3) {
                let other = BadValueModel::new(v_bad + 7.0, r_bad * 3.0).unwrap();
                prop_assert_eq!(bma_moments(&w, &vals, &other, cost).unwrap(), (e, var));
            }
        }

        #[test]
        fn uniform_cost_shift_keeps_front(pts in grid_points(), shift in -3.0f64..3.0) {
            let shifted: Vec<(f64, f64)> = pts.iter().map(|p| (p.0 - shift, p.1)).collect();
            // the grid is coarse enough that a shift cannot create or break ties
            prop_assert_eq!(pareto_flags(&pts, DEFAULT_PARETO_EPS), pareto_flags(&shifted, DEFAULT_PARETO_EPS));
        }
    }
}
