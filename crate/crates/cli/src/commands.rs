use std::fmt::Write as _;
use std::io::Write as _;

use causal_bma::causal::InterventionSpec;
use causal_bma::decision::{
    bma_causal_coefficient, evaluate_interventions, naive_moments, BadValueModel, DecisionOptions, InterventionReport,
    NaiveMoments, ValueFunction,
};
use causal_bma::mcmc::{default_tau, pinned_init, run_multichain, ChainConfig, ChainDiagnostics, GraphPosterior, MultiChain};
use causal_bma::pc::{pc, PcConfig};
use causal_bma::score::{ScoreHyper, Scorer};
use causal_bma::validation::{
    end_to_end_check, five_node_queries, lucas_model, lucas_queries, five_node_binary, GroundTruthModel,
    PipelineConfig, Query,
};
use causal_bma::{ColumnKind, Dataset, Digraph, PriorMatrix, Role};
use serde::{Deserialize, Serialize};

use crate::config::{column, resolve_set, InitGraph, ModelChoice, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_field, Output};

/// Data as loaded plus the copy the models are fitted on: continuous
/// columns are z-scored, discrete-only data is used as is.
struct Prepared {
    raw: Dataset,
    model: Dataset,
    prior: PriorMatrix,
    hyper: ScoreHyper,
}

fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let raw = cfg.load_data()?;
    let model = if raw.all_discrete() {
        raw.clone()
    } else {
        raw.standardize().map_err(CliError::from_data)?
    };
    let prior = cfg.load_prior(&raw)?;
    let hyper = ScoreHyper::from_config(&cfg.hyper, raw.d()).map_err(|e| CliError::Config(format!("`hyper`: {e}")))?;
    Ok(Prepared {
        raw,
        model,
        prior,
        hyper,
    })
}

fn names(ds: &Dataset) -> Vec<String> {
    ds.schema().iter().map(|c| c.name.clone()).collect()
}

fn pc_config(cfg: &RunConfig) -> PcConfig {
    PcConfig {
        execution: cfg.execution,
        ..cfg.pc
    }
}

fn run_chains(cfg: &RunConfig, p: &Prepared, prior: &PriorMatrix) -> CliResult<MultiChain> {
    let d = p.model.d();
    let start = match cfg.chains.init {
        InitGraph::Pc => pc(&p.model, &pc_config(cfg))?.dag.into_digraph(),
        InitGraph::Empty => Digraph::empty(d)?,
    };
    let chain = ChainConfig {
        tau: cfg.chains.tau.unwrap_or_else(|| default_tau(d)),
        n_steps: cfg.chains.steps,
        burn_in: cfg.chains.burn_in,
        seed: cfg.seed,
        init: pinned_init(&start, prior)?,
        thinning: cfg.chains.thinning,
    };
    let scorer = Scorer::new(&p.model, p.hyper.clone())?;
    Ok(run_multichain(
        &chain,
        cfg.chains.chains,
        cfg.chains.taus.as_deref(),
        &scorer,
        prior,
        cfg.execution,
    )?)
}

pub fn discover(cfg: &RunConfig) -> CliResult<()> {
    let p = prepare(cfg)?;
    let pc_cfg = pc_config(cfg);
    let found = pc(&p.model, &pc_cfg)?;
    let out = Output::create(&cfg.out, cfg.digest())?;

    let mut edges = out.header();
    let _ = writeln!(edges, "# columns: {}", indexed_names(&p.raw));
    edges.push_str(&found.cpdag.to_edge_list(None));
    out.write("cpdag.txt", &edges)?;

    let mut log = out.header();
    let _ = writeln!(log, "alpha: {}", pc_cfg.alpha);
    let _ = writeln!(log, "max_cond: {}", pc_cfg.max_cond);
    let _ = writeln!(log, "rows: {}", p.raw.n());
    let per_level = found.skeleton.tests_per_level();
    for (level, n) in per_level.iter().enumerate() {
        let _ = writeln!(log, "ci_tests[{level}]: {n}");
    }
    let _ = writeln!(log, "ci_tests_total: {}", per_level.iter().sum::<usize>());
    let _ = writeln!(log, "edges_directed: {}", found.cpdag.directed_edges().len());
    let _ = writeln!(log, "edges_undirected: {}", found.cpdag.undirected_edges().len());
    for w in &found.warnings {
        let _ = writeln!(log, "warning: {w}");
    }
    out.write("discover.log", &log)?;
    Ok(())
}

fn indexed_names(ds: &Dataset) -> String {
    names(ds)
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{i}={n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Serialize, Deserialize)]
struct PosteriorFile {
    config_digest: String,
    columns: Vec<String>,
    #[serde(flatten)]
    posterior: GraphPosterior,
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    config_digest: &'a str,
    columns: Vec<String>,
    distinct_graphs: usize,
    kept_samples: u64,
    acceptance_rate: f64,
    r_hat: Option<f64>,
    chains: &'a [ChainDiagnostics],
    /// `edge_marginals[i][j]` is the posterior probability of `i -> j`.
    edge_marginals: Vec<Vec<f64>>,
}

pub fn sample(cfg: &RunConfig) -> CliResult<()> {
    let p = prepare(cfg)?;
    let mc = run_chains(cfg, &p, &p.prior)?;
    let out = Output::create(&cfg.out, cfg.digest())?;
    let cols = names(&p.raw);

    let file = PosteriorFile {
        config_digest: out.digest().to_string(),
        columns: cols.clone(),
        posterior: mc.merged.clone(),
    };
    out.write_json("posterior.json", &file)?;

    let mut trace = out.header();
    trace.push_str("chain,step,log_posterior,accepted\n");
    for r in &mc.merged.trace {
        let _ = writeln!(trace, "{},{},{},{}", r.chain, r.step, r.log_posterior, r.accepted as u8);
    }
    out.write("trace.csv", &trace)?;

    let marginals = mc.merged.edge_marginals();
    let mut em = out.header();
    em.push_str("from,to,probability\n");
    for (i, row) in marginals.iter().enumerate() {
        for (j, pr) in row.iter().enumerate().filter(|&(j, _)| j != i) {
            let _ = writeln!(em, "{},{},{}", csv_field(&cols[i]), csv_field(&cols[j]), pr);
        }
    }
    out.write("edge_marginals.csv", &em)?;

    let acceptance = mc.chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / mc.chains.len() as f64;
    let summary = SampleSummary {
        config_digest: out.digest(),
        columns: cols,
        distinct_graphs: mc.merged.n_distinct(),
        kept_samples: mc.merged.total,
        acceptance_rate: acceptance,
        r_hat: mc.r_hat.is_finite().then_some(mc.r_hat),
        chains: &mc.chains,
        edge_marginals: marginals,
    };
    out.write_json("summary.json", &summary)?;
    Ok(())
}

fn load_posterior(cfg: &RunConfig, p: &Prepared) -> CliResult<GraphPosterior> {
    let Some(path) = &cfg.posterior else {
        return Ok(run_chains(cfg, p, &p.prior)?.merged);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("`posterior`: cannot read {}: {e}", path.display())))?;
    let file: PosteriorFile = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("`posterior`: {e}")))?;
    if file.columns != names(&p.raw) {
        return Err(CliError::Config("`posterior`: columns differ from the schema".into()));
    }
    Ok(file.posterior)
}

#[derive(Serialize)]
struct AuditEntry<'a> {
    #[serde(flatten)]
    report: &'a InterventionReport,
    naive: Option<NaiveMoments>,
    #[serde(skip_serializing_if = "Option::is_none")]
    naive_error: Option<String>,
}

#[derive(Serialize)]
struct Audit<'a> {
    config_digest: &'a str,
    bad_value: BadValueModel,
    bad_value_source: &'static str,
    distinct_graphs: usize,
    reports: Vec<AuditEntry<'a>>,
}

pub fn decide(cfg: &RunConfig) -> CliResult<()> {
    let p = prepare(cfg)?;
    let vf = cfg.value_function()?;
    vf.outcome(&p.raw).map_err(|e| CliError::Config(format!("`value_function`: {e}")))?;
    let specs = cfg.specs(&p.raw)?;
    let (bad, source) = match cfg.bad_value {
        Some(b) => {
            b.validate().map_err(|e| CliError::Config(format!("`bad_value`: {e}")))?;
            (b, "configured")
        }
        None => (BadValueModel::default_for(&p.raw, vf)?, "default"),
    };
    let post = load_posterior(cfg, &p)?;
    let opts = DecisionOptions {
        engine: cfg.engine,
        seed: cfg.seed,
        execution: cfg.execution,
        pareto_eps: cfg.pareto_eps,
    };
    let reports = evaluate_interventions(&post, &p.model, &specs, vf, &bad, &p.hyper, &opts)?;
    let out = Output::create(&cfg.out, cfg.digest())?;

    let mut table = out.header();
    let _ = writeln!(table, "# v_bad: {} ({source})", bad.v_bad);
    let _ = writeln!(table, "# r_bad: {} ({source})", bad.r_bad);
    table.push_str("intervention,e_value,risk,good_mass,pareto\n");
    for r in &reports {
        let _ = writeln!(
            table,
            "{},{},{},{},{}",
            csv_field(&r.label),
            r.e_value,
            r.risk,
            r.good_mass,
            r.pareto
        );
    }
    out.write("decisions.csv", &table)?;

    let entries = reports
        .iter()
        .zip(&specs)
        .map(|(r, s)| {
            let (naive, naive_error) = match naive_moments(&p.raw, s, vf, cfg.naive_band) {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            AuditEntry {
                report: r,
                naive,
                naive_error,
            }
        })
        .collect();
    let audit = Audit {
        config_digest: out.digest(),
        bad_value: bad,
        bad_value_source: source,
        distinct_graphs: post.n_distinct(),
        reports: entries,
    };
    out.write_json("decisions_audit.json", &audit)?;
    Ok(())
}

/// Effect of `x` on `y` averaged over the posterior: the total path
/// coefficient in standardized units when the data are all continuous,
/// otherwise `E[y | do(x = hi)] - E[y | do(x = lo)]`.
fn pair_effect(p: &Prepared, post: &GraphPosterior, x: usize, y: usize, cfg: &RunConfig) -> CliResult<f64> {
    if p.model.all_continuous() {
        return Ok(bma_causal_coefficient(post, &p.model, x, y, &p.hyper, cfg.execution)?);
    }
    let (lo, hi) = match p.raw.kind(x) {
        ColumnKind::Discrete(k) => (0.0, (k - 1) as f64),
        ColumnKind::Continuous => {
            let s = p.model.scale(x).expect("continuous columns are scaled");
            (s.mean, s.mean + s.sd)
        }
    };
    let model = p.model.with_role(y, Role::Quality)?;
    let raw = p.raw.with_role(y, Role::Quality)?;
    let vf = ValueFunction::identity(p.raw.meta(y).name.clone());
    let bad = BadValueModel::default_for(&raw, &vf)?;
    let specs = [InterventionSpec::new(&[(x, lo)], 0.0), InterventionSpec::new(&[(x, hi)], 0.0)];
    let opts = DecisionOptions {
        engine: cfg.engine,
        seed: cfg.seed,
        execution: cfg.execution,
        pareto_eps: cfg.pareto_eps,
    };
    let r = evaluate_interventions(post, &model, &specs, &vf, &bad, &p.hyper, &opts)?;
    Ok(r[1].e_value - r[0].e_value)
}

pub fn sensitivity(cfg: &RunConfig) -> CliResult<()> {
    let s = cfg
        .sensitivity
        .as_ref()
        .ok_or_else(|| CliError::Config("`sensitivity`: required by this command".into()))?;
    let p = prepare(cfg)?;
    let (i, j) = (
        column(&p.raw, &s.edge[0], "sensitivity.edge")?,
        column(&p.raw, &s.edge[1], "sensitivity.edge")?,
    );
    if i == j {
        return Err(CliError::Config("`sensitivity.edge`: self-loop".into()));
    }
    let pair = s.pair.as_ref().unwrap_or(&s.edge);
    let (x, y) = (
        column(&p.raw, &pair[0], "sensitivity.pair")?,
        column(&p.raw, &pair[1], "sensitivity.pair")?,
    );
    if x == y {
        return Err(CliError::Config("`sensitivity.pair`: needs two distinct columns".into()));
    }
    let mut rows = Vec::with_capacity(s.grid.len());
    for &a in &s.grid {
        let mut prior = p.prior.clone();
        prior
            .set(i, j, a)
            .and_then(|()| prior.check_consistent())
            .map_err(|e| CliError::Config(format!("`sensitivity.grid` at {a}: {e}")))?;
        let post = run_chains(cfg, &p, &prior)?.merged;
        let effect = pair_effect(&p, &post, x, y, cfg)?;
        rows.push((a, effect, post.edge_marginals()[i][j]));
    }
    let out = Output::create(&cfg.out, cfg.digest())?;
    let mut table = out.header();
    let _ = writeln!(table, "# edge: {} -> {}", s.edge[0], s.edge[1]);
    let _ = writeln!(table, "# pair: {} -> {}", pair[0], pair[1]);
    table.push_str("a,coefficient,edge_probability\n");
    for (a, c, e) in rows {
        let _ = writeln!(table, "{a},{c},{e}");
    }
    out.write("sensitivity.csv", &table)?;
    Ok(())
}

fn truth_and_queries(cfg: &RunConfig) -> CliResult<(GroundTruthModel, Vec<Query>)> {
    let v = &cfg.validate;
    let (model, shipped) = match &v.model {
        ModelChoice::Lucas => {
            let m = lucas_model();
            let q = lucas_queries(&m);
            (m, q)
        }
        ModelChoice::FiveNode => (five_node_binary(), five_node_queries()),
        ModelChoice::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("`validate.model`: cannot read {}: {e}", path.display())))?;
            let m = GroundTruthModel::from_json(&text).map_err(|e| CliError::Config(format!("`validate.model`: {e}")))?;
            (m, Vec::new())
        }
    };
    if v.queries.is_empty() {
        if shipped.is_empty() {
            return Err(CliError::Config("`validate.queries`: a model file needs queries".into()));
        }
        return Ok((model, shipped));
    }
    // resolve names against an empty dataset carrying the model schema
    let probe = Dataset::from_columns(model.schema.clone(), vec![vec![0.0]; model.d()]).map_err(CliError::from_data)?;
    let queries = v
        .queries
        .iter()
        .map(|q| {
            Ok(Query {
                spec: InterventionSpec::new(&resolve_set(&probe, &q.set, "validate.queries")?, 0.0),
                q: column(&probe, &q.outcome, "validate.queries")?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((model, queries))
}

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    max_abs_error: f64,
    passed: bool,
    r_hat: Option<f64>,
    distinct_graphs: usize,
}

#[derive(Serialize)]
struct ValidationSummary<'a> {
    config_digest: &'a str,
    n: usize,
    tolerance: f64,
    seeds_passed: usize,
    seeds_total: usize,
    coverage: f64,
    seeds: Vec<SeedSummary>,
}

pub fn validate(cfg: &RunConfig) -> CliResult<()> {
    let v = &cfg.validate;
    if v.n == 0 || v.seeds == 0 {
        return Err(CliError::Config("`validate`: n and seeds must be positive".into()));
    }
    if !(v.tolerance > 0.0) {
        return Err(CliError::Config("`validate.tolerance`: must be positive".into()));
    }
    let (truth, queries) = truth_and_queries(cfg)?;
    let mut reports = Vec::with_capacity(v.seeds);
    for s in 0..v.seeds as u64 {
        let pipeline = PipelineConfig {
            seed: cfg.seed.wrapping_add(s),
            steps: cfg.chains.steps,
            chains: cfg.chains.chains,
            burn_in: cfg.chains.burn_in,
            pc_init: cfg.chains.init == InitGraph::Pc,
            prior: None,
            engine: cfg.engine,
            execution: cfg.execution,
        };
        reports.push(end_to_end_check(&truth, v.n, &pipeline, &queries)?);
    }
    let out = Output::create(&cfg.out, cfg.digest())?;
    let mut table = out.header();
    table.push_str("seed,query,outcome,estimate,sd,truth,abs_error,covered\n");
    let mut covered = 0;
    let mut checks = 0;
    for r in &reports {
        for c in &r.checks {
            let _ = writeln!(
                table,
                "{},{},{},{},{},{},{},{}",
                r.seed,
                csv_field(&c.label),
                csv_field(&truth.schema[c.q].name),
                c.estimate,
                c.sd,
                c.truth,
                c.abs_error,
                c.covered
            );
            covered += c.covered as usize;
            checks += 1;
        }
    }
    out.write("validation.csv", &table)?;
    let seeds: Vec<SeedSummary> = reports
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            max_abs_error: r.max_abs_error(),
            passed: r.max_abs_error() <= v.tolerance,
            r_hat: r.r_hat.is_finite().then_some(r.r_hat),
            distinct_graphs: r.distinct_graphs,
        })
        .collect();
    let passed = seeds.iter().filter(|s| s.passed).count();
    let _ = writeln!(
        std::io::stdout(),
        "{passed}/{} seeds within {} of the true effects",
        seeds.len(),
        v.tolerance
    );
    let summary = ValidationSummary {
        config_digest: out.digest(),
        n: v.n,
        tolerance: v.tolerance,
        seeds_passed: passed,
        seeds_total: seeds.len(),
        coverage: covered as f64 / checks as f64,
        seeds,
    };
    out.write_json("validation_summary.json", &summary)?;
    Ok(())
}
