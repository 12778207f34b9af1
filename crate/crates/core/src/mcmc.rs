//! Metropolis–Hastings over DAGs with the independent edge-toggle proposal.
//!
//! Every free ordered pair is flipped with probability `tau`, which makes the
//! proposal symmetric; cyclic candidates get prior mass zero and are simply
//! rejected. Only families whose parent set changed are rescored.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{Dag, Digraph, NodeSet};
use crate::prior::{edge_prior_logprob, log_prior, PriorMatrix};
use crate::score::Scorer;

pub const DEFAULT_BURN_IN: f64 = 0.25;
pub const DEFAULT_STEPS: usize = 20_000;

/// Toggle probability that flips one edge per proposal in expectation.
pub fn default_tau(d: usize) -> f64 {
    if d < 2 {
        0.5
    } else {
        1.0 / (d * (d - 1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub tau: f64,
    pub n_steps: usize,
    pub burn_in: f64,
    pub seed: u64,
    pub init: Dag,
    pub thinning: usize,
}

impl ChainConfig {
    pub fn new(init: Dag) -> Self {
        ChainConfig {
            tau: default_tau(init.d()),
            n_steps: DEFAULT_STEPS,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
            init,
            thinning: 1,
        }
    }

    pub fn validate(&self, prior: &PriorMatrix) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::config(format!("tau {} must lie in (0, 1)", self.tau)));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::config(format!("burn-in fraction {} must lie in [0, 1)", self.burn_in)));
        }
        if self.thinning == 0 {
            return Err(Error::config("thinning must be positive"));
        }
        if self.init.d() != prior.d() {
            return Err(Error::config(format!(
                "initial graph has {} nodes, prior has {}",
                self.init.d(),
                prior.d()
            )));
        }
        if !prior.satisfies_pins(&self.init) {
            return Err(Error::config("initial graph violates a hard prior constraint"));
        }
        Ok(())
    }

    fn burn(&self) -> usize {
        (self.burn_in * self.n_steps as f64).floor() as usize
    }
}

/// Draws a candidate by toggling every free pair independently with
/// probability `tau`. The candidate may be cyclic.
pub fn propose<R: Rng + ?Sized>(g: &Digraph, tau: f64, prior: &PriorMatrix, rng: &mut R) -> Digraph {
    let mut cand = g.clone();
    for (i, j) in prior.free_pairs() {
        if rng.random::<f64>() < tau {
            cand.toggle(i, j);
        }
    }
    cand
}

/// `min(1, exp(delta))`.
pub fn accept_probability(delta: f64) -> f64 {
    if delta >= 0.0 {
        1.0
    } else {
        delta.exp()
    }
}

/// Markov chain state with per-family score cache.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub graph: Digraph,
    family: Vec<f64>,
    log_prior: f64,
}

impl ChainState {
    pub fn new(g: Digraph, scorer: &Scorer, prior: &PriorMatrix) -> Result<Self> {
        let family = (0..g.d())
            .map(|i| scorer.family(i, g.parents_of(i)))
            .collect::<Result<Vec<_>>>()?;
        let log_prior = log_prior(&g, prior)?;
        if !log_prior.is_finite() {
            return Err(Error::config("initial graph has zero prior probability"));
        }
        Ok(ChainState {
            graph: g,
            family,
            log_prior,
        })
    }

    pub fn log_posterior(&self) -> f64 {
        self.family.iter().sum::<f64>() + self.log_prior
    }
}

/// Edges that differ between two graphs, removals first.
fn toggled(a: &Digraph, b: &Digraph) -> Vec<(usize, usize, bool)> {
    let mut removed = Vec::new();
    let mut added = Vec::new();
    for i in 0..a.d() {
        let diff = a.rows()[i] ^ b.rows()[i];
        for j in NodeSet::from_bits(diff).iter() {
            if b.has_edge(i, j) {
                added.push((i, j, true));
            } else {
                removed.push((i, j, false));
            }
        }
    }
    removed.extend(added);
    removed
}

/// Applies `changes` to a copy of `g` one edge at a time, rejecting as soon
/// as an addition closes a cycle.
fn acyclic_after(g: &Digraph, changes: &[(usize, usize, bool)]) -> Option<Digraph> {
    let mut h = g.clone();
    for &(i, j, present) in changes {
        if present && h.reaches(j, i) {
            return None;
        }
        h.set_edge(i, j, present);
    }
    Some(h)
}

/// Local change in log posterior when moving from `state` to `cand`, or
/// `None` when `cand` is cyclic. Returns the new family scores of touched
/// targets alongside.
fn log_target_delta(
    state: &ChainState,
    cand: &Digraph,
    scorer: &Scorer,
    prior: &PriorMatrix,
) -> Result<Option<(f64, f64, Vec<(usize, f64)>)>> {
    let changes = toggled(&state.graph, cand);
    if acyclic_after(&state.graph, &changes).is_none() {
        return Ok(None);
    }
    let mut d_prior = 0.0;
    let mut targets = NodeSet::empty();
    for &(i, j, present) in &changes {
        let a = prior.get(i, j);
        d_prior += edge_prior_logprob(present, a)? - edge_prior_logprob(!present, a)?;
        targets.insert(j);
    }
    let mut d_lik = 0.0;
    let mut fresh = Vec::with_capacity(targets.len());
    for t in targets.iter() {
        let s = scorer.family(t, cand.parents_of(t))?;
        d_lik += s - state.family[t];
        fresh.push((t, s));
    }
    Ok(Some((d_lik + d_prior, d_prior, fresh)))
}

/// One Metropolis–Hastings transition. Returns whether the candidate was
/// accepted.
pub fn mh_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    tau: f64,
    scorer: &Scorer,
    prior: &PriorMatrix,
    rng: &mut R,
) -> Result<bool> {
    let cand = propose(&state.graph, tau, prior, rng);
    let u: f64 = rng.random();
    let Some((delta, d_prior, fresh)) = log_target_delta(state, &cand, scorer, prior)? else {
        return Ok(false);
    };
    if u < accept_probability(delta) {
        for (t, s) in fresh {
            state.family[t] = s;
        }
        state.log_prior += d_prior;
        state.graph = cand;
        Ok(true)
    } else {
        Ok(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEntry {
    #[serde(flatten)]
    pub dag: Dag,
    pub count: u64,
    pub log_posterior: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub chain: usize,
    pub step: usize,
    pub log_posterior: f64,
    pub accepted: bool,
}

/// Distinct sampled graphs with visit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPosterior {
    pub d: usize,
    /// Sorted by descending count, ties by adjacency.
    pub entries: Vec<PosteriorEntry>,
    pub total: u64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl GraphPosterior {
    fn from_counts(d: usize, counts: BTreeMap<Vec<u64>, (Digraph, u64, f64)>, trace: Vec<TraceRow>) -> Result<Self> {
        let mut entries = counts
            .into_values()
            .map(|(g, count, lp)| {
                Ok(PosteriorEntry {
                    dag: Dag::new(g)?,
                    count,
                    log_posterior: lp,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.dag.rows().cmp(b.dag.rows())));
        let total = entries.iter().map(|e| e.count).sum();
        if total == 0 {
            return Err(Error::EmptyPosterior);
        }
        Ok(GraphPosterior {
            d,
            entries,
            total,
            trace,
        })
    }

    /// Pools kept samples of several chains; traces are concatenated.
    pub fn merge(parts: &[GraphPosterior]) -> Result<Self> {
        let d = parts.first().ok_or(Error::EmptyPosterior)?.d;
        let mut counts: BTreeMap<Vec<u64>, (Digraph, u64, f64)> = BTreeMap::new();
        let mut trace = Vec::new();
        for p in parts {
            if p.d != d {
                return Err(Error::invalid("cannot merge posteriors over different node sets"));
            }
            for e in &p.entries {
                counts
                    .entry(e.dag.rows().to_vec())
                    .or_insert_with(|| (e.dag.as_digraph().clone(), 0, e.log_posterior))
                    .1 += e.count;
            }
            trace.extend_from_slice(&p.trace);
        }
        Self::from_counts(d, counts, trace)
    }

    /// Visit frequencies, aligned with `entries`.
    pub fn weights(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.count as f64 / self.total as f64)
            .collect()
    }

    /// Posterior probability of each directed edge. Counts are summed
    /// before dividing, so an edge present in every sample gets exactly 1.
    pub fn edge_marginals(&self) -> Vec<Vec<f64>> {
        let mut counts = vec![vec![0u64; self.d]; self.d];
        for e in &self.entries {
            for (i, j) in e.dag.edges() {
                counts[i][j] += e.count;
            }
        }
        counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64 / self.total as f64).collect())
            .collect()
    }

    pub fn n_distinct(&self) -> usize {
        self.entries.len()
    }
}

struct ChainRun {
    posterior: GraphPosterior,
    kept_log_post: Vec<f64>,
    accepted: usize,
}

fn run_chain_inner(cfg: &ChainConfig, chain: usize, scorer: &Scorer, prior: &PriorMatrix) -> Result<ChainRun> {
    cfg.validate(prior)?;
    let burn = cfg.burn();
    if cfg.n_steps <= burn {
        return Err(Error::EmptyPosterior);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = ChainState::new(cfg.init.as_digraph().clone(), scorer, prior)?;
    let mut counts: BTreeMap<Vec<u64>, (Digraph, u64, f64)> = BTreeMap::new();
    let mut trace = Vec::with_capacity(cfg.n_steps);
    let mut kept_log_post = Vec::new();
    let mut accepted = 0;
    for step in 0..cfg.n_steps {
        let acc = mh_step(&mut state, cfg.tau, scorer, prior, &mut rng)?;
        accepted += acc as usize;
        let lp = state.log_posterior();
        trace.push(TraceRow {
            chain,
            step,
            log_posterior: lp,
            accepted: acc,
        });
        if step >= burn && (step - burn) % cfg.thinning == 0 {
            counts
                .entry(state.graph.rows().to_vec())
                .or_insert_with(|| (state.graph.clone(), 0, lp))
                .1 += 1;
            kept_log_post.push(lp);
        }
    }
    Ok(ChainRun {
        posterior: GraphPosterior::from_counts(cfg.init.d(), counts, trace)?,
        kept_log_post,
        accepted,
    })
}

/// Runs one chain; burn-in is discarded and kept states are aggregated.
pub fn run_chain(cfg: &ChainConfig, scorer: &Scorer, prior: &PriorMatrix) -> Result<GraphPosterior> {
    Ok(run_chain_inner(cfg, 0, scorer, prior)?.posterior)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub seed: u64,
    pub tau: f64,
    pub acceptance_rate: f64,
    pub kept: u64,
    pub distinct: usize,
}

#[derive(Debug, Clone)]
pub struct MultiChain {
    pub merged: GraphPosterior,
    pub chains: Vec<ChainDiagnostics>,
    /// Split-R̂ of the kept log-posterior traces.
    pub r_hat: f64,
}

/// `[τ, 4τ, 16τ]`, capped below one.
pub fn default_taus(base: f64) -> Vec<f64> {
    [1.0, 4.0, 16.0].iter().map(|m| (base * m).min(0.9)).collect()
}

/// Runs `k` chains with seeds `seed + c` and toggle probabilities cycled
/// from `taus`, then pools them.
pub fn run_multichain(
    base: &ChainConfig,
    k: usize,
    taus: Option<&[f64]>,
    scorer: &Scorer,
    prior: &PriorMatrix,
    exec: Execution,
) -> Result<MultiChain> {
    if k == 0 {
        return Err(Error::config("need at least one chain"));
    }
    let taus = taus.map_or_else(|| default_taus(base.tau), <[f64]>::to_vec);
    if taus.is_empty() {
        return Err(Error::config("tau list is empty"));
    }
    let cfgs: Vec<ChainConfig> = (0..k)
        .map(|c| ChainConfig {
            seed: base.seed.wrapping_add(c as u64),
            tau: taus[c % taus.len()],
            ..base.clone()
        })
        .collect();
    let idx: Vec<usize> = (0..k).collect();
    let runs = exec.try_map(&idx, |&c| run_chain_inner(&cfgs[c], c, scorer, prior))?;
    let chains = runs
        .iter()
        .zip(&cfgs)
        .enumerate()
        .map(|(c, (r, cfg))| ChainDiagnostics {
            chain: c,
            seed: cfg.seed,
            tau: cfg.tau,
            acceptance_rate: r.accepted as f64 / cfg.n_steps as f64,
            kept: r.posterior.total,
            distinct: r.posterior.n_distinct(),
        })
        .collect();
    let traces: Vec<&[f64]> = runs.iter().map(|r| r.kept_log_post.as_slice()).collect();
    let r_hat = split_r_hat(&traces);
    let merged = if runs.len() == 1 {
        runs.into_iter().next().expect("one run").posterior
    } else {
        GraphPosterior::merge(&runs.into_iter().map(|r| r.posterior).collect::<Vec<_>>())?
    };
    Ok(MultiChain { merged, chains, r_hat })
}

/// Gelman–Rubin statistic over chains split in halves. Constant traces give
/// 1 when all halves agree and infinity otherwise; fewer than four kept
/// samples per chain give NaN.
pub fn split_r_hat(chains: &[&[f64]]) -> f64 {
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0) / 2;
    if n < 2 {
        return f64::NAN;
    }
    let mut halves: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let c = &c[c.len() - 2 * n..];
        halves.push(&c[..n]);
        halves.push(&c[n..]);
    }
    let nf = n as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / nf).collect();
    let vars: Vec<f64> = halves
        .iter()
        .zip(&means)
        .map(|(h, m)| h.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nf - 1.0))
        .collect();
    let m = halves.len() as f64;
    let grand = means.iter().sum::<f64>() / m;
    let b = nf * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1.0);
    let w = vars.iter().sum::<f64>() / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    (var_plus / w).sqrt()
}

/// Starting graph honouring the prior's pins: forced edges are added and
/// forbidden ones dropped; falls back to the forced edges alone if that
/// creates a cycle.
pub fn pinned_init(g: &Digraph, prior: &PriorMatrix) -> Result<Dag> {
    let mut h = g.clone();
    for i in 0..h.d() {
        for j in 0..h.d() {
            if let Some(present) = prior.pin(i, j) {
                if i != j {
                    h.set_edge(i, j, present);
                }
            }
        }
    }
    if h.is_acyclic() {
        return Dag::new(h);
    }
    Dag::from_edges(prior.d(), &prior.required_edges())
}
