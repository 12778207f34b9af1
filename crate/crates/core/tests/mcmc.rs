mod common;

use std::collections::HashMap;

use causal_bma::mcmc::{default_tau, mh_step, run_chain, run_multichain, ChainConfig, ChainState, GraphPosterior};
use causal_bma::score::{ScoreHyper, Scorer};
use causal_bma::validation::{exact_posterior, sample_data};
use causal_bma::{Dag, Dataset, Execution, PriorMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data(seed: u64) -> Dataset {
    sized_data(200, seed)
}

fn sized_data(n: usize, seed: u64) -> Dataset {
    sample_data(&common::binary_chain3(), n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn empirical(post: &GraphPosterior, dags: &[Dag]) -> Vec<f64> {
    let freq: HashMap<&[u64], f64> = post
        .entries
        .iter()
        .zip(post.weights())
        .map(|(e, w)| (e.dag.rows(), w))
        .collect();
    dags.iter().map(|g| freq.get(g.rows()).copied().unwrap_or(0.0)).collect()
}

#[test]
fn single_chain_matches_exact_posterior() {
    let ds = data(11);
    let h = ScoreHyper::default_for(3);
    let prior = PriorMatrix::uninformative(3);
    let exact = exact_posterior(&ds, &prior, &h).unwrap();
    assert_eq!(exact.len(), 25);
    let scorer = Scorer::new(&ds, h).unwrap();
    let cfg = ChainConfig {
        n_steps: 50_000,
        seed: 1,
        ..ChainConfig::new(Dag::empty(3).unwrap())
    };
    let post = run_chain(&cfg, &scorer, &prior).unwrap();
    let dags: Vec<Dag> = exact.iter().map(|e| e.0.clone()).collect();
    let p: Vec<f64> = exact.iter().map(|e| e.1).collect();
    let tv = common::total_variation(&empirical(&post, &dags), &p);
    assert!(tv < 0.05, "total variation {tv}");
    assert!(post.n_distinct() <= 25);
}

#[test]
fn merged_chains_match_exact_posterior() {
    let ds = data(12);
    let h = ScoreHyper::default_for(3);
    let prior = PriorMatrix::uninformative(3);
    let exact = exact_posterior(&ds, &prior, &h).unwrap();
    let scorer = Scorer::new(&ds, h).unwrap();
    let cfg = ChainConfig {
        n_steps: 50_000,
        seed: 40,
        ..ChainConfig::new(Dag::empty(3).unwrap())
    };
    let mc = run_multichain(&cfg, 3, None, &scorer, &prior, Execution::Parallel).unwrap();
    let dags: Vec<Dag> = exact.iter().map(|e| e.0.clone()).collect();
    let p: Vec<f64> = exact.iter().map(|e| e.1).collect();
    let tv = common::total_variation(&empirical(&mc.merged, &dags), &p);
    assert!(tv < 0.05, "total variation {tv}");
    assert_eq!(mc.merged.total, mc.chains.iter().map(|c| c.kept).sum::<u64>());
    assert!(mc.r_hat < 1.1, "split R-hat {}", mc.r_hat);
}

#[test]
fn transition_flows_balance() {
    // few rows keep the posterior spread over many graphs
    let ds = sized_data(20, 13);
    let scorer = Scorer::new(&ds, ScoreHyper::default_for(3)).unwrap();
    let prior = PriorMatrix::uninformative(3);
    let mut state = ChainState::new(Dag::empty(3).unwrap().into_digraph(), &scorer, &prior).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tau = 4.0 * default_tau(3);
    let mut flows: HashMap<(Vec<u64>, Vec<u64>), u64> = HashMap::new();
    for _ in 0..400_000 {
        let from = state.graph.rows().to_vec();
        mh_step(&mut state, tau, &scorer, &prior, &mut rng).unwrap();
        assert!(state.log_posterior().is_finite());
        let to = state.graph.rows().to_vec();
        if from != to {
            *flows.entry((from, to)).or_default() += 1;
        }
    }
    let mut checked = 0;
    for ((a, b), &n_ab) in &flows {
        let n_ba = flows.get(&(b.clone(), a.clone())).copied().unwrap_or(0);
        let total = n_ab + n_ba;
        if total < 100 {
            continue;
        }
        let diff = n_ab.abs_diff(n_ba) as f64;
        assert!(diff <= 5.0 * (total as f64).sqrt(), "{a:?} -> {b:?}: {n_ab} vs {n_ba}");
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} well-populated transitions");
}

#[test]
fn pins_hold_in_every_kept_state() {
    let ds = data(14);
    let scorer = Scorer::new(&ds, ScoreHyper::default_for(3)).unwrap();
    let mut prior = PriorMatrix::uninformative(3);
    prior.set(0, 1, 1.0).unwrap();
    prior.set(2, 0, 0.0).unwrap();
    let cfg = ChainConfig {
        n_steps: 5_000,
        seed: 3,
        ..ChainConfig::new(Dag::from_edges(3, &[(0, 1)]).unwrap())
    };
    let post = run_chain(&cfg, &scorer, &prior).unwrap();
    assert!(post.entries.iter().all(|e| e.dag.has_edge(0, 1) && !e.dag.has_edge(2, 0)));
    assert_eq!(post.edge_marginals()[0][1], 1.0);
    assert!(post.trace.iter().all(|t| t.log_posterior.is_finite()));
    let again = run_chain(&cfg, &scorer, &prior).unwrap();
    assert_eq!(post, again);
}
