//! Acceptance gates. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use causal_bma::decision::{bma_causal_coefficient, bma_moments, naive_slope, pareto_flags, BadValueModel, GraphValue};
use causal_bma::graph::enumerate_dags;
use causal_bma::mcmc::{pinned_init, run_chain, run_multichain, ChainConfig};
use causal_bma::pc::{dag_to_cpdag, pc, PcConfig};
use causal_bma::score::{log_marginal_likelihood, NodeParams, ScoreHyper, Scorer};
use causal_bma::validation::{
    end_to_end_check, exact_posterior, lucas_model, lucas_queries, sample_data, GroundTruthModel, PipelineConfig,
};
use causal_bma::{ColumnMeta, Dag, Dataset, Execution, PriorMatrix};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<String, String>;

fn binary_chain3() -> GroundTruthModel {
    let table = |n_parents: usize, p: &[f64]| NodeParams::Table {
        parent_arities: vec![2; n_parents],
        rows: p.iter().map(|&q| vec![1.0 - q, q]).collect(),
        bin_edges: vec![],
    };
    GroundTruthModel::new(
        ["a", "b", "c"].iter().map(|n| ColumnMeta::discrete(*n, 2)).collect(),
        Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap(),
        vec![table(0, &[0.5]), table(1, &[0.2, 0.8]), table(1, &[0.3, 0.75])],
    )
    .unwrap()
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let t = started.elapsed();
    if t > limit {
        return Err(format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()));
    }
    Ok(())
}

fn exact_equivalence_mcmc() -> Outcome {
    let t0 = Instant::now();
    let ds = sample_data(&binary_chain3(), 200, &mut ChaCha8Rng::seed_from_u64(11)).map_err(|e| e.to_string())?;
    let h = ScoreHyper::default_for(3);
    let prior = PriorMatrix::uninformative(3);
    let exact = exact_posterior(&ds, &prior, &h).map_err(|e| e.to_string())?;
    let scorer = Scorer::new(&ds, h).map_err(|e| e.to_string())?;
    let cfg = ChainConfig {
        n_steps: 50_000,
        seed: 1,
        ..ChainConfig::new(Dag::empty(3).unwrap())
    };
    let post = run_chain(&cfg, &scorer, &prior).map_err(|e| e.to_string())?;
    let freq: HashMap<&[u64], f64> = post.entries.iter().zip(post.weights()).map(|(e, w)| (e.dag.rows(), w)).collect();
    let tv = 0.5
        * exact
            .iter()
            .map(|(g, p)| (freq.get(g.rows()).copied().unwrap_or(0.0) - p).abs())
            .sum::<f64>();
    within(Duration::from_secs(60), t0)?;
    let detail = format!("TV {tv:.4} over {} DAGs", exact.len());
    if exact.len() == 25 && tv <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Skeleton plus v-structures: the Markov equivalence class of `g`.
fn markov_class(g: &Dag) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>) {
    let d = g.d();
    let mut skeleton = BTreeSet::new();
    let mut colliders = BTreeSet::new();
    for (i, j) in g.edges() {
        skeleton.insert((i.min(j), i.max(j)));
    }
    for c in 0..d {
        for a in 0..d {
            for b in a + 1..d {
                if g.has_edge(a, c) && g.has_edge(b, c) && !g.has_edge(a, b) && !g.has_edge(b, a) {
                    colliders.insert((a, c, b));
                }
            }
        }
    }
    (skeleton, colliders)
}

fn score_equivalence() -> Outcome {
    let t0 = Instant::now();
    let dags = enumerate_dags(3).unwrap();
    let discrete = sample_data(&binary_chain3(), 500, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let continuous = sample_data(&linear_sem(3, &[(0, 1, 0.7), (1, 2, -0.5), (0, 2, 0.3)]), 500, &mut ChaCha8Rng::seed_from_u64(3))
        .unwrap()
        .standardize()
        .unwrap();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for ds in [&discrete, &continuous] {
        let h = ScoreHyper::default_for(3);
        let scores: Vec<f64> = dags.iter().map(|g| log_marginal_likelihood(g, ds, &h).unwrap()).collect();
        for a in 0..dags.len() {
            for b in a + 1..dags.len() {
                if markov_class(&dags[a]) == markov_class(&dags[b]) {
                    worst = worst.max((scores[a] - scores[b]).abs());
                    pairs += 1;
                }
            }
        }
    }
    within(Duration::from_secs(5), t0)?;
    let detail = format!("{pairs} equivalent pairs, max gap {worst:.2e}");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lucas_recovery() -> Outcome {
    let t0 = Instant::now();
    let m = lucas_model();
    let queries = lucas_queries(&m);
    let mut passed = 0;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let cfg = PipelineConfig {
            seed,
            ..PipelineConfig::default()
        };
        let r = end_to_end_check(&m, 10_000, &cfg, &queries).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_abs_error());
        passed += (r.max_abs_error() <= 0.05) as usize;
    }
    within(Duration::from_secs(600), t0)?;
    let detail = format!(
        "{passed}/20 seeds within 0.05 on all {} queries, worst error {worst:.4}",
        queries.len()
    );
    if passed >= 18 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn backdoor() -> Outcome {
    let t0 = Instant::now();
    // s -> x (1), s -> y (1), x -> y (2)
    let m = linear_sem(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 2.0)]);
    let raw = sample_data(&m, 5000, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    let ds = raw.standardize().unwrap();
    // the triangle is one equivalence class; direction comes from time
    // order s, x, y, so every backward edge is ruled out
    let mut prior = PriorMatrix::uninformative(3);
    for (i, j) in [(1, 0), (2, 0), (2, 1)] {
        prior.set(i, j, 0.0).unwrap();
    }
    let h = ScoreHyper::default_for(3);
    let init = pinned_init(&pc(&ds, &PcConfig::default()).unwrap().dag.into_digraph(), &prior).unwrap();
    let scorer = Scorer::new(&ds, h.clone()).unwrap();
    let cfg = ChainConfig {
        seed: 4,
        ..ChainConfig::new(init)
    };
    let post = run_multichain(&cfg, 3, None, &scorer, &prior, Execution::Parallel)
        .unwrap()
        .merged;
    let coef = bma_causal_coefficient(&post, &ds, 1, 2, &h, Execution::Parallel).unwrap() * ds.slope_to_original(1, 2);
    let naive = naive_slope(&raw, 1, 2).unwrap();
    // omitted-variable bias: b + c·cov(s, x)/var(x) = 2 + 1·1/2
    let biased = 2.5;
    within(Duration::from_secs(30), t0)?;
    let detail = format!("BMA coefficient {coef:.4}, naive slope {naive:.4} (analytic {biased})");
    let ok = (coef / 2.0 - 1.0).abs() < 0.1 && (naive - biased).abs() < 0.1 && (naive / 2.0 - 1.0).abs() >= 0.1;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pc_recovery() -> Outcome {
    let t0 = Instant::now();
    let fixtures = [
        ("chain", linear_sem(5, &[(0, 1, 0.8), (1, 2, 0.8), (2, 3, 0.8), (3, 4, 0.8)])),
        (
            "collider",
            linear_sem(5, &[(0, 1, 0.8), (1, 2, 0.7), (1, 3, -0.7), (2, 4, 0.6), (3, 4, 0.8)]),
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, m) in &fixtures {
        let truth = dag_to_cpdag(m.graph.as_digraph());
        let mut hits = 0;
        for seed in 0..20 {
            let ds = sample_data(m, 10_000, &mut ChaCha8Rng::seed_from_u64(100 + seed)).unwrap();
            hits += (pc(&ds, &PcConfig::default()).unwrap().cpdag == truth) as usize;
        }
        ok &= hits >= 18;
        parts.push(format!("{name} {hits}/20"));
    }
    within(Duration::from_secs(60), t0)?;
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Dominance written out directly from the definition.
fn brute_front(points: &[(f64, f64)], eps: f64) -> Vec<bool> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(e, r))| {
            !points.iter().enumerate().any(|(j, &(e2, r2))| {
                let no_worse = e2 >= e - eps && r2 <= r + eps;
                let better = e2 > e + eps || r2 < r - eps;
                j != i && no_worse && better
            })
        })
        .collect()
}

fn decision_algebra() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 1e-9;
    let mut worst_identity = 0.0f64;
    for trial in 0..1000 {
        let n = rng.random_range(1..=20);
        // coarse grid so ties and exact duplicates are common
        let points: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0..6) as f64 * 0.5, rng.random_range(0..6) as f64 * 0.25))
            .collect();
        let flags = pareto_flags(&points, eps);
        if flags != brute_front(&points, eps) {
            return Err(format!("trial {trial}: front differs from brute force on {points:?}"));
        }
        let best = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        if !points.iter().zip(&flags).any(|(p, &f)| f && p.0 >= best - eps) {
            return Err(format!("trial {trial}: no front member attains the best value"));
        }

        let k = rng.random_range(1..=12);
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let vals: Vec<GraphValue> = (0..k)
            .map(|_| GraphValue::Good {
                mean: rng.random_range(-5.0..5.0),
                var: rng.random_range(0.0..3.0),
            })
            .collect();
        let cost = rng.random_range(-2.0..2.0);
        let bad_a = BadValueModel::new(rng.random_range(-10.0..10.0), rng.random_range(0.1..50.0)).unwrap();
        let bad_b = BadValueModel::new(rng.random_range(-10.0..10.0), rng.random_range(0.1..50.0)).unwrap();
        let (ea, ra) = bma_moments(&w, &vals, &bad_a, cost).unwrap();
        let (eb, rb) = bma_moments(&w, &vals, &bad_b, cost).unwrap();
        if ea != eb || ra != rb {
            return Err(format!("trial {trial}: result depends on the bad-value model with no bad graphs"));
        }
        let total: f64 = w.iter().sum();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (wi, v) in w.iter().zip(&vals) {
            let GraphValue::Good { mean, var } = *v else { unreachable!() };
            m1 += wi / total * mean;
            m2 += wi / total * (var + mean * mean);
        }
        worst_identity = worst_identity.max((ea - (m1 - cost)).abs()).max((ra - (m2 - m1 * m1)).abs());
    }
    within(Duration::from_secs(5), t0)?;
    let detail = format!("1000 trials, max mixture-identity gap {worst_identity:.2e}");
    if worst_identity <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sensitivity_monotone() -> Outcome {
    let t0 = Instant::now();
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let datasets: Vec<Dataset> = vec![
        sample_data(&binary_chain3(), 300, &mut ChaCha8Rng::seed_from_u64(8)).unwrap(),
        sample_data(&linear_sem(3, &[(0, 1, 0.3), (1, 2, 0.2)]), 200, &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap()
            .standardize()
            .unwrap(),
    ];
    let h = ScoreHyper::default_for(3);
    let mut checked = 0;
    for ds in &datasets {
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                let mut last = f64::NEG_INFINITY;
                for &a in &grid {
                    let mut prior = PriorMatrix::uninformative(3);
                    prior.set(i, j, a).unwrap();
                    let p: f64 = exact_posterior(ds, &prior, &h)
                        .unwrap()
                        .iter()
                        .filter(|(g, _)| g.has_edge(i, j))
                        .map(|(_, w)| w)
                        .sum();
                    if p < last {
                        return Err(format!("edge {i}->{j}: probability falls to {p} at a={a}"));
                    }
                    last = p;
                }
                checked += 1;
            }
        }
    }

    let mut f = Fixture::new(&linear_sem(5, &[(0, 1, 0.8), (1, 2, 0.6), (2, 3, 0.7), (1, 4, 0.5)]), 2000, 31);
    f.set("sensitivity", json!({"edge": ["x1", "x2"], "grid": [0.0, 1.0]}));
    f.set("chains", json!({"steps": 20000}));
    let o = f.run("sensitivity", "sweep", &[]);
    if !o.status.success() {
        return Err(format!("sweep failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let rows = csv_rows(&f.read("sweep", "sensitivity.csv"));
    let coef = |r: usize| -> f64 { rows[r][1].parse().unwrap() };
    within(Duration::from_secs(120), t0)?;
    let detail = format!(
        "exact: {checked} edge sweeps monotone; pipeline coefficient {:.4} at a=0, {:.4} at a=1",
        coef(0),
        coef(1)
    );
    if coef(1) >= coef(0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reproducibility() -> Outcome {
    let mut f = Fixture::new(&linear_sem(4, &[(0, 1, 0.9), (1, 2, 0.7), (3, 2, 0.5)]), 1500, 41);
    f.role(2, "quality")
        .set("value_function", json!({"weights": {"x2": 1.0}}))
        .set(
            "interventions",
            json!([{"name": "raise", "set": {"x1": 1.0}}, {"name": "other", "set": {"x3": 1.0}}]),
        )
        .set("costs", json!({"raise": 0.25}))
        .set("sensitivity", json!({"edge": ["x1", "x2"], "grid": [0.0, 0.5, 1.0]}))
        .set("validate", json!({"model": "five_node", "n": 1000, "seeds": 2}));
    let commands = ["discover", "sample", "decide", "sensitivity", "validate"];
    for cmd in commands {
        let (a, b) = (format!("{cmd}-a"), format!("{cmd}-b"));
        for out in [&a, &b] {
            let o = f.run(cmd, out, &[]);
            if !o.status.success() {
                return Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&o.stderr)));
            }
        }
        if snapshot(&f.path(&a)) != snapshot(&f.path(&b)) {
            return Err(format!("{cmd} outputs differ between reruns"));
        }
    }
    Ok(format!("{} commands rerun byte-identical", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exact-posterior equivalence", exact_equivalence_mcmc),
        ("score equivalence", score_equivalence),
        ("ground-truth effect recovery", lucas_recovery),
        ("backdoor correctness", backdoor),
        ("PC recovery", pc_recovery),
        ("decision-layer algebra", decision_algebra),
        ("prior-sensitivity monotonicity", sensitivity_monotone),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = run();
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1}s)", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.1}s)", n + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
