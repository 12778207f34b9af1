use causal_bma::causal::{EngineOptions, InterventionSpec};
use causal_bma::decision::{evaluate_interventions, BadValueModel, DecisionOptions, ValueFunction};
use causal_bma::mcmc::{run_multichain, ChainConfig};
use causal_bma::pc::{pc, PcConfig};
use causal_bma::score::{ScoreHyper, Scorer};
use causal_bma::validation::{lucas_model, sample_data};
use causal_bma::{Dag, Execution, PriorMatrix, Role};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_chains(c: &mut Criterion) {
    let ds = sample_data(&lucas_model(), 5000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let prior = PriorMatrix::uninformative(ds.d());
    let cfg = ChainConfig {
        n_steps: 5000,
        ..ChainConfig::new(Dag::empty(ds.d()).unwrap())
    };
    let mut group = c.benchmark_group("multichain");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                // fresh cache each time so chains do real scoring work
                let scorer = Scorer::new(&ds, ScoreHyper::default_for(ds.d())).unwrap();
                run_multichain(&cfg, 4, None, &scorer, &prior, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_decision(c: &mut Criterion) {
    let ds = sample_data(&lucas_model(), 5000, &mut ChaCha8Rng::seed_from_u64(2))
        .unwrap()
        .with_role(10, Role::Quality)
        .unwrap();
    let prior = PriorMatrix::uninformative(ds.d());
    let scorer = Scorer::new(&ds, ScoreHyper::default_for(ds.d())).unwrap();
    let cfg = ChainConfig {
        n_steps: 20_000,
        ..ChainConfig::new(Dag::empty(ds.d()).unwrap())
    };
    let post = run_multichain(&cfg, 3, None, &scorer, &prior, Execution::Parallel)
        .unwrap()
        .merged;
    let specs: Vec<InterventionSpec> = [0, 4, 8]
        .iter()
        .map(|&x| InterventionSpec::new(&[(x, 1.0)], 0.0))
        .collect();
    let vf = ValueFunction::identity("Lung_Cancer");
    let bad = BadValueModel::default_for(&ds, &vf).unwrap();
    let hyper = ScoreHyper::default_for(ds.d());
    let mut group = c.benchmark_group("evaluate_interventions");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = DecisionOptions {
            engine: EngineOptions {
                m_draws: 50,
                ..Default::default()
            },
            execution: exec,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| evaluate_interventions(&post, &ds, &specs, &vf, &bad, &hyper, opts).unwrap())
        });
    }
    group.finish();
}

fn bench_skeleton(c: &mut Criterion) {
    let ds = sample_data(&lucas_model(), 20_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let mut group = c.benchmark_group("pc");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = PcConfig {
            execution: exec,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| b.iter(|| pc(&ds, cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_chains, bench_decision, bench_skeleton);
criterion_main!(benches);
