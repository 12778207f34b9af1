#![allow(dead_code)]

use causal_bma::dataset::Feature;
use causal_bma::score::NodeParams;
use causal_bma::validation::GroundTruthModel;
use causal_bma::{ColumnMeta, Dag};

pub fn bernoulli(n_parents: usize, p_true: &[f64]) -> NodeParams {
    NodeParams::Table {
        parent_arities: vec![2; n_parents],
        rows: p_true.iter().map(|&p| vec![1.0 - p, p]).collect(),
        bin_edges: vec![],
    }
}

pub fn linear(intercept: f64, coefs: &[(usize, f64)], sigma: f64) -> NodeParams {
    NodeParams::Linear {
        intercept,
        coefs: coefs.iter().map(|c| c.1).collect(),
        sigma,
        features: coefs.iter().map(|c| Feature::Continuous(c.0)).collect(),
    }
}

/// Binary `a -> b -> c` with strong links.
pub fn binary_chain3() -> GroundTruthModel {
    GroundTruthModel::new(
        ["a", "b", "c"].iter().map(|n| ColumnMeta::discrete(*n, 2)).collect(),
        Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap(),
        vec![
            bernoulli(0, &[0.5]),
            bernoulli(1, &[0.2, 0.8]),
            bernoulli(1, &[0.3, 0.75]),
        ],
    )
    .unwrap()
}

/// Linear-Gaussian model with unit-variance noise on every node.
pub fn linear_sem(d: usize, edges: &[(usize, usize, f64)]) -> GroundTruthModel {
    let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.0, e.1)).collect();
    let g = Dag::from_edges(d, &pairs).unwrap();
    let params = (0..d)
        .map(|i| {
            let mut coefs: Vec<(usize, f64)> = edges.iter().filter(|e| e.1 == i).map(|e| (e.0, e.2)).collect();
            coefs.sort_by_key(|c| c.0);
            linear(0.0, &coefs, 1.0)
        })
        .collect();
    GroundTruthModel::new(
        (0..d).map(|i| ColumnMeta::continuous(format!("x{i}"))).collect(),
        g,
        params,
    )
    .unwrap()
}

/// `s -> x` (1), `s -> y` (1), `x -> y` (2).
pub fn confounded_triangle() -> GroundTruthModel {
    let m = linear_sem(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 2.0)]);
    let mut schema = m.schema.clone();
    schema[0].name = "s".into();
    schema[1].name = "x".into();
    schema[2].name = "y".into();
    GroundTruthModel::new(schema, m.graph, m.params).unwrap()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
