//! Shipped binary truth models. The 11-node network follows the usual lung
//! cancer toy structure; tables conditioned on two parents use the
//! published interventional probabilities, the rest are made up.

use crate::causal::InterventionSpec;
use crate::dataset::ColumnMeta;
use crate::graph::Dag;
use crate::score::NodeParams;

use super::{GroundTruthModel, Query};

pub const SMOKING: usize = 0;
pub const YELLOW_FINGERS: usize = 1;
pub const ANXIETY: usize = 2;
pub const PEER_PRESSURE: usize = 3;
pub const GENETICS: usize = 4;
pub const ATTENTION_DISORDER: usize = 5;
pub const FATIGUE: usize = 6;
pub const ALLERGY: usize = 7;
pub const COUGHING: usize = 8;
pub const CAR_ACCIDENT: usize = 9;
pub const LUNG_CANCER: usize = 10;

const NAMES: [&str; 11] = [
    "Smoking",
    "Yellow_Fingers",
    "Anxiety",
    "Peer_Pressure",
    "Genetics",
    "Attention_Disorder",
    "Fatigue",
    "Allergy",
    "Coughing",
    "Car_Accident",
    "Lung_Cancer",
];

/// Binary table from `P(x = 1)` per parent configuration, lowest parent
/// index varying fastest.
fn bernoulli(n_parents: usize, p_true: &[f64]) -> NodeParams {
    assert_eq!(p_true.len(), 1 << n_parents);
    NodeParams::Table {
        parent_arities: vec![2; n_parents],
        rows: p_true.iter().map(|&p| vec![1.0 - p, p]).collect(),
        bin_edges: vec![],
    }
}

pub fn lucas_model() -> GroundTruthModel {
    let edges = [
        (ANXIETY, SMOKING),
        (PEER_PRESSURE, SMOKING),
        (SMOKING, YELLOW_FINGERS),
        (SMOKING, LUNG_CANCER),
        (GENETICS, LUNG_CANCER),
        (GENETICS, ATTENTION_DISORDER),
        (LUNG_CANCER, COUGHING),
        (ALLERGY, COUGHING),
        (LUNG_CANCER, FATIGUE),
        (COUGHING, FATIGUE),
        (FATIGUE, CAR_ACCIDENT),
        (ATTENTION_DISORDER, CAR_ACCIDENT),
    ];
    let mut params = vec![NodeParams::Table {
        parent_arities: vec![],
        rows: vec![],
        bin_edges: vec![],
    }; 11];
    // parents (Anxiety, Peer_Pressure)
    params[SMOKING] = bernoulli(2, &[0.43118, 0.8686, 0.74591, 0.91576]);
    params[YELLOW_FINGERS] = bernoulli(1, &[0.23, 0.95]);
    params[ANXIETY] = bernoulli(0, &[0.64]);
    params[PEER_PRESSURE] = bernoulli(0, &[0.33]);
    params[GENETICS] = bernoulli(0, &[0.16]);
    params[ATTENTION_DISORDER] = bernoulli(1, &[0.28, 0.69]);
    // parents (Coughing, Lung_Cancer)
    params[FATIGUE] = bernoulli(2, &[0.35212, 0.80016, 0.56514, 0.89589]);
    params[ALLERGY] = bernoulli(0, &[0.33]);
    // parents (Allergy, Lung_Cancer)
    params[COUGHING] = bernoulli(2, &[0.12, 0.64592, 0.7664, 0.99947]);
    // parents (Attention_Disorder, Fatigue)
    params[CAR_ACCIDENT] = bernoulli(2, &[0.23, 0.6, 0.7, 0.78]);
    // parents (Smoking, Genetics)
    params[LUNG_CANCER] = bernoulli(2, &[0.23146, 0.83934, 0.86996, 0.99351]);
    GroundTruthModel::new(
        NAMES.iter().map(|n| ColumnMeta::discrete(*n, 2)).collect(),
        Dag::from_edges(11, &edges).expect("acyclic"),
        params,
    )
    .expect("consistent tables")
}

fn pair(a: usize, va: bool, b: usize, vb: bool) -> InterventionSpec {
    InterventionSpec::new(&[(a, va as u8 as f64), (b, vb as u8 as f64)], 0.0)
}

/// Two-variable interventions on the parents of each outcome of interest.
pub fn lucas_queries(_m: &GroundTruthModel) -> Vec<Query> {
    let mut out = Vec::new();
    let grid = [(false, false), (true, false), (false, true), (true, true)];
    for (q, a, b, combos) in [
        (LUNG_CANCER, GENETICS, SMOKING, &grid[..]),
        (COUGHING, ALLERGY, LUNG_CANCER, &grid[1..]),
        (FATIGUE, LUNG_CANCER, COUGHING, &grid[..]),
        (SMOKING, PEER_PRESSURE, ANXIETY, &grid[..]),
    ] {
        for &(va, vb) in combos {
            out.push(Query {
                spec: pair(a, va, b, vb),
                q,
            });
        }
    }
    out
}

/// `a -> c <- b`, `b -> d <- c`, `c -> e`.
pub fn five_node_binary() -> GroundTruthModel {
    GroundTruthModel::new(
        ["a", "b", "c", "d", "e"]
            .iter()
            .map(|n| ColumnMeta::discrete(*n, 2))
            .collect(),
        Dag::from_edges(5, &[(0, 2), (1, 2), (1, 3), (2, 3), (2, 4)]).expect("acyclic"),
        vec![
            bernoulli(0, &[0.4]),
            bernoulli(0, &[0.6]),
            bernoulli(2, &[0.1, 0.7, 0.5, 0.9]),
            bernoulli(2, &[0.2, 0.5, 0.6, 0.9]),
            bernoulli(1, &[0.3, 0.8]),
        ],
    )
    .expect("consistent tables")
}

/// A confounded effect, a root effect and a mediated effect.
pub fn five_node_queries() -> Vec<Query> {
    vec![
        Query {
            spec: InterventionSpec::new(&[(2, 1.0)], 0.0),
            q: 3,
        },
        Query {
            spec: InterventionSpec::new(&[(0, 1.0)], 0.0),
            q: 4,
        },
        Query {
            spec: InterventionSpec::new(&[(2, 0.0)], 0.0),
            q: 4,
        },
    ]
}
