//! Bayesian causal discovery and decision support: structure posteriors over
//! DAGs, interventional effect estimates averaged over those structures, and
//! risk-aware ranking of candidate interventions.

pub mod causal;
pub mod dataset;
pub mod decision;
pub mod error;
pub mod exec;
pub mod graph;
pub mod mcmc;
pub mod pc;
pub mod prior;
pub mod score;
pub mod validation;

pub use dataset::{ColumnKind, ColumnMeta, Dataset, Role};
pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{Dag, Digraph, NodeSet};
pub use prior::PriorMatrix;
