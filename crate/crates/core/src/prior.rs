//! Practitioner prior over DAGs: independent Bernoulli edges restricted to
//! the acyclic set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Digraph;

/// Edge probability used when the practitioner states nothing.
pub const UNINFORMATIVE: f64 = 0.5;

/// `a[i][j]` is the prior probability of a direct edge `i -> j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMatrix {
    d: usize,
    a: Vec<f64>,
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
    }
    Ok(())
}

impl PriorMatrix {
    /// Every off-diagonal entry set to `p`.
    pub fn uniform(d: usize, p: f64) -> Result<Self> {
        check_probability(p)?;
        let mut a = vec![p; d * d];
        for i in 0..d {
            a[i * d + i] = 0.0;
        }
        let prior = PriorMatrix { d, a };
        prior.check_consistent()?;
        Ok(prior)
    }

    pub fn uninformative(d: usize) -> Self {
        Self::uniform(d, UNINFORMATIVE).expect("0.5 is a valid probability")
    }

    /// From a full matrix; the diagonal is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let mut a = vec![0.0; d * d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid("prior matrix is not square"));
            }
            for (j, &p) in row.iter().enumerate() {
                if i != j {
                    check_probability(p)?;
                    a[i * d + j] = p;
                }
            }
        }
        let prior = PriorMatrix { d, a };
        prior.check_consistent()?;
        Ok(prior)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.d + j]
    }

    /// Sets one entry, rejecting values that make the hard constraints
    /// unsatisfiable.
    pub fn set(&mut self, i: usize, j: usize, p: f64) -> Result<()> {
        if i >= self.d || j >= self.d || i == j {
            return Err(Error::invalid(format!("bad prior entry ({i},{j})")));
        }
        check_probability(p)?;
        let old = self.a[i * self.d + j];
        self.a[i * self.d + j] = p;
        if let Err(e) = self.check_consistent() {
            self.a[i * self.d + j] = old;
            return Err(e);
        }
        Ok(())
    }

    /// `Some(present)` when the entry is 0 or 1.
    pub fn pin(&self, i: usize, j: usize) -> Option<bool> {
        let p = self.get(i, j);
        if p == 1.0 {
            Some(true)
        } else if p == 0.0 {
            Some(false)
        } else {
            None
        }
    }

    /// Ordered pairs the sampler may toggle (everything not pinned).
    pub fn free_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.d)
            .flat_map(|i| (0..self.d).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.pin(i, j).is_none())
            .collect()
    }

    /// Edges forced present.
    pub fn required_edges(&self) -> Vec<(usize, usize)> {
        (0..self.d)
            .flat_map(|i| (0..self.d).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.pin(i, j) == Some(true))
            .collect()
    }

    pub fn satisfies_pins(&self, g: &Digraph) -> bool {
        (0..self.d).all(|i| {
            (0..self.d).all(|j| {
                i == j
                    || match self.pin(i, j) {
                        Some(present) => g.has_edge(i, j) == present,
                        None => true,
                    }
            })
        })
    }

    /// Forced edges must themselves form a DAG, otherwise no graph has
    /// positive prior mass.
    pub fn check_consistent(&self) -> Result<()> {
        let g = Digraph::from_edges(self.d.max(1), &self.required_edges())?;
        if !g.is_acyclic() {
            return Err(Error::config(
                "prior pins a set of edges (probability 1) that contains a directed cycle",
            ));
        }
        Ok(())
    }

    /// Resolves a name-based prior file against column names.
    pub fn from_spec(spec: &PriorSpec, names: &[String]) -> Result<Self> {
        let d = names.len();
        let mut prior = PriorMatrix::uniform(d, spec.default)?;
        for e in &spec.entries {
            let find = |n: &str| {
                names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::config(format!("prior references unknown column `{n}`")))
            };
            let (i, j) = (find(&e.from)?, find(&e.to)?);
            if i == j {
                return Err(Error::config(format!("prior entry on self-loop `{}`", e.from)));
            }
            check_probability(e.p)?;
            prior.a[i * d + j] = e.p;
        }
        prior.check_consistent()?;
        Ok(prior)
    }
}

/// Prior file: `{"default": 0.5, "entries": [{"from": .., "to": .., "p": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    #[serde(default = "default_probability")]
    pub default: f64,
    #[serde(default)]
    pub entries: Vec<PriorEntry>,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            default: UNINFORMATIVE,
            entries: Vec::new(),
        }
    }
}

fn default_probability() -> f64 {
    UNINFORMATIVE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEntry {
    pub from: String,
    pub to: String,
    pub p: f64,
}

/// `log(a^g (1 − a)^(1 − g))`, `-inf` when that probability is zero.
pub fn edge_prior_logprob(present: bool, a: f64) -> Result<f64> {
    check_probability(a)?;
    Ok(if present { a.ln() } else { (1.0 - a).ln() })
}

/// Unnormalized log prior: sum of edge terms for acyclic graphs, `-inf`
/// otherwise.
pub fn log_prior(g: &Digraph, a: &PriorMatrix) -> Result<f64> {
    if g.d() != a.d() {
        return Err(Error::invalid(format!(
            "graph has {} nodes, prior has {}",
            g.d(),
            a.d()
        )));
    }
    if !g.is_acyclic() {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total = 0.0;
    for i in 0..g.d() {
        for j in 0..g.d() {
            if i != j {
                total += edge_prior_logprob(g.has_edge(i, j), a.get(i, j))?;
            }
        }
    }
    Ok(total)
}
