//! Dense bit-matrix directed graphs, acyclicity, d-separation and exhaustive
//! DAG enumeration.
//!
//! Row `i` of the adjacency is a `u64` whose bit `j` is set when the edge
//! `i -> j` exists, so graphs are limited to [`MAX_NODES`] variables.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_NODES: usize = 64;

/// Largest `d` accepted by [`enumerate_dags`].
pub const MAX_ENUMERATION_NODES: usize = 5;

/// Set of node indices, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const fn empty() -> Self {
        NodeSet(0)
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_NODES);
        NodeSet(1 << i)
    }

    pub const fn from_bits(bits: u64) -> Self {
        NodeSet(bits)
    }

    /// All nodes `0..d`.
    pub fn full(d: usize) -> Self {
        if d >= 64 {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << d) - 1)
        }
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_NODES && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1 << i);
    }

    pub fn with(mut self, i: usize) -> Self {
        self.insert(i);
        self
    }

    pub fn without(mut self, i: usize) -> Self {
        self.remove(i);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & other.0)
    }

    pub fn difference(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: NodeSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> NodeSetIter {
        NodeSetIter(self.0)
    }

    /// Largest member, if any.
    pub fn max(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `self` with exactly `k` members, in lexicographic order
    /// of their sorted member lists.
    pub fn subsets_of_size(self, k: usize) -> Vec<NodeSet> {
        let members = self.to_vec();
        let mut out = Vec::new();
        if k > members.len() {
            return out;
        }
        let n = members.len();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&p| members[p]).collect());
            // rightmost position that can still advance
            let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
                return out;
            };
            idx[p] += 1;
            for q in p + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = NodeSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct NodeSetIter(u64);

impl Iterator for NodeSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl DoubleEndedIterator for NodeSetIter {
    fn next_back(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = 63 - self.0.leading_zeros() as usize;
        self.0 &= !(1u64 << i);
        Some(i)
    }
}

impl ExactSizeIterator for NodeSetIter {}

/// Directed graph without self-loops; may contain cycles.
///
/// This is the type MCMC proposals live in before the acyclicity check.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digraph {
    d: usize,
    /// `children[i]` bit j: edge i -> j
    children: Vec<u64>,
    /// `parents[j]` bit i: edge i -> j
    parents: Vec<u64>,
}

impl Digraph {
    pub fn empty(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_NODES {
            return Err(Error::invalid(format!(
                "node count must be in 1..={MAX_NODES}, got {d}"
            )));
        }
        Ok(Digraph {
            d,
            children: vec![0; d],
            parents: vec![0; d],
        })
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Digraph::empty(d)?;
        for &(i, j) in edges {
            g.check_pair(i, j)?;
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    /// Builds a graph from a square 0/1 matrix with zero diagonal.
    pub fn from_matrix(adj: &[Vec<u8>]) -> Result<Self> {
        let d = adj.len();
        let mut g = Digraph::empty(d)?;
        for (i, row) in adj.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid(format!(
                    "adjacency matrix is not square: row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 if i == j => {
                        return Err(Error::invalid(format!("self-loop at node {i}")));
                    }
                    1 => g.set_edge(i, j, true),
                    other => {
                        return Err(Error::invalid(format!(
                            "adjacency entry ({i},{j}) is {other}, expected 0 or 1"
                        )));
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.d || j >= self.d {
            return Err(Error::invalid(format!(
                "edge ({i},{j}) out of range for {} nodes",
                self.d
            )));
        }
        if i == j {
            return Err(Error::invalid(format!("self-loop at node {i}")));
        }
        Ok(())
    }

    pub fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.d {
            return Err(Error::invalid(format!(
                "node {i} out of range for {} nodes",
                self.d
            )));
        }
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.children[i] >> j & 1 == 1
    }

    /// Sets or clears `i -> j`. Panics on a self-loop.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        assert!(i != j, "self-loop at node {i}");
        if present {
            self.children[i] |= 1 << j;
            self.parents[j] |= 1 << i;
        } else {
            self.children[i] &= !(1 << j);
            self.parents[j] &= !(1 << i);
        }
    }

    pub fn toggle(&mut self, i: usize, j: usize) {
        let present = self.has_edge(i, j);
        self.set_edge(i, j, !present);
    }

    pub fn parents_of(&self, i: usize) -> NodeSet {
        NodeSet(self.parents[i])
    }

    pub fn children_of(&self, i: usize) -> NodeSet {
        NodeSet(self.children[i])
    }

    pub fn neighbors_of(&self, i: usize) -> NodeSet {
        NodeSet(self.parents[i] | self.children[i])
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.has_edge(i, j) || self.has_edge(j, i)
    }

    pub fn n_edges(&self) -> usize {
        self.children.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.d)
            .flat_map(|i| NodeSet(self.children[i]).iter().map(move |j| (i, j)))
            .collect()
    }

    /// Row bitmasks; a stable key for distinct-graph aggregation.
    pub fn rows(&self) -> &[u64] {
        &self.children
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.has_edge(i, j) as u8).collect())
            .collect()
    }

    /// True when a directed path `from ~> to` exists (length ≥ 1).
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = 0u64;
        let mut frontier = self.children[from];
        while frontier != 0 {
            if frontier >> to & 1 == 1 {
                return true;
            }
            seen |= frontier;
            let mut next = 0u64;
            for k in NodeSet(frontier).iter() {
                next |= self.children[k];
            }
            frontier = next & !seen;
        }
        false
    }

    /// Kahn elimination: repeatedly strip nodes without remaining parents.
    pub fn is_acyclic(&self) -> bool {
        self.kahn_order().is_some()
    }

    fn kahn_order(&self) -> Option<Vec<usize>> {
        let mut remaining = NodeSet::full(self.d).bits();
        let mut order = Vec::with_capacity(self.d);
        while remaining != 0 {
            // smallest index whose parents have all been emitted
            let next = NodeSet(remaining)
                .iter()
                .find(|&i| self.parents[i] & remaining == 0)?;
            order.push(next);
            remaining &= !(1 << next);
        }
        Some(order)
    }

    /// Descendants of `i`, excluding `i` itself unless it lies on a cycle.
    pub fn descendants_of(&self, i: usize) -> NodeSet {
        let mut seen = 0u64;
        let mut frontier = self.children[i];
        while frontier != 0 {
            seen |= frontier;
            let mut next = 0u64;
            for k in NodeSet(frontier).iter() {
                next |= self.children[k];
            }
            frontier = next & !seen;
        }
        NodeSet(seen)
    }

    /// Ancestors of every member of `set`, including the members themselves.
    pub fn ancestral_closure(&self, set: NodeSet) -> NodeSet {
        let mut seen = set.bits();
        let mut frontier = set.bits();
        while frontier != 0 {
            let mut next = 0u64;
            for k in NodeSet(frontier).iter() {
                next |= self.parents[k];
            }
            frontier = next & !seen;
            seen |= frontier;
        }
        NodeSet(seen)
    }

    /// Copy with every edge leaving a member of `set` removed.
    pub fn without_outgoing(&self, set: NodeSet) -> Digraph {
        let mut g = self.clone();
        for i in set.iter() {
            for j in NodeSet(g.children[i]).iter() {
                g.set_edge(i, j, false);
            }
        }
        g
    }

    /// Copy with every edge entering a member of `set` removed (the
    /// mutilated graph of an intervention on `set`).
    pub fn without_incoming(&self, set: NodeSet) -> Digraph {
        let mut g = self.clone();
        for j in set.iter() {
            for i in NodeSet(g.parents[j]).iter() {
                g.set_edge(i, j, false);
            }
        }
        g
    }
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digraph(d={}, ", self.d)?;
        f.debug_list()
            .entries(self.edges().iter().map(|(i, j)| format!("{i}->{j}")))
            .finish()?;
        write!(f, ")")
    }
}

/// Checks a raw square 0/1 matrix for cycles.
pub fn is_acyclic(adj: &[Vec<u8>]) -> Result<bool> {
    Ok(Digraph::from_matrix(adj)?.is_acyclic())
}

/// A directed acyclic graph. Dereferences to [`Digraph`] for read access.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "DagJson", try_from = "DagJson")]
pub struct Dag(Digraph);

impl Dag {
    pub fn new(g: Digraph) -> Result<Self> {
        if !g.is_acyclic() {
            return Err(Error::contract(format!("graph contains a directed cycle: {g:?}")));
        }
        Ok(Dag(g))
    }

    pub fn empty(d: usize) -> Result<Self> {
        Ok(Dag(Digraph::empty(d)?))
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Dag::new(Digraph::from_edges(d, edges)?)
    }

    pub fn as_digraph(&self) -> &Digraph {
        &self.0
    }

    pub fn into_digraph(self) -> Digraph {
        self.0
    }

    /// Parents of `i` (empty for roots).
    pub fn parents(&self, i: usize) -> Result<NodeSet> {
        self.0.check_node(i)?;
        Ok(self.0.parents_of(i))
    }

    /// Topological order, ties broken by ascending index.
    pub fn topological_order(&self) -> Vec<usize> {
        self.0
            .kahn_order()
            .expect("Dag invariant: graph is acyclic")
    }

    /// Standard d-separation of `x` and `y` given `z`.
    pub fn d_separated(&self, x: usize, y: usize, z: NodeSet) -> Result<bool> {
        self.0.check_node(x)?;
        self.0.check_node(y)?;
        if x == y {
            return Err(Error::invalid("d-separation needs two distinct nodes"));
        }
        if z.contains(x) || z.contains(y) {
            return Err(Error::invalid(
                "conditioning set must not contain the queried nodes",
            ));
        }
        if let Some(m) = z.max() {
            self.0.check_node(m)?;
        }
        Ok(self.d_separated_sets(NodeSet::singleton(x), NodeSet::singleton(y), z))
    }

    /// Set version of d-separation (no argument validation; sets must be
    /// pairwise disjoint).
    pub fn d_separated_sets(&self, xs: NodeSet, ys: NodeSet, z: NodeSet) -> bool {
        let reach = bayes_ball(&self.0, xs, z);
        reach.is_disjoint(ys)
    }

    /// Mutilated graph for an intervention on `set`; always acyclic.
    pub fn mutilated(&self, set: NodeSet) -> Dag {
        Dag(self.0.without_incoming(set))
    }

    /// Edge-list text, one `i -> j` per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (i, j) in self.edges() {
            s.push_str(&format!("{i} -> {j}\n"));
        }
        s
    }

    /// Parses the `i -> j` edge-list format. Blank lines and `#` comments are
    /// skipped.
    pub fn parse_edge_list(d: usize, text: &str) -> Result<Dag> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line.split_once("->").ok_or_else(|| {
                Error::invalid(format!("line {}: expected `i -> j`", lineno + 1))
            })?;
            let parse = |t: &str| {
                t.trim().parse::<usize>().map_err(|_| {
                    Error::invalid(format!("line {}: bad node index `{}`", lineno + 1, t.trim()))
                })
            };
            edges.push((parse(a)?, parse(b)?));
        }
        Dag::from_edges(d, &edges)
    }
}

impl Deref for Dag {
    type Target = Digraph;

    fn deref(&self) -> &Digraph {
        &self.0
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(d={}, ", self.d())?;
        f.debug_list()
            .entries(self.edges().iter().map(|(i, j)| format!("{i}->{j}")))
            .finish()?;
        write!(f, ")")
    }
}

impl TryFrom<Digraph> for Dag {
    type Error = Error;

    fn try_from(g: Digraph) -> Result<Self> {
        Dag::new(g)
    }
}

/// JSON adjacency form `{"d": n, "edges": [[i, j], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagJson {
    pub d: usize,
    pub edges: Vec<[usize; 2]>,
}

impl From<Dag> for DagJson {
    fn from(g: Dag) -> Self {
        DagJson {
            d: g.d(),
            edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl TryFrom<DagJson> for Dag {
    type Error = Error;

    fn try_from(j: DagJson) -> Result<Self> {
        let edges: Vec<_> = j.edges.iter().map(|e| (e[0], e[1])).collect();
        Dag::from_edges(j.d, &edges)
    }
}

/// Reachability ("Bayes ball") from `sources` given `z`: returns every node
/// with an active trail from some source.
fn bayes_ball(g: &Digraph, sources: NodeSet, z: NodeSet) -> NodeSet {
    let anc_z = g.ancestral_closure(z);
    // visited[dir] bitmasks; dir 0 = arrived from a child (moving up),
    // dir 1 = arrived from a parent (moving down)
    let mut visited = [0u64; 2];
    let mut stack: Vec<(usize, usize)> = sources.iter().map(|s| (s, 0)).collect();
    let mut reachable = 0u64;
    while let Some((v, dir)) = stack.pop() {
        if visited[dir] >> v & 1 == 1 {
            continue;
        }
        visited[dir] |= 1 << v;
        let in_z = z.contains(v);
        if !in_z {
            reachable |= 1 << v;
        }
        if dir == 0 && !in_z {
            for p in g.parents_of(v).iter() {
                stack.push((p, 0));
            }
            for c in g.children_of(v).iter() {
                stack.push((c, 1));
            }
        } else if dir == 1 {
            if !in_z {
                for c in g.children_of(v).iter() {
                    stack.push((c, 1));
                }
            }
            if anc_z.contains(v) {
                for p in g.parents_of(v).iter() {
                    stack.push((p, 0));
                }
            }
        }
    }
    NodeSet(reachable).difference(sources)
}

/// Every labeled DAG on `d ≤ 5` nodes, each exactly once, in ascending order
/// of the off-diagonal bit pattern.
pub fn enumerate_dags(d: usize) -> Result<Vec<Dag>> {
    if d == 0 || d > MAX_ENUMERATION_NODES {
        return Err(Error::invalid(format!(
            "DAG enumeration is limited to 1..={MAX_ENUMERATION_NODES} nodes, got {d}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let mut g = Digraph::empty(d)?;
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                g.set_edge(i, j, true);
            }
        }
        if g.is_acyclic() {
            out.push(Dag(g));
        }
    }
    Ok(out)
}
