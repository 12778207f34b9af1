//! Constraint-based structure discovery (PC-stable): skeleton search with
//! conditional-independence tests, v-structure orientation, Meek's rules and
//! a deterministic DAG extension of the resulting CPDAG.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::dataset::{ColumnKind, Dataset, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{Dag, Digraph, NodeSet};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_MAX_COND: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcConfig {
    pub alpha: f64,
    pub max_cond: usize,
    pub bins: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for PcConfig {
    fn default() -> Self {
        PcConfig {
            alpha: DEFAULT_ALPHA,
            max_cond: DEFAULT_MAX_COND,
            bins: DEFAULT_BINS,
            execution: Execution::default(),
        }
    }
}

/// Conditional-independence tester with per-dataset precomputation.
pub struct CiTester<'a> {
    ds: &'a Dataset,
    corr: DMatrix<f64>,
    codes: Vec<Vec<usize>>,
    arities: Vec<usize>,
}

impl<'a> CiTester<'a> {
    pub fn new(ds: &'a Dataset, bins: usize) -> Self {
        let d = ds.d();
        let n = ds.n() as f64;
        let stats: Vec<(f64, f64)> = (0..d)
            .map(|c| {
                let col = ds.column(c);
                let m = col.iter().sum::<f64>() / n;
                let ss = col.iter().map(|v| (v - m).powi(2)).sum::<f64>();
                (m, ss.sqrt())
            })
            .collect();
        let mut corr = DMatrix::identity(d, d);
        for a in 0..d {
            for b in a + 1..d {
                if ds.kind(a) != ColumnKind::Continuous || ds.kind(b) != ColumnKind::Continuous {
                    continue;
                }
                let (ma, sa) = stats[a];
                let (mb, sb) = stats[b];
                let cross: f64 = ds
                    .column(a)
                    .iter()
                    .zip(ds.column(b))
                    .map(|(x, y)| (x - ma) * (y - mb))
                    .sum();
                let r = if sa > 0.0 && sb > 0.0 { cross / (sa * sb) } else { 0.0 };
                corr[(a, b)] = r;
                corr[(b, a)] = r;
            }
        }
        CiTester {
            ds,
            corr,
            codes: (0..d).map(|c| ds.codes(c, bins)).collect(),
            arities: (0..d).map(|c| ds.discrete_arity(c, bins)).collect(),
        }
    }

    /// p-value of the null `i ⟂ j | s`.
    pub fn test(&self, i: usize, j: usize, s: NodeSet) -> Result<f64> {
        self.ds.check_node(i)?;
        self.ds.check_node(j)?;
        if let Some(m) = s.max() {
            self.ds.check_node(m)?;
        }
        if i == j || s.contains(i) || s.contains(j) {
            return Err(Error::contract(format!(
                "CI test needs distinct i, j outside the conditioning set ({i}, {j}, {s:?})"
            )));
        }
        let continuous = |c: usize| self.ds.kind(c) == ColumnKind::Continuous;
        if continuous(i) && continuous(j) && s.iter().all(continuous) {
            self.fisher_z(i, j, s)
        } else {
            Ok(self.g_squared(i, j, s))
        }
    }

    fn fisher_z(&self, i: usize, j: usize, s: NodeSet) -> Result<f64> {
        let n = self.ds.n();
        if n <= s.len() + 3 {
            return Err(Error::invalid(format!(
                "Fisher-z test with |s| = {} needs more than {} rows",
                s.len(),
                s.len() + 3
            )));
        }
        let idx: Vec<usize> = [i, j].into_iter().chain(s.iter()).collect();
        let r = if s.is_empty() {
            self.corr[(i, j)]
        } else {
            let m = idx.len();
            let sub = DMatrix::from_fn(m, m, |a, b| self.corr[(idx[a], idx[b])]);
            match sub.try_inverse() {
                Some(p) if p[(0, 0)] > 0.0 && p[(1, 1)] > 0.0 => -p[(0, 1)] / (p[(0, 0)] * p[(1, 1)]).sqrt(),
                _ => {
                    warn!("singular correlation submatrix for ({i}, {j} | {s:?}); treating as dependent");
                    return Ok(0.0);
                }
            }
        };
        if !r.is_finite() || r.abs() >= 1.0 {
            return Ok(0.0);
        }
        let z = ((n - s.len() - 3) as f64).sqrt() * r.atanh().abs();
        let normal = Normal::standard();
        Ok((2.0 * normal.sf(z)).min(1.0))
    }

    fn g_squared(&self, i: usize, j: usize, s: NodeSet) -> f64 {
        let (ki, kj) = (self.arities[i], self.arities[j]);
        let mut q = 1usize;
        let mut cfg = vec![0usize; self.ds.n()];
        for m in s.iter() {
            for (slot, &c) in cfg.iter_mut().zip(&self.codes[m]) {
                *slot += c * q;
            }
            q *= self.arities[m];
        }
        let mut n_abc = vec![0u64; ki * kj * q];
        for (r, &c) in cfg.iter().enumerate() {
            n_abc[(c * ki + self.codes[i][r]) * kj + self.codes[j][r]] += 1;
        }
        let mut g2 = 0.0;
        for c in 0..q {
            let block = &n_abc[c * ki * kj..(c + 1) * ki * kj];
            let n_c: u64 = block.iter().sum();
            if n_c == 0 {
                continue;
            }
            for a in 0..ki {
                let n_ac: u64 = block[a * kj..(a + 1) * kj].iter().sum();
                for b in 0..kj {
                    let n = block[a * kj + b];
                    if n == 0 {
                        continue;
                    }
                    let n_bc: u64 = (0..ki).map(|x| block[x * kj + b]).sum();
                    g2 += 2.0 * n as f64 * ((n * n_c) as f64 / (n_ac * n_bc) as f64).ln();
                }
            }
        }
        let df = ((ki - 1) * (kj - 1) * q) as f64;
        let chi = ChiSquared::new(df).expect("positive degrees of freedom");
        chi.sf(g2.max(0.0)).clamp(0.0, 1.0)
    }
}

/// p-value of `i ⟂ j | s`: Fisher-z when every variable involved is
/// continuous, otherwise G² on categorical codes (continuous columns binned).
pub fn ci_test(ds: &Dataset, i: usize, j: usize, s: NodeSet, bins: usize) -> Result<f64> {
    CiTester::new(ds, bins).test(i, j, s)
}

/// Undirected adjacency plus the separating set of every removed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    d: usize,
    adj: Vec<u64>,
    sepsets: BTreeMap<(usize, usize), NodeSet>,
    tests: Vec<usize>,
}

impl Skeleton {
    pub fn complete(d: usize) -> Self {
        Skeleton {
            d,
            adj: (0..d).map(|i| NodeSet::full(d).without(i).bits()).collect(),
            sepsets: BTreeMap::new(),
            tests: Vec::new(),
        }
    }

    /// Builds a skeleton from undirected edges and explicit sepsets; every
    /// non-adjacent pair must be given a sepset.
    pub fn from_parts(d: usize, edges: &[(usize, usize)], sepsets: &[((usize, usize), NodeSet)]) -> Result<Self> {
        let mut sk = Skeleton {
            d,
            adj: vec![0; d],
            sepsets: BTreeMap::new(),
            tests: Vec::new(),
        };
        for &(i, j) in edges {
            if i >= d || j >= d || i == j {
                return Err(Error::invalid(format!("bad skeleton edge ({i},{j})")));
            }
            sk.adj[i] |= 1 << j;
            sk.adj[j] |= 1 << i;
        }
        for &((i, j), s) in sepsets {
            sk.sepsets.insert(key(i, j), s);
        }
        for i in 0..d {
            for j in i + 1..d {
                if sk.adjacent(i, j) == sk.sepsets.contains_key(&(i, j)) {
                    return Err(Error::invalid(format!(
                        "pair ({i},{j}) needs a sepset exactly when non-adjacent"
                    )));
                }
            }
        }
        Ok(sk)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i] >> j & 1 == 1
    }

    pub fn neighbors(&self, i: usize) -> NodeSet {
        NodeSet::from_bits(self.adj[i])
    }

    pub fn sepset(&self, i: usize, j: usize) -> Option<NodeSet> {
        self.sepsets.get(&key(i, j)).copied()
    }

    /// CI tests run at each conditioning-set size.
    pub fn tests_per_level(&self) -> &[usize] {
        &self.tests
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.d)
            .flat_map(|i| (i + 1..self.d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacent(i, j))
            .collect()
    }

    fn remove(&mut self, i: usize, j: usize, sep: NodeSet) {
        self.adj[i] &= !(1 << j);
        self.adj[j] &= !(1 << i);
        self.sepsets.insert(key(i, j), sep);
    }
}

fn key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

/// PC-stable edge removal: neighbourhoods are frozen at the start of each
/// conditioning-set size, so the result does not depend on pair order.
pub fn pc_skeleton(ds: &Dataset, cfg: &PcConfig) -> Result<Skeleton> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::config(format!("alpha {} must lie in (0, 1)", cfg.alpha)));
    }
    let tester = CiTester::new(ds, cfg.bins);
    let d = ds.d();
    let mut sk = Skeleton::complete(d);
    for level in 0..=cfg.max_cond {
        if level + 3 >= ds.n() {
            warn!("stopping skeleton search at conditioning size {level}: only {} rows", ds.n());
            break;
        }
        let snapshot = sk.clone();
        let pairs: Vec<(usize, usize)> = snapshot
            .edges()
            .into_iter()
            .filter(|&(i, j)| {
                snapshot.neighbors(i).without(j).len() >= level
                    || snapshot.neighbors(j).without(i).len() >= level
            })
            .collect();
        if pairs.is_empty() {
            break;
        }
        let decisions = cfg.execution.try_map(&pairs, |&(i, j)| -> Result<(Option<NodeSet>, usize)> {
            let mut run = 0;
            let first = snapshot.neighbors(i).without(j);
            let second = snapshot.neighbors(j).without(i);
            // sets drawn from both neighbourhoods are tested once
            let candidates = first
                .subsets_of_size(level)
                .into_iter()
                .chain(second.subsets_of_size(level).into_iter().filter(|s| !s.is_subset(first)));
            for s in candidates {
                run += 1;
                if tester.test(i, j, s)? > cfg.alpha {
                    return Ok((Some(s), run));
                }
            }
            Ok((None, run))
        })?;
        sk.tests.push(decisions.iter().map(|d| d.1).sum());
        for (&(i, j), (sep, _)) in pairs.iter().zip(decisions) {
            if let Some(s) = sep {
                sk.remove(i, j, s);
            }
        }
    }
    Ok(sk)
}

/// Partially directed graph: each adjacent pair is either directed or
/// undirected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpdag {
    d: usize,
    directed: Vec<u64>,
    undirected: Vec<u64>,
}

impl Cpdag {
    pub fn empty(d: usize) -> Self {
        Cpdag {
            d,
            directed: vec![0; d],
            undirected: vec![0; d],
        }
    }

    pub fn from_skeleton(sk: &Skeleton) -> Self {
        Cpdag {
            d: sk.d,
            directed: vec![0; sk.d],
            undirected: sk.adj.clone(),
        }
    }

    pub fn from_dag(g: &Digraph) -> Self {
        Cpdag {
            d: g.d(),
            directed: g.rows().to_vec(),
            undirected: vec![0; g.d()],
        }
    }

    pub fn from_edges(d: usize, directed: &[(usize, usize)], undirected: &[(usize, usize)]) -> Result<Self> {
        let mut c = Cpdag::empty(d);
        for &(i, j) in directed.iter().chain(undirected) {
            if i >= d || j >= d || i == j || c.adjacent(i, j) {
                return Err(Error::invalid(format!("bad or repeated CPDAG edge ({i},{j})")));
            }
            if directed.contains(&(i, j)) {
                c.directed[i] |= 1 << j;
            } else {
                c.set_undirected(i, j);
            }
        }
        Ok(c)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn has_directed(&self, i: usize, j: usize) -> bool {
        self.directed[i] >> j & 1 == 1
    }

    pub fn has_undirected(&self, i: usize, j: usize) -> bool {
        self.undirected[i] >> j & 1 == 1
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.has_directed(i, j) || self.has_directed(j, i) || self.has_undirected(i, j)
    }

    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        self.directed_part().edges()
    }

    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.d)
            .flat_map(|i| (i + 1..self.d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_undirected(i, j))
            .collect()
    }

    /// Graph of the directed edges only.
    pub fn directed_part(&self) -> Digraph {
        let mut g = Digraph::empty(self.d).expect("cpdag dimension is valid");
        for i in 0..self.d {
            for j in NodeSet::from_bits(self.directed[i]).iter() {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    /// Edge list, `i -> j` for directed and `i -- j` for undirected edges.
    pub fn to_edge_list(&self, names: Option<&[String]>) -> String {
        let name = |i: usize| names.map_or_else(|| i.to_string(), |n| n[i].clone());
        let mut out = String::new();
        for (i, j) in self.directed_edges() {
            let _ = writeln!(out, "{} -> {}", name(i), name(j));
        }
        for (i, j) in self.undirected_edges() {
            let _ = writeln!(out, "{} -- {}", name(i), name(j));
        }
        out
    }

    fn set_undirected(&mut self, i: usize, j: usize) {
        self.undirected[i] |= 1 << j;
        self.undirected[j] |= 1 << i;
    }

    /// Turns `i — j` into `i -> j` unless that would close a directed cycle.
    fn orient(&mut self, i: usize, j: usize, warnings: &mut Vec<String>) -> bool {
        if !self.has_undirected(i, j) {
            if self.has_directed(j, i) {
                warnings.push(format!("conflicting orientation for {j} -> {i}; keeping the earlier one"));
            }
            return false;
        }
        if self.directed_part().reaches(j, i) {
            warnings.push(format!("orienting {i} -> {j} would create a cycle; left undirected"));
            return false;
        }
        self.undirected[i] &= !(1 << j);
        self.undirected[j] &= !(1 << i);
        self.directed[i] |= 1 << j;
        true
    }

    fn adjacency(&self, i: usize) -> NodeSet {
        let mut s = self.directed[i] | self.undirected[i];
        for k in 0..self.d {
            if self.has_directed(k, i) {
                s |= 1 << k;
            }
        }
        NodeSet::from_bits(s)
    }
}

fn emit(warnings: Vec<String>) {
    for w in warnings {
        warn!("{w}");
    }
}

fn orient_v_structures_into(sk: &Skeleton, warnings: &mut Vec<String>) -> Cpdag {
    let mut c = Cpdag::from_skeleton(sk);
    let d = sk.d;
    for i in 0..d {
        for j in i + 1..d {
            if sk.adjacent(i, j) {
                continue;
            }
            let sep = sk.sepset(i, j).unwrap_or_default();
            for k in sk.neighbors(i).intersection(sk.neighbors(j)).iter() {
                if !sep.contains(k) {
                    c.orient(i, k, warnings);
                    c.orient(j, k, warnings);
                }
            }
        }
    }
    c
}

/// Orients every unshielded collider `i -> k <- j` with `k` outside the
/// separating set of `i` and `j`. Conflicts keep the first orientation in
/// ascending `(i, j, k)` order.
pub fn orient_v_structures(sk: &Skeleton) -> Cpdag {
    let mut warnings = Vec::new();
    let c = orient_v_structures_into(sk, &mut warnings);
    emit(warnings);
    c
}

fn parents_in(c: &Cpdag, x: usize) -> impl Iterator<Item = usize> + '_ {
    (0..c.d).filter(move |&k| c.has_directed(k, x))
}

/// Whether one of R1–R4 forces `a — b` into `a -> b`.
fn meek_applies(c: &Cpdag, a: usize, b: usize) -> bool {
    let d = c.d;
    // R1: k -> a — b with k, b non-adjacent
    if parents_in(c, a).any(|k| k != b && !c.adjacent(k, b)) {
        return true;
    }
    // R2: a -> k -> b
    if (0..d).any(|k| c.has_directed(a, k) && c.has_directed(k, b)) {
        return true;
    }
    // R3: a — k1 -> b, a — k2 -> b, k1, k2 non-adjacent
    let ks: Vec<usize> = (0..d)
        .filter(|&k| c.has_undirected(a, k) && c.has_directed(k, b))
        .collect();
    if ks
        .iter()
        .enumerate()
        .any(|(x, &k1)| ks[x + 1..].iter().any(|&k2| !c.adjacent(k1, k2)))
    {
        return true;
    }
    // R4: k -> m -> b, a — m, a adjacent to k, k and b non-adjacent
    (0..d).any(|m| {
        c.has_directed(m, b)
            && c.has_undirected(a, m)
            && parents_in(c, m).any(|k| k != a && c.adjacent(a, k) && !c.adjacent(k, b))
    })
}

fn meek_into(mut c: Cpdag, warnings: &mut Vec<String>) -> Cpdag {
    let d = c.d;
    loop {
        let mut changed = false;
        for a in 0..d {
            for b in 0..d {
                if c.has_undirected(a, b) && meek_applies(&c, a, b) && c.orient(a, b, warnings) {
                    changed = true;
                }
            }
        }
        if !changed {
            return c;
        }
    }
}

/// Applies Meek's orientation rules R1–R4 until nothing changes.
pub fn meek_rules(c: &Cpdag) -> Cpdag {
    let mut warnings = Vec::new();
    let out = meek_into(c.clone(), &mut warnings);
    emit(warnings);
    out
}

fn extend_into(c: &Cpdag, warnings: &mut Vec<String>) -> Dag {
    let d = c.d;
    let mut g = c.directed_part();
    let mut work = c.clone();
    let mut alive = NodeSet::full(d);
    while !alive.is_empty() {
        // Dor–Tarsi: a sink whose undirected neighbours are adjacent to all
        // its other neighbours; ties go to the largest index.
        let pick = alive.iter().rev().find(|&x| {
            let outgoing = NodeSet::from_bits(work.directed[x]).intersection(alive);
            if !outgoing.is_empty() {
                return false;
            }
            let nbrs = work.adjacency(x).intersection(alive);
            NodeSet::from_bits(work.undirected[x])
                .intersection(alive)
                .iter()
                .all(|y| nbrs.without(y).iter().all(|z| work.adjacent(y, z)))
        });
        let Some(x) = pick else {
            warnings.push("CPDAG admits no consistent extension; using its directed part".into());
            return Dag::new(c.directed_part()).unwrap_or_else(|_| {
                Dag::empty(d).expect("cpdag dimension is valid")
            });
        };
        for y in NodeSet::from_bits(work.undirected[x]).intersection(alive).iter() {
            g.set_edge(y, x, true);
        }
        alive.remove(x);
        for y in 0..d {
            work.undirected[y] &= !(1 << x);
            work.directed[y] &= !(1 << x);
        }
        work.undirected[x] = 0;
        work.directed[x] = 0;
    }
    Dag::new(g).expect("Dor–Tarsi extension is acyclic")
}

/// A DAG in the equivalence class, chosen deterministically.
pub fn cpdag_to_dag(c: &Cpdag) -> Dag {
    let mut warnings = Vec::new();
    let g = extend_into(c, &mut warnings);
    emit(warnings);
    g
}

/// Full PC output.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub skeleton: Skeleton,
    pub cpdag: Cpdag,
    pub dag: Dag,
    pub warnings: Vec<String>,
}

/// Skeleton, v-structures, Meek propagation and extension in one call.
pub fn pc(ds: &Dataset, cfg: &PcConfig) -> Result<Discovery> {
    let skeleton = pc_skeleton(ds, cfg)?;
    let mut warnings = Vec::new();
    let cpdag = orient_v_structures_into(&skeleton, &mut warnings);
    let cpdag = meek_into(cpdag, &mut warnings);
    let dag = extend_into(&cpdag, &mut warnings);
    for w in &warnings {
        warn!("{w}");
    }
    Ok(Discovery {
        skeleton,
        cpdag,
        dag,
        warnings,
    })
}

/// CPDAG of the Markov equivalence class of `g`.
pub fn dag_to_cpdag(g: &Digraph) -> Cpdag {
    let d = g.d();
    let mut sk = Skeleton {
        d,
        adj: (0..d).map(|i| g.neighbors_of(i).bits()).collect(),
        sepsets: BTreeMap::new(),
        tests: Vec::new(),
    };
    for i in 0..d {
        for j in i + 1..d {
            if !g.adjacent(i, j) {
                // parents of either endpoint never include a collider between them
                let sep = g.parents_of(i).union(g.parents_of(j)).without(i).without(j);
                sk.sepsets.insert((i, j), sep);
            }
        }
    }
    let mut warnings = Vec::new();
    let c = orient_v_structures_into(&sk, &mut warnings);
    let c = meek_into(c, &mut warnings);
    debug_assert!(warnings.is_empty());
    c
}
