//! Undirected input graphs, connectivity construction, walk/bag combinatorics
//! and the two-class synthetic dataset.

mod connectivity;
mod generate;
mod io;
mod walks;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use connectivity::{ConnectivityMatrix, ConnectivityScheme};
pub use generate::{
    attachment_probabilities, generate_dataset, generate_graph, is_double_attachment_step,
};
pub use io::{read_dataset, write_dataset, GraphRecord};
pub use walks::{count_structural_walks, enumerate_structural_walks, StructuralWalks};

use crate::error::{Error, Result};

/// Unordered node pair stored as `(min, max)`. `Edge(v, v)` denotes the
/// self-connection of `v`, which appears in walks and bags but never in a
/// [`Graph`]'s edge set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(usize, usize);

impl Edge {
    pub fn new(u: usize, v: usize) -> Self {
        if u <= v {
            Edge(u, v)
        } else {
            Edge(v, u)
        }
    }

    #[inline]
    pub fn lo(self) -> usize {
        self.0
    }

    #[inline]
    pub fn hi(self) -> usize {
        self.1
    }

    #[inline]
    pub fn is_self_loop(self) -> bool {
        self.0 == self.1
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<Edge>,
    label: Option<u8>,
    seed: Option<u64>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph {
            n,
            edges: BTreeSet::new(),
            label: None,
            seed: None,
        };
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Inserts `{u, v}`; rejects self-loops, out-of-range endpoints and duplicates.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidGraph(format!(
                "edge ({u},{v}) out of range for {} nodes",
                self.n
            )));
        }
        if !self.edges.insert(Edge::new(u, v)) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({u},{v})")));
        }
        Ok(())
    }

    pub fn with_label(mut self, label: u8) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&Edge::new(u, v))
    }

    pub fn label(&self) -> Option<u8> {
        self.label
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.0] += 1;
            deg[e.1] += 1;
        }
        deg
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.0 == v {
                    Some(e.1)
                } else if e.1 == v {
                    Some(e.0)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut comps = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.0), find(&mut parent, e.1));
            if a != b {
                parent[a] = b;
                comps -= 1;
            }
        }
        comps
    }

    pub fn is_tree(&self) -> bool {
        self.n > 0 && self.edges.len() == self.n - 1 && self.component_count() == 1
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let mut g = Graph::new(self.n, self.edges.iter().map(|e| (perm[e.0], perm[e.1])))?;
        g.label = self.label;
        g.seed = self.seed;
        Ok(g)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::dim("permutation", n, perm.len()));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Input(format!("not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Ordered node sequence `(I_0, …, I_T)`: `I_0` sits at the input layer and
/// `I_T` at the top interaction block.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Walk(Vec<usize>);

impl Walk {
    pub fn new(nodes: Vec<usize>) -> Self {
        assert!(!nodes.is_empty(), "walk needs at least one node");
        Walk(nodes)
    }

    #[inline]
    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    /// Number of transitions, i.e. the network depth `T` it belongs to.
    #[inline]
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    #[inline]
    pub fn first(&self) -> usize {
        self.0[0]
    }

    #[inline]
    pub fn last(&self) -> usize {
        *self.0.last().unwrap()
    }

    /// Traversed node pairs in walk order (block 1 first).
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.0.windows(2).map(|w| Edge::new(w[0], w[1]))
    }

    pub fn bag(&self) -> BagOfEdges {
        BagOfEdges::new(self.edges().collect())
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Walk(self.0.iter().map(|&v| perm[v]).collect())
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Multiset of `T` node pairs, kept sorted so equal bags compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BagOfEdges(Vec<Edge>);

impl BagOfEdges {
    pub fn new(mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable();
        BagOfEdges(edges)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multi-index `α_B`: occurrences of each distinct pair.
    pub fn multiplicity(&self) -> BTreeMap<Edge, usize> {
        let mut m = BTreeMap::new();
        for &e in &self.0 {
            *m.entry(e).or_insert(0) += 1;
        }
        m
    }

    /// `α_B! = Π_E α_{B,E}!`
    pub fn alpha_factorial(&self) -> u64 {
        self.multiplicity()
            .values()
            .map(|&k| (1..=k as u64).product::<u64>())
            .product()
    }

    /// Distinct endpoint nodes.
    pub fn nodes(&self) -> BTreeSet<usize> {
        self.0.iter().flat_map(|e| [e.0, e.1]).collect()
    }

    /// True when every pair has both endpoints in `members`.
    pub fn within(&self, members: &[bool]) -> bool {
        self.0.iter().all(|e| members[e.0] && members[e.1])
    }
}

impl fmt::Display for BagOfEdges {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
