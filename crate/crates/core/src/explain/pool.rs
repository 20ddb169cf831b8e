use std::collections::{BTreeMap, BTreeSet};

use super::RelevanceMap;
use crate::graph::{BagOfEdges, Edge};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Granularity {
    /// Walks sharing the same multiset of edges.
    Bag,
    /// Each walk counts once toward every distinct edge it traverses; a
    /// self-transition `J → J` is pooled to `(J, J)`.
    Edge,
    /// Each walk counts toward its first node.
    Node,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pooled<S> {
    Bag(BTreeMap<BagOfEdges, S>),
    Edge(BTreeMap<Edge, S>),
    Node(Vec<S>),
}

pub fn pool_bags<S: Scalar>(rel: &RelevanceMap<S>) -> BTreeMap<BagOfEdges, S> {
    let mut out = BTreeMap::new();
    for (w, s) in rel.iter() {
        *out.entry(w.bag()).or_insert_with(S::zero) += s;
    }
    out
}

pub fn pool_edges<S: Scalar>(rel: &RelevanceMap<S>) -> BTreeMap<Edge, S> {
    let mut out = BTreeMap::new();
    for (w, s) in rel.iter() {
        let distinct: BTreeSet<Edge> = w.edges().collect();
        for e in distinct {
            *out.entry(e).or_insert_with(S::zero) += s;
        }
    }
    out
}

pub fn pool_nodes<S: Scalar>(rel: &RelevanceMap<S>, n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); n];
    for (w, s) in rel.iter() {
        out[w.first()] += s;
    }
    out
}

pub fn pool<S: Scalar>(rel: &RelevanceMap<S>, granularity: Granularity, n: usize) -> Pooled<S> {
    match granularity {
        Granularity::Bag => Pooled::Bag(pool_bags(rel)),
        Granularity::Edge => Pooled::Edge(pool_edges(rel)),
        Granularity::Node => Pooled::Node(pool_nodes(rel, n)),
    }
}
