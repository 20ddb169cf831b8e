use std::collections::BTreeMap;

use super::transition::TransitionCache;
use super::{init_relevance, Method, RelevanceMap};
use crate::error::{Error, Result};
use crate::graph::Walk;
use crate::linalg::DenseMatrix;
use crate::model::{ForwardTrace, GnnModel, Target};
use crate::scalar::Scalar;

/// Relevance of group sequences `(G_0, …, G_T)` under a node partition,
/// keyed by group indices.
pub type SuperWalkMap<S> = BTreeMap<Vec<usize>, S>;

fn l1<S: Scalar>(r: &[S]) -> S {
    r.iter().map(|x| x.abs()).sum()
}

fn pruned<S: Scalar>(r: &[S], threshold: f64) -> bool {
    l1(r).as_f64() < threshold
}

/// Bundles a forward trace with its transition maps and top-layer relevance
/// so several queries can share them.
#[derive(Clone, Debug)]
pub struct WalkExplainer<'a, S> {
    trace: &'a ForwardTrace<S>,
    method: Method,
    target: Target,
    cache: TransitionCache<S>,
    top: DenseMatrix<S>,
}

impl<'a, S: Scalar> WalkExplainer<'a, S> {
    pub fn new(model: &GnnModel<S>, trace: &'a ForwardTrace<S>, method: &Method, target: Target) -> Result<Self> {
        let cache = TransitionCache::build(model, trace, method)?;
        Ok(WalkExplainer {
            trace,
            method: method.clone(),
            target,
            cache,
            top: init_relevance(model, trace, target),
        })
    }

    pub fn trace(&self) -> &ForwardTrace<S> {
        self.trace
    }

    pub fn cache(&self) -> &TransitionCache<S> {
        &self.cache
    }

    /// Top-layer relevance matrix (`n × d_T`).
    pub fn top_relevance(&self) -> &DenseMatrix<S> {
        &self.top
    }

    pub fn depth(&self) -> usize {
        self.cache.depth()
    }

    /// Relevance of one walk `(I_0, …, I_T)`.
    pub fn score(&self, walk: &Walk) -> Result<S> {
        let nodes = walk.nodes();
        let depth = self.depth();
        if nodes.len() != depth + 1 {
            return Err(Error::dim("walk length", depth + 1, nodes.len()));
        }
        let n = self.trace.n();
        if let Some(&bad) = nodes.iter().find(|&&v| v >= n) {
            return Err(Error::Input(format!("walk node {bad} outside 0..{n}")));
        }
        let mut r = self.top.row(nodes[depth]).to_vec();
        for t in (1..=depth).rev() {
            let (j, k) = (nodes[t - 1], nodes[t]);
            let m = self.cache.get(t, j, k).ok_or(Error::Support { from: j, to: k })?;
            r = m.matvec(&r);
        }
        Ok(r.iter().copied().sum())
    }

    /// All walks whose partial relevance vectors keep an L1 norm of at least
    /// `threshold` at every step. With `threshold = 0` nothing is pruned.
    pub fn enumerate(&self, threshold: f64) -> RelevanceMap<S> {
        let depth = self.depth();
        let mut entries = BTreeMap::new();
        let mut nodes = vec![0; depth + 1];
        for top in 0..self.trace.n() {
            let r = self.top.row(top);
            if pruned(r, threshold) {
                continue;
            }
            nodes[depth] = top;
            self.descend(depth, top, r, threshold, &mut nodes, &mut entries);
        }
        RelevanceMap {
            entries,
            method: self.method.clone(),
            target: self.target,
            threshold,
        }
    }

    fn descend(
        &self,
        t: usize,
        k: usize,
        r: &[S],
        threshold: f64,
        nodes: &mut Vec<usize>,
        out: &mut BTreeMap<Walk, S>,
    ) {
        for j in self.trace.conn.sources(k) {
            let m = self.cache.get(t, j, k).expect("cached map for supported pair");
            let next = m.matvec(r);
            if pruned(&next, threshold) {
                continue;
            }
            nodes[t - 1] = j;
            if t == 1 {
                out.insert(Walk::new(nodes.clone()), next.iter().copied().sum());
            } else {
                self.descend(t - 1, j, &next, threshold, nodes, out);
            }
        }
    }

    /// Relevance of every group sequence under `partition`. Each equals the
    /// summed relevance of the fine walks visiting those groups in order,
    /// computed without enumerating them. Sequences with no structural walk
    /// are absent; pruning uses the summed L1 norm over the group's nodes.
    pub fn super_walks(&self, partition: &[Vec<usize>], threshold: f64) -> Result<SuperWalkMap<S>> {
        check_cover(partition, self.trace.n())?;
        let depth = self.depth();
        let mut out = BTreeMap::new();
        let mut groups = vec![0; depth + 1];
        for (g, members) in partition.iter().enumerate() {
            let state: Vec<(usize, Vec<S>)> = members.iter().map(|&v| (v, self.top.row(v).to_vec())).collect();
            if state_pruned(&state, threshold) {
                continue;
            }
            groups[depth] = g;
            self.descend_groups(depth, &state, partition, threshold, &mut groups, &mut out);
        }
        Ok(out)
    }

    fn descend_groups(
        &self,
        t: usize,
        state: &[(usize, Vec<S>)],
        partition: &[Vec<usize>],
        threshold: f64,
        groups: &mut Vec<usize>,
        out: &mut SuperWalkMap<S>,
    ) {
        for (g, members) in partition.iter().enumerate() {
            let mut next = Vec::new();
            for &j in members {
                let mut acc: Option<Vec<S>> = None;
                for (k, r) in state {
                    if let Some(m) = self.cache.get(t, j, *k) {
                        let part = m.matvec(r);
                        match &mut acc {
                            None => acc = Some(part),
                            Some(a) => a.iter_mut().zip(&part).for_each(|(x, &y)| *x += y),
                        }
                    }
                }
                if let Some(a) = acc {
                    next.push((j, a));
                }
            }
            if next.is_empty() || state_pruned(&next, threshold) {
                continue;
            }
            groups[t - 1] = g;
            if t == 1 {
                let total = next.iter().flat_map(|(_, r)| r.iter().copied()).sum();
                out.insert(groups.clone(), total);
            } else {
                self.descend_groups(t - 1, &next, partition, threshold, groups, out);
            }
        }
    }

    /// Node relevance from one full-layer backward pass per block.
    pub fn node_relevance(&self) -> Vec<S> {
        let n = self.trace.n();
        let mut r = self.top.clone();
        for t in (1..=self.depth()).rev() {
            let mut lower = DenseMatrix::zeros(n, self.trace.h(t - 1).cols());
            for (&(j, k), m) in self.cache.block(t) {
                let part = m.matvec(r.row(k));
                for (x, y) in lower.row_mut(j).iter_mut().zip(part) {
                    *x += y;
                }
            }
            r = lower;
        }
        (0..n).map(|v| r.row(v).iter().copied().sum()).collect()
    }
}

fn state_pruned<S: Scalar>(state: &[(usize, Vec<S>)], threshold: f64) -> bool {
    let total: S = state.iter().map(|(_, r)| l1(r)).sum();
    total.as_f64() < threshold
}

pub(crate) fn check_cover(partition: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for group in partition {
        for &v in group {
            if v >= n {
                return Err(Error::Partition(format!("node {v} outside 0..{n}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Partition(format!("node {v} appears twice")));
            }
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::Partition(format!("node {v} is not covered")));
    }
    Ok(())
}

/// Relevance of a single walk.
pub fn score_walk<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    walk: &Walk,
    method: &Method,
    target: Target,
) -> Result<S> {
    WalkExplainer::new(model, trace, method, target)?.score(walk)
}

/// Pruned enumeration of relevant walks; see [`WalkExplainer::enumerate`].
pub fn enumerate_relevant_walks<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    method: &Method,
    target: Target,
    threshold: f64,
) -> Result<RelevanceMap<S>> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::Input("threshold must be non-negative".into()));
    }
    Ok(WalkExplainer::new(model, trace, method, target)?.enumerate(threshold))
}

/// Group-sequence relevance; see [`WalkExplainer::super_walks`].
pub fn enumerate_super_walks<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    method: &Method,
    target: Target,
    partition: &[Vec<usize>],
    threshold: f64,
) -> Result<SuperWalkMap<S>> {
    WalkExplainer::new(model, trace, method, target)?.super_walks(partition, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{count_structural_walks, ConnectivityMatrix, Graph};
    use crate::model::{forward, Architecture};

    fn setup(arch: Architecture) -> (GnnModel<f64>, ForwardTrace<f64>) {
        let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (1, 4), (4, 5)]).unwrap();
        let m = GnnModel::<f64>::new(arch, &[1, 6, 5, 4], true, 5).unwrap();
        let c = ConnectivityMatrix::build(&g, arch.default_scheme()).unwrap();
        let tr = forward(&m, &c, &DenseMatrix::filled(6, 1, 1.0)).unwrap();
        (m, tr)
    }

    #[test]
    fn exhaustive_enumeration_matches_single_scores() {
        for arch in [Architecture::Gcn, Architecture::Gin, Architecture::Spectral] {
            let (m, tr) = setup(arch);
            let method = Method::lrp(vec![0.5, 0.25, 0.0]).unwrap();
            let ex = WalkExplainer::new(&m, &tr, &method, Target::DIFFERENCE).unwrap();
            let all = ex.enumerate(0.0);
            assert_eq!(all.len() as u64, count_structural_walks(&tr.conn, 3));
            for (w, s) in all.iter() {
                assert_eq!(ex.score(w).unwrap().to_bits(), s.to_bits());
            }
        }
    }

    #[test]
    fn infinite_threshold_gives_nothing() {
        let (m, tr) = setup(Architecture::Gcn);
        let rel = enumerate_relevant_walks(&m, &tr, &Method::gi(), Target::DIFFERENCE, f64::INFINITY).unwrap();
        assert!(rel.is_empty());
        assert!(enumerate_relevant_walks(&m, &tr, &Method::gi(), Target::DIFFERENCE, -1.0).is_err());
    }

    #[test]
    fn unsupported_walk_errors() {
        let (m, tr) = setup(Architecture::Gcn);
        let ex = WalkExplainer::new(&m, &tr, &Method::gi(), Target::DIFFERENCE).unwrap();
        assert!(matches!(ex.score(&Walk::new(vec![0, 3, 3, 3])), Err(Error::Support { .. })));
        assert!(ex.score(&Walk::new(vec![0, 1])).is_err());
        assert!(ex.score(&Walk::new(vec![0, 1, 1, 9])).is_err());
    }

    #[test]
    fn super_walks_sum_fine_walks() {
        for arch in [Architecture::Gcn, Architecture::Gin, Architecture::Spectral] {
            let (m, tr) = setup(arch);
            let ex = WalkExplainer::new(&m, &tr, &Method::default_lrp(3), Target::Logit(0)).unwrap();
            let partition = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
            let coarse = ex.super_walks(&partition, 0.0).unwrap();
            let group = [0, 0, 1, 1, 2, 2];
            let mut expected: SuperWalkMap<f64> = BTreeMap::new();
            for (w, s) in ex.enumerate(0.0).iter() {
                let key: Vec<usize> = w.nodes().iter().map(|&v| group[v]).collect();
                *expected.entry(key).or_default() += s;
            }
            assert_eq!(coarse.len(), expected.len());
            for (k, v) in &expected {
                assert!((coarse[k] - v).abs() < 1e-12, "{arch} {k:?}");
            }
        }
    }

    #[test]
    fn partition_must_cover() {
        let (m, tr) = setup(Architecture::Gcn);
        let ex = WalkExplainer::new(&m, &tr, &Method::gi(), Target::DIFFERENCE).unwrap();
        assert!(ex.super_walks(&[vec![0, 1, 2]], 0.0).is_err());
        assert!(ex.super_walks(&[vec![0, 1, 2, 3, 4, 5, 5]], 0.0).is_err());
    }

    #[test]
    fn node_relevance_pools_walks() {
        let (m, tr) = setup(Architecture::Gin);
        let ex = WalkExplainer::new(&m, &tr, &Method::default_lrp(3), Target::DIFFERENCE).unwrap();
        let mut pooled = vec![0.0; 6];
        for (w, s) in ex.enumerate(0.0).iter() {
            pooled[w.first()] += s;
        }
        for (a, b) in ex.node_relevance().iter().zip(&pooled) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
