//! Node-flipping evaluation: greedy subgraph sequences derived from an
//! attribution, output curves under node masking, and the area under the
//! flipping curve (AUFC).

mod benchmark;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use benchmark::{attribute, benchmark, BenchmarkConfig, BenchmarkRow, BenchmarkSummary, BenchmarkTable, PairedComparison, Provider};

use crate::error::{Error, Result};
use crate::explain::{pool_bags, pool_nodes, RelevanceMap};
use crate::graph::{ConnectivityMatrix, Edge};
use crate::linalg::DenseMatrix;
use crate::model::{forward, GnnModel, Target};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Grow a subgraph from nothing; good explanations raise the output fast.
    Activation,
    /// Remove nodes from the full graph; good explanations keep the output.
    Pruning,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Activation => "activation",
            Task::Pruning => "pruning",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "activation" => Ok(Task::Activation),
            "pruning" => Ok(Task::Pruning),
            other => Err(Error::Input(format!("unknown task {other:?} (expected activation or pruning)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scores<S> {
    Node(Vec<S>),
    Edge(BTreeMap<Edge, S>),
    /// Bag relevance with the bag's node set.
    Bag(Vec<(Vec<usize>, S)>),
}

/// Relevance at some granularity plus per-node marginals for the coarse
/// greedy steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribution<S> {
    pub scores: Scores<S>,
    pub marginals: Vec<S>,
}

impl<S: Scalar> Attribution<S> {
    pub fn from_nodes(scores: Vec<S>) -> Self {
        Attribution {
            marginals: scores.clone(),
            scores: Scores::Node(scores),
        }
    }

    /// Bag-level scores; marginals pool each walk to its first node.
    pub fn from_walks(rel: &RelevanceMap<S>, n: usize) -> Self {
        let scores = pool_bags(rel)
            .into_iter()
            .map(|(b, s)| (b.nodes().into_iter().collect(), s))
            .collect();
        Attribution {
            scores: Scores::Bag(scores),
            marginals: pool_nodes(rel, n),
        }
    }

    /// Edge-level scores; marginals split each edge equally between its
    /// endpoints.
    pub fn from_edges(scores: BTreeMap<Edge, S>, n: usize) -> Self {
        let mut marginals = vec![S::zero(); n];
        let half = S::lit(0.5);
        for (e, &s) in &scores {
            if e.is_self_loop() {
                marginals[e.lo()] += s;
            } else {
                marginals[e.lo()] += s * half;
                marginals[e.hi()] += s * half;
            }
        }
        Attribution {
            scores: Scores::Edge(scores),
            marginals,
        }
    }

    pub fn n(&self) -> usize {
        self.marginals.len()
    }
}

/// Relevance of the node subset `members`: the sum of all units (nodes,
/// edges or bags) lying entirely inside it.
pub fn subgraph_relevance<S: Scalar>(attr: &Attribution<S>, members: &[bool]) -> S {
    match &attr.scores {
        Scores::Node(v) => v.iter().zip(members).filter(|(_, &m)| m).map(|(&s, _)| s).sum(),
        Scores::Edge(map) => map
            .iter()
            .filter(|(e, _)| members[e.lo()] && members[e.hi()])
            .map(|(_, &s)| s)
            .sum(),
        Scores::Bag(bags) => bags
            .iter()
            .filter(|(nodes, _)| nodes.iter().all(|&v| members[v]))
            .map(|(_, s)| *s)
            .sum(),
    }
}

fn pick<S: Scalar>(candidates: impl Iterator<Item = usize>, mut key: impl FnMut(usize) -> S, maximize: bool) -> usize {
    let mut best: Option<(usize, S)> = None;
    for v in candidates {
        let k = key(v);
        let better = match best {
            None => true,
            Some((_, b)) => {
                if maximize {
                    k > b
                } else {
                    k < b
                }
            }
        };
        if better {
            best = Some((v, k));
        }
    }
    best.expect("non-empty candidate set").0
}

/// Order in which nodes are added (activation) or removed (pruning).
///
/// Every step picks the node whose move best serves the task according to
/// `subgraph_relevance`; every `coarse_interval`-th step (1-based) instead
/// uses the node marginals. `coarse_interval = 0` disables coarse steps.
/// Ties go to the lowest node index.
pub fn greedy_sequence<S: Scalar>(attr: &Attribution<S>, task: Task, coarse_interval: usize) -> Vec<usize> {
    let n = attr.n();
    let mut seq = Vec::with_capacity(n);
    match task {
        Task::Activation => {
            let mut members = vec![false; n];
            for step in 1..=n {
                let coarse = coarse_interval > 0 && step % coarse_interval == 0;
                let free = (0..n).filter(|&v| !members[v]).collect::<Vec<_>>();
                let v = if coarse {
                    pick(free.into_iter(), |v| attr.marginals[v], true)
                } else {
                    pick(
                        free.into_iter(),
                        |v| {
                            members[v] = true;
                            let r = subgraph_relevance(attr, &members);
                            members[v] = false;
                            r
                        },
                        true,
                    )
                };
                members[v] = true;
                seq.push(v);
            }
        }
        Task::Pruning => {
            let mut members = vec![true; n];
            let full = subgraph_relevance(attr, &members);
            for step in 1..=n {
                let coarse = coarse_interval > 0 && step % coarse_interval == 0;
                let left = (0..n).filter(|&v| members[v]).collect::<Vec<_>>();
                let v = if coarse {
                    pick(left.into_iter(), |v| attr.marginals[v].abs(), false)
                } else {
                    pick(
                        left.into_iter(),
                        |v| {
                            members[v] = false;
                            let r = (full - subgraph_relevance(attr, &members)).abs();
                            members[v] = true;
                            r
                        },
                        false,
                    )
                };
                members[v] = false;
                seq.push(v);
            }
        }
    }
    seq
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlippingReport {
    pub task: Task,
    /// Activation: `f(∅), f(G_1), …, f(G_n)`. Pruning: `0, |f(G_1) − f(G)|,
    /// …, |f(∅) − f(G)|`.
    pub values: Vec<f64>,
    /// Mean of `values`.
    pub aufc: f64,
}

/// Output of the model with only the `present` nodes kept: their
/// connectivity rows and columns and input features survive, the rest are
/// zeroed. The pooling denominator stays the full node count.
pub fn masked_value<S: Scalar>(
    model: &GnnModel<S>,
    conn: &ConnectivityMatrix<S>,
    h0: &DenseMatrix<S>,
    present: &[bool],
    target: Target,
) -> Result<S> {
    let mut h = h0.clone();
    for (v, &keep) in present.iter().enumerate() {
        if !keep {
            h.row_mut(v).iter_mut().for_each(|x| *x = S::zero());
        }
    }
    Ok(forward(model, &conn.masked(present), &h)?.value(target))
}

pub fn flipping_curve<S: Scalar>(
    model: &GnnModel<S>,
    conn: &ConnectivityMatrix<S>,
    h0: &DenseMatrix<S>,
    target: Target,
    sequence: &[usize],
    task: Task,
) -> Result<FlippingReport> {
    let n = conn.n();
    crate::graph::check_permutation(sequence, n).map_err(|_| Error::Input("flipping sequence must be a permutation of the nodes".into()))?;
    let mut values = Vec::with_capacity(n + 1);
    match task {
        Task::Activation => {
            let mut present = vec![false; n];
            values.push(masked_value(model, conn, h0, &present, target)?.as_f64());
            for &v in sequence {
                present[v] = true;
                values.push(masked_value(model, conn, h0, &present, target)?.as_f64());
            }
        }
        Task::Pruning => {
            let mut present = vec![true; n];
            let f0 = masked_value(model, conn, h0, &present, target)?.as_f64();
            values.push(0.0);
            for &v in sequence {
                present[v] = false;
                values.push((masked_value(model, conn, h0, &present, target)?.as_f64() - f0).abs());
            }
        }
    }
    let aufc = values.iter().sum::<f64>() / values.len() as f64;
    Ok(FlippingReport { task, values, aufc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::model::Architecture;

    #[test]
    fn subgraph_relevance_by_granularity() {
        let nodes = Attribution::from_nodes(vec![1.0, 2.0, 4.0]);
        assert_eq!(subgraph_relevance(&nodes, &[true, false, true]), 5.0);
        let edges = Attribution::from_edges([(Edge::new(0, 1), 1.0), (Edge::new(1, 1), 2.0)].into_iter().collect(), 3);
        assert_eq!(subgraph_relevance(&edges, &[false, true, true]), 2.0);
        assert_eq!(edges.marginals, vec![0.5, 2.5, 0.0]);
        let bags = Attribution {
            scores: Scores::Bag(vec![(vec![0, 1], 3.0), (vec![1], -1.0)]),
            marginals: vec![0.0; 2],
        };
        assert_eq!(subgraph_relevance(&bags, &[false, true]), -1.0);
        assert_eq!(subgraph_relevance(&bags, &[true, true]), 2.0);
    }

    #[test]
    fn greedy_activation_follows_scores() {
        let a = Attribution::from_nodes(vec![0.5, 3.0, -1.0, 3.0]);
        assert_eq!(greedy_sequence(&a, Task::Activation, 0), vec![1, 3, 0, 2]);
        // pruning drops the least relevant magnitudes first
        assert_eq!(greedy_sequence(&a, Task::Pruning, 0), vec![0, 2, 1, 3]);
    }

    #[test]
    fn coarse_steps_use_marginals() {
        let a = Attribution {
            scores: Scores::Bag(vec![(vec![0, 1], 10.0), (vec![2], 1.0)]),
            marginals: vec![0.0, 0.0, 5.0],
        };
        // fine step: no single node completes the pair, so node 2 wins
        assert_eq!(greedy_sequence(&a, Task::Activation, 0)[0], 2);
        // coarse every step: marginals only
        assert_eq!(greedy_sequence(&a, Task::Activation, 1), vec![2, 0, 1]);
    }

    #[test]
    fn flipping_endpoints() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let m = GnnModel::<f64>::new(Architecture::Gcn, &[1, 4, 4], true, 3).unwrap();
        let c = ConnectivityMatrix::build(&g, Architecture::Gcn.default_scheme()).unwrap();
        let h0 = DenseMatrix::filled(4, 1, 1.0);
        let full = forward(&m, &c, &h0).unwrap().value(Target::DIFFERENCE);
        let act = flipping_curve(&m, &c, &h0, Target::DIFFERENCE, &[2, 0, 3, 1], Task::Activation).unwrap();
        assert_eq!(act.values.len(), 5);
        assert_eq!(act.values[0], 0.0);
        assert!((act.values[4] - full).abs() < 1e-12);
        let pr = flipping_curve(&m, &c, &h0, Target::DIFFERENCE, &[2, 0, 3, 1], Task::Pruning).unwrap();
        assert_eq!(pr.values[0], 0.0);
        assert!((pr.values[4] - full.abs()).abs() < 1e-12);
        assert!((pr.aufc - pr.values.iter().sum::<f64>() / 5.0).abs() < 1e-15);
        assert!(flipping_curve(&m, &c, &h0, Target::DIFFERENCE, &[0, 0, 1, 2], Task::Pruning).is_err());
    }
}
