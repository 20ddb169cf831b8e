use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{MethodKind, RelevanceMap};
use crate::graph::{Graph, GraphRecord};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkScore {
    pub nodes: Vec<usize>,
    pub score: f64,
}

/// Serializable explanation of one graph: walks sorted by descending
/// `|score|`, ties in walk order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: String,
    pub gamma: Vec<f64>,
    pub target: String,
    pub f_value: f64,
    pub threshold: f64,
    pub graph: GraphRecord,
    pub walks: Vec<WalkScore>,
}

impl Explanation {
    pub fn new<S: Scalar>(graph: &Graph, rel: &RelevanceMap<S>, f_value: S) -> Self {
        let method = match rel.method.kind() {
            MethodKind::Gi => "gnn-gi",
            MethodKind::Lrp => "gnn-lrp",
        };
        Explanation {
            method: method.to_string(),
            gamma: rel.method.gammas().to_vec(),
            target: rel.target.to_string(),
            f_value: f_value.as_f64(),
            threshold: rel.threshold,
            graph: GraphRecord::from(graph),
            walks: rel
                .ranked()
                .into_iter()
                .map(|(w, s)| WalkScore {
                    nodes: w.nodes().to_vec(),
                    score: s.as_f64(),
                })
                .collect(),
        }
    }

    /// Keeps the `k` highest-ranked walks.
    pub fn truncate(&mut self, k: usize) {
        self.walks.truncate(k);
    }
}

/// Graphviz rendering: graph edges in grey, each walk as a chain of arrows,
/// red for positive and blue for negative relevance, opacity proportional to
/// `|score| / max |score|`.
pub fn explanation_to_dot(exp: &Explanation) -> String {
    let mut out = String::new();
    out.push_str("digraph explanation {\n");
    let _ = writeln!(out, "  label=\"{} {} f={:.6}\";", exp.method, exp.target, exp.f_value);
    out.push_str("  node [shape=circle];\n");
    for v in 0..exp.graph.n {
        let _ = writeln!(out, "  {v};");
    }
    for [u, v] in &exp.graph.edges {
        let _ = writeln!(out, "  {u} -> {v} [dir=none, color=\"#bbbbbb\"];");
    }
    let max = exp.walks.iter().map(|w| w.score.abs()).fold(0.0, f64::max);
    for w in &exp.walks {
        let alpha = if max > 0.0 {
            (w.score.abs() / max * 255.0).round() as u8
        } else {
            0
        };
        let rgb = if w.score >= 0.0 { "ff0000" } else { "0000ff" };
        for pair in w.nodes.windows(2) {
            let _ = writeln!(
                out,
                "  {} -> {} [color=\"#{rgb}{alpha:02x}\", penwidth=2, tooltip=\"{:.6e}\"];",
                pair[0], pair[1], w.score
            );
        }
    }
    out.push_str("}\n");
    out
}
