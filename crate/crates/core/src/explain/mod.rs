//! Walk-level relevance: nested Gradient×Input (GNN-GI) and nested LRP-γ
//! (GNN-LRP), pruned enumeration, pooling, first-order baselines, the
//! frozen-mask ground truth and batched extraction on lattices.

mod batched;
mod export;
mod first_order;
mod oracle;
mod pool;
mod transition;
mod walks;

use std::collections::BTreeMap;
use std::fmt;

pub use batched::{batched_lattice_walks, stride_partition, BatchedExtraction};
pub use export::{explanation_to_dot, Explanation, WalkScore};
pub use first_order::{first_order_attribution, FirstOrderVariant};
pub use oracle::{frozen_mask_value, oracle_walk_scores, taylor_bag_scores};
pub use pool::{pool, pool_bags, pool_edges, pool_nodes, Granularity, Pooled};
pub use transition::{lrp_dense, lrp_dense_matrix, transition, TransitionCache, TransitionMap};
pub use walks::{enumerate_relevant_walks, enumerate_super_walks, score_walk, SuperWalkMap, WalkExplainer};

use crate::error::{Error, Result};
use crate::graph::Walk;
use crate::linalg::DenseMatrix;
use crate::model::{ForwardTrace, GnnModel, Target};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodKind {
    /// Nested Gradient×Input.
    Gi,
    /// Nested LRP-γ.
    Lrp,
}

/// Treatment of (non-positive) biases in LRP denominators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BiasMode {
    /// The bias joins the denominator as in standard LRP.
    Absorb,
    /// Denominators contain only the weighted inputs.
    Strict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Method {
    kind: MethodKind,
    gamma: Vec<f64>,
    bias: BiasMode,
}

impl Method {
    /// Nested Gradient×Input. Realized as LRP-0 with biases in the
    /// denominators, which is the exact gradient×input chain.
    pub fn gi() -> Self {
        Method {
            kind: MethodKind::Gi,
            gamma: Vec::new(),
            bias: BiasMode::Absorb,
        }
    }

    /// Nested LRP-γ with one `γ_t ≥ 0` per block (block 1 first).
    pub fn lrp(gamma: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Input("gamma values must be finite and non-negative".into()));
        }
        Ok(Method {
            kind: MethodKind::Lrp,
            gamma,
            bias: BiasMode::Absorb,
        })
    }

    /// Default schedule: `γ = [2, 1]` for two blocks, else 2 in the first
    /// block and 1 above.
    pub fn default_lrp(depth: usize) -> Self {
        let gamma = (0..depth).map(|t| if t == 0 { 2.0 } else { 1.0 }).collect();
        Method::lrp(gamma).unwrap()
    }

    pub fn with_bias_mode(mut self, bias: BiasMode) -> Self {
        if self.kind == MethodKind::Lrp {
            self.bias = bias;
        }
        self
    }

    pub fn kind(&self) -> MethodKind {
        self.kind
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.bias
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    /// `γ_t` for block `t` (1-based); always 0 for GI.
    pub fn gamma(&self, t: usize) -> f64 {
        match self.kind {
            MethodKind::Gi => 0.0,
            MethodKind::Lrp => self.gamma[t - 1],
        }
    }

    pub(crate) fn check_depth(&self, depth: usize) -> Result<()> {
        if self.kind == MethodKind::Lrp && self.gamma.len() != depth {
            return Err(Error::dim("gamma schedule", depth, self.gamma.len()));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MethodKind::Gi => "gi",
            MethodKind::Lrp => "lrp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MethodKind::Gi => f.write_str("gnn-gi"),
            MethodKind::Lrp => write!(f, "gnn-lrp(γ={:?})", self.gamma),
        }
    }
}

/// Walk → relevance, keyed in lexicographic walk order.
#[derive(Clone, Debug, PartialEq)]
pub struct RelevanceMap<S> {
    pub entries: BTreeMap<Walk, S>,
    pub method: Method,
    pub target: Target,
    /// Pruning threshold used; 0 for exhaustive enumeration.
    pub threshold: f64,
}

impl<S: Scalar> RelevanceMap<S> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, walk: &Walk) -> Option<S> {
        self.entries.get(walk).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Walk, S)> {
        self.entries.iter().map(|(w, &s)| (w, s))
    }

    /// `Σ_W R_W`
    pub fn total(&self) -> S {
        self.entries.values().copied().sum()
    }

    /// `Σ_W |R_W|`
    pub fn abs_total(&self) -> S {
        self.entries.values().map(|s| s.abs()).sum()
    }

    /// Entries by descending `|R_W|`, ties in walk order.
    pub fn ranked(&self) -> Vec<(&Walk, S)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap_or(std::cmp::Ordering::Equal));
        v
    }
}

/// Top-layer relevance `R[M][m] = H_T[M][m] · v_m / n`: LRP-0 through the
/// linear head and the average pooling. Sums to the explained scalar.
pub fn init_relevance<S: Scalar>(model: &GnnModel<S>, trace: &ForwardTrace<S>, target: Target) -> DenseMatrix<S> {
    let v = model.readout_vector(target);
    let inv_n = S::one() / S::lit(trace.n() as f64);
    let top = trace.h(trace.depth());
    DenseMatrix::from_fn(top.rows(), top.cols(), |i, m| top[(i, m)] * v[m] * inv_n)
}
