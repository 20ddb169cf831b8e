//! Walk extraction on lattices by batched backward sweeps. Within a batch the
//! one-block receptive fields of the selected upper nodes are disjoint, so a
//! single propagation of the batch's relevance vectors routes every lower
//! node's share to exactly one walk prefix.

use std::collections::BTreeMap;

use super::walks::check_cover;
use super::{Method, RelevanceMap, WalkExplainer};
use crate::error::{Error, Result};
use crate::graph::{ConnectivityMatrix, Walk};
use crate::model::{ForwardTrace, GnnModel, Target};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct BatchedExtraction<S> {
    pub relevances: RelevanceMap<S>,
    /// Backward sweeps per relevance field in each block (block 1 first);
    /// equal to the number of batches.
    pub sweeps_per_block: Vec<usize>,
    /// Sweeps a node-by-node extraction would need per field and block.
    pub sequential_sweeps_per_block: Vec<usize>,
    /// Total sweeps performed over all fields.
    pub total_sweeps: usize,
}

/// Batches `{i, i + stride, i + 2·stride, …}` for `i < stride`.
pub fn stride_partition(n: usize, stride: usize) -> Vec<Vec<usize>> {
    assert!(stride > 0, "stride must be positive");
    (0..stride.min(n)).map(|i| (i..n).step_by(stride).collect()).collect()
}

fn check_partition<S: Scalar>(conn: &ConnectivityMatrix<S>, partition: &[Vec<usize>]) -> Result<()> {
    check_cover(partition, conn.n())?;
    let mut owner = vec![usize::MAX; conn.n()];
    for (b, batch) in partition.iter().enumerate() {
        for &k in batch {
            for j in conn.sources(k) {
                if owner[j] == b {
                    return Err(Error::Partition(format!(
                        "receptive fields overlap at node {j} within batch {b}"
                    )));
                }
                owner[j] = b;
            }
        }
    }
    Ok(())
}

/// One relevance vector per node of a layer, together with the walk suffix
/// each vector belongs to.
type Field<S> = Vec<Option<(Vec<usize>, Vec<S>)>>;

/// Exhaustive walk relevance using one backward sweep per batch and field
/// instead of one per node.
pub fn batched_lattice_walks<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    method: &Method,
    target: Target,
    partition: &[Vec<usize>],
) -> Result<BatchedExtraction<S>> {
    check_partition(&trace.conn, partition)?;
    let ex = WalkExplainer::new(model, trace, method, target)?;
    let n = trace.n();
    let depth = model.depth();
    let top = ex.top_relevance();
    let mut fields: Vec<Field<S>> = vec![(0..n).map(|v| Some((vec![v], top.row(v).to_vec()))).collect()];
    let mut total_sweeps = 0;

    for t in (1..=depth).rev() {
        let maps = ex.cache().block(t);
        let mut next = Vec::with_capacity(fields.len() * partition.len());
        for field in &fields {
            for batch in partition {
                // one sweep: propagate every batch member's vector at once
                let mut lower: Field<S> = vec![None; n];
                for &k in batch {
                    let Some((suffix, r)) = &field[k] else { continue };
                    for j in trace.conn.sources(k) {
                        let m = &maps[&(j, k)];
                        let mut walk = Vec::with_capacity(suffix.len() + 1);
                        walk.push(j);
                        walk.extend_from_slice(suffix);
                        lower[j] = Some((walk, m.matvec(r)));
                    }
                }
                total_sweeps += 1;
                if lower.iter().any(Option::is_some) {
                    next.push(lower);
                }
            }
        }
        fields = next;
    }

    let mut entries = BTreeMap::new();
    for field in fields {
        for (walk, r) in field.into_iter().flatten() {
            entries.insert(Walk::new(walk), r.iter().copied().sum());
        }
    }
    Ok(BatchedExtraction {
        relevances: RelevanceMap {
            entries,
            method: method.clone(),
            target,
            threshold: 0.0,
        },
        sweeps_per_block: vec![partition.len(); depth],
        sequential_sweeps_per_block: vec![n; depth],
        total_sweeps,
    })
}
