//! Two-class growth-model dataset.
//!
//! Class 0 is Barabási–Albert with growth parameter 1. Class 1 grows by
//! inverse preferential attachment (`p(V) ∝ 1/degree(V)`) and the nodes at
//! 1-based positions 5, 10, 15, … attach to two distinct existing nodes.
//!
//! Randomness comes from ChaCha8 seeded through `SeedableRng::seed_from_u64`,
//! which is portable across platforms.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

/// Whether the node with 0-based index `idx` attaches twice in class 1.
pub fn is_double_attachment_step(idx: usize) -> bool {
    idx >= 2 && (idx + 1).is_multiple_of(5)
}

/// Attachment distribution over `candidates` given current degrees:
/// proportional to the degree, or to its inverse.
pub fn attachment_probabilities(degrees: &[usize], candidates: &[usize], inverse: bool) -> Vec<f64> {
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&v| {
            let d = degrees[v] as f64;
            if inverse {
                1.0 / d
            } else {
                d
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack of the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn generate_graph(class_id: u8, n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize { n, min: 2 });
    }
    if class_id > 1 {
        return Err(Error::Input(format!("class id must be 0 or 1, got {class_id}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(n, [(0, 1)])?;
    let mut degrees = vec![0usize; n];
    degrees[0] = 1;
    degrees[1] = 1;
    let inverse = class_id == 1;

    for v in 2..n {
        let mut candidates: Vec<usize> = (0..v).collect();
        let picks = if inverse && is_double_attachment_step(v) { 2 } else { 1 };
        for _ in 0..picks {
            let probs = attachment_probabilities(&degrees, &candidates, inverse);
            let target = candidates.remove(draw(&mut rng, &probs));
            g.add_edge(v, target)?;
            degrees[v] += 1;
            degrees[target] += 1;
        }
    }
    Ok(g.with_label(class_id).with_seed(seed))
}

/// `count` graphs alternating class 0 and class 1 (so ⌈count/2⌉ of class 0);
/// per-graph seeds are drawn from a generator seeded with `seed`.
pub fn generate_dataset(count: usize, n: usize, seed: u64) -> Result<Vec<Graph>> {
    if count == 0 {
        return Err(Error::Input("dataset count must be positive".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| generate_graph((i % 2) as u8, n, master.next_u64()))
        .collect()
}
