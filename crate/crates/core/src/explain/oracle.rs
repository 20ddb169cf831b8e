//! Ground truth for zero-bias networks. With every ReLU frozen to its
//! recorded on/off state, the output is a homogeneous polynomial of degree T
//! in the connectivity entries, so walk relevance can be read off by summing
//! neuron paths or by exact finite differences.

use std::collections::BTreeMap;

use super::{Method, RelevanceMap};
use crate::error::{Error, Result};
use crate::graph::{enumerate_structural_walks, BagOfEdges, ConnectivityMatrix, Walk};
use crate::linalg::DenseMatrix;
use crate::model::{Architecture, ForwardTrace, GnnModel, Target};
use crate::scalar::Scalar;

fn require_zero_bias<S: Scalar>(model: &GnnModel<S>) -> Result<()> {
    if model.use_bias() {
        return Err(Error::Precondition("ground-truth oracles require a zero-bias model".into()));
    }
    Ok(())
}

struct PathSum<'a, S> {
    model: &'a GnnModel<S>,
    trace: &'a ForwardTrace<S>,
    readout: Vec<S>,
    inv_n: S,
}

impl<S: Scalar> PathSum<'_, S> {
    fn on(&self, t: usize, layer: usize, node: usize, k: usize) -> bool {
        let width = self.model.dims()[t];
        self.trace.blocks[t - 1].relu_masks[layer][node * width + k]
    }

    /// Sum over neuron paths continuing from neuron `j` of layer `t − 1`.
    fn from(&self, nodes: &[usize], t: usize, j: usize, prod: S) -> S {
        if t > self.model.depth() {
            return prod * self.readout[j] * self.inv_n;
        }
        if prod == S::zero() {
            return S::zero();
        }
        let (src, dst) = (nodes[t - 1], nodes[t]);
        let block = self.model.block(t);
        let dout = self.model.dims()[t];
        let comps = self.trace.conn.components();
        let mut total = S::zero();
        match self.model.arch() {
            Architecture::Gcn | Architecture::Spectral => {
                for (c, w) in comps.iter().zip(&block.weights) {
                    let lam = c[(dst, src)];
                    for k in 0..dout {
                        if self.on(t, 0, dst, k) {
                            total += self.from(nodes, t + 1, k, prod * lam * w[(j, k)]);
                        }
                    }
                }
            }
            Architecture::Gin => {
                let lam = comps[0][(dst, src)];
                let (w1, w2) = (&block.weights[0], &block.weights[1]);
                for a in 0..dout {
                    if !self.on(t, 0, dst, a) {
                        continue;
                    }
                    for k in 0..dout {
                        if self.on(t, 1, dst, k) {
                            total += self.from(nodes, t + 1, k, prod * lam * w1[(j, a)] * w2[(a, k)]);
                        }
                    }
                }
            }
        }
        total
    }
}

/// Per-walk relevance by explicit neuron-path summation under the recorded
/// ReLU masks. Requires a zero-bias model.
pub fn oracle_walk_scores<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    target: Target,
) -> Result<RelevanceMap<S>> {
    require_zero_bias(model)?;
    let ps = PathSum {
        model,
        trace,
        readout: model.readout_vector(target),
        inv_n: S::one() / S::lit(trace.n() as f64),
    };
    let mut entries = BTreeMap::new();
    for walk in enumerate_structural_walks(&trace.conn, model.depth()) {
        let nodes = walk.nodes();
        let start = nodes[0];
        let score = (0..model.dims()[0])
            .map(|j| ps.from(nodes, 1, j, trace.h0[(start, j)]))
            .sum();
        entries.insert(Walk::new(nodes.to_vec()), score);
    }
    Ok(RelevanceMap {
        entries,
        method: Method::gi(),
        target,
        threshold: 0.0,
    })
}

fn apply_mask<S: Scalar>(m: &mut DenseMatrix<S>, mask: &[bool]) {
    for (x, &on) in m.data_mut().iter_mut().zip(mask) {
        if !on {
            *x = S::zero();
        }
    }
}

/// Network output on `conn` with every ReLU replaced by the fixed gate
/// recorded in `trace`.
pub fn frozen_mask_value<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    conn: &ConnectivityMatrix<S>,
    target: Target,
) -> S {
    let mut h = trace.h0.clone();
    for t in 1..=model.depth() {
        let block = model.block(t);
        let masks = &trace.blocks[t - 1].relu_masks;
        let comps = conn.components();
        h = match model.arch() {
            Architecture::Gcn | Architecture::Spectral => {
                let mut z = DenseMatrix::zeros(h.rows(), model.dims()[t]);
                for (c, w) in comps.iter().zip(&block.weights) {
                    z.add_assign(&c.matmul(&h).matmul(w));
                }
                z.add_row_vector(&model.effective_bias(t, 0));
                apply_mask(&mut z, &masks[0]);
                z
            }
            Architecture::Gin => {
                let mut a = comps[0].matmul(&h).matmul(&block.weights[0]);
                a.add_row_vector(&model.effective_bias(t, 0));
                apply_mask(&mut a, &masks[0]);
                let mut z = a.matmul(&block.weights[1]);
                z.add_row_vector(&model.effective_bias(t, 1));
                apply_mask(&mut z, &masks[1]);
                z
            }
        };
    }
    let inv_n = S::one() / S::lit(h.rows() as f64);
    let pooled: Vec<S> = h.col_sums().into_iter().map(|s| s * inv_n).collect();
    target.value(&model.head().vecmat(&pooled))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bag relevance `R_B = (1/α!) ∂^α f · Π λ_E^{α_E}` with the mixed partials
/// of the frozen-mask polynomial taken by a forward-difference stencil of
/// step `step`, exact for polynomials of degree T. Each undirected edge is
/// one variable shared by `Λ[u][v]` and `Λ[v][u]`. Requires a zero-bias
/// model on single-component connectivity.
pub fn taylor_bag_scores<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    target: Target,
    step: f64,
) -> Result<BTreeMap<BagOfEdges, S>> {
    require_zero_bias(model)?;
    if trace.conn.components().len() != 1 {
        return Err(Error::Precondition("finite-difference check needs single-component connectivity".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Input("finite-difference step must be positive".into()));
    }
    let depth = model.depth();
    let base = &trace.conn.components()[0];
    let bags: std::collections::BTreeSet<BagOfEdges> =
        enumerate_structural_walks(&trace.conn, depth).map(|w| w.bag()).collect();
    let h = S::lit(step);
    let mut out = BTreeMap::new();
    for bag in bags {
        let alpha: Vec<_> = bag.multiplicity().into_iter().collect();
        let mut offsets = vec![0usize; alpha.len()];
        let mut diff = S::zero();
        loop {
            let mut lam = base.clone();
            let mut weight = 1.0;
            let mut taken = 0;
            for ((e, a), &k) in alpha.iter().zip(&offsets) {
                let delta = h * S::lit(k as f64);
                lam[(e.lo(), e.hi())] += delta;
                if !e.is_self_loop() {
                    lam[(e.hi(), e.lo())] += delta;
                }
                weight *= binomial(*a, k);
                taken += k;
            }
            if (depth - taken) % 2 == 1 {
                weight = -weight;
            }
            let conn = ConnectivityMatrix::from_components(trace.conn.scheme(), vec![lam])?;
            diff += S::lit(weight) * frozen_mask_value(model, trace, &conn, target);
            // odometer over 0..=α_i
            let mut i = 0;
            while i < offsets.len() {
                offsets[i] += 1;
                if offsets[i] <= alpha[i].1 {
                    break;
                }
                offsets[i] = 0;
                i += 1;
            }
            if i == offsets.len() {
                break;
            }
        }
        let derivative = diff / h.powi(depth as i32);
        let monomial = alpha
            .iter()
            .fold(S::one(), |acc, (e, a)| acc * base[(e.lo(), e.hi())].powi(*a as i32));
        out.insert(bag.clone(), derivative * monomial / S::lit(bag.alpha_factorial() as f64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::pool_bags;
    use crate::graph::Graph;
    use crate::model::forward;

    fn setup(arch: Architecture) -> (GnnModel<f64>, ForwardTrace<f64>) {
        let g = Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        let m = GnnModel::<f64>::new(arch, &[1, 3, 3], false, 21).unwrap();
        let c = ConnectivityMatrix::build(&g, arch.default_scheme()).unwrap();
        let tr = forward(&m, &c, &DenseMatrix::filled(4, 1, 1.0)).unwrap();
        (m, tr)
    }

    #[test]
    fn frozen_value_matches_forward_at_base_point() {
        for arch in [Architecture::Gcn, Architecture::Gin, Architecture::Spectral] {
            let (m, tr) = setup(arch);
            let v = frozen_mask_value(&m, &tr, &tr.conn, Target::DIFFERENCE);
            assert!((v - tr.value(Target::DIFFERENCE)).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_is_complete() {
        for arch in [Architecture::Gcn, Architecture::Gin, Architecture::Spectral] {
            let (m, tr) = setup(arch);
            let rel = oracle_walk_scores(&m, &tr, Target::Logit(1)).unwrap();
            assert!((rel.total() - tr.value(Target::Logit(1))).abs() < 1e-12, "{arch}");
        }
    }

    #[test]
    fn taylor_bags_match_oracle_bags() {
        let (m, tr) = setup(Architecture::Gcn);
        let fd = taylor_bag_scores(&m, &tr, Target::DIFFERENCE, 0.5).unwrap();
        let exact = pool_bags(&oracle_walk_scores(&m, &tr, Target::DIFFERENCE).unwrap());
        assert_eq!(fd.len(), exact.len());
        for (b, v) in &exact {
            assert!((fd[b] - v).abs() < 1e-9, "{b}: {} vs {v}", fd[b]);
        }
    }

    #[test]
    fn biased_models_are_refused() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let m = GnnModel::<f64>::new(Architecture::Gcn, &[1, 2], true, 1).unwrap();
        let c = ConnectivityMatrix::build(&g, Architecture::Gcn.default_scheme()).unwrap();
        let tr = forward(&m, &c, &DenseMatrix::filled(2, 1, 1.0)).unwrap();
        assert!(matches!(oracle_walk_scores(&m, &tr, Target::DIFFERENCE), Err(Error::Precondition(_))));
        assert!(taylor_bag_scores(&m, &tr, Target::DIFFERENCE, 0.5).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(3, 0), 1.0);
    }
}
