//! Per-step relevance transition maps `M^{(t)}_{JK}`, which send the relevance
//! vector of node `K` in layer `t` to the share arriving at node `J` in layer
//! `t−1` through the connectivity entry `Λ[K][J]`.

use std::collections::BTreeMap;

use super::{BiasMode, Method};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{Architecture, ForwardTrace, GnnModel};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMap<S> {
    /// Block index `t` (1-based).
    pub block: usize,
    /// Lower-layer node `J`.
    pub source: usize,
    /// Upper-layer node `K`.
    pub target: usize,
    /// `d_{t-1} × d_t`
    pub matrix: DenseMatrix<S>,
}

impl<S: Scalar> TransitionMap<S> {
    /// Relevance arriving at `J` from the relevance vector `r` of `K`.
    pub fn apply(&self, r: &[S]) -> Vec<S> {
        self.matrix.matvec(r)
    }
}

fn ratio<S: Scalar>(num: S, den: S) -> S {
    // 0/0 and x/0 both map to 0: a vanished denominator carries no relevance
    if den == S::zero() {
        S::zero()
    } else {
        num / den
    }
}

/// Redistribution matrix of one dense layer `z = x·W + b` under LRP-γ:
/// `P[a][b] = (x_a w_ab)^ / (Σ_a' (x_a' w_a'b)^ + b^_b)`, where the bias term
/// is dropped when `bias` is `None`.
pub fn lrp_dense_matrix<S: Scalar>(x: &[S], w: &DenseMatrix<S>, bias: Option<&[S]>, gamma: S) -> DenseMatrix<S> {
    assert_eq!(x.len(), w.rows(), "input width");
    let (din, dout) = w.shape();
    let mut p = DenseMatrix::from_fn(din, dout, |a, b| (x[a] * w[(a, b)]).hat(gamma));
    let mut den = vec![S::zero(); dout];
    for a in 0..din {
        for (d, &v) in den.iter_mut().zip(p.row(a)) {
            *d += v;
        }
    }
    if let Some(b) = bias {
        for (d, &bb) in den.iter_mut().zip(b) {
            *d += bb.hat(gamma);
        }
    }
    for a in 0..din {
        for (v, &d) in p.row_mut(a).iter_mut().zip(&den) {
            *v = ratio(*v, d);
        }
    }
    p
}

/// One LRP-γ step through a dense layer: input relevance from output relevance.
pub fn lrp_dense<S: Scalar>(r_out: &[S], x: &[S], w: &DenseMatrix<S>, bias: Option<&[S]>, gamma: S) -> Vec<S> {
    lrp_dense_matrix(x, w, bias, gamma).matvec(r_out)
}

fn bias_for<S: Scalar>(model: &GnnModel<S>, method: &Method, t: usize, k: usize) -> Option<Vec<S>> {
    match method.bias_mode() {
        BiasMode::Absorb => Some(model.effective_bias(t, k)),
        BiasMode::Strict => None,
    }
}

/// Transition maps into upper node `k_node` from every supporting lower node,
/// in ascending source order.
fn maps_into<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    method: &Method,
    t: usize,
    k_node: usize,
) -> Vec<(usize, DenseMatrix<S>)> {
    let conn = &trace.conn;
    let gamma = S::lit(method.gamma(t));
    let h = trace.h(t - 1);
    let block = model.block(t);
    let sources = conn.sources(k_node);
    let (din, dout) = (model.dims()[t - 1], model.dims()[t]);

    match model.arch() {
        Architecture::Gcn | Architecture::Spectral => {
            let mut nums = Vec::with_capacity(sources.len());
            let mut den = vec![S::zero(); dout];
            for &j_node in &sources {
                let mut num = DenseMatrix::zeros(din, dout);
                for (c, w) in conn.components().iter().zip(&block.weights) {
                    let lam = c[(k_node, j_node)];
                    if lam == S::zero() {
                        continue;
                    }
                    for j in 0..din {
                        let x = lam * h[(j_node, j)];
                        for (v, &wjk) in num.row_mut(j).iter_mut().zip(w.row(j)) {
                            *v += (x * wjk).hat(gamma);
                        }
                    }
                }
                for j in 0..din {
                    for (d, &v) in den.iter_mut().zip(num.row(j)) {
                        *d += v;
                    }
                }
                nums.push((j_node, num));
            }
            if let Some(b) = bias_for(model, method, t, 0) {
                for (d, bb) in den.iter_mut().zip(b) {
                    *d += bb.hat(gamma);
                }
            }
            for (_, num) in &mut nums {
                for j in 0..din {
                    for (v, &d) in num.row_mut(j).iter_mut().zip(&den) {
                        *v = ratio(*v, d);
                    }
                }
            }
            nums
        }
        Architecture::Gin => {
            let bt = &trace.blocks[t - 1];
            let z = bt.aggregated[0].row(k_node);
            let a = bt.post[0].row(k_node);
            let b1 = bias_for(model, method, t, 0);
            let b2 = bias_for(model, method, t, 1);
            let p1 = lrp_dense_matrix(z, &block.weights[0], b1.as_deref(), gamma);
            let p2 = lrp_dense_matrix(a, &block.weights[1], b2.as_deref(), gamma);
            let l = p1.matmul(&p2);
            let lam = &conn.components()[0];
            sources
                .into_iter()
                .map(|j_node| {
                    let share = |j: usize| ratio(lam[(k_node, j_node)] * h[(j_node, j)], z[j]);
                    let m = DenseMatrix::from_fn(din, dout, |j, k| share(j) * l[(j, k)]);
                    (j_node, m)
                })
                .collect()
        }
    }
}

fn check_inputs<S: Scalar>(model: &GnnModel<S>, trace: &ForwardTrace<S>, method: &Method) -> Result<()> {
    method.check_depth(model.depth())?;
    if trace.depth() != model.depth() {
        return Err(Error::dim("trace depth", model.depth(), trace.depth()));
    }
    if trace.h0.cols() != model.dims()[0] {
        return Err(Error::dim("trace input width", model.dims()[0], trace.h0.cols()));
    }
    Ok(())
}

/// Transition map of block `t` from upper node `target` to lower node `source`.
pub fn transition<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    method: &Method,
    t: usize,
    source: usize,
    target: usize,
) -> Result<TransitionMap<S>> {
    check_inputs(model, trace, method)?;
    if t == 0 || t > model.depth() {
        return Err(Error::Input(format!("block index {t} outside 1..={}", model.depth())));
    }
    let n = trace.n();
    if source >= n || target >= n {
        return Err(Error::Input(format!("node index outside 0..{n}")));
    }
    if !trace.conn.supports(source, target) {
        return Err(Error::Support { from: source, to: target });
    }
    let matrix = maps_into(model, trace, method, t, target)
        .into_iter()
        .find(|(j, _)| *j == source)
        .map(|(_, m)| m)
        .expect("supported source present");
    Ok(TransitionMap {
        block: t,
        source,
        target,
        matrix,
    })
}

/// Every transition map of a trace, computed once and shared by walk
/// scoring and enumeration.
#[derive(Clone, Debug)]
pub struct TransitionCache<S> {
    blocks: Vec<BTreeMap<(usize, usize), DenseMatrix<S>>>,
}

impl<S: Scalar> TransitionCache<S> {
    pub fn build(model: &GnnModel<S>, trace: &ForwardTrace<S>, method: &Method) -> Result<Self> {
        check_inputs(model, trace, method)?;
        let blocks = (1..=model.depth())
            .map(|t| {
                let mut maps = BTreeMap::new();
                for k in 0..trace.n() {
                    for (j, m) in maps_into(model, trace, method, t, k) {
                        maps.insert((j, k), m);
                    }
                }
                maps
            })
            .collect();
        Ok(TransitionCache { blocks })
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    /// `M^{(t)}_{JK}` if `J → K` is supported.
    pub fn get(&self, t: usize, source: usize, target: usize) -> Option<&DenseMatrix<S>> {
        self.blocks[t - 1].get(&(source, target))
    }

    /// All maps of block `t`, keyed by `(source, target)`.
    pub fn block(&self, t: usize) -> &BTreeMap<(usize, usize), DenseMatrix<S>> {
        &self.blocks[t - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ConnectivityMatrix, Graph};
    use crate::model::forward;

    fn setup(arch: Architecture, use_bias: bool) -> (GnnModel<f64>, ForwardTrace<f64>) {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let mut m = GnnModel::<f64>::new(arch, &[1, 6, 5], use_bias, 17).unwrap();
        for b in &mut m.params_mut().blocks {
            for v in &mut b.biases_raw {
                for (i, x) in v.iter_mut().enumerate() {
                    *x = 0.3 * i as f64 - 0.5;
                }
            }
        }
        let c = ConnectivityMatrix::build(&g, arch.default_scheme()).unwrap();
        let tr = forward(&m, &c, &DenseMatrix::filled(5, 1, 1.0)).unwrap();
        (m, tr)
    }

    #[test]
    fn dense_rule_conserves_without_bias() {
        let x = [1.0, -2.0, 0.5];
        let w = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0], vec![-3.0, 1.0]]).unwrap();
        let r_out = [0.7, -1.3];
        for gamma in [0.0, 0.5, 2.0] {
            let r_in = lrp_dense(&r_out, &x, &w, None, gamma);
            let total: f64 = r_in.iter().sum();
            assert!((total - (0.7 - 1.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_rule_hand_case() {
        // z = 1·2 + 1·(−1) = 1; γ = 1: hats 4 and −1, den 3
        let w = DenseMatrix::<f64>::from_rows(&[vec![2.0], vec![-1.0]]).unwrap();
        let p = lrp_dense_matrix(&[1.0f64, 1.0], &w, None, 1.0);
        assert!((p[(0, 0)] - 4.0 / 3.0).abs() < 1e-15);
        assert!((p[(1, 0)] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_denominator_gives_zero() {
        let w = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let p = lrp_dense_matrix(&[0.0], &w, None, 0.0);
        assert_eq!(p[(0, 0)], 0.0);
    }

    #[test]
    fn column_sums_are_one_in_strict_mode() {
        for arch in [Architecture::Gcn, Architecture::Gin, Architecture::Spectral] {
            let (m, tr) = setup(arch, true);
            let method = Method::lrp(vec![1.0, 0.5]).unwrap().with_bias_mode(BiasMode::Strict);
            let cache = TransitionCache::build(&m, &tr, &method).unwrap();
            for t in 1..=2 {
                for k_node in 0..tr.n() {
                    let mut sums = vec![0.0; m.dims()[t]];
                    for ((_, k), mat) in cache.block(t) {
                        if *k == k_node {
                            for (s, v) in sums.iter_mut().zip(mat.col_sums()) {
                                *s += v;
                            }
                        }
                    }
                    // active neurons conserve exactly; dead ones may carry 0 or 1
                    for (kk, s) in sums.iter().enumerate() {
                        if tr.h(t)[(k_node, kk)] > 0.0 {
                            assert!((s - 1.0).abs() < 1e-12, "{arch} t={t} {s}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_pair_is_rejected() {
        let (m, tr) = setup(Architecture::Gcn, false);
        let err = transition(&m, &tr, &Method::gi(), 1, 0, 3).unwrap_err();
        assert!(matches!(err, Error::Support { from: 0, to: 3 }));
        assert!(transition(&m, &tr, &Method::gi(), 1, 0, 1).is_ok());
        assert!(transition(&m, &tr, &Method::default_lrp(3), 1, 0, 1).is_err());
    }

    #[test]
    fn standalone_map_matches_cache() {
        let (m, tr) = setup(Architecture::Gin, true);
        let method = Method::default_lrp(2);
        let cache = TransitionCache::build(&m, &tr, &method).unwrap();
        let one = transition(&m, &tr, &method, 2, 2, 1).unwrap();
        assert_eq!(&one.matrix, cache.get(2, 2, 1).unwrap());
    }
}
