//! Hand-written reverse-mode pass through head, pooling, combine (ReLU
//! masks and bias reparameterization) and aggregation.

use crate::linalg::DenseMatrix;
use crate::model::{reparam_bias_grad, Architecture, ForwardTrace, GnnModel, Params};
use crate::scalar::Scalar;

/// Gradients of a scalar function of the logits.
#[derive(Clone, Debug)]
pub struct Gradients<S> {
    pub params: Params<S>,
    /// `∂/∂H_0`
    pub h0: DenseMatrix<S>,
}

fn masked<S: Scalar>(upstream: &DenseMatrix<S>, mask: &[bool]) -> DenseMatrix<S> {
    let mut out = upstream.clone();
    for (x, &on) in out.data_mut().iter_mut().zip(mask) {
        if !on {
            *x = S::zero();
        }
    }
    out
}

fn raw_bias_grad<S: Scalar>(model: &GnnModel<S>, t: usize, k: usize, dpre: &DenseMatrix<S>) -> Vec<S> {
    if !model.use_bias() {
        return vec![S::zero(); dpre.cols()];
    }
    dpre.col_sums()
        .into_iter()
        .zip(&model.block(t).biases_raw[k])
        .map(|(g, &b0)| g * reparam_bias_grad(b0))
        .collect()
}

/// Backpropagates `dlogits` (the gradient of some scalar w.r.t. the two
/// logits) through a recorded forward pass.
pub fn backward<S: Scalar>(model: &GnnModel<S>, trace: &ForwardTrace<S>, dlogits: [S; 2]) -> Gradients<S> {
    let n = trace.n();
    let mut grads = model.params().zeros_like();

    let head = model.head();
    for (m, &p) in trace.pooled.iter().enumerate() {
        grads.head[(m, 0)] = p * dlogits[0];
        grads.head[(m, 1)] = p * dlogits[1];
    }
    let inv_n = S::one() / S::lit(n as f64);
    let dpooled: Vec<S> = (0..head.rows())
        .map(|m| (head[(m, 0)] * dlogits[0] + head[(m, 1)] * dlogits[1]) * inv_n)
        .collect();
    let mut dh = DenseMatrix::from_fn(n, dpooled.len(), |_, m| dpooled[m]);

    for t in (1..=model.depth()).rev() {
        let bt = &trace.blocks[t - 1];
        let block = model.block(t);
        let gb = &mut grads.blocks[t - 1];
        let comps = trace.conn.components();
        dh = match model.arch() {
            Architecture::Gcn | Architecture::Spectral => {
                let dpre = masked(&dh, &bt.relu_masks[0]);
                gb.biases_raw[0] = raw_bias_grad(model, t, 0, &dpre);
                let mut dprev = DenseMatrix::zeros(n, model.dims()[t - 1]);
                for (s, (agg, w)) in bt.aggregated.iter().zip(&block.weights).enumerate() {
                    gb.weights[s] = agg.t_matmul(&dpre);
                    let dagg = dpre.matmul_t(w);
                    dprev.add_assign(&comps[s].t_matmul(&dagg));
                }
                dprev
            }
            Architecture::Gin => {
                let dpre2 = masked(&dh, &bt.relu_masks[1]);
                gb.weights[1] = bt.post[0].t_matmul(&dpre2);
                gb.biases_raw[1] = raw_bias_grad(model, t, 1, &dpre2);
                let dpre1 = masked(&dpre2.matmul_t(&block.weights[1]), &bt.relu_masks[0]);
                gb.weights[0] = bt.aggregated[0].t_matmul(&dpre1);
                gb.biases_raw[0] = raw_bias_grad(model, t, 0, &dpre1);
                let dagg = dpre1.matmul_t(&block.weights[0]);
                comps[0].t_matmul(&dagg)
            }
        };
    }
    Gradients { params: grads, h0: dh }
}
