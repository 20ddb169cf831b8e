use super::{Architecture, GnnModel, Target};
use crate::error::{Error, Result};
use crate::graph::ConnectivityMatrix;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Activations of one interaction block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTrace<S> {
    /// `Λ_s H_{t-1}` for every connectivity component.
    pub aggregated: Vec<DenseMatrix<S>>,
    /// Pre-activations of each dense+ReLU sublayer (one for GCN/spectral,
    /// two for the GIN MLP).
    pub pre: Vec<DenseMatrix<S>>,
    /// ReLU outputs matching `pre`; the last one is `H_t`.
    pub post: Vec<DenseMatrix<S>>,
    /// `relu_masks[i][r·d + c]` is set exactly where `pre[i][(r, c)] > 0`.
    pub relu_masks: Vec<Vec<bool>>,
}

impl<S: Scalar> BlockTrace<S> {
    pub fn output(&self) -> &DenseMatrix<S> {
        self.post.last().unwrap()
    }
}

/// Everything computed by one forward pass; read by every explainer.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace<S> {
    pub conn: ConnectivityMatrix<S>,
    pub h0: DenseMatrix<S>,
    pub blocks: Vec<BlockTrace<S>>,
    pub pooled: Vec<S>,
    pub logits: [S; 2],
}

impl<S: Scalar> ForwardTrace<S> {
    pub fn n(&self) -> usize {
        self.h0.rows()
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    /// `H_t`, with `H_0` the initial state.
    pub fn h(&self, t: usize) -> &DenseMatrix<S> {
        if t == 0 {
            &self.h0
        } else {
            self.blocks[t - 1].output()
        }
    }

    pub fn value(&self, target: Target) -> S {
        target.value(&self.logits)
    }
}

fn dense_relu<S: Scalar>(input: &DenseMatrix<S>, w: &DenseMatrix<S>, bias: &[S]) -> DenseMatrix<S> {
    let mut pre = input.matmul(w);
    pre.add_row_vector(bias);
    pre
}

fn mask_of<S: Scalar>(pre: &DenseMatrix<S>) -> Vec<bool> {
    pre.data().iter().map(|&x| x > S::zero()).collect()
}

pub fn forward<S: Scalar>(
    model: &GnnModel<S>,
    conn: &ConnectivityMatrix<S>,
    h0: &DenseMatrix<S>,
) -> Result<ForwardTrace<S>> {
    let n = conn.n();
    if h0.shape() != (n, model.dims()[0]) {
        return Err(Error::dim(
            "initial state",
            format!("{n}x{}", model.dims()[0]),
            format!("{}x{}", h0.rows(), h0.cols()),
        ));
    }
    if !model.arch().accepts(conn.scheme()) {
        return Err(Error::Input(format!(
            "{} model cannot consume {:?} connectivity",
            model.arch(),
            conn.scheme()
        )));
    }
    if !h0.is_finite() {
        return Err(Error::Numeric("initial state".into()));
    }
    if conn.components().iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("connectivity".into()));
    }

    let mut blocks = Vec::with_capacity(model.depth());
    let mut h = h0.clone();
    for t in 1..=model.depth() {
        let block = model.block(t);
        let aggregated: Vec<DenseMatrix<S>> = conn.components().iter().map(|c| c.matmul(&h)).collect();
        let (pre, post) = match model.arch() {
            Architecture::Gcn => {
                let pre = dense_relu(&aggregated[0], &block.weights[0], &model.effective_bias(t, 0));
                let post = pre.map(Scalar::relu);
                (vec![pre], vec![post])
            }
            Architecture::Spectral => {
                let mut pre = aggregated[0].matmul(&block.weights[0]);
                for (agg, w) in aggregated.iter().zip(&block.weights).skip(1) {
                    pre.add_assign(&agg.matmul(w));
                }
                pre.add_row_vector(&model.effective_bias(t, 0));
                let post = pre.map(Scalar::relu);
                (vec![pre], vec![post])
            }
            Architecture::Gin => {
                let pre1 = dense_relu(&aggregated[0], &block.weights[0], &model.effective_bias(t, 0));
                let post1 = pre1.map(Scalar::relu);
                let pre2 = dense_relu(&post1, &block.weights[1], &model.effective_bias(t, 1));
                let post2 = pre2.map(Scalar::relu);
                (vec![pre1, pre2], vec![post1, post2])
            }
        };
        h = post.last().unwrap().clone();
        let relu_masks = pre.iter().map(mask_of).collect();
        blocks.push(BlockTrace {
            aggregated,
            pre,
            post,
            relu_masks,
        });
    }

    let inv_n = S::one() / S::lit(n as f64);
    let pooled: Vec<S> = h.col_sums().into_iter().map(|s| s * inv_n).collect();
    let out = model.head().vecmat(&pooled);
    let logits = [out[0], out[1]];
    if !logits[0].is_finite() || !logits[1].is_finite() {
        return Err(Error::Numeric("logits".into()));
    }
    Ok(ForwardTrace {
        conn: conn.clone(),
        h0: h0.clone(),
        blocks,
        pooled,
        logits,
    })
}
