//! The three message-passing architectures (GCN, GIN, spectral) with a
//! global-average-pooling readout and a bias-free two-logit head.

mod forward;
mod io;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use forward::{forward, BlockTrace, ForwardTrace};
pub use io::{load_model, model_from_json, model_to_json, save_model, FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::graph::ConnectivityScheme;
use crate::linalg::DenseMatrix;
use crate::scalar::{softplus, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Gcn,
    Gin,
    Spectral,
}

impl Architecture {
    /// Connectivity scheme the synthetic-task models are fed.
    pub fn default_scheme(self) -> ConnectivityScheme {
        match self {
            Architecture::Gcn | Architecture::Gin => ConnectivityScheme::HalvedAdjacency,
            Architecture::Spectral => ConnectivityScheme::PowerExpansion,
        }
    }

    pub fn accepts(self, scheme: ConnectivityScheme) -> bool {
        (self == Architecture::Spectral) == (scheme == ConnectivityScheme::PowerExpansion)
    }

    /// Default hidden width for the synthetic task.
    pub fn default_width(self) -> usize {
        match self {
            Architecture::Gcn => 128,
            Architecture::Gin | Architecture::Spectral => 32,
        }
    }

    /// Weight matrices per block.
    pub fn weights_per_block(self) -> usize {
        match self {
            Architecture::Gcn => 1,
            Architecture::Gin => 2,
            Architecture::Spectral => SPECTRAL_COMPONENTS,
        }
    }

    /// Bias vectors (one per ReLU) per block.
    pub fn biases_per_block(self) -> usize {
        match self {
            Architecture::Gin => 2,
            _ => 1,
        }
    }
}

pub const SPECTRAL_COMPONENTS: usize = 3;

/// Raw bias at initialization; the effective bias starts at `−0.5·ln 2`.
pub const INIT_RAW_BIAS: f64 = 0.0;

const HE: f64 = 2.449_489_742_783_178; // √6

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Gcn => "gcn",
            Architecture::Gin => "gin",
            Architecture::Spectral => "spectral",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Architecture::Gcn),
            "gin" => Ok(Architecture::Gin),
            "spectral" | "chebnet" => Ok(Architecture::Spectral),
            other => Err(Error::Input(format!("unknown architecture `{other}`"))),
        }
    }
}

/// Softmin bias reparameterization `b = −½·log(1 + exp(−2·b₀))`, always ≤ 0.
pub fn reparam_bias<S: Scalar>(b0: S) -> S {
    -S::lit(0.5) * softplus(-S::lit(2.0) * b0)
}

/// `db/db₀ = σ(−2·b₀)`
pub fn reparam_bias_grad<S: Scalar>(b0: S) -> S {
    crate::scalar::sigmoid(-S::lit(2.0) * b0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block<S> {
    /// GCN: `[W]`; GIN: `[W₁, W₂]` of the combine MLP; spectral: `[W₀, W₁, W₂]`
    /// one per connectivity component.
    pub weights: Vec<DenseMatrix<S>>,
    /// Raw bias parameters `b₀`, one vector per ReLU in the block.
    pub biases_raw: Vec<Vec<S>>,
}

/// Every trainable tensor of a model; also used to hold gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<S> {
    pub blocks: Vec<Block<S>>,
    /// `d_T × 2`; logits are `pooledᵀ · head`.
    pub head: DenseMatrix<S>,
}

impl<S: Scalar> Params<S> {
    pub fn zeros_like(&self) -> Self {
        Params {
            blocks: self
                .blocks
                .iter()
                .map(|b| Block {
                    weights: b.weights.iter().map(|w| DenseMatrix::zeros(w.rows(), w.cols())).collect(),
                    biases_raw: b.biases_raw.iter().map(|v| vec![S::zero(); v.len()]).collect(),
                })
                .collect(),
            head: DenseMatrix::zeros(self.head.rows(), self.head.cols()),
        }
    }

    /// All parameter storage in a fixed order (block by block, weights then
    /// biases, head last).
    pub fn slices(&self) -> Vec<&[S]> {
        let mut out: Vec<&[S]> = Vec::new();
        for b in &self.blocks {
            out.extend(b.weights.iter().map(|w| w.data()));
            out.extend(b.biases_raw.iter().map(Vec::as_slice));
        }
        out.push(self.head.data());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [S]> {
        let mut out: Vec<&mut [S]> = Vec::new();
        for b in &mut self.blocks {
            out.extend(b.weights.iter_mut().map(|w| w.data_mut()));
            out.extend(b.biases_raw.iter_mut().map(Vec::as_mut_slice));
        }
        out.push(self.head.data_mut());
        out
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `self += alpha · other`
    pub fn axpy(&mut self, alpha: S, other: &Self) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale_mut(&mut self, alpha: S) {
        for s in self.slices_mut() {
            for x in s {
                *x *= alpha;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnnModel<S> {
    arch: Architecture,
    dims: Vec<usize>,
    use_bias: bool,
    params: Params<S>,
}

impl<S: Scalar> GnnModel<S> {
    /// Randomly initialized model: block weights uniform in `±√(6/fan_in)`,
    /// head weights in `±1/√fan_in`, raw biases [`INIT_RAW_BIAS`].
    pub fn new(arch: Architecture, dims: &[usize], use_bias: bool, seed: u64) -> Result<Self> {
        Self::check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize, fan_in: usize, scale: f64| {
            let bound = scale / (fan_in as f64).sqrt();
            DenseMatrix::from_fn(rows, cols, |_, _| S::lit(rng.random_range(-bound..bound)))
        };
        let blocks = (1..dims.len())
            .map(|t| {
                let (din, dout) = (dims[t - 1], dims[t]);
                let weights = match arch {
                    Architecture::Gcn => vec![uniform(din, dout, din, HE)],
                    Architecture::Gin => vec![uniform(din, dout, din, HE), uniform(dout, dout, dout, HE)],
                    Architecture::Spectral => (0..SPECTRAL_COMPONENTS)
                        .map(|_| uniform(din, dout, din * SPECTRAL_COMPONENTS, HE))
                        .collect(),
                };
                Block {
                    weights,
                    biases_raw: vec![vec![S::lit(INIT_RAW_BIAS); dout]; arch.biases_per_block()],
                }
            })
            .collect();
        let d_top = *dims.last().unwrap();
        let head = uniform(d_top, 2, d_top, 1.0);
        Ok(Self {
            arch,
            dims: dims.to_vec(),
            use_bias,
            params: Params { blocks, head },
        })
    }

    /// Model with all parameters zero.
    pub fn zeros(arch: Architecture, dims: &[usize], use_bias: bool) -> Result<Self> {
        let mut m = Self::new(arch, dims, use_bias, 0)?;
        m.params = m.params.zeros_like();
        Ok(m)
    }

    /// Assembles a model from explicit parameters, validating every shape.
    pub fn from_params(arch: Architecture, dims: &[usize], use_bias: bool, params: Params<S>) -> Result<Self> {
        Self::check_dims(dims)?;
        let m = Self {
            arch,
            dims: dims.to_vec(),
            use_bias,
            params,
        };
        m.validate()?;
        Ok(m)
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 {
            return Err(Error::Input("a model needs at least one interaction block".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Input("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.params.blocks.len() != self.depth() {
            return Err(Error::dim("blocks", self.depth(), self.params.blocks.len()));
        }
        for (i, block) in self.params.blocks.iter().enumerate() {
            let t = i + 1;
            if block.weights.len() != self.arch.weights_per_block() {
                return Err(Error::dim(
                    format!("block{t} weights"),
                    self.arch.weights_per_block(),
                    block.weights.len(),
                ));
            }
            for (k, w) in block.weights.iter().enumerate() {
                let expected = self.weight_shape(t, k);
                if w.shape() != expected {
                    return Err(Error::dim(
                        self.weight_name(t, k),
                        format!("{}x{}", expected.0, expected.1),
                        format!("{}x{}", w.rows(), w.cols()),
                    ));
                }
            }
            if block.biases_raw.len() != self.arch.biases_per_block() {
                return Err(Error::dim(
                    format!("block{t} biases"),
                    self.arch.biases_per_block(),
                    block.biases_raw.len(),
                ));
            }
            for (k, b) in block.biases_raw.iter().enumerate() {
                if b.len() != self.dims[t] {
                    return Err(Error::dim(self.bias_name(t, k), self.dims[t], b.len()));
                }
            }
        }
        let d_top = *self.dims.last().unwrap();
        if self.params.head.shape() != (d_top, 2) {
            return Err(Error::dim(
                "head",
                format!("{d_top}x2"),
                format!("{}x{}", self.params.head.rows(), self.params.head.cols()),
            ));
        }
        Ok(())
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    /// Layer widths `d_0 … d_T`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of interaction blocks `T`.
    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn use_bias(&self) -> bool {
        self.use_bias
    }

    /// Switches between biased and exact zero-bias (positively homogeneous) mode.
    pub fn set_use_bias(&mut self, on: bool) {
        self.use_bias = on;
    }

    pub fn params(&self) -> &Params<S> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<S> {
        &mut self.params
    }

    /// Block `t` (1-based).
    pub fn block(&self, t: usize) -> &Block<S> {
        &self.params.blocks[t - 1]
    }

    pub fn head(&self) -> &DenseMatrix<S> {
        &self.params.head
    }

    /// Effective (reparameterized) bias of ReLU `k` in block `t`; zero in
    /// zero-bias mode.
    pub fn effective_bias(&self, t: usize, k: usize) -> Vec<S> {
        let raw = &self.block(t).biases_raw[k];
        if self.use_bias {
            raw.iter().map(|&b| reparam_bias(b)).collect()
        } else {
            vec![S::zero(); raw.len()]
        }
    }

    pub fn weight_shape(&self, t: usize, k: usize) -> (usize, usize) {
        let (din, dout) = (self.dims[t - 1], self.dims[t]);
        match (self.arch, k) {
            (Architecture::Gin, 1) => (dout, dout),
            _ => (din, dout),
        }
    }

    pub fn weight_name(&self, t: usize, k: usize) -> String {
        match self.arch {
            Architecture::Gcn => format!("block{t}.w"),
            Architecture::Gin => format!("block{t}.mlp{}.w", k + 1),
            Architecture::Spectral => format!("block{t}.w{k}"),
        }
    }

    pub fn bias_name(&self, t: usize, k: usize) -> String {
        match self.arch {
            Architecture::Gin => format!("block{t}.mlp{}.b", k + 1),
            _ => format!("block{t}.b"),
        }
    }

    /// Head column combination `v` such that the explained scalar is `pooled · v`.
    pub fn readout_vector(&self, target: Target) -> Vec<S> {
        let head = &self.params.head;
        (0..head.rows())
            .map(|m| match target {
                Target::Logit(c) => head[(m, c)],
                Target::Contrast(c) => head[(m, c)] - head[(m, 1 - c)],
            })
            .collect()
    }

    pub fn cast<T: Scalar>(&self) -> GnnModel<T> {
        GnnModel {
            arch: self.arch,
            dims: self.dims.clone(),
            use_bias: self.use_bias,
            params: Params {
                blocks: self
                    .params
                    .blocks
                    .iter()
                    .map(|b| Block {
                        weights: b.weights.iter().map(DenseMatrix::cast).collect(),
                        biases_raw: b
                            .biases_raw
                            .iter()
                            .map(|v| v.iter().map(|&x| T::lit(x.as_f64())).collect())
                            .collect(),
                    })
                    .collect(),
                head: self.params.head.cast(),
            },
        }
    }
}

/// Which scalar of the two-logit output is explained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    /// A single logit.
    Logit(usize),
    /// `logit_c − logit_{1−c}`; `Contrast(1)` is the default logit difference.
    Contrast(usize),
}

impl Target {
    pub const DIFFERENCE: Target = Target::Contrast(1);

    pub fn value<S: Scalar>(self, logits: &[S]) -> S {
        match self {
            Target::Logit(c) => logits[c],
            Target::Contrast(c) => logits[c] - logits[1 - c],
        }
    }

    /// Gradient of [`Target::value`] with respect to the logits.
    pub fn seed<S: Scalar>(self) -> [S; 2] {
        let mut g = [S::zero(); 2];
        match self {
            Target::Logit(c) => g[c] = S::one(),
            Target::Contrast(c) => {
                g[c] = S::one();
                g[1 - c] = -S::one();
            }
        }
        g
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Logit(c) => write!(f, "logit{c}"),
            Target::Contrast(1) => f.write_str("diff"),
            Target::Contrast(c) => write!(f, "contrast{c}"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diff" | "contrast1" => Ok(Target::DIFFERENCE),
            "contrast0" => Ok(Target::Contrast(0)),
            "logit0" => Ok(Target::Logit(0)),
            "logit1" => Ok(Target::Logit(1)),
            other => Err(Error::Input(format!("unknown target `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reparam_values() {
        assert!((reparam_bias(0.0f64) + 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((reparam_bias(0.0f64) - (-0.34657359027997264)).abs() < 1e-15);
        let big = reparam_bias(50.0f64);
        assert!(big <= 0.0 && big > -1e-40);
        assert!((reparam_bias(-50.0f64) - (-50.0)).abs() < 1e-12);
    }

    #[test]
    fn reparam_gradient_matches_difference_quotient() {
        for &b in &[-3.0f64, -0.2, 0.0, 0.7, 4.0] {
            let h = 1e-6;
            let fd = (reparam_bias(b + h) - reparam_bias(b - h)) / (2.0 * h);
            assert!((fd - reparam_bias_grad(b)).abs() < 1e-8);
        }
    }

    #[test]
    fn shapes_and_names() {
        let m = GnnModel::<f64>::new(Architecture::Gin, &[1, 4, 3], true, 1).unwrap();
        assert_eq!(m.weight_shape(2, 0), (4, 3));
        assert_eq!(m.weight_shape(2, 1), (3, 3));
        assert_eq!(m.weight_name(1, 1), "block1.mlp2.w");
        assert_eq!(m.params().len(), 4 + 16 + 8 + 12 + 9 + 6 + 6);
        let s = GnnModel::<f64>::new(Architecture::Spectral, &[1, 2], true, 1).unwrap();
        assert_eq!(s.block(1).weights.len(), 3);
    }

    #[test]
    fn from_params_rejects_bad_shape() {
        let m = GnnModel::<f64>::new(Architecture::Gcn, &[1, 3], false, 1).unwrap();
        let mut p = m.params().clone();
        p.blocks[0].weights[0] = DenseMatrix::zeros(2, 3);
        let err = GnnModel::from_params(Architecture::Gcn, &[1, 3], false, p).unwrap_err();
        assert!(err.to_string().contains("1x3"), "{err}");
    }

    #[test]
    fn readout_vectors() {
        let m = GnnModel::<f64>::new(Architecture::Gcn, &[1, 2], false, 3).unwrap();
        let h = m.head();
        let v = m.readout_vector(Target::DIFFERENCE);
        assert_eq!(v[0], h[(0, 1)] - h[(0, 0)]);
        assert_eq!(Target::DIFFERENCE.value(&[1.0, 3.0]), 2.0);
        assert_eq!(Target::Contrast(0).seed::<f64>(), [1.0, -1.0]);
    }
}
