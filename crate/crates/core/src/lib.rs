//! Graph neural networks (GCN, GIN, spectral) on dense connectivity, with
//! walk-level relevance explanations and a node-flipping benchmark.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod error;
pub mod eval;
pub mod explain;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use explain::{Method, RelevanceMap};
pub use graph::{BagOfEdges, ConnectivityMatrix, ConnectivityScheme, Edge, Graph, Walk};
pub use linalg::DenseMatrix;
pub use model::{forward, Architecture, ForwardTrace, GnnModel, Target};
pub use scalar::Scalar;

pub type Matrix = DenseMatrix<f64>;
pub type Model = GnnModel<f64>;
pub type Trace = ForwardTrace<f64>;
pub type Connectivity = ConnectivityMatrix<f64>;
pub type Relevance = RelevanceMap<f64>;
