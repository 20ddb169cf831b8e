use serde::{Deserialize, Serialize};

use super::{check_permutation, Graph};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// How the network input `Λ` is derived from the adjacency matrix `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectivityScheme {
    /// `(A + I) / 2`
    HalvedAdjacency,
    /// `D̃^{-1/2} (A + I) D̃^{-1/2}`
    SymNormalized,
    /// `[Ã^0, ½Ã^1, ¼Ã^2]`
    PowerExpansion,
}

/// One or more `n×n` non-negative matrices. Entry `(K, J)` weighs the
/// message from node `J` in block `t-1` into node `K` in block `t`
/// (`Z = Λ H`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityMatrix<S> {
    scheme: ConnectivityScheme,
    components: Vec<DenseMatrix<S>>,
}

impl<S: Scalar> ConnectivityMatrix<S> {
    pub fn build(graph: &Graph, scheme: ConnectivityScheme) -> Result<Self> {
        let n = graph.n();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut a_tilde = DenseMatrix::<S>::identity(n);
        for e in graph.edges() {
            a_tilde[(e.lo(), e.hi())] = S::one();
            a_tilde[(e.hi(), e.lo())] = S::one();
        }
        let half = S::lit(0.5);
        let components = match scheme {
            ConnectivityScheme::HalvedAdjacency => vec![a_tilde.scale(half)],
            ConnectivityScheme::SymNormalized => {
                let inv_sqrt: Vec<S> = a_tilde
                    .col_sums()
                    .into_iter()
                    .map(|d| S::one() / d.sqrt())
                    .collect();
                vec![DenseMatrix::from_fn(n, n, |i, j| {
                    inv_sqrt[i] * a_tilde[(i, j)] * inv_sqrt[j]
                })]
            }
            ConnectivityScheme::PowerExpansion => {
                let sq = a_tilde.matmul(&a_tilde);
                vec![
                    DenseMatrix::identity(n),
                    a_tilde.scale(half),
                    sq.scale(S::lit(0.25)),
                ]
            }
        };
        Ok(Self { scheme, components })
    }

    /// Wraps explicit component matrices (all square, same size).
    pub fn from_components(scheme: ConnectivityScheme, components: Vec<DenseMatrix<S>>) -> Result<Self> {
        let n = components
            .first()
            .ok_or(Error::EmptyGraph)?
            .rows();
        for (s, c) in components.iter().enumerate() {
            if c.shape() != (n, n) {
                return Err(Error::dim(
                    format!("connectivity component {s}"),
                    format!("{n}x{n}"),
                    format!("{}x{}", c.rows(), c.cols()),
                ));
            }
            if c.data().iter().any(|&x| !x.is_finite() || x < S::zero()) {
                return Err(Error::Numeric(format!(
                    "connectivity component {s} (entries must be finite and non-negative)"
                )));
            }
        }
        let expected = if scheme == ConnectivityScheme::PowerExpansion { 3 } else { 1 };
        if components.len() != expected {
            return Err(Error::dim("connectivity components", expected, components.len()));
        }
        Ok(Self { scheme, components })
    }

    pub fn scheme(&self) -> ConnectivityScheme {
        self.scheme
    }

    pub fn n(&self) -> usize {
        self.components[0].rows()
    }

    pub fn components(&self) -> &[DenseMatrix<S>] {
        &self.components
    }

    /// The single matrix, or the sum of components for a power expansion.
    pub fn values(&self) -> DenseMatrix<S> {
        let mut out = self.components[0].clone();
        for c in &self.components[1..] {
            out.add_assign(c);
        }
        out
    }

    /// Whether the message `from → to` is carried by any component.
    #[inline]
    pub fn supports(&self, from: usize, to: usize) -> bool {
        self.components.iter().any(|c| c[(to, from)] != S::zero())
    }

    /// Nodes `J` feeding into `to` (its one-block receptive field).
    pub fn sources(&self, to: usize) -> Vec<usize> {
        (0..self.n()).filter(|&j| self.supports(j, to)).collect()
    }

    /// 0/1 support matrix `S[K][J]`.
    pub fn support_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        (0..n)
            .map(|k| (0..n).map(|j| self.supports(j, k)).collect())
            .collect()
    }

    pub fn scaled(&self, s: S) -> Self {
        Self {
            scheme: self.scheme,
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Zeroes every row and column of nodes with `present[v] == false`.
    pub fn masked(&self, present: &[bool]) -> Self {
        assert_eq!(present.len(), self.n());
        let components = self
            .components
            .iter()
            .map(|c| {
                DenseMatrix::from_fn(c.rows(), c.cols(), |i, j| {
                    if present[i] && present[j] {
                        c[(i, j)]
                    } else {
                        S::zero()
                    }
                })
            })
            .collect();
        Self {
            scheme: self.scheme,
            components,
        }
    }

    /// `P Λ Pᵀ` for the relabeling `v ↦ perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n())?;
        let n = self.n();
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut out = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        out[(perm[i], perm[j])] = c[(i, j)];
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            scheme: self.scheme,
            components,
        })
    }

    pub fn cast<T: Scalar>(&self) -> ConnectivityMatrix<T> {
        ConnectivityMatrix {
            scheme: self.scheme,
            components: self.components.iter().map(DenseMatrix::cast).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halved_adjacency_two_nodes() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let c = ConnectivityMatrix::<f64>::build(&g, ConnectivityScheme::HalvedAdjacency).unwrap();
        assert_eq!(c.values().data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn sym_normalized_isolated_nodes_is_identity() {
        let g = Graph::new(2, []).unwrap();
        let c = ConnectivityMatrix::<f64>::build(&g, ConnectivityScheme::SymNormalized).unwrap();
        assert_eq!(c.values(), DenseMatrix::identity(2));
    }

    #[test]
    fn sym_normalized_path() {
        // degrees with self-loop: 2, 3, 2
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let c = ConnectivityMatrix::<f64>::build(&g, ConnectivityScheme::SymNormalized).unwrap();
        let v = c.values();
        assert!((v[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((v[(0, 1)] - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((v[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v[(0, 2)], 0.0);
    }

    #[test]
    fn power_expansion_path_second_component() {
        // Ã for 0-1-2 is [[1,1,0],[1,1,1],[0,1,1]]; (Ã²)_{02} = 1·0 + 1·1 + 0·1 = 1.
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let c = ConnectivityMatrix::<f64>::build(&g, ConnectivityScheme::PowerExpansion).unwrap();
        assert_eq!(c.components().len(), 3);
        assert_eq!(c.components()[2][(0, 2)], 0.25);
        // (Ã²)_{11} = 1 + 1 + 1 = 3
        assert_eq!(c.components()[2][(1, 1)], 0.75);
        assert_eq!(c.components()[0], DenseMatrix::identity(3));
        assert!(c.supports(0, 2));
    }

    #[test]
    fn empty_graph_rejected() {
        let g = Graph::new(0, []).unwrap();
        assert!(matches!(
            ConnectivityMatrix::<f64>::build(&g, ConnectivityScheme::HalvedAdjacency),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn masking_removes_rows_and_columns() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let c = ConnectivityMatrix::<f64>::build(&g, ConnectivityScheme::HalvedAdjacency).unwrap();
        let m = c.masked(&[true, false, true]);
        assert_eq!(m.values().sum(), 1.0);
        assert!(!m.supports(1, 1));
    }
}
