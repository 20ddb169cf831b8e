use super::{Method, WalkExplainer};
use crate::error::Result;
use crate::model::{ForwardTrace, GnnModel, Target};
use crate::scalar::Scalar;
use crate::train::backward;

#[derive(Clone, Debug, PartialEq)]
pub enum FirstOrderVariant {
    /// Input gradient times input, summed over each node's features.
    GradientInput,
    /// Layer-wise LRP-γ carried down to the input nodes.
    Lrp(Method),
}

/// Node-level relevance scores without walk resolution.
pub fn first_order_attribution<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    variant: &FirstOrderVariant,
    target: Target,
) -> Result<Vec<S>> {
    match variant {
        FirstOrderVariant::GradientInput => {
            let grads = backward(model, trace, target.seed());
            Ok((0..trace.n())
                .map(|v| grads.h0.row(v).iter().zip(trace.h0.row(v)).map(|(&g, &x)| g * x).sum())
                .collect())
        }
        FirstOrderVariant::Lrp(method) => Ok(WalkExplainer::new(model, trace, method, target)?.node_relevance()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{enumerate_relevant_walks, pool_nodes};
    use crate::graph::{ConnectivityMatrix, Graph};
    use crate::linalg::DenseMatrix;
    use crate::model::{forward, Architecture};

    #[test]
    fn gradient_input_equals_pooled_gi_walks() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (2, 4)]).unwrap();
        for arch in [Architecture::Gcn, Architecture::Gin, Architecture::Spectral] {
            let m = GnnModel::<f64>::new(arch, &[1, 6, 6], true, 8).unwrap();
            let c = ConnectivityMatrix::build(&g, arch.default_scheme()).unwrap();
            let tr = forward(&m, &c, &DenseMatrix::filled(5, 1, 1.0)).unwrap();
            let fo = first_order_attribution(&m, &tr, &FirstOrderVariant::GradientInput, Target::DIFFERENCE).unwrap();
            let walks = enumerate_relevant_walks(&m, &tr, &Method::gi(), Target::DIFFERENCE, 0.0).unwrap();
            for (a, b) in fo.iter().zip(pool_nodes(&walks, 5)) {
                assert!((a - b).abs() < 1e-10, "{arch}: {a} vs {b}");
            }
        }
    }
}
