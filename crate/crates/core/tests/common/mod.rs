#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relwalk::model::forward;
use relwalk::train::{backward, bce_grad, bce_loss};
use relwalk::{Architecture, Connectivity, Graph, Matrix, Model, Target, Trace};

pub const ARCHS: [Architecture; 3] = [Architecture::Gcn, Architecture::Gin, Architecture::Spectral];

/// Random connected graph on `n` nodes: a random tree plus a few extra edges.
pub fn random_graph(n: usize, rng: &mut impl Rng) -> Graph {
    let mut g = Graph::new(n, []).unwrap();
    for v in 1..n {
        let u = rng.random_range(0..v);
        g.add_edge(u, v).unwrap();
    }
    for _ in 0..rng.random_range(0..=n) {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v && !g.has_edge(u, v) {
            g.add_edge(u, v).unwrap();
        }
    }
    g
}

pub struct Instance {
    pub graph: Graph,
    pub model: Model,
    pub trace: Trace,
}

/// Small random network on a small random graph, with random positive
/// initial features so that no hidden unit sits exactly at a kink.
pub fn random_instance(seed: u64, arch: Architecture, n_max: usize, depths: &[usize], w_max: usize, use_bias: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=n_max);
    let depth = depths[rng.random_range(0..depths.len())];
    let dims: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=w_max)).collect();
    let graph = random_graph(n, &mut rng);
    let mut model = Model::new(arch, &dims, use_bias, rng.random()).unwrap();
    if use_bias {
        for b in &mut model.params_mut().blocks {
            for v in &mut b.biases_raw {
                v.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            }
        }
    }
    let conn = Connectivity::build(&graph, arch.default_scheme()).unwrap();
    let h0 = Matrix::from_fn(n, dims[0], |_, _| rng.random_range(0.5..1.5));
    let trace = forward(&model, &conn, &h0).unwrap();
    Instance { graph, model, trace }
}

pub fn value(model: &Model, trace: &Trace, target: Target) -> f64 {
    forward(model, &trace.conn, &trace.h0).unwrap().value(target)
}

pub fn loss(model: &Model, conn: &Connectivity, h0: &Matrix, label: usize) -> f64 {
    bce_loss(forward(model, conn, h0).unwrap().logits, label)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Largest relative error of the analytic gradient against central
/// differences, or `None` if some perturbation flips a ReLU.
pub fn max_grad_error(arch: Architecture, seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(4, &mut rng);
    let mut model = Model::new(arch, &[3, 3, 3], true, seed).unwrap();
    for b in &mut model.params_mut().blocks {
        for v in &mut b.biases_raw {
            v.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        }
    }
    let conn = Connectivity::build(&graph, arch.default_scheme()).unwrap();
    let h0 = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
    let label = 1;
    let trace = forward(&model, &conn, &h0).unwrap();
    let grads = backward(&model, &trace, bce_grad(trace.logits, label));
    let masks = |m: &Model| -> Vec<Vec<bool>> {
        forward(m, &conn, &h0).unwrap().blocks.iter().flat_map(|b| b.relu_masks.clone()).collect()
    };
    let base_masks = masks(&model);
    let eps = 1e-5;
    let analytic: Vec<f64> = grads.params.slices().concat();
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    let n_slices = model.params().slices().len();
    for s in 0..n_slices {
        let len = model.params().slices()[s].len();
        for i in 0..len {
            let mut plus = model.clone();
            plus.params_mut().slices_mut()[s][i] += eps;
            let mut minus = model.clone();
            minus.params_mut().slices_mut()[s][i] -= eps;
            if masks(&plus) != base_masks || masks(&minus) != base_masks {
                return None;
            }
            let lp = bce_loss(forward(&plus, &conn, &h0).unwrap().logits, label);
            let lm = bce_loss(forward(&minus, &conn, &h0).unwrap().logits, label);
            let numeric = (lp - lm) / (2.0 * eps);
            let a = analytic[idx];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
            idx += 1;
        }
    }
    Some(worst)
}
