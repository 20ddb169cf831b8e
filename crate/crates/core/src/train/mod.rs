//! Cross-entropy training with SGD + momentum and a step learning-rate decay.

mod backward;
mod loss;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use backward::{backward, Gradients};
pub use loss::{bce_grad, bce_loss, softmax2};

use crate::error::{Error, Result};
use crate::graph::{ConnectivityMatrix, Graph};
use crate::linalg::DenseMatrix;
use crate::model::{forward, Architecture, GnnModel};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Multiplier applied to the learning rate at every decay step.
    pub lr_decay: f64,
    /// Epochs between decay steps; `None` means `⌈epochs / 4⌉`.
    pub decay_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            momentum: 0.9,
            epochs: 30,
            batch_size: 32,
            seed: 0,
            lr_decay: 0.5,
            decay_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input("learning rate must be non-negative and finite".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Input("momentum must lie in [0, 1)".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Input("epochs and batch size must be positive".into()));
        }
        if self.decay_every == Some(0) {
            return Err(Error::Input("decay interval must be positive".into()));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let every = self.decay_every.unwrap_or(self.epochs.div_ceil(4)).max(1);
        self.learning_rate * self.lr_decay.powi((epoch / every) as i32)
    }
}

/// A graph prepared for the network: connectivity, all-ones initial state
/// and class label.
#[derive(Clone, Debug)]
pub struct Sample<S> {
    pub conn: ConnectivityMatrix<S>,
    pub h0: DenseMatrix<S>,
    pub label: usize,
}

impl<S: Scalar> Sample<S> {
    pub fn from_graph(graph: &Graph, arch: Architecture) -> Result<Self> {
        let label = graph
            .label()
            .ok_or_else(|| Error::Input("training graph has no label".into()))? as usize;
        Ok(Sample {
            conn: ConnectivityMatrix::build(graph, arch.default_scheme())?,
            h0: DenseMatrix::filled(graph.n(), 1, S::one()),
            label,
        })
    }
}

pub fn prepare<S: Scalar>(graphs: &[Graph], arch: Architecture) -> Result<Vec<Sample<S>>> {
    graphs.iter().map(|g| Sample::from_graph(g, arch)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's mini-batches, evaluated before each update.
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

/// Loss and gradients for one sample.
pub fn sample_gradients<S: Scalar>(model: &GnnModel<S>, sample: &Sample<S>) -> Result<(S, bool, Gradients<S>)> {
    let trace = forward(model, &sample.conn, &sample.h0)?;
    let loss = bce_loss(trace.logits, sample.label);
    let correct = predict_logits(trace.logits) == sample.label;
    let grads = backward(model, &trace, bce_grad(trace.logits, sample.label));
    Ok((loss, correct, grads))
}

fn predict_logits<S: Scalar>(logits: [S; 2]) -> usize {
    usize::from(logits[1] > logits[0])
}

pub fn predict<S: Scalar>(model: &GnnModel<S>, sample: &Sample<S>) -> Result<usize> {
    Ok(predict_logits(forward(model, &sample.conn, &sample.h0)?.logits))
}

pub fn accuracy<S: Scalar>(model: &GnnModel<S>, samples: &[Sample<S>]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for s in samples {
        if predict(model, s)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Mean loss over `samples`.
pub fn mean_loss<S: Scalar>(model: &GnnModel<S>, samples: &[Sample<S>]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        total += bce_loss(forward(model, &s.conn, &s.h0)?.logits, s.label).as_f64();
    }
    Ok(total / samples.len().max(1) as f64)
}

/// Trains `model` on `train_set`, reporting held-out accuracy on `test_set`
/// after every epoch when it is non-empty. Gradients are averaged per
/// mini-batch in sample order, so runs are reproducible for a fixed seed.
pub fn train<S: Scalar>(
    mut model: GnnModel<S>,
    train_set: &[Sample<S>],
    test_set: &[Sample<S>],
    cfg: &TrainConfig,
) -> Result<(GnnModel<S>, Vec<EpochStats>)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut velocity = model.params().zeros_like();
    let mut log = Vec::with_capacity(cfg.epochs);
    let momentum = S::lit(cfg.momentum);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = S::lit(cfg.learning_rate_at(epoch));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = model.params().zeros_like();
            let mut batch_loss = S::zero();
            for &i in batch {
                let (loss, ok, g) = sample_gradients(&model, &train_set[i])?;
                batch_loss += loss;
                correct += usize::from(ok);
                grad.axpy(S::one(), &g.params);
            }
            let inv = S::one() / S::lit(batch.len() as f64);
            batch_loss *= inv;
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: batch_loss.as_f64(),
                });
            }
            loss_sum += batch_loss.as_f64();
            batches += 1;
            grad.scale_mut(inv);
            velocity.scale_mut(momentum);
            velocity.axpy(S::one(), &grad);
            model.params_mut().axpy(-lr, &velocity);
            if !model.params().is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: f64::NAN,
                });
            }
        }
        let test_acc = if test_set.is_empty() {
            None
        } else {
            Some(accuracy(&model, test_set)?)
        };
        log.push(EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / batches as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            test_acc,
        });
    }
    Ok((model, log))
}
