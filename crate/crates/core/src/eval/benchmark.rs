use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{flipping_curve, greedy_sequence, Attribution, Task};
use crate::error::{Error, Result};
use crate::explain::{first_order_attribution, FirstOrderVariant, Method, WalkExplainer};
use crate::graph::{ConnectivityMatrix, Graph};
use crate::linalg::DenseMatrix;
use crate::model::{forward, ForwardTrace, GnnModel, Target};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Provider {
    /// Walk-level LRP-γ, pooled to bags.
    GnnLrp(Method),
    /// Walk-level Gradient×Input, pooled to bags.
    GnnGi,
    FirstOrderGi,
    FirstOrderLrp(Method),
    /// Uniform random node scores.
    Random,
}

impl Provider {
    pub fn name(&self) -> &'static str {
        match self {
            Provider::GnnLrp(_) => "gnn-lrp",
            Provider::GnnGi => "gnn-gi",
            Provider::FirstOrderGi => "first-order-gi",
            Provider::FirstOrderLrp(_) => "first-order-lrp",
            Provider::Random => "random",
        }
    }

    /// Parses a provider name; LRP variants get the given γ schedule.
    pub fn parse(name: &str, gamma: &[f64]) -> Result<Self> {
        Ok(match name {
            "gnn-lrp" => Provider::GnnLrp(Method::lrp(gamma.to_vec())?),
            "gnn-gi" => Provider::GnnGi,
            "first-order-gi" => Provider::FirstOrderGi,
            "first-order-lrp" => Provider::FirstOrderLrp(Method::lrp(gamma.to_vec())?),
            "random" => Provider::Random,
            other => return Err(Error::Input(format!("unknown provider {other:?}"))),
        })
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Provider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Provider::parse(s, &[2.0, 1.0])
    }
}

/// Attribution of `trace` by one provider.
pub fn attribute<S: Scalar>(
    model: &GnnModel<S>,
    trace: &ForwardTrace<S>,
    provider: &Provider,
    target: Target,
    rng: &mut impl Rng,
) -> Result<Attribution<S>> {
    let n = trace.n();
    Ok(match provider {
        Provider::GnnLrp(method) => {
            Attribution::from_walks(&WalkExplainer::new(model, trace, method, target)?.enumerate(0.0), n)
        }
        Provider::GnnGi => {
            Attribution::from_walks(&WalkExplainer::new(model, trace, &Method::gi(), target)?.enumerate(0.0), n)
        }
        Provider::FirstOrderGi => Attribution::from_nodes(first_order_attribution(
            model,
            trace,
            &FirstOrderVariant::GradientInput,
            target,
        )?),
        Provider::FirstOrderLrp(method) => Attribution::from_nodes(first_order_attribution(
            model,
            trace,
            &FirstOrderVariant::Lrp(method.clone()),
            target,
        )?),
        Provider::Random => Attribution::from_nodes((0..n).map(|_| S::lit(rng.random::<f64>())).collect()),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub providers: Vec<Provider>,
    pub tasks: Vec<Task>,
    pub coarse_interval: usize,
    /// Random-provider draws averaged per graph.
    pub random_repeats: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            providers: vec![
                Provider::GnnLrp(Method::default_lrp(2)),
                Provider::GnnGi,
                Provider::FirstOrderGi,
                Provider::FirstOrderLrp(Method::default_lrp(2)),
                Provider::Random,
            ],
            tasks: vec![Task::Activation, Task::Pruning],
            coarse_interval: 5,
            random_repeats: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub provider: String,
    pub task: Task,
    pub graph_seed: u64,
    pub aufc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkSummary {
    pub provider: String,
    pub task: Task,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Mean of per-graph differences `a − b` and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedComparison {
    pub mean_diff: f64,
    pub stderr: f64,
}

impl PairedComparison {
    /// Difference in units of its standard error.
    pub fn z(&self) -> f64 {
        self.mean_diff / self.stderr
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkTable {
    /// Rows grouped by graph, then provider, then task.
    pub rows: Vec<BenchmarkRow>,
    pub summary: Vec<BenchmarkSummary>,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl BenchmarkTable {
    fn values(&self, provider: &str, task: Task) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.provider == provider && r.task == task)
            .map(|r| r.aufc)
            .collect()
    }

    pub fn summary_for(&self, provider: &str, task: Task) -> Option<&BenchmarkSummary> {
        self.summary.iter().find(|s| s.provider == provider && s.task == task)
    }

    /// Paired comparison of two providers over the same graphs.
    pub fn paired(&self, a: &str, b: &str, task: Task) -> Option<PairedComparison> {
        let (va, vb) = (self.values(a, task), self.values(b, task));
        if va.is_empty() || va.len() != vb.len() {
            return None;
        }
        let diffs: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| x - y).collect();
        let (mean_diff, stderr) = mean_and_stderr(&diffs);
        Some(PairedComparison { mean_diff, stderr })
    }
}

/// Node-flipping benchmark. Each graph is explained for the contrast of its
/// predicted class against the other; the random provider's AUFC is averaged
/// over `random_repeats` draws per graph.
pub fn benchmark<S: Scalar>(model: &GnnModel<S>, graphs: &[Graph], cfg: &BenchmarkConfig) -> Result<BenchmarkTable> {
    if graphs.is_empty() {
        return Err(Error::Input("benchmark needs at least one graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for (i, graph) in graphs.iter().enumerate() {
        let conn = ConnectivityMatrix::build(graph, model.arch().default_scheme())?;
        let h0 = DenseMatrix::filled(graph.n(), 1, S::one());
        let trace = forward(model, &conn, &h0)?;
        let predicted = usize::from(trace.logits[1] > trace.logits[0]);
        let target = Target::Contrast(predicted);
        let graph_seed = graph.seed().unwrap_or(i as u64);
        for provider in &cfg.providers {
            let repeats = if *provider == Provider::Random {
                cfg.random_repeats.max(1)
            } else {
                1
            };
            let mut totals = vec![0.0; cfg.tasks.len()];
            for _ in 0..repeats {
                let attr = attribute(model, &trace, provider, target, &mut rng)?;
                for (total, &task) in totals.iter_mut().zip(&cfg.tasks) {
                    let seq = greedy_sequence(&attr, task, cfg.coarse_interval);
                    *total += flipping_curve(model, &conn, &h0, target, &seq, task)?.aufc;
                }
            }
            for (total, &task) in totals.into_iter().zip(&cfg.tasks) {
                rows.push(BenchmarkRow {
                    provider: provider.name().to_string(),
                    task,
                    graph_seed,
                    aufc: total / repeats as f64,
                });
            }
        }
    }

    let mut grouped: BTreeMap<(usize, Task), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        let p = cfg.providers.iter().position(|p| p.name() == r.provider).unwrap();
        grouped.entry((p, r.task)).or_default().push(r.aufc);
    }
    let summary = grouped
        .into_iter()
        .map(|((p, task), values)| {
            let (mean, stderr) = mean_and_stderr(&values);
            BenchmarkSummary {
                provider: cfg.providers[p].name().to_string(),
                task,
                mean,
                stderr,
                count: values.len(),
            }
        })
        .collect();
    Ok(BenchmarkTable { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_dataset;
    use crate::model::Architecture;

    #[test]
    fn stderr_of_known_sample() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn provider_names_round_trip() {
        for name in ["gnn-lrp", "gnn-gi", "first-order-gi", "first-order-lrp", "random"] {
            assert_eq!(name.parse::<Provider>().unwrap().name(), name);
        }
        assert!("magic".parse::<Provider>().is_err());
    }

    #[test]
    fn small_benchmark_is_deterministic() {
        let graphs = generate_dataset(4, 8, 5).unwrap();
        let model = GnnModel::<f64>::new(Architecture::Gcn, &[1, 4, 4], true, 1).unwrap();
        let cfg = BenchmarkConfig {
            random_repeats: 2,
            ..Default::default()
        };
        let a = benchmark(&model, &graphs, &cfg).unwrap();
        let b = benchmark(&model, &graphs, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4 * 5 * 2);
        assert_eq!(a.summary.len(), 10);
        let p = a.paired("gnn-lrp", "random", Task::Activation).unwrap();
        assert!(p.mean_diff.is_finite());
    }
}
