use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use relwalk::eval::{benchmark, BenchmarkConfig, Provider};
use relwalk::explain::{enumerate_relevant_walks, explanation_to_dot, BiasMode, Explanation, Method};
use relwalk::graph::{generate_dataset, read_dataset, write_dataset};
use relwalk::model::{load_model, model_to_json};
use relwalk::train::{prepare, TrainConfig};
use relwalk::{forward, Connectivity, Graph, Matrix, Model, Target};
use serde::Serialize;

use crate::error::{CliError, CliResult, Kind};
use crate::manifest;
use crate::{BiasModeArg, ExplainArgs, ExportDotArgs, FlipEvalArgs, GenDataArgs, MethodArg, TrainArgs};

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new(Kind::MissingFile, format!("input file `{}` not found", path.display())))
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Checks that every output can be created and that none of them would
/// overwrite an input.
fn check_outputs(inputs: &[&Path], outputs: &[&Path]) -> CliResult<()> {
    for out in outputs {
        let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(CliError::new(
                Kind::MissingFile,
                format!("output directory `{}` does not exist", parent.display()),
            ));
        }
        if inputs.iter().any(|i| same_file(i, out)) {
            return Err(CliError::new(
                Kind::InvalidArgument,
                format!("output `{}` would overwrite an input", out.display()),
            ));
        }
    }
    Ok(())
}

fn load_dataset(path: &Path) -> CliResult<Vec<Graph>> {
    read_dataset(BufReader::new(File::open(path)?)).map_err(|e| match e {
        relwalk::Error::Io(io) => io.into(),
        other => CliError::malformed(&format!("dataset `{}`", path.display()), other),
    })
}

fn load(path: &Path) -> CliResult<Model> {
    load_model::<f64>(path).map_err(|e| match e {
        relwalk::Error::Io(io) => io.into(),
        relwalk::Error::Json(_) | relwalk::Error::ModelFormat { .. } => {
            CliError::malformed(&format!("model `{}`", path.display()), e)
        }
        other => other.into(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn gen_data(a: &GenDataArgs) -> CliResult<()> {
    let manifest_path = a.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    check_outputs(&[], &[&a.out, &manifest_path])?;
    let graphs = generate_dataset(a.count, a.n, a.seed)?;
    write_dataset(BufWriter::new(File::create(&a.out)?), &graphs)?;
    manifest::write(&manifest_path, "gen-data", a, &[], &[&a.out])
}

#[derive(Serialize)]
struct TrainManifest<'a> {
    args: &'a TrainArgs,
    resolved: &'a TrainConfig,
    dims: &'a [usize],
    train_graphs: usize,
    test_graphs: usize,
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    require_file(&a.data)?;
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".log.csv"));
    let manifest_path = a.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    check_outputs(&[&a.data], &[&a.out, &log_path, &manifest_path])?;
    if a.blocks == 0 {
        return Err(CliError::new(Kind::InvalidArgument, "--blocks must be at least 1"));
    }
    if !(0.0..1.0).contains(&a.test_fraction) {
        return Err(CliError::new(Kind::InvalidArgument, "--test-fraction must lie in [0, 1)"));
    }
    let cfg = TrainConfig {
        learning_rate: a.lr,
        momentum: a.momentum,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        lr_decay: a.lr_decay,
        decay_every: None,
    };
    cfg.validate()?;

    let graphs = load_dataset(&a.data)?;
    let n_test = (graphs.len() as f64 * a.test_fraction).round() as usize;
    let (train_graphs, test_graphs) = graphs.split_at(graphs.len() - n_test);
    let train_set = prepare::<f64>(train_graphs, a.arch)?;
    let test_set = prepare::<f64>(test_graphs, a.arch)?;
    let width = a.width.unwrap_or(a.arch.default_width());
    let mut dims = vec![1];
    dims.extend(std::iter::repeat_n(width, a.blocks));
    let model = Model::new(a.arch, &dims, !a.zero_bias, a.seed)?;
    let (model, log) = relwalk::train::train(model, &train_set, &test_set, &cfg)?;

    fs::write(&a.out, model_to_json(&model))?;
    let mut w = csv::Writer::from_path(&log_path)?;
    for row in &log {
        w.serialize(row)?;
    }
    w.flush()?;
    let config = TrainManifest {
        args: a,
        resolved: &cfg,
        dims: &dims,
        train_graphs: train_set.len(),
        test_graphs: test_set.len(),
    };
    manifest::write(&manifest_path, "train", config, &[&a.data], &[&a.out, &log_path])
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn gamma_or_default(gamma: &Option<Vec<f64>>, depth: usize) -> CliResult<Vec<f64>> {
    match gamma {
        Some(g) if g.len() != depth => Err(CliError::new(
            Kind::Shape,
            format!("--gamma has {} values but the model has {depth} blocks", g.len()),
        )),
        Some(g) => Ok(g.clone()),
        None => Ok(Method::default_lrp(depth).gammas().to_vec()),
    }
}

pub fn explain(a: &ExplainArgs) -> CliResult<()> {
    require_file(&a.model)?;
    require_file(&a.data)?;
    let manifest_path = a.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    let mut outputs: Vec<&Path> = vec![&a.out, &manifest_path];
    outputs.extend(a.dot.as_deref());
    check_outputs(&[&a.model, &a.data], &outputs)?;
    if a.threshold.is_nan() || a.threshold < 0.0 {
        return Err(CliError::new(Kind::InvalidArgument, "--threshold must be non-negative"));
    }

    let mut model = load(&a.model)?;
    if a.zero_bias {
        model.set_use_bias(false);
    }
    let graphs = load_dataset(&a.data)?;
    let graph = graphs.get(a.index).ok_or_else(|| {
        CliError::new(
            Kind::InvalidArgument,
            format!("--index {} out of range for {} graphs", a.index, graphs.len()),
        )
    })?;
    let method = match a.method {
        MethodArg::Gi => Method::gi(),
        MethodArg::Lrp => Method::lrp(gamma_or_default(&a.gamma, model.depth())?)?.with_bias_mode(match a.bias_mode {
            BiasModeArg::Absorb => BiasMode::Absorb,
            BiasModeArg::Strict => BiasMode::Strict,
        }),
    };
    let target: Target = a.target.parse()?;
    let conn = Connectivity::build(graph, model.arch().default_scheme())?;
    let trace = forward(&model, &conn, &Matrix::filled(graph.n(), 1, 1.0))?;
    let rel = enumerate_relevant_walks(&model, &trace, &method, target, a.threshold)?;
    let mut exp = Explanation::new(graph, &rel, trace.value(target));
    if let Some(k) = a.top {
        exp.truncate(k);
    }
    write_json(&a.out, &exp)?;
    let mut written: Vec<&Path> = vec![&a.out];
    if let Some(dot) = &a.dot {
        fs::write(dot, explanation_to_dot(&exp))?;
        written.push(dot);
    }
    manifest::write(&manifest_path, "explain", a, &[&a.model, &a.data], &written)
}

pub fn flip_eval(a: &FlipEvalArgs) -> CliResult<()> {
    require_file(&a.model)?;
    require_file(&a.data)?;
    fs::create_dir_all(&a.out_dir)?;
    let rows_path = a.out_dir.join("rows.csv");
    let summary_path = a.out_dir.join("summary.csv");
    let manifest_path = a.out_dir.join("manifest.json");
    check_outputs(&[&a.model, &a.data], &[&rows_path, &summary_path, &manifest_path])?;

    let model = load(&a.model)?;
    let graphs = load_dataset(&a.data)?;
    if a.start >= graphs.len() {
        return Err(CliError::new(
            Kind::InvalidArgument,
            format!("--start {} out of range for {} graphs", a.start, graphs.len()),
        ));
    }
    let end = a.limit.map_or(graphs.len(), |l| (a.start + l).min(graphs.len()));
    let gamma = gamma_or_default(&a.gamma, model.depth())?;
    let providers = a
        .providers
        .iter()
        .map(|p| Provider::parse(p, &gamma))
        .collect::<relwalk::Result<Vec<_>>>()?;
    let cfg = BenchmarkConfig {
        providers,
        tasks: a.task.clone(),
        coarse_interval: a.coarse_interval,
        random_repeats: a.random_repeats,
        seed: a.seed,
    };
    let table = benchmark(&model, &graphs[a.start..end], &cfg)?;

    let mut w = csv::Writer::from_path(&rows_path)?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(&summary_path)?;
    for s in &table.summary {
        w.serialize(s)?;
    }
    w.flush()?;
    manifest::write(&manifest_path, "flip-eval", a, &[&a.model, &a.data], &[&rows_path, &summary_path])
}

pub fn export_dot(a: &ExportDotArgs) -> CliResult<()> {
    require_file(&a.input)?;
    let manifest_path = a.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    check_outputs(&[&a.input], &[&a.out, &manifest_path])?;
    let text = fs::read_to_string(&a.input)?;
    let exp: Explanation = serde_json::from_str(&text)
        .map_err(|e| CliError::malformed(&format!("explanation `{}`", a.input.display()), e))?;
    fs::write(&a.out, explanation_to_dot(&exp))?;
    manifest::write(&manifest_path, "export-dot", a, &[&a.input], &[&a.out])
}
