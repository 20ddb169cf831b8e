//! JSON model files. Floats go through `f64` with shortest round-trip
//! formatting, so saving and loading is bit-exact for `f64` models.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, Block, GnnModel, Params};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    arch: Architecture,
    #[serde(rename = "T")]
    depth: usize,
    dims: Vec<usize>,
    use_bias: bool,
    weights: BTreeMap<String, MatrixRecord>,
    biases_raw: BTreeMap<String, Vec<f64>>,
    head: MatrixRecord,
}

fn record<S: Scalar>(m: &DenseMatrix<S>) -> MatrixRecord {
    MatrixRecord {
        rows: m.rows(),
        cols: m.cols(),
        data: m.data().iter().map(|x| x.as_f64()).collect(),
    }
}

fn format_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ModelFormat {
        path: path.into(),
        message: message.into(),
    }
}

fn matrix<S: Scalar>(path: &str, r: MatrixRecord, expected: (usize, usize)) -> Result<DenseMatrix<S>> {
    if (r.rows, r.cols) != expected {
        return Err(format_err(
            path,
            format!(
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, r.rows, r.cols
            ),
        ));
    }
    let data = r.data.into_iter().map(S::lit).collect::<Vec<_>>();
    DenseMatrix::from_vec(r.rows, r.cols, data).map_err(|e| format_err(path, e.to_string()))
}

pub fn model_to_json<S: Scalar>(model: &GnnModel<S>) -> String {
    let mut weights = BTreeMap::new();
    let mut biases_raw = BTreeMap::new();
    for t in 1..=model.depth() {
        let block = model.block(t);
        for (k, w) in block.weights.iter().enumerate() {
            weights.insert(model.weight_name(t, k), record(w));
        }
        for (k, b) in block.biases_raw.iter().enumerate() {
            biases_raw.insert(model.bias_name(t, k), b.iter().map(|x| x.as_f64()).collect());
        }
    }
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        arch: model.arch(),
        depth: model.depth(),
        dims: model.dims().to_vec(),
        use_bias: model.use_bias(),
        weights,
        biases_raw,
        head: record(model.head()),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json<S: Scalar>(text: &str) -> Result<GnnModel<S>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        format_err(path, e.into_inner().to_string())
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(format_err(
            "format_version",
            format!("unsupported version {} (expected {FORMAT_VERSION})", file.format_version),
        ));
    }
    if file.dims.len() != file.depth + 1 || file.depth == 0 {
        return Err(format_err(
            "dims",
            format!("expected {} widths for T = {}, got {}", file.depth + 1, file.depth, file.dims.len()),
        ));
    }
    // shape bookkeeping comes from a template model of the declared layout
    let template = GnnModel::<S>::zeros(file.arch, &file.dims, file.use_bias)
        .map_err(|e| format_err("dims", e.to_string()))?;
    let mut blocks = Vec::with_capacity(file.depth);
    for t in 1..=file.depth {
        let mut weights = Vec::new();
        for k in 0..file.arch.weights_per_block() {
            let name = template.weight_name(t, k);
            let path = format!("weights.{name}");
            let r = file
                .weights
                .remove(&name)
                .ok_or_else(|| format_err(&path, "missing field"))?;
            weights.push(matrix(&path, r, template.weight_shape(t, k))?);
        }
        let mut biases_raw = Vec::new();
        for k in 0..file.arch.biases_per_block() {
            let name = template.bias_name(t, k);
            let path = format!("biases_raw.{name}");
            let b = file
                .biases_raw
                .remove(&name)
                .ok_or_else(|| format_err(&path, "missing field"))?;
            if b.len() != file.dims[t] {
                return Err(format_err(
                    path,
                    format!("length mismatch: expected {}, got {}", file.dims[t], b.len()),
                ));
            }
            biases_raw.push(b.into_iter().map(S::lit).collect());
        }
        blocks.push(Block { weights, biases_raw });
    }
    if let Some(extra) = file.weights.keys().next() {
        return Err(format_err(format!("weights.{extra}"), "unexpected entry"));
    }
    if let Some(extra) = file.biases_raw.keys().next() {
        return Err(format_err(format!("biases_raw.{extra}"), "unexpected entry"));
    }
    let head = matrix("head", file.head, (*file.dims.last().unwrap(), 2))?;
    GnnModel::from_params(file.arch, &file.dims, file.use_bias, Params { blocks, head })
}

pub fn save_model<S: Scalar>(model: &GnnModel<S>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model<S: Scalar>(path: impl AsRef<Path>) -> Result<GnnModel<S>> {
    model_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        for arch in [Architecture::Gcn, Architecture::Gin, Architecture::Spectral] {
            let mut m = GnnModel::<f64>::new(arch, &[1, 5, 3], true, 99).unwrap();
            m.params_mut().blocks[0].biases_raw[0][1] = -0.123_456_789_012_345_68;
            let back: GnnModel<f64> = model_from_json(&model_to_json(&m)).unwrap();
            assert_eq!(back, m);
            for (a, b) in back.params().slices().iter().zip(m.params().slices()) {
                for (x, y) in a.iter().zip(b) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn missing_field_is_named() {
        let m = GnnModel::<f64>::new(Architecture::Gcn, &[1, 2], true, 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v.as_object_mut().unwrap().remove("head");
        let err = model_from_json::<f64>(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("head"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v["weights"].as_object_mut().unwrap().remove("block1.w");
        let err = model_from_json::<f64>(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("weights.block1.w"), "{err}");
    }

    #[test]
    fn truncated_file_fails() {
        let m = GnnModel::<f64>::new(Architecture::Gin, &[1, 2], true, 1).unwrap();
        let text = model_to_json(&m);
        assert!(model_from_json::<f64>(&text[..text.len() / 2]).is_err());
    }

    #[test]
    fn wrong_shape_cites_expected() {
        let m = GnnModel::<f64>::new(Architecture::Gcn, &[1, 3], true, 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v["weights"]["block1.w"] = serde_json::json!({"rows": 2, "cols": 3, "data": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]});
        let err = model_from_json::<f64>(&v.to_string()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 1x3") && msg.contains("block1.w"), "{msg}");
    }

    #[test]
    fn version_mismatch() {
        let m = GnnModel::<f64>::new(Architecture::Gcn, &[1, 3], true, 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v["format_version"] = serde_json::json!(7);
        let err = model_from_json::<f64>(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("format_version"), "{err}");
    }
}
