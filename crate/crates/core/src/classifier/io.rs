//! Model files: one line of JSON header terminated by `\n`, followed by the
//! flattened parameters as little-endian `f32`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, ClassifierModel};
use crate::error::{Error, Result};

const MODEL_FORMAT: &str = "genmetric-classifier";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    format: String,
    version: u32,
    architecture: Architecture,
    dim: usize,
    num_classes: usize,
    input_mean: Vec<f64>,
    input_scale: Vec<f64>,
    param_count: usize,
}

/// Parameters are stored as `f32`; loading returns the rounded model.
pub fn save_model(model: &ClassifierModel, path: &Path) -> Result<()> {
    let header = ModelHeader {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        architecture: model.architecture.clone(),
        dim: model.dim(),
        num_classes: model.num_classes,
        input_mean: model.input_mean.clone(),
        input_scale: model.input_scale.clone(),
        param_count: model.param_count(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    bytes.extend(model.params().iter().flat_map(|&p| (p as f32).to_le_bytes()));
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ClassifierModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: String| Error::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| corrupt("missing header terminator".into()))?;
    let header: ModelHeader = serde_json::from_slice(&bytes[..split]).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    if header.format != MODEL_FORMAT || header.version != MODEL_VERSION {
        return Err(corrupt(format!(
            "unsupported model format {} v{}",
            header.format, header.version
        )));
    }
    if header.input_mean.len() != header.dim || header.input_scale.len() != header.dim {
        return Err(corrupt("standardization length differs from dim".into()));
    }
    let mut model = ClassifierModel::zeros(header.architecture, header.dim, header.num_classes);
    model.input_mean = header.input_mean;
    model.input_scale = header.input_scale;
    let payload = &bytes[split + 1..];
    if header.param_count != model.param_count() || payload.len() != 4 * model.param_count() {
        return Err(corrupt(format!(
            "payload has {} bytes, architecture needs {}",
            payload.len(),
            4 * model.param_count()
        )));
    }
    let params: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    model.set_params(&params)?;
    Ok(model)
}
