//! JSON containers for trained models and captured activations.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{FeatureSpec, ModelParams};
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::graph::BatchIndex;

pub const CHECKPOINT_FORMAT: &str = "gnn-dissect-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    features: FeatureSpec,
    tensors: Vec<TensorRecord>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    checkpoint.params.validate()?;
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: checkpoint.config.clone(),
        features: checkpoint.params.features,
        tensors: checkpoint
            .params
            .tensors()
            .into_iter()
            .map(|(name, shape, data)| TensorRecord {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect(),
    };
    write_json(path.as_ref(), &file)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file: CheckpointFile = read_json(path)?;
    let bad = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    if file.format != CHECKPOINT_FORMAT {
        return Err(bad(format!("unexpected format tag {:?}", file.format)));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {}", file.version)));
    }
    let mut params = ModelParams::init(&file.config, file.features)?;
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|(name, shape, _)| (name, shape))
        .collect();
    if expected.len() != file.tensors.len() {
        return Err(bad(format!(
            "{} tensors stored but the configuration implies {}",
            file.tensors.len(),
            expected.len()
        )));
    }
    for ((slot, (name, shape)), record) in params.tensors_mut().into_iter().zip(&expected).zip(&file.tensors) {
        if &record.name != name || &record.shape != shape {
            return Err(bad(format!(
                "tensor {} {:?} does not match expected {} {:?}",
                record.name, record.shape, name, shape
            )));
        }
        if record.data.len() != slot.len() {
            return Err(bad(format!("tensor {} has {} values for shape {:?}", name, record.data.len(), shape)));
        }
        slot.copy_from_slice(&record.data);
    }
    Ok(Checkpoint {
        config: file.config,
        params,
    })
}

/// One layer's activations over a batch, flattened neuron-major: entry
/// `data[neuron * nodes + node]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerActivationsExport {
    /// 1-based layer number.
    pub layer: usize,
    pub neurons: usize,
    pub nodes: usize,
    pub data: Vec<f64>,
}

/// Activations of one or more layers over a batch plus its node-to-graph index, so
/// activations from external models can be dissected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationExport {
    pub layers: Vec<LayerActivationsExport>,
    pub index: BatchIndex,
}

impl ActivationExport {
    pub fn validate(&self) -> Result<()> {
        let nodes = self.index.num_nodes();
        for l in &self.layers {
            if l.nodes != nodes || l.data.len() != l.neurons * l.nodes {
                return Err(Error::Shape(format!(
                    "layer {} declares {}x{} with {} values over a batch of {nodes} nodes",
                    l.layer,
                    l.neurons,
                    l.nodes,
                    l.data.len()
                )));
            }
        }
        if self.index.offsets.last() != Some(&nodes) || self.index.labels.len() != self.index.num_graphs() {
            return Err(Error::Shape("batch index offsets disagree with the index vector".into()));
        }
        Ok(())
    }
}

pub fn save_activations(path: impl AsRef<Path>, export: &ActivationExport) -> Result<()> {
    export.validate()?;
    let path = path.as_ref();
    let text = serde_json::to_string(export)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_activations(path: impl AsRef<Path>) -> Result<ActivationExport> {
    let export: ActivationExport = read_json(path.as_ref())?;
    export.validate()?;
    Ok(export)
}
